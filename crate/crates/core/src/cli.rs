//! Command-line front end.
//!
//! Every subcommand writes a single table (CSV) or document (JSON) once it has
//! finished, to `--out` or standard output. Inputs are always in nats.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::binning_sim::{build_code, estimate_errors, rate_summary, Decoder};
use crate::error::{Error, Result};
use crate::excess_rate::{
    achievable, average_rate_comparison, excess_rate_lower, excess_rate_upper, fixed_rate_comparison, not_achievable,
};
use crate::grid_oracle::{grid_e_ex, grid_e_rb, grid_error_exponent_rb, grid_v_ex, grid_v_rb, GridSpec, GridResult};
use crate::prob::{backward_cond_entropy, entropy, Pmf, Source};
use crate::rate_functions::RateFunctions;
use crate::solvers::{e_ex, e_rb, v_ex, v_rb, SolverConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SWEXP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "swexp", version, about = "Rate functions and excess-rate exponents of variable-rate Slepian-Wolf codes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate-function bounds over an exponent grid, or over a type sweep.
    RateFn(RateFnArgs),
    /// Excess-rate exponent bounds over a rate grid.
    ExcessRate(ExcessRateArgs),
    /// Monte Carlo error rates of a random binning code.
    Simulate(SimulateArgs),
    /// Brute-force grid values next to the solver values.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    VRb,
    VEx,
    ERb,
    EEx,
    ErrorExponent,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Source description: {"px": [...], "pygx": [[...], ...]}.
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Report rates in bits instead of nats. Exponents stay in nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Args)]
pub struct RateFnArgs {
    #[command(flatten)]
    pub common: Common,
    /// Type as a comma separated list. Without it, binary sources are swept
    /// over qx(0) in steps of 1/resolution.
    #[arg(long)]
    pub qx: Option<String>,
    #[arg(long)]
    pub ee: Option<f64>,
    #[arg(long)]
    pub ee_grid: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub resolution: u32,
}

#[derive(Debug, Args)]
pub struct ExcessRateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub ee: f64,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub r_grid: Option<String>,
    /// Also report whether this excess-rate exponent is achievable / excluded.
    #[arg(long)]
    pub er: Option<f64>,
    /// Grid resolution over types for the fixed- and average-rate columns.
    #[arg(long, default_value_t = 200)]
    pub resolution: u32,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rates follow rho_ub(type, ee).
    #[arg(long)]
    pub ee: f64,
    /// Decoder to run; both when absent.
    #[arg(long, value_enum)]
    pub decoder: Option<Decoder>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub problem: Problem,
    #[arg(long)]
    pub qx: Option<String>,
    #[arg(long)]
    pub ee: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub er: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Finest grid resolution; the half resolution is reported as well.
    #[arg(long, default_value_t = 100)]
    pub resolution: u32,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A second initialization in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = SolverConfig {
        lenient_factor: Some(100.0),
        ..SolverConfig::default()
    };
    match &cli.command {
        Command::RateFn(a) => cmd_rate_fn(a, &cfg),
        Command::ExcessRate(a) => cmd_excess_rate(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Oracle(a) => cmd_oracle(a, &cfg),
    }
}

fn load_source(c: &Common) -> Result<Source> {
    let text = std::fs::read_to_string(&c.source).map_err(|e| Error::InvalidSource {
        path: c.source.display().to_string(),
        reason: e.to_string(),
    })?;
    Source::from_json(&text).map_err(|e| match e {
        Error::InvalidSource { path, reason } => Error::InvalidSource {
            path: format!("{}: {path}", c.source.display()),
            reason,
        },
        other => other,
    })
}

/// Parses `A:B:STEP` into `A, A + STEP, ..` up to `B` inclusive.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("grid {spec:?} must look like A:B:STEP with A <= B and STEP > 0"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [a, b, step] = parts[..] else {
        return Err(bad());
    };
    if !a.is_finite() || !b.is_finite() || !(step > 0.0) || b < a {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::TooLarge {
            what: format!("grid {spec}"),
            count: count as u128,
            limit: 1_000_000,
        });
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

pub fn parse_pmf(spec: &str) -> Result<Pmf> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse {spec:?} as a comma separated list")))?;
    Pmf::new(v)
}

fn values(single: Option<f64>, grid: Option<&str>, name: &str) -> Result<Vec<f64>> {
    match (single, grid) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(format!("give --{name} or --{name}-grid, not both"))),
        (Some(v), None) => Ok(vec![v]),
        (None, Some(g)) => parse_grid(g),
        (None, None) => Err(Error::InvalidArgument(format!("one of --{name} or --{name}-grid is required"))),
    }
}

/// `%g` style formatting with 12 significant digits; infinities as `inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_num(x))
    }
}

/// Column-major table that renders to CSV or to a JSON list of records.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Value::Number(n) => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => s.clone(),
                    Value::Bool(b) => b.to_string(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (h, v) in self.header.iter().zip(row) {
                        m.insert((*h).to_string(), v.clone());
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

fn emit(c: &Common, text: String) -> Result<()> {
    match &c.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_table(c: &Common, table: &Table, extra: Option<Map<String, Value>>) -> Result<()> {
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(c, table.csv()),
        Format::Json => {
            let doc = match extra {
                Some(mut m) => {
                    m.insert("rows".into(), table.records());
                    Value::Object(m)
                }
                None => table.records(),
            };
            emit(c, format!("{}\n", serde_json::to_string_pretty(&doc).expect("json")))
        }
    }
}

fn unit(bits: bool) -> f64 {
    if bits {
        std::f64::consts::LN_2
    } else {
        1.0
    }
}

fn cmd_rate_fn(a: &RateFnArgs, cfg: &SolverConfig) -> Result<()> {
    let src = load_source(&a.common)?;
    let u = unit(a.common.bits);
    let row = |qx: &Pmf, rf: &RateFunctions, ee: f64| -> Result<Vec<Value>> {
        let p = rf.point(ee)?;
        Ok(vec![
            num(qx[0]),
            num(ee),
            num(p.rho_rb / u),
            num(p.rho_ex / u),
            num(p.rho_sp / u),
            num(p.rho_ub / u),
            num(entropy(qx) / u),
            num(backward_cond_entropy(qx, src.pygx())? / u),
        ])
    };
    let mut table = Table::new(vec!["qx0", "ee", "rho_rb", "rho_ex", "rho_sp", "rho_ub", "h_x", "h_x_given_y"]);
    match &a.qx {
        Some(q) => {
            let qx = parse_pmf(q)?;
            src.check_qx(&qx)?;
            let ees = values(a.ee, a.ee_grid.as_deref(), "ee")?;
            let rf = RateFunctions::new(&src, &qx, cfg)?;
            for ee in ees {
                table.push(row(&qx, &rf, ee)?);
            }
        }
        None => {
            if src.x_size() != 2 {
                return Err(Error::InvalidArgument("the type sweep needs a binary source; pass --qx".into()));
            }
            if a.resolution < 1 {
                return Err(Error::InvalidArgument("resolution must be positive".into()));
            }
            let ees = values(a.ee, a.ee_grid.as_deref(), "ee")?;
            use rayon::prelude::*;
            let rows = (0..=a.resolution)
                .into_par_iter()
                .map(|i| {
                    let q0 = i as f64 / a.resolution as f64;
                    let qx = Pmf::new(vec![q0, 1.0 - q0])?;
                    let rf = RateFunctions::new(&src, &qx, cfg)?;
                    ees.iter().map(|&ee| row(&qx, &rf, ee)).collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            rows.into_iter().flatten().for_each(|r| table.push(r));
        }
    }
    emit_table(&a.common, &table, None)
}

fn cmd_excess_rate(a: &ExcessRateArgs, cfg: &SolverConfig) -> Result<()> {
    let src = load_source(&a.common)?;
    let u = unit(a.common.bits);
    let rs = values(a.r, a.r_grid.as_deref(), "r")?;
    let fixed = fixed_rate_comparison(&src, a.ee, a.resolution, cfg)?;
    let avg = average_rate_comparison(&src, a.ee, &rs, a.resolution, cfg)?;
    let mut header = vec!["r", "er_lower", "er_upper", "er_fixed", "er_average"];
    if a.er.is_some() {
        header.extend(["achievable", "converse"]);
    }
    let mut table = Table::new(header);
    use rayon::prelude::*;
    let rows = rs
        .par_iter()
        .zip(avg.par_iter())
        .map(|(&r, &(_, er_avg))| {
            let mut row = vec![
                num(r / u),
                num(excess_rate_lower(&src, r, a.ee, cfg)?),
                num(excess_rate_upper(&src, r, a.ee, cfg)?),
                num(fixed.excess(r)),
                num(er_avg),
            ];
            if let Some(er) = a.er {
                row.push(json!(achievable(&src, r, er, a.ee, cfg)?));
                row.push(json!(not_achievable(&src, r, er, a.ee, cfg)?));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    let mut extra = Map::new();
    extra.insert("ee".into(), num(a.ee));
    extra.insert("r0".into(), num(fixed.r0 / u));
    extra.insert("peak_qx".into(), json!(fixed.peak_qx));
    extra.insert("units".into(), json!(if a.common.bits { "bits" } else { "nats" }));
    emit_table(&a.common, &table, Some(extra))
}

fn cmd_simulate(a: &SimulateArgs, cfg: &SolverConfig) -> Result<()> {
    let src = load_source(&a.common)?;
    let u = unit(a.common.bits);
    if a.trials == 0 {
        return Err(Error::InvalidArgument("--trials must be positive".into()));
    }
    let code = build_code(&src, a.n, |t| RateFunctions::new(&src, &t.to_pmf(), cfg)?.rho_ub(a.ee), a.seed)?;
    let decoders = match a.decoder {
        Some(d) => vec![d],
        None => vec![Decoder::Ml, Decoder::Mce],
    };
    let stats = estimate_errors(&src, &code, &decoders, a.trials, a.seed)?;
    let rs = rate_summary(&src, &code)?;
    let summary = json!({
        "min": num(rs.min / u),
        "max": num(rs.max / u),
        "mean": num(rs.mean / u),
        "header": num(rs.header / u),
        "units": if a.common.bits { "bits" } else { "nats" },
    });
    let mut table = Table::new(vec!["n", "decoder", "trials", "errors", "p_hat", "ci95", "seed"]);
    for s in &stats {
        table.push(vec![
            json!(a.n),
            json!(format!("{:?}", s.decoder).to_lowercase()),
            json!(s.trials),
            json!(s.errors),
            num(s.p_hat),
            num(s.ci95),
            json!(a.seed),
        ]);
    }
    match a.common.format.unwrap_or(Format::Json) {
        Format::Csv => emit(&a.common, table.csv()),
        Format::Json => {
            let docs: Vec<Value> = match table.records() {
                Value::Array(v) => v
                    .into_iter()
                    .map(|mut r| {
                        r["rate_summary"] = summary.clone();
                        r
                    })
                    .collect(),
                _ => unreachable!(),
            };
            emit(&a.common, format!("{}\n", serde_json::to_string_pretty(&docs).expect("json")))
        }
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this problem")))
}

fn cmd_oracle(a: &OracleArgs, cfg: &SolverConfig) -> Result<()> {
    let src = load_source(&a.common)?;
    let mut resolutions = vec![];
    if a.resolution / 2 >= 2 {
        resolutions.push(a.resolution / 2);
    }
    resolutions.push(a.resolution);
    let qx = || -> Result<Pmf> {
        let q = parse_pmf(a.qx.as_deref().ok_or_else(|| Error::InvalidArgument("--qx is required".into()))?)?;
        src.check_qx(&q)?;
        Ok(q)
    };
    let solver = match a.problem {
        Problem::VRb => Some(v_rb(&src, &qx()?, need(a.ee, "ee")?, a.eta, cfg)?.value),
        Problem::VEx => Some(v_ex(&src, &qx()?, need(a.ee, "ee")?, cfg)?.value),
        Problem::ERb => Some(e_rb(&src, need(a.r, "r")?, need(a.er, "er")?, need(a.t, "t")?, cfg)?.value),
        Problem::EEx => Some(e_ex(&src, need(a.r, "r")?, need(a.er, "er")?, need(a.t, "t")?, cfg)?.value),
        Problem::ErrorExponent => None,
    };
    let mut table = Table::new(vec!["problem", "resolution", "grid_value", "band_spread", "solver_value"]);
    let name = a.problem.to_possible_value().expect("named").get_name().to_string();
    for res in resolutions {
        let gs = GridSpec::new(res)?;
        let g: GridResult = match a.problem {
            Problem::VRb => grid_v_rb(&src, &qx()?, need(a.ee, "ee")?, a.eta, &gs)?,
            Problem::VEx => grid_v_ex(&src, &qx()?, need(a.ee, "ee")?, &gs)?,
            Problem::ERb => grid_e_rb(&src, need(a.r, "r")?, need(a.er, "er")?, need(a.t, "t")?, &gs)?,
            Problem::EEx => grid_e_ex(&src, need(a.r, "r")?, need(a.er, "er")?, need(a.t, "t")?, &gs)?,
            Problem::ErrorExponent => {
                let ee = need(a.ee, "ee")?;
                grid_error_exponent_rb(&src, |q| RateFunctions::new(&src, q, cfg)?.rho_ub(ee), &gs)?
            }
        };
        table.push(vec![
            json!(name),
            json!(res),
            num(g.value),
            num(g.band_spread),
            solver.map_or(Value::Null, num),
        ]);
    }
    emit_table(&a.common, &table, None)
}
