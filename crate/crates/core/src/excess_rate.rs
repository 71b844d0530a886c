//! Excess-rate exponents: how fast the probability that a variable-rate code
//! needs more than `r` nats per symbol can be made to vanish while keeping
//! error exponent `ee`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid_oracle::simplex_grid;
use crate::prob::{entropy_raw, kl_raw, Pmf, Source};
use crate::rate_functions::RateFunctions;
use crate::solvers::{e_ex, e_rb, maximize_concave, SolverConfig};

/// Initial right end of the slope search for the unbounded branches.
pub const T_MAX: f64 = 64.0;
/// Hard cap for the slope search once the terminal slope is still positive.
pub const T_CAP: f64 = 1_048_576.0;
/// Absolute tolerance of the line search over the excess-rate exponent.
pub const LINE_SEARCH_TOL: f64 = 1e-5;
const T_TOL: f64 = 1e-7;

/// Which rate function a grid computation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RateBound {
    Rb,
    Ex,
    Sp,
    Ub,
}

impl RateBound {
    pub fn eval(self, rf: &RateFunctions, ee: f64) -> Result<f64> {
        match self {
            Self::Rb => rf.rho_rb(ee),
            Self::Ex => rf.rho_ex(ee),
            Self::Sp => rf.rho_sp(ee),
            Self::Ub => rf.rho_ub(ee),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessRatePoint {
    pub r: f64,
    pub er_lower: f64,
    pub er_upper: f64,
    /// Achievability of the queried `(r, er, ee)`, if one was queried.
    pub achievable_flag: Option<bool>,
    /// Whether the converse rules out the queried `(r, er, ee)`.
    pub converse_flag: Option<bool>,
}

fn check_args(r: f64, er: f64, ee: f64) -> Result<()> {
    if !(r >= 0.0) || !(er >= 0.0) || !(ee >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "r = {r}, er = {er}, ee = {ee} must all be nonnegative"
        )));
    }
    if r.is_infinite() {
        return Err(Error::InvalidArgument("r must be finite".into()));
    }
    Ok(())
}

/// Largest random-binning value over `t` in `[0, 1]` and expurgated value
/// over `t >= 1`, stopping early once `ee` is reached.
pub fn achievable(src: &Source, r: f64, er: f64, ee: f64, cfg: &SolverConfig) -> Result<bool> {
    check_args(r, er, ee)?;
    if ee == 0.0 {
        return Ok(true);
    }
    let rb = maximize_concave(|t| Ok(e_rb(src, r, er, t, cfg)?.value), 0.0, 1.0, 1.0, T_TOL, ee)?;
    if rb.reached || rb.value >= ee {
        return Ok(true);
    }
    let ex = maximize_concave(|t| Ok(e_ex(src, r, er, t, cfg)?.value), 1.0, T_MAX, T_CAP, T_TOL, ee)?;
    Ok(ex.reached || ex.value >= ee)
}

/// True when the sphere-packing value stays below `ee` for every `t >= 0`.
/// A value still increasing at the slope cap is treated as unbounded.
pub fn not_achievable(src: &Source, r: f64, er: f64, ee: f64, cfg: &SolverConfig) -> Result<bool> {
    check_args(r, er, ee)?;
    if ee == 0.0 {
        return Ok(false);
    }
    let sp = maximize_concave(|t| Ok(e_rb(src, r, er, t, cfg)?.value), 0.0, T_MAX, T_CAP, T_TOL, ee)?;
    Ok(!(sp.reached || sp.unbounded || sp.value >= ee))
}

/// Right end of the line search: every type lies inside this divergence ball.
pub fn line_search_top(src: &Source) -> f64 {
    let px = src.px().as_slice();
    let unif = vec![1.0 / px.len() as f64; px.len()];
    let corner = -px.iter().copied().fold(f64::INFINITY, f64::min).ln();
    (kl_raw(&unif, px) + 1.0).max(corner)
}

/// `sup { er : pred(er) }` for a predicate that holds on an initial segment.
fn boundary<F: FnMut(f64) -> Result<bool>>(top: f64, mut pred: F) -> Result<f64> {
    if !pred(0.0)? {
        return Ok(0.0);
    }
    if pred(top)? {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > LINE_SEARCH_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Achievable excess-rate exponent at rate `r` for error exponent `ee`:
/// the largest `er` passing [`achievable`]. Infinite when the rate exceeds
/// what any type needs.
pub fn excess_rate_lower(src: &Source, r: f64, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    check_args(r, 0.0, ee)?;
    boundary(line_search_top(src), |er| achievable(src, r, er, ee, cfg))
}

/// Converse bound: the largest `er` not excluded by [`not_achievable`].
pub fn excess_rate_upper(src: &Source, r: f64, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    check_args(r, 0.0, ee)?;
    boundary(line_search_top(src), |er| Ok(!not_achievable(src, r, er, ee, cfg)?))
}

pub fn excess_rate_point(src: &Source, r: f64, ee: f64, query_er: Option<f64>, cfg: &SolverConfig) -> Result<ExcessRatePoint> {
    let (achievable_flag, converse_flag) = match query_er {
        Some(er) => (
            Some(achievable(src, r, er, ee, cfg)?),
            Some(not_achievable(src, r, er, ee, cfg)?),
        ),
        None => (None, None),
    };
    Ok(ExcessRatePoint {
        r,
        er_lower: excess_rate_lower(src, r, ee, cfg)?,
        er_upper: excess_rate_upper(src, r, ee, cfg)?,
        achievable_flag,
        converse_flag,
    })
}

/// Rate function sampled on the simplex grid of `Q_X` (plus `P_X` itself).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSamples {
    pub points: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
}

const MAX_GRID_X: usize = 3;

pub fn sample_rate(src: &Source, ee: f64, which: RateBound, grid_res: u32, cfg: &SolverConfig) -> Result<RateSamples> {
    let k = src.x_size();
    if k > MAX_GRID_X {
        return Err(Error::TooLarge {
            what: format!("rate grid over {k} letters"),
            count: crate::grid_oracle::simplex_grid_len(k, grid_res),
            limit: crate::grid_oracle::simplex_grid_len(MAX_GRID_X, grid_res),
        });
    }
    if grid_res < 2 {
        return Err(Error::InvalidArgument(format!("grid resolution {grid_res} is below 2")));
    }
    let mut points = simplex_grid(k, grid_res);
    points.push(src.px().as_slice().to_vec());
    let rho = points
        .par_iter()
        .map(|q| {
            let qx = Pmf::new(q.clone())?;
            let rf = RateFunctions::new(src, &qx, cfg)?;
            which.eval(&rf, ee)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RateSamples { points, rho })
}

/// `min { D(Q_X||P_X) : rho(Q_X, ee) >= r }` over the grid.
pub fn excess_rate_direct(
    src: &Source,
    ee: f64,
    r: f64,
    which: RateBound,
    grid_res: u32,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_args(r, 0.0, ee)?;
    let samples = sample_rate(src, ee, which, grid_res, cfg)?;
    Ok(direct_from_samples(src, &samples, r))
}

pub fn direct_from_samples(src: &Source, samples: &RateSamples, r: f64) -> f64 {
    let px = src.px().as_slice();
    samples
        .points
        .iter()
        .zip(&samples.rho)
        .filter(|(_, &rho)| rho >= r)
        .map(|(q, _)| kl_raw(q, px))
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of designing a fixed-rate code for error exponent `ee`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedRate {
    /// Rate a fixed-rate code needs: the largest rate over all types.
    pub r0: f64,
    /// Type attaining `r0`.
    pub peak_qx: Vec<f64>,
}

impl FixedRate {
    /// Excess-rate exponent of the fixed-rate code: zero below `r0`,
    /// infinite at or above.
    pub fn excess(&self, r: f64) -> f64 {
        if r < self.r0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Largest `rho_ub(Q_X, ee)` over the grid, with ties going to the first
/// grid point.
pub fn fixed_rate_comparison(src: &Source, ee: f64, grid_res: u32, cfg: &SolverConfig) -> Result<FixedRate> {
    let samples = sample_rate(src, ee, RateBound::Ub, grid_res, cfg)?;
    let mut best = 0;
    for (i, &v) in samples.rho.iter().enumerate() {
        if v > samples.rho[best] {
            best = i;
        }
    }
    Ok(FixedRate {
        r0: samples.rho[best],
        peak_qx: samples.points[best].clone(),
    })
}

/// Largest error exponent a fixed-rate code of rate `r` supports: the
/// largest `ee` whose peak rate (over a grid at `grid_res`) stays at or
/// below `r`. Found by bisection to `tol`.
pub fn fixed_rate_inverse(src: &Source, r: f64, grid_res: u32, tol: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(r >= 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad arguments r = {r}, tol = {tol}")));
    }
    let peak = |ee: f64| -> Result<f64> { Ok(fixed_rate_comparison(src, ee, grid_res, cfg)?.r0) };
    let mut hi = 1.0;
    while peak(hi)? <= r {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if peak(mid)? <= r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Excess-rate exponent of a code that uses rate `H(Q_X)` above the
/// variable-rate threshold: zero below `rho_ub(P_X, ee)`, otherwise the
/// smallest `D(Q||P_X)` over grid types with `H(Q) >= r`.
pub fn average_rate_comparison(src: &Source, ee: f64, rs: &[f64], grid_res: u32, cfg: &SolverConfig) -> Result<Vec<(f64, f64)>> {
    let rho_px = RateFunctions::new(src, src.px(), cfg)?.rho_ub(ee)?;
    let k = src.x_size();
    if crate::grid_oracle::simplex_grid_len(k, grid_res) > crate::prob::MAX_TYPES {
        return Err(Error::TooLarge {
            what: "average-rate grid".into(),
            count: crate::grid_oracle::simplex_grid_len(k, grid_res),
            limit: crate::prob::MAX_TYPES,
        });
    }
    let px = src.px().as_slice();
    let grid: Vec<(f64, f64)> = simplex_grid(k, grid_res)
        .iter()
        .map(|q| (entropy_raw(q), kl_raw(q, px)))
        .collect();
    Ok(rs
        .iter()
        .map(|&r| {
            if r <= rho_px {
                return (r, 0.0);
            }
            let v = grid
                .iter()
                .filter(|(h, _)| *h >= r - 1e-12)
                .map(|&(_, d)| d)
                .fold(f64::INFINITY, f64::min);
            (r, v)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::CondPmf;

    fn sec7() -> Source {
        Source::new(
            Pmf::new(vec![0.2, 0.8]).unwrap(),
            CondPmf::new(vec![vec![0.8, 0.15, 0.05], vec![0.05, 0.15, 0.8]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_exponent_is_trivially_achievable() {
        let cfg = SolverConfig::default();
        assert!(achievable(&sec7(), 0.1, 0.3, 0.0, &cfg).unwrap());
        assert!(!not_achievable(&sec7(), 0.1, 0.3, 0.0, &cfg).unwrap());
    }

    #[test]
    fn below_typical_rate_exponent_is_zero() {
        let cfg = SolverConfig::default();
        assert_eq!(excess_rate_lower(&sec7(), 0.3, 0.05, &cfg).unwrap(), 0.0);
        assert_eq!(excess_rate_upper(&sec7(), 0.0, 0.05, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn average_rate_at_full_entropy() {
        let src = sec7();
        let cfg = SolverConfig::default();
        let v = average_rate_comparison(&src, 0.05, &[2f64.ln()], 100, &cfg).unwrap();
        let expect = kl_raw(&[0.5, 0.5], src.px().as_slice());
        assert!((v[0].1 - expect).abs() < 1e-12);
    }

    #[test]
    fn fixed_rate_excess_is_a_step() {
        let f = FixedRate {
            r0: 0.4,
            peak_qx: vec![0.25, 0.75],
        };
        assert_eq!(f.excess(0.39), 0.0);
        assert_eq!(f.excess(0.4), f64::INFINITY);
    }
}
