//! Finite-blocklength random binning with type-dependent rates.
//!
//! A block `x` of length `n` is encoded as the index of its type plus a bin
//! index drawn uniformly from `ceil(e^{n rho(type)})` bins. Blocks are stored
//! as base-`|X|` integers with the first symbol most significant, so numeric
//! order is lexicographic order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{enumerate_types, log_type_probability, Source, TypeDescriptor};

/// Largest number of source blocks a code may tabulate.
pub const MAX_BLOCKS: u64 = 1 << 20;
/// Largest number of `(x, y)` pairs the exact error computation enumerates.
pub const MAX_EXACT_PAIRS: u64 = 1 << 24;
/// Trials per independent RNG stream.
pub const CHUNK: u64 = 4096;
const MAX_BINS: f64 = (1u64 << 62) as f64;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    Ml,
    Mce,
}

#[derive(Debug, Clone)]
pub struct SWCode {
    n: u32,
    k: usize,
    seed: u64,
    types: Vec<TypeDescriptor>,
    rate: Vec<f64>,
    bins: Vec<u64>,
    block_type: Vec<u32>,
    block_bin: Vec<u64>,
    /// `(type, bin, block)` sorted, so a bin's members are contiguous and ascending.
    index: Vec<(u32, u64, u32)>,
}

/// What the encoder sends for one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Encoded {
    pub type_index: usize,
    pub bin: u64,
    /// `rho(type)` in nats per symbol.
    pub rate: f64,
    /// `rate` plus the cost of describing the type.
    pub rate_with_header: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimStats {
    pub decoder: Decoder,
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    /// Half-width of the 95% Wilson interval.
    pub ci95: f64,
}

impl SimStats {
    pub fn new(decoder: Decoder, trials: u64, errors: u64) -> Self {
        let (p_hat, ci95) = wilson(errors, trials);
        Self {
            decoder,
            trials,
            errors,
            p_hat,
            ci95,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        let z2 = Z95 * Z95;
        let n = self.trials as f64;
        let center = (self.p_hat + z2 / (2.0 * n)) / (1.0 + z2 / n);
        ((center - self.ci95).max(0.0), (center + self.ci95).min(1.0))
    }
}

const Z95: f64 = 1.959_963_984_540_054;

fn wilson(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (p, half)
}

impl SWCode {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn types(&self) -> &[TypeDescriptor] {
        &self.types
    }

    pub fn rates(&self) -> &[f64] {
        &self.rate
    }

    pub fn bin_counts(&self) -> &[u64] {
        &self.bins
    }

    pub fn num_blocks(&self) -> usize {
        self.block_type.len()
    }

    /// Per-symbol cost of sending the type index.
    pub fn header_rate(&self) -> f64 {
        (self.types.len() as f64).ln() / self.n as f64
    }

    pub fn block_index(&self, x: &[usize]) -> Result<u32> {
        if x.len() != self.n as usize {
            return Err(Error::InvalidArgument(format!("block has length {}, code has {}", x.len(), self.n)));
        }
        let mut b = 0u32;
        for &s in x {
            if s >= self.k {
                return Err(Error::InvalidArgument(format!("letter {s} outside alphabet of size {}", self.k)));
            }
            b = b * self.k as u32 + s as u32;
        }
        Ok(b)
    }

    pub fn block(&self, index: u32) -> Vec<usize> {
        digits(index, self.k, self.n as usize)
    }

    /// Blocks sharing type and bin, in ascending order.
    pub fn members(&self, type_index: usize, bin: u64) -> &[(u32, u64, u32)] {
        let key = (type_index as u32, bin);
        let lo = self.index.partition_point(|e| (e.0, e.1) < key);
        let hi = self.index.partition_point(|e| (e.0, e.1) <= key);
        &self.index[lo..hi]
    }
}

fn digits(mut index: u32, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for i in (0..n).rev() {
        out[i] = (index % k as u32) as usize;
        index /= k as u32;
    }
    out
}

/// Draws the bin of every block from the construction stream of `seed`.
pub fn build_code<F>(src: &Source, n: u32, rate_fn: F, seed: u64) -> Result<SWCode>
where
    F: Fn(&TypeDescriptor) -> Result<f64>,
{
    let k = src.x_size();
    if n == 0 {
        return Err(Error::InvalidArgument("blocklength must be positive".into()));
    }
    let blocks = (k as u128).checked_pow(n).unwrap_or(u128::MAX);
    if blocks > MAX_BLOCKS as u128 {
        return Err(Error::TooLarge {
            what: format!("blocks of length {n} over {k} letters"),
            count: blocks,
            limit: MAX_BLOCKS as u128,
        });
    }
    let types = enumerate_types(n, k)?;
    let mut rate = Vec::with_capacity(types.len());
    let mut bins = Vec::with_capacity(types.len());
    for t in &types {
        let r = rate_fn(t)?;
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("rate {r} for type {:?} must be finite and nonnegative", t.counts())));
        }
        rate.push(r);
        bins.push((n as f64 * r).exp().ceil().clamp(1.0, MAX_BINS) as u64);
    }
    let lookup: std::collections::HashMap<&[u32], u32> =
        types.iter().enumerate().map(|(i, t)| (t.counts(), i as u32)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let nb = blocks as u32;
    let mut block_type = Vec::with_capacity(nb as usize);
    let mut block_bin = Vec::with_capacity(nb as usize);
    let mut counts = vec![0u32; k];
    for b in 0..nb {
        counts.iter_mut().for_each(|c| *c = 0);
        for s in digits(b, k, n as usize) {
            counts[s] += 1;
        }
        let ti = lookup[counts.as_slice()];
        block_type.push(ti);
        block_bin.push(rng.random_range(0..bins[ti as usize]));
    }
    let mut index: Vec<(u32, u64, u32)> = (0..nb).map(|b| (block_type[b as usize], block_bin[b as usize], b)).collect();
    index.sort_unstable();
    Ok(SWCode {
        n,
        k,
        seed,
        types,
        rate,
        bins,
        block_type,
        block_bin,
        index,
    })
}

pub fn encode(code: &SWCode, x: &[usize]) -> Result<Encoded> {
    let b = code.block_index(x)? as usize;
    let ti = code.block_type[b] as usize;
    Ok(Encoded {
        type_index: ti,
        bin: code.block_bin[b],
        rate: code.rate[ti],
        rate_with_header: code.rate[ti] + code.header_rate(),
    })
}

/// Per-letter log-likelihoods `ln W(y|x)`.
fn log_channel(src: &Source) -> Vec<Vec<f64>> {
    src.pygx()
        .rows()
        .iter()
        .map(|r| r.iter().map(|&p| p.ln()).collect())
        .collect()
}

fn ml_pick(code: &SWCode, lw: &[Vec<f64>], type_index: usize, bin: u64, y: &[usize]) -> Option<u32> {
    let mut best: Option<(f64, u32)> = None;
    for &(_, _, b) in code.members(type_index, bin) {
        let mut idx = b;
        let mut score = 0.0;
        for i in (0..y.len()).rev() {
            score += lw[(idx % code.k as u32) as usize][y[i]];
            idx /= code.k as u32;
        }
        if best.is_none_or(|(s, _)| score > s + TIE_TOL) {
            best = Some((score, b));
        }
    }
    best.map(|(_, b)| b)
}

fn mce_pick(code: &SWCode, ny: usize, type_index: usize, bin: u64, y: &[usize], joint: &mut [u32]) -> Option<u32> {
    let mut best: Option<(f64, u32)> = None;
    let mut ycount = vec![0u32; ny];
    for &s in y {
        ycount[s] += 1;
    }
    let ylogy: f64 = ycount.iter().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64).ln()).sum();
    for &(_, _, b) in code.members(type_index, bin) {
        joint.iter_mut().for_each(|v| *v = 0);
        let mut idx = b;
        for i in (0..y.len()).rev() {
            joint[(idx % code.k as u32) as usize * ny + y[i]] += 1;
            idx /= code.k as u32;
        }
        // n H(x~|y) = sum_y N_y ln N_y - sum N_xy ln N_xy
        let xy: f64 = joint.iter().filter(|&&c| c > 0).map(|&c| c as f64 * (c as f64).ln()).sum();
        let h = (ylogy - xy) / y.len() as f64;
        if best.is_none_or(|(s, _)| h < s - TIE_TOL) {
            best = Some((h, b));
        }
    }
    best.map(|(_, b)| b)
}

fn check_y(src: &Source, code: &SWCode, y: &[usize]) -> Result<()> {
    if y.len() != code.n as usize || y.iter().any(|&s| s >= src.y_size()) {
        return Err(Error::InvalidArgument("side information block has the wrong length or alphabet".into()));
    }
    Ok(())
}

fn check_bin(code: &SWCode, type_index: usize, bin: u64) -> Result<()> {
    if type_index >= code.types.len() || bin >= code.bins[type_index] {
        return Err(Error::InvalidArgument(format!("no bin {bin} for type {type_index}")));
    }
    Ok(())
}

/// Most likely member of the bin given `y`; `None` if the bin is empty.
pub fn decode_ml(code: &SWCode, src: &Source, type_index: usize, bin: u64, y: &[usize]) -> Result<Option<Vec<usize>>> {
    check_bin(code, type_index, bin)?;
    check_y(src, code, y)?;
    Ok(ml_pick(code, &log_channel(src), type_index, bin, y).map(|b| code.block(b)))
}

/// Member of the bin with the smallest empirical conditional entropy given
/// `y`. Uses only the alphabet sizes, not the source statistics.
pub fn decode_mce(code: &SWCode, y_size: usize, type_index: usize, bin: u64, y: &[usize]) -> Result<Option<Vec<usize>>> {
    check_bin(code, type_index, bin)?;
    if y.len() != code.n as usize || y.iter().any(|&s| s >= y_size) {
        return Err(Error::InvalidArgument("side information block has the wrong length or alphabet".into()));
    }
    let mut joint = vec![0u32; code.k * y_size];
    Ok(mce_pick(code, y_size, type_index, bin, y, &mut joint).map(|b| code.block(b)))
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect()
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// Error counts of several decoders on the same i.i.d. trials. Trials are
/// split into chunks of [`CHUNK`], chunk `c` drawing from stream `c + 1` of
/// `seed`, so the counts do not depend on the number of threads.
pub fn estimate_errors(src: &Source, code: &SWCode, decoders: &[Decoder], trials: u64, seed: u64) -> Result<Vec<SimStats>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if decoders.is_empty() {
        return Err(Error::InvalidArgument("no decoder selected".into()));
    }
    if src.x_size() != code.k {
        return Err(Error::InvalidArgument("code and source alphabets differ".into()));
    }
    let n = code.n as usize;
    let ny = src.y_size();
    let cx = cumulative(src.px().as_slice());
    let cy: Vec<Vec<f64>> = src.pygx().rows().iter().map(|r| cumulative(r)).collect();
    let lw = log_channel(src);
    let chunks = trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c + 1);
            let todo = CHUNK.min(trials - c * CHUNK);
            let mut errs = vec![0u64; decoders.len()];
            let mut x = vec![0usize; n];
            let mut y = vec![0usize; n];
            let mut joint = vec![0u32; code.k * ny];
            for _ in 0..todo {
                for i in 0..n {
                    x[i] = draw(&cx, rng.random::<f64>());
                    y[i] = draw(&cy[x[i]], rng.random::<f64>());
                }
                let b = x.iter().fold(0u32, |acc, &s| acc * code.k as u32 + s as u32);
                let (ti, bin) = (code.block_type[b as usize] as usize, code.block_bin[b as usize]);
                for (d, e) in decoders.iter().zip(errs.iter_mut()) {
                    let got = match d {
                        Decoder::Ml => ml_pick(code, &lw, ti, bin, &y),
                        Decoder::Mce => mce_pick(code, ny, ti, bin, &y, &mut joint),
                    };
                    if got != Some(b) {
                        *e += 1;
                    }
                }
            }
            errs
        })
        .reduce(
            || vec![0u64; decoders.len()],
            |a, b| a.iter().zip(&b).map(|(u, v)| u + v).collect(),
        );
    Ok(decoders
        .iter()
        .zip(counts)
        .map(|(&d, e)| SimStats::new(d, trials, e))
        .collect())
}

pub fn estimate_error(src: &Source, code: &SWCode, decoder: Decoder, trials: u64, seed: u64) -> Result<SimStats> {
    Ok(estimate_errors(src, code, &[decoder], trials, seed)?[0])
}

/// Exact error probability of a fixed code, summing over every `(x, y)`.
pub fn exact_error_probability(src: &Source, code: &SWCode, decoder: Decoder) -> Result<f64> {
    let n = code.n as usize;
    let ny = src.y_size();
    let pairs = (code.num_blocks() as u128).saturating_mul((ny as u128).saturating_pow(code.n));
    if pairs > MAX_EXACT_PAIRS as u128 {
        return Err(Error::TooLarge {
            what: "(x, y) pairs for exact error probability".into(),
            count: pairs,
            limit: MAX_EXACT_PAIRS as u128,
        });
    }
    let px = src.px().as_slice();
    let w = src.pygx().rows();
    let lw = log_channel(src);
    let ny_blocks = (ny as u32).pow(code.n);
    let total: f64 = (0..code.num_blocks() as u32)
        .into_par_iter()
        .map(|b| {
            let x = code.block(b);
            let pxb: f64 = x.iter().map(|&s| px[s]).product();
            let (ti, bin) = (code.block_type[b as usize] as usize, code.block_bin[b as usize]);
            let mut joint = vec![0u32; code.k * ny];
            let mut acc = 0.0;
            for yb in 0..ny_blocks {
                let y = digits(yb, ny, n);
                let pyx: f64 = x.iter().zip(&y).map(|(&a, &c)| w[a][c]).product();
                if pyx == 0.0 {
                    continue;
                }
                let got = match decoder {
                    Decoder::Ml => ml_pick(code, &lw, ti, bin, &y),
                    Decoder::Mce => mce_pick(code, ny, ti, bin, &y, &mut joint),
                };
                if got != Some(b) {
                    acc += pyx;
                }
            }
            pxb * acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

/// `P(rho(type(X^n)) >= r)`, summed exactly over types.
pub fn exact_excess_rate(src: &Source, code: &SWCode, r: f64) -> Result<f64> {
    let mut p = 0.0;
    for (t, &rate) in code.types.iter().zip(&code.rate) {
        if rate >= r {
            p += log_type_probability(src.px(), t)?.exp();
        }
    }
    Ok(p.min(1.0))
}

/// Summary of the rates a code uses, weighted by type probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub header: f64,
}

pub fn rate_summary(src: &Source, code: &SWCode) -> Result<RateSummary> {
    let mut mean = 0.0;
    for (t, &rate) in code.types.iter().zip(&code.rate) {
        mean += log_type_probability(src.px(), t)?.exp() * rate;
    }
    Ok(RateSummary {
        min: code.rate.iter().copied().fold(f64::INFINITY, f64::min),
        max: code.rate.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        header: code.header_rate(),
    })
}
