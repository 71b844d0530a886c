//! Brute-force minimization over simplex grids.
//!
//! Every distribution the oracle considers has coordinates that are multiples
//! of `1 / resolution`. The oracles share no code with the iterative solvers
//! beyond the basic information measures, so agreement between the two is a
//! meaningful check. Pruning is only ever applied to candidates that are
//! provably infeasible or strictly worse than a value already found, so every
//! result is the exact grid minimum and ties go to the lexicographically
//! smallest grid index regardless of thread count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{bhattacharyya_matrix, entropy_raw, kl_raw, xlogx, Pmf, Source};

/// Resolution of the grid and a cap on the number of objective evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub resolution: u32,
    pub max_points: u128,
}

impl GridSpec {
    pub const DEFAULT_MAX_POINTS: u128 = 20_000_000_000;

    pub fn new(resolution: u32) -> Result<Self> {
        let gs = Self {
            resolution,
            max_points: Self::DEFAULT_MAX_POINTS,
        };
        gs.validate()?;
        Ok(gs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidArgument(format!("grid resolution {} is below 2", self.resolution)));
        }
        Ok(())
    }

    fn guard(&self, what: &str, count: u128) -> Result<()> {
        self.validate()?;
        if count > self.max_points {
            return Err(Error::TooLarge {
                what: what.to_string(),
                count,
                limit: self.max_points,
            });
        }
        Ok(())
    }
}

/// Grid minimum and where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub value: f64,
    /// Problem dependent: conditional rows, a coupling, or `[Q_X, rows.., Q~]`.
    pub argmin: Vec<Vec<f64>>,
    /// For banded equality constraints, the spread of the objective over the
    /// grid points inside the band; zero otherwise.
    pub band_spread: f64,
    pub resolution: u32,
}

/// Number of points of the `k`-letter simplex grid at resolution `res`.
pub fn simplex_grid_len(k: usize, res: u32) -> u128 {
    crate::prob::type_count(res, k)
}

/// Calls `f` on every composition of `res` into `k` parts, in the same order
/// as [`crate::prob::enumerate_types`].
pub fn for_each_composition<F: FnMut(&[u32])>(k: usize, res: u32, mut f: F) {
    fn go<F: FnMut(&[u32])>(c: &mut [u32], pos: usize, left: u32, f: &mut F) {
        if pos + 1 == c.len() {
            c[pos] = left;
            f(c);
            return;
        }
        for v in (0..=left).rev() {
            c[pos] = v;
            go(c, pos + 1, left - v, f);
        }
    }
    let mut c = vec![0u32; k];
    go(&mut c, 0, res, &mut f);
}

/// All points of the simplex grid as probability vectors.
pub fn simplex_grid(k: usize, res: u32) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(simplex_grid_len(k, res).min(1 << 24) as usize);
    for_each_composition(k, res, |c| out.push(c.iter().map(|&v| v as f64 / res as f64).collect()));
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Best {
    value: f64,
    index: Vec<usize>,
}

impl Best {
    fn none() -> Self {
        Self {
            value: f64::INFINITY,
            index: Vec::new(),
        }
    }

    fn offer(&mut self, value: f64, index: &[usize]) {
        if value < self.value || (value == self.value && (self.index.is_empty() || index < &self.index[..])) {
            self.value = value;
            self.index = index.to_vec();
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if !other.index.is_empty() {
            self.offer(other.value, &other.index);
        }
        self
    }
}

fn check_ee(src: &Source, qx: &Pmf, ee: f64) -> Result<f64> {
    src.check_qx(qx)?;
    if ee.is_nan() {
        return Err(Error::InvalidArgument("ee is NaN".into()));
    }
    let c = ee - kl_raw(qx.as_slice(), src.px().as_slice());
    if c < 0.0 {
        return Err(Error::Infeasible(format!("ee = {ee} is below D(qx||px)")));
    }
    Ok(c)
}

struct RowCand {
    point: usize,
    /// `qx(x) D(b || W_x)`.
    g: f64,
    /// `qx(x) sum b ln b`.
    negh: f64,
}

/// Grid minimum of `I(qx x Q) + eta D(Q||W|qx)` subject to
/// `D(qx||px) + D(Q||W|qx) <= ee`, with every active row of `Q` on the grid.
pub fn grid_v_rb(src: &Source, qx: &Pmf, ee: f64, eta: f64, gs: &GridSpec) -> Result<GridResult> {
    let c = check_ee(src, qx, ee)?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be finite and nonnegative")));
    }
    let (nx, ny) = (src.x_size(), src.y_size());
    let res = gs.resolution;
    let active: Vec<usize> = (0..nx).filter(|&x| qx[x] > 0.0).collect();
    let m = simplex_grid_len(ny, res);
    gs.guard("grid_v_rb", m.saturating_pow(active.len() as u32))?;
    let points = simplex_grid(ny, res);
    let negent: Vec<f64> = points.iter().map(|b| b.iter().map(|&v| xlogx(v)).sum()).collect();
    let w = src.pygx().rows();

    let mut cands: Vec<Vec<RowCand>> = Vec::new();
    for &x in &active {
        let mut list: Vec<RowCand> = points
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                let g = qx[x] * kl_raw(b, &w[x]);
                (g <= c).then_some(RowCand {
                    point: i,
                    g,
                    negh: qx[x] * negent[i],
                })
            })
            .collect();
        list.sort_by(|a, b| a.g.total_cmp(&b.g).then(a.point.cmp(&b.point)));
        cands.push(list);
    }
    if cands.iter().any(Vec::is_empty) {
        return Err(Error::Infeasible("no grid point satisfies the divergence constraint".into()));
    }
    // tail_min[l] = smallest constraint use of rows l.. onward
    let mut tail_min = vec![0.0; active.len() + 1];
    for l in (0..active.len()).rev() {
        tail_min[l] = tail_min[l + 1] + cands[l][0].g;
    }

    struct Ctx<'a> {
        cands: &'a [Vec<RowCand>],
        tail_min: &'a [f64],
        points: &'a [Vec<f64>],
        qa: Vec<f64>,
        c: f64,
        eta: f64,
        ny: usize,
    }

    fn dfs(ctx: &Ctx, level: usize, g: f64, negh: f64, mix: &mut Vec<f64>, idx: &mut Vec<usize>, best: &mut Best) {
        if level == ctx.cands.len() {
            let value = entropy_raw(mix) + negh + ctx.eta * g;
            best.offer(value, idx);
            return;
        }
        for cand in &ctx.cands[level] {
            let used = g + cand.g + ctx.tail_min[level + 1];
            if used > ctx.c {
                break;
            }
            if ctx.eta > 0.0 && ctx.eta * used > best.value {
                break;
            }
            let b = &ctx.points[cand.point];
            let q = ctx.qa[level];
            for y in 0..ctx.ny {
                mix[y] += q * b[y];
            }
            idx.push(cand.point);
            dfs(ctx, level + 1, g + cand.g, negh + cand.negh, mix, idx, best);
            idx.pop();
            for y in 0..ctx.ny {
                mix[y] -= q * b[y];
            }
        }
    }

    let ctx = Ctx {
        cands: &cands,
        tail_min: &tail_min,
        points: &points,
        qa: active.iter().map(|&x| qx[x]).collect(),
        c,
        eta,
        ny,
    };
    let run_branch = |first: &RowCand, seed: &Best| -> Best {
        let mut best = seed.clone();
        let mut mix: Vec<f64> = points[first.point].iter().map(|&v| ctx.qa[0] * v).collect();
        let mut idx = vec![first.point];
        if first.g + tail_min[1] <= c {
            dfs(&ctx, 1, first.g, first.negh, &mut mix, &mut idx, &mut best);
        }
        best
    };
    // A deterministic first branch seeds the pruning bound of all others.
    let seed = run_branch(&cands[0][0], &Best::none());
    let best = cands[0][1..]
        .par_iter()
        .map(|first| {
            if eta > 0.0 && eta * (first.g + tail_min[1]) > seed.value {
                return Best::none();
            }
            run_branch(first, &seed)
        })
        .reduce(Best::none, Best::merge)
        .merge(seed);
    if best.index.is_empty() {
        return Err(Error::Infeasible("no grid point satisfies the divergence constraint".into()));
    }
    let mut argmin = vec![vec![1.0 / ny as f64; ny]; nx];
    for (l, &x) in active.iter().enumerate() {
        argmin[x] = points[best.index[l]].clone();
    }
    Ok(GridResult {
        value: best.value.max(0.0),
        argmin,
        band_spread: 0.0,
        resolution: res,
    })
}

/// Grid minimum of `I(J)` over couplings with both marginals `qx` and
/// `|D(qx||px) + E_J d - ee| <= 1/resolution`.
///
/// The free coordinates are the off-diagonal entries outside the last
/// column, each a multiple of `1/resolution`; the rest follow from the
/// marginal constraints.
pub fn grid_v_ex(src: &Source, qx: &Pmf, ee: f64, gs: &GridSpec) -> Result<GridResult> {
    let c = check_ee(src, qx, ee)?;
    let k = src.x_size();
    let q = qx.as_slice();
    let d = bhattacharyya_matrix(src.pygx());
    let d = d.rows();
    let res = gs.resolution as f64;
    let band = 1.0 / res;

    let mut free = Vec::new();
    for j in 0..k - 1 {
        for i in 0..k {
            if i != j {
                free.push((i, j));
            }
        }
    }
    let steps: Vec<u32> = free
        .iter()
        .map(|&(i, j)| if d[i][j].is_finite() { (q[i].min(q[j]) * res + 1e-9).floor() as u32 } else { 0 })
        .collect();
    let count = steps.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128 + 1));
    gs.guard("grid_v_ex", count)?;

    let eval = |vals: &[u32]| -> Option<(f64, f64, Vec<Vec<f64>>)> {
        let mut j = vec![vec![0.0; k]; k];
        for (&(a, b), &v) in free.iter().zip(vals) {
            j[a][b] = v as f64 / res;
        }
        for col in 0..k - 1 {
            let off: f64 = (0..k).filter(|&r| r != col).map(|r| j[r][col]).sum();
            j[col][col] = q[col] - off;
        }
        for row in 0..k {
            let used: f64 = (0..k - 1).map(|col| j[row][col]).sum();
            j[row][k - 1] = q[row] - used;
        }
        for row in 0..k {
            for col in 0..k {
                if j[row][col] < -1e-12 {
                    return None;
                }
                j[row][col] = j[row][col].max(0.0);
                if j[row][col] > 1e-15 && d[row][col].is_infinite() {
                    return None;
                }
            }
        }
        let b: f64 = (0..k)
            .flat_map(|r| (0..k).map(move |s| (r, s)))
            .filter(|&(r, s)| j[r][s] > 0.0)
            .map(|(r, s)| j[r][s] * d[r][s])
            .sum();
        if (b - c).abs() > band {
            return None;
        }
        let mut obj = 0.0;
        for r in 0..k {
            for s in 0..k {
                if j[r][s] > 0.0 {
                    obj += j[r][s] * (j[r][s] / (q[r] * q[s])).ln();
                }
            }
        }
        Some((obj.max(0.0), b, j))
    };

    let mut best = Best::none();
    let mut worst = f64::NEG_INFINITY;
    let mut best_j = Vec::new();
    let mut vals = vec![0u32; free.len()];
    loop {
        if let Some((obj, _, j)) = eval(&vals) {
            let idx: Vec<usize> = vals.iter().map(|&v| v as usize).collect();
            let before = best.value;
            best.offer(obj, &idx);
            if best.value != before || best_j.is_empty() {
                best_j = j;
            }
            worst = worst.max(obj);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == vals.len() {
                break;
            }
            if vals[pos] < steps[pos] {
                vals[pos] += 1;
                break;
            }
            vals[pos] = 0;
            pos += 1;
        }
        if pos == vals.len() {
            break;
        }
    }
    if best.index.is_empty() {
        return Err(Error::Infeasible("no grid coupling falls inside the distance band".into()));
    }
    Ok(GridResult {
        value: best.value,
        argmin: best_j,
        band_spread: worst - best.value,
        resolution: gs.resolution,
    })
}

/// Points `Q_X` of the grid inside the ball `D(Q_X||P_X) <= er`. For binary
/// alphabets the two boundary points of the ball are added; if no grid point
/// is inside, the grid points closest to `P_X` in divergence are used.
fn ball_candidates(px: &[f64], er: f64, res: u32) -> Vec<Vec<f64>> {
    let k = px.len();
    let grid = simplex_grid(k, res);
    let mut inside: Vec<Vec<f64>> = grid.iter().filter(|q| kl_raw(q, px) <= er).cloned().collect();
    if k == 2 && er.is_finite() {
        let d = |a: f64| kl_raw(&[a, 1.0 - a], px);
        for (lo, hi) in [(0.0, px[0]), (px[0], 1.0)] {
            let (far, near) = if lo == 0.0 { (lo, hi) } else { (hi, lo) };
            if d(far) <= er {
                continue;
            }
            let (mut a, mut b) = (near, far);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if d(m) <= er {
                    a = m;
                } else {
                    b = m;
                }
            }
            inside.push(vec![a, 1.0 - a]);
        }
    }
    if inside.is_empty() {
        let dmin = grid.iter().map(|q| kl_raw(q, px)).fold(f64::INFINITY, f64::min);
        inside = grid.into_iter().filter(|q| kl_raw(q, px) == dmin).collect();
    }
    inside
}

fn check_exponent_args(r: f64, er: f64, t: f64) -> Result<()> {
    if !r.is_finite() || !(er >= 0.0) || !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("bad arguments r = {r}, er = {er}, t = {t}")));
    }
    Ok(())
}

/// Grid minimum of `D(Q_X||P_X) + D(Q||W|Q_X) + t [r - H(X|Y)]` over
/// `Q_X` in the ball and conditional rows on the grid.
///
/// Uses `t I = min_{Q~} t D(Q||Q~|Q_X)` with `Q~` also ranging over the grid,
/// which makes the rows separable for fixed `Q~`.
pub fn grid_e_rb(src: &Source, r: f64, er: f64, t: f64, gs: &GridSpec) -> Result<GridResult> {
    check_exponent_args(r, er, t)?;
    let (nx, ny) = (src.x_size(), src.y_size());
    let res = gs.resolution;
    let m = simplex_grid_len(ny, res);
    let mx = simplex_grid_len(nx, res);
    gs.guard("grid_e_rb", m * m * nx as u128 + m * (mx + 2))?;
    let px = src.px().as_slice();
    let w = src.pygx().rows();
    let points = simplex_grid(ny, res);
    let negent: Vec<f64> = points.iter().map(|b| b.iter().map(|&v| xlogx(v)).sum()).collect();
    // cross[x][i] = sum_y b ln W(y|x), -inf if b leaves the support of W_x
    let cross: Vec<Vec<f64>> = (0..nx)
        .map(|x| {
            points
                .iter()
                .map(|b| {
                    let mut acc = 0.0;
                    for (&v, &p) in b.iter().zip(&w[x]) {
                        if v > 0.0 {
                            if p <= 0.0 {
                                return f64::NEG_INFINITY;
                            }
                            acc += v * p.ln();
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let marginals = ball_candidates(px, er, res);
    let prior: Vec<f64> = marginals
        .iter()
        .map(|q| kl_raw(q, px) - t * entropy_raw(q) + t * r)
        .collect();

    let per_tilde = |ti: usize| -> (f64, Vec<usize>) {
        let qt = &points[ti];
        let ln_qt: Vec<f64> = qt.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
        // row_best[x] = (value, point) of min_b D(b||W_x) + t D(b||Q~)
        let mut row_best = vec![(f64::INFINITY, 0usize); nx];
        for (i, b) in points.iter().enumerate() {
            let mut against = 0.0;
            if t > 0.0 {
                for (&v, &l) in b.iter().zip(&ln_qt) {
                    if v > 0.0 {
                        against += v * l;
                    }
                }
                if against == f64::NEG_INFINITY {
                    continue;
                }
            }
            for x in 0..nx {
                if cross[x][i] == f64::NEG_INFINITY {
                    continue;
                }
                let v = (1.0 + t) * negent[i] - cross[x][i] - t * against;
                if v < row_best[x].0 {
                    row_best[x] = (v, i);
                }
            }
        }
        let mut best = (f64::INFINITY, 0usize);
        for (mi, q) in marginals.iter().enumerate() {
            let mut v = prior[mi];
            for x in 0..nx {
                if q[x] > 0.0 {
                    v += q[x] * row_best[x].0;
                }
            }
            if v < best.0 {
                best = (v, mi);
            }
        }
        let mut index = vec![best.1];
        index.extend(row_best.iter().map(|rb| rb.1));
        index.push(ti);
        (best.0, index)
    };
    let best = (0..points.len())
        .into_par_iter()
        .map(|ti| {
            let (v, idx) = per_tilde(ti);
            let mut b = Best::none();
            if v.is_finite() {
                b.offer(v, &idx);
            }
            b
        })
        .reduce(Best::none, Best::merge);
    if best.index.is_empty() {
        return Err(Error::Infeasible("no finite grid value".into()));
    }
    let mut argmin = vec![marginals[best.index[0]].clone()];
    for x in 0..nx {
        argmin.push(points[best.index[1 + x]].clone());
    }
    argmin.push(points[best.index[nx + 1]].clone());
    Ok(GridResult {
        value: best.value,
        argmin,
        band_spread: 0.0,
        resolution: res,
    })
}

/// Grid minimum of `D(Q||P_X) + B(J) + t [r - H(Q) + I(J)]` over symmetric
/// couplings `J` on the grid whose marginal `Q` lies in the ball.
pub fn grid_e_ex(src: &Source, r: f64, er: f64, t: f64, gs: &GridSpec) -> Result<GridResult> {
    check_exponent_args(r, er, t)?;
    let k = src.x_size();
    let px = src.px().as_slice();
    let d = bhattacharyya_matrix(src.pygx());
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i..k {
            if d.get(i, j).is_finite() {
                pairs.push((i, j, d.get(i, j)));
            }
        }
    }
    let res = gs.resolution;
    gs.guard("grid_e_ex", simplex_grid_len(pairs.len(), res))?;
    let mut evaluated = Vec::new();
    let mut index = 0usize;
    for_each_composition(pairs.len(), res, |c| {
        let mut j = vec![vec![0.0; k]; k];
        for (&(a, b, _), &v) in pairs.iter().zip(c) {
            let m = v as f64 / res as f64;
            if a == b {
                j[a][a] = m;
            } else {
                j[a][b] = 0.5 * m;
                j[b][a] = 0.5 * m;
            }
        }
        let q: Vec<f64> = j.iter().map(|row| row.iter().sum()).collect();
        let div = kl_raw(&q, px);
        let mut bsum = 0.0;
        let mut info = 0.0;
        for a in 0..k {
            for b in 0..k {
                if j[a][b] > 0.0 {
                    bsum += j[a][b] * d.get(a, b);
                    info += j[a][b] * (j[a][b] / (q[a] * q[b])).ln();
                }
            }
        }
        let value = div + bsum + t * (r - entropy_raw(&q) + info);
        evaluated.push((div, value, index));
        index += 1;
    });
    let feasible: Vec<&(f64, f64, usize)> = evaluated.iter().filter(|e| e.0 <= er).collect();
    let pool: Vec<&(f64, f64, usize)> = if feasible.is_empty() {
        let dmin = evaluated.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        evaluated.iter().filter(|e| e.0 == dmin).collect()
    } else {
        feasible
    };
    let mut best = Best::none();
    for e in pool {
        best.offer(e.1, &[e.2]);
    }
    let target = best.index[0];
    let mut argmin = Vec::new();
    let mut index = 0usize;
    for_each_composition(pairs.len(), res, |c| {
        if index == target {
            let mut j = vec![vec![0.0; k]; k];
            for (&(a, b, _), &v) in pairs.iter().zip(c) {
                let m = v as f64 / res as f64;
                if a == b {
                    j[a][a] = m;
                } else {
                    j[a][b] = 0.5 * m;
                    j[b][a] = 0.5 * m;
                }
            }
            argmin = j;
        }
        index += 1;
    });
    Ok(GridResult {
        value: best.value,
        argmin,
        band_spread: 0.0,
        resolution: res,
    })
}

/// Grid minimum of `D(Q_XY||P_XY) + [rho(Q_X) - H(X|Y)]_+` over joint grid
/// points. `rate` is sampled once per grid marginal.
pub fn grid_error_exponent_rb<F>(src: &Source, rate: F, gs: &GridSpec) -> Result<GridResult>
where
    F: Fn(&Pmf) -> Result<f64> + Sync,
{
    let (nx, ny) = (src.x_size(), src.y_size());
    let res = gs.resolution;
    gs.guard("grid_error_exponent_rb", simplex_grid_len(nx * ny, res))?;
    let mut marg_index = HashMap::new();
    let mut margs = Vec::new();
    for_each_composition(nx, res, |c| {
        marg_index.insert(c.to_vec(), margs.len());
        margs.push(c.iter().map(|&v| v as f64 / res as f64).collect::<Vec<f64>>());
    });
    let rates: Vec<f64> = margs
        .par_iter()
        .map(|q| rate(&Pmf::from_weights(q.clone()).expect("grid point has mass")))
        .collect::<Result<_>>()?;
    let pxy: Vec<f64> = src.joint().rows().iter().flatten().copied().collect();
    let mut best = Best::none();
    let mut index = 0usize;
    let mut best_point = Vec::new();
    let mut mc = vec![0u32; nx];
    for_each_composition(nx * ny, res, |c| {
        let qxy: Vec<f64> = c.iter().map(|&v| v as f64 / res as f64).collect();
        for x in 0..nx {
            mc[x] = c[x * ny..(x + 1) * ny].iter().sum();
        }
        let rho = rates[marg_index[&mc]];
        let div = kl_raw(&qxy, &pxy);
        if div.is_finite() {
            let mut qy = vec![0.0; ny];
            for x in 0..nx {
                for y in 0..ny {
                    qy[y] += qxy[x * ny + y];
                }
            }
            let h_xy = entropy_raw(&qxy) - entropy_raw(&qy);
            let value = div + (rho - h_xy).max(0.0);
            let before = best.index.clone();
            best.offer(value, &[index]);
            if best.index != before {
                best_point = qxy;
            }
        }
        index += 1;
    });
    Ok(GridResult {
        value: best.value,
        argmin: best_point.chunks(ny).map(<[f64]>::to_vec).collect(),
        band_spread: 0.0,
        resolution: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{entropy, CondPmf};
    use approx::assert_abs_diff_eq;

    fn sec7() -> Source {
        Source::new(
            Pmf::new(vec![0.2, 0.8]).unwrap(),
            CondPmf::new(vec![vec![0.8, 0.15, 0.05], vec![0.05, 0.15, 0.8]]).unwrap(),
        )
        .unwrap()
    }

    fn indep() -> Source {
        Source::new(
            Pmf::new(vec![0.3, 0.7]).unwrap(),
            CondPmf::new(vec![vec![0.25, 0.75], vec![0.25, 0.75]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn grid_enumeration_matches_count() {
        assert_eq!(simplex_grid(3, 4).len() as u128, simplex_grid_len(3, 4));
        assert_eq!(simplex_grid(2, 10).len(), 11);
    }

    #[test]
    fn v_rb_independent_rows_is_zero() {
        let gs = GridSpec::new(40).unwrap();
        let r = grid_v_rb(&indep(), &Pmf::new(vec![0.5, 0.5]).unwrap(), 5.0, 1.0, &gs).unwrap();
        assert!(r.value.abs() < 1e-12);
        assert_eq!(r.argmin[0], vec![0.25, 0.75]);
    }

    #[test]
    fn v_rb_pinned_constraint() {
        // W rows are grid points at resolution 20, so ee = D(qx||px) pins Q = W.
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let ee = kl_raw(qx.as_slice(), src.px().as_slice());
        let r = grid_v_rb(&src, &qx, ee, 1.0, &GridSpec::new(20).unwrap()).unwrap();
        let i = crate::prob::mutual_information(&qx, src.pygx()).unwrap();
        assert_abs_diff_eq!(r.value, i, epsilon = 1e-12);
    }

    #[test]
    fn v_ex_band_endpoints() {
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let d0 = kl_raw(qx.as_slice(), src.px().as_slice());
        let gs = GridSpec::new(400).unwrap();
        let r = grid_v_ex(&src, &qx, d0, &gs).unwrap();
        assert_abs_diff_eq!(r.value, entropy(&qx), epsilon = 1e-12);
        let dist = bhattacharyya_matrix(src.pygx()).get(0, 1);
        let r = grid_v_ex(&src, &qx, d0 + 2.0 * 0.25 * 0.75 * dist, &gs).unwrap();
        assert!(r.value.abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn e_functions_vanish_at_zero_slope() {
        let gs = GridSpec::new(20).unwrap();
        assert!(grid_e_rb(&sec7(), 0.39, 0.01, 0.0, &gs).unwrap().value.abs() < 1e-12);
        // with t = 0 the exchange objective is D(Q||P) + B(J), minimized at Q = P
        let ex = grid_e_ex(&indep(), 0.39, 0.01, 0.0, &gs).unwrap();
        assert!(ex.value >= 0.0);
    }

    #[test]
    fn error_exponent_with_zero_rate_is_zero() {
        let src = Source::new(
            Pmf::new(vec![0.5, 0.5]).unwrap(),
            CondPmf::new(vec![vec![0.25, 0.75], vec![0.75, 0.25]]).unwrap(),
        )
        .unwrap();
        let gs = GridSpec::new(8).unwrap();
        let r = grid_error_exponent_rb(&src, |_| Ok(0.0), &gs).unwrap();
        assert!(r.value.abs() < 1e-12);
    }
}
