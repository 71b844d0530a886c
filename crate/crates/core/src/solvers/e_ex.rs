use super::e_rb::check_exponent_args;
use super::root::{bisect_monotone, Bracket};
use super::{SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::prob::{bhattacharyya_matrix, kl_raw, JointPmf, Source};

/// Euclidean projection onto the probability simplex (sort based).
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in s.iter().enumerate() {
        cum += x;
        let th = (cum - 1.0) / (i + 1) as f64;
        if x - th > 0.0 {
            theta = th;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

fn ln_floor(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Symmetric couplings parameterized by the mass `u` on unordered pairs
/// `{i, j}` at finite distance: `J_ii = u_ii`, `J_ij = J_ji = u_ij / 2`.
struct Problem<'a> {
    px: &'a [f64],
    ln_px: Vec<f64>,
    pairs: Vec<(usize, usize, f64)>,
    k: usize,
    r: f64,
    t: f64,
}

impl Problem<'_> {
    fn marginal(&self, u: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.k];
        for (&(i, j, _), &m) in self.pairs.iter().zip(u) {
            if i == j {
                q[i] += m;
            } else {
                q[i] += 0.5 * m;
                q[j] += 0.5 * m;
            }
        }
        q
    }

    /// `sum u d`, `sum_J J ln J`, `sum_i Q ln Q`, `D(Q||P)`.
    fn parts(&self, u: &[f64]) -> (f64, f64, f64, f64) {
        let q = self.marginal(u);
        let mut b = 0.0;
        let mut jlj = 0.0;
        for (&(i, j, d), &m) in self.pairs.iter().zip(u) {
            if m > 0.0 {
                b += m * d;
                jlj += if i == j { m * m.ln() } else { m * (0.5 * m).ln() };
            }
        }
        let qlq: f64 = q.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum();
        (b, jlj, qlq, kl_raw(&q, self.px))
    }

    /// Unpenalized objective `D + B + t [r - H(Q) + I(J)]`.
    fn gamma(&self, u: &[f64]) -> f64 {
        let (b, jlj, qlq, d) = self.parts(u);
        // H(Q) = -qlq and I(J) = jlj - 2 qlq.
        d + b + self.t * (self.r + qlq + jlj - 2.0 * qlq)
    }

    fn penalized(&self, u: &[f64], mu: f64) -> f64 {
        let (_, _, _, d) = self.parts(u);
        self.gamma(u) + mu * d
    }

    fn gradient(&self, u: &[f64], mu: f64, g: &mut [f64]) {
        let q = self.marginal(u);
        let a = 1.0 + mu - self.t;
        let lq: Vec<f64> = q.iter().map(|&v| ln_floor(v) + 1.0).collect();
        for (n, &(i, j, d)) in self.pairs.iter().enumerate() {
            g[n] = if i == j {
                a * lq[i] - (1.0 + mu) * self.ln_px[i] + d + self.t * (ln_floor(u[n]) + 1.0)
            } else {
                0.5 * a * (lq[i] + lq[j]) - 0.5 * (1.0 + mu) * (self.ln_px[i] + self.ln_px[j])
                    + d
                    + self.t * (ln_floor(0.5 * u[n]) + 1.0)
            };
        }
    }

    /// Projected gradient with Barzilai-Borwein steps and Armijo backtracking.
    fn minimize(&self, u: &mut Vec<f64>, mu: f64, cfg: &SolverConfig) -> Result<usize> {
        let n = u.len();
        let mut g = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut cand = vec![0.0; n];
        self.gradient(u, mu, &mut g);
        let mut f = self.penalized(u, mu);
        let mut step = 1.0;
        let mut last_delta = f64::INFINITY;
        for it in 1..=cfg.max_outer_iters {
            // Stationarity: distance moved by a unit projected step.
            cand.iter_mut().zip(u.iter().zip(&g)).for_each(|(c, (&x, &gr))| *c = x - gr);
            project_simplex(&mut cand);
            let pg = cand.iter().zip(u.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if pg < 1e-11 {
                return Ok(it);
            }
            let mut s = step;
            let accepted = loop {
                cand.iter_mut().zip(u.iter().zip(&g)).for_each(|(c, (&x, &gr))| *c = x - s * gr);
                project_simplex(&mut cand);
                let f_new = self.penalized(&cand, mu);
                let descent: f64 = g.iter().zip(cand.iter().zip(u.iter())).map(|(gr, (c, x))| gr * (c - x)).sum();
                if f_new <= f + 1e-4 * descent {
                    break Some(f_new);
                }
                s *= 0.5;
                if s < 1e-30 {
                    break None;
                }
            };
            let Some(f_new) = accepted else {
                // No further decrease representable in floating point.
                return Ok(it);
            };
            self.gradient(&cand, mu, &mut g_new);
            let (mut ss, mut sy) = (0.0, 0.0);
            for i in 0..n {
                let ds = cand[i] - u[i];
                ss += ds * ds;
                sy += ds * (g_new[i] - g[i]);
            }
            step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (2.0 * s).min(1e12) };
            last_delta = f - f_new;
            std::mem::swap(u, &mut cand);
            std::mem::swap(&mut g, &mut g_new);
            f = f_new;
            if ss == 0.0 || last_delta <= 0.0 {
                // accepted step made no progress in floating point
                return Ok(it);
            }
        }
        cfg.out_of_iterations("e_ex", cfg.max_outer_iters, last_delta)?;
        Ok(cfg.max_outer_iters)
    }
}

/// Minimizes `D(Q||P_X) + B(J) + t [r - H(Q) + I(J)]` over symmetric couplings
/// `J` with marginal `Q` satisfying `D(Q||P_X) <= er`.
///
/// Restricting to symmetric couplings loses nothing: the objective is convex
/// and invariant under transposing `J`. The ball is handled by bisection on
/// its multiplier, each inner problem by projected gradient descent.
pub fn e_ex(src: &Source, r: f64, er: f64, t: f64, cfg: &SolverConfig) -> Result<SolveResult<JointPmf>> {
    cfg.validate()?;
    check_exponent_args(r, er, t)?;
    if t < 1.0 {
        return Err(Error::InvalidArgument(format!("the expurgated branch needs t >= 1, got {t}")));
    }
    let px = src.px().as_slice();
    let k = px.len();
    let d = bhattacharyya_matrix(src.pygx());
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i..k {
            if d.get(i, j).is_finite() {
                pairs.push((i, j, d.get(i, j)));
            }
        }
    }
    let prob = Problem {
        px,
        ln_px: px.iter().map(|&p| p.ln()).collect(),
        pairs,
        k,
        r,
        t,
    };
    let mut u: Vec<f64> = prob
        .pairs
        .iter()
        .map(|&(i, j, _)| if i == j { px[i] * px[i] } else { 2.0 * px[i] * px[j] })
        .collect();
    let s: f64 = u.iter().sum();
    u.iter_mut().for_each(|v| *v /= s);

    if er == 0.0 {
        return pinned_marginal(&prob, &d, cfg);
    }
    let mut iters = prob.minimize(&mut u, 0.0, cfg)?;
    let mut mu = 0.0;
    if prob.parts(&u).3 > er {
        let outer = SolverConfig {
            bisect_tol: cfg.bisect_tol.max(1e-10),
            ..*cfg
        };
        let mut warm = u.clone();
        let mut failed = None;
        mu = bisect_monotone(
            |m| match prob.minimize(&mut warm, m, cfg) {
                Ok(n) => {
                    iters += n;
                    prob.parts(&warm).3
                }
                Err(e) => {
                    failed = Some(e);
                    f64::NAN
                }
            },
            er,
            Bracket::expandable(0.0, 1.0, 0.0, cfg.bracket_limit),
            &outer,
        )?;
        if let Some(e) = failed {
            return Err(e);
        }
        u = warm;
        iters += prob.minimize(&mut u, mu, cfg)?;
    }
    let mut j = vec![vec![0.0; k]; k];
    for (&(a, b, _), &m) in prob.pairs.iter().zip(&u) {
        if a == b {
            j[a][a] = m;
        } else {
            j[a][b] = 0.5 * m;
            j[b][a] = 0.5 * m;
        }
    }
    Ok(SolveResult {
        value: prob.gamma(&u),
        minimizer: JointPmf::from_rows_unchecked(j),
        multiplier: mu,
        iters,
        converged: true,
    })
}

/// `er = 0` pins the marginal to `P_X`; the coupling part is then an entropic
/// transport problem solved by Sinkhorn scaling of `P x P e^{-d/t}`.
fn pinned_marginal(prob: &Problem, d: &crate::prob::DistMatrix, cfg: &SolverConfig) -> Result<SolveResult<JointPmf>> {
    let (k, p, t) = (prob.k, prob.px, prob.t);
    let mut j: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            (0..k)
                .map(|b| if d.get(a, b).is_finite() { p[a] * p[b] * (-d.get(a, b) / t).exp() } else { 0.0 })
                .collect()
        })
        .collect();
    let mut prev = f64::INFINITY;
    let mut value = f64::INFINITY;
    let mut iters = 0;
    let mut last_delta = f64::INFINITY;
    while iters < cfg.max_outer_iters {
        iters += 1;
        for (a, row) in j.iter_mut().enumerate() {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v *= p[a] / s);
        }
        let mut u = Vec::with_capacity(prob.pairs.len());
        for &(a, b, _) in &prob.pairs {
            u.push(if a == b { j[a][a] } else { j[a][b] + j[b][a] });
        }
        value = prob.gamma(&u);
        last_delta = value - prev;
        prev = value;
        if last_delta.abs() < cfg.obj_tol {
            break;
        }
        super::mappings::lump_in_place(&mut j, p)?;
    }
    if last_delta.abs() >= cfg.obj_tol {
        cfg.out_of_iterations("e_ex", iters, last_delta)?;
    }
    Ok(SolveResult {
        value,
        minimizer: JointPmf::from_rows_unchecked(j),
        multiplier: f64::INFINITY,
        iters,
        converged: last_delta.abs() < cfg.obj_tol,
    })
}
