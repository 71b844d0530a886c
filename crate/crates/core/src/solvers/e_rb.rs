use super::mappings::{geometric_row, h_weights_into};
use super::root::{bisect_monotone, Bracket};
use super::{SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::prob::{cond_kl_raw, entropy_raw, kl_raw, mutual_information_raw, output_marginal_raw, JointPmf, Source};

pub(crate) fn check_exponent_args(r: f64, er: f64, t: f64) -> Result<()> {
    if !r.is_finite() {
        return Err(Error::InvalidArgument(format!("rate {r} must be finite")));
    }
    if !(er >= 0.0) {
        return Err(Error::InvalidArgument(format!("excess-rate exponent {er} must be nonnegative")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and nonnegative")));
    }
    Ok(())
}

/// `D(qx||px) + D(Q||W|qx) + t [r - H(X|Y)]`.
fn gamma_rb(px: &[f64], w: &[Vec<f64>], qx: &[f64], q: &[Vec<f64>], r: f64, t: f64) -> f64 {
    let h_xy = entropy_raw(qx) - mutual_information_raw(qx, q);
    kl_raw(qx, px) + cond_kl_raw(qx, q, w) + t * (r - h_xy)
}

/// Alternating minimization for
/// `min { D(Q_X||P_X) + D(Q||W|Q_X) + t [r - H(X|Y)] : D(Q_X||P_X) <= er }`.
///
/// The minimizer is returned as the joint `Q_X x Q_{Y|X}`; `multiplier` is
/// the Lagrange multiplier of the divergence ball in the last prior update.
pub fn e_rb(src: &Source, r: f64, er: f64, t: f64, cfg: &SolverConfig) -> Result<SolveResult<JointPmf>> {
    cfg.validate()?;
    check_exponent_args(r, er, t)?;
    let px = src.px().as_slice();
    let w = src.pygx().rows();
    let (nx, ny) = (src.x_size(), src.y_size());
    let alpha = 1.0 / (1.0 + t);

    let mut qt = output_marginal_raw(px, w);
    let mut qb = vec![vec![0.0; ny]; nx];
    let mut qx = px.to_vec();
    let mut scratch = qx.clone();
    let mut h1 = vec![0.0; nx];
    let mut h2 = vec![0.0; nx];
    let mut lambda = 0.0;
    let mut prev = f64::INFINITY;
    let mut value = f64::INFINITY;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;

    while iters < cfg.max_outer_iters {
        iters += 1;
        for x in 0..nx {
            if !geometric_row(&w[x], &qt, alpha, &mut qb[x]) {
                return Err(Error::DegenerateRow { row: x });
            }
            h1[x] = kl_raw(&qb[x], &w[x]);
            h2[x] = kl_raw(&qb[x], &qt);
        }
        lambda = 0.0;
        if !h_weights_into(px, &h1, &h2, 0.0, t, &mut qx) {
            return Err(Error::Infeasible("prior update lost all mass".into()));
        }
        if kl_raw(&qx, px) > er {
            lambda = bisect_monotone(
                |l| {
                    if h_weights_into(px, &h1, &h2, l, t, &mut scratch) {
                        kl_raw(&scratch, px)
                    } else {
                        f64::NAN
                    }
                },
                er,
                Bracket::expandable(0.0, 1.0, 0.0, cfg.bracket_limit),
                cfg,
            )?;
            h_weights_into(px, &h1, &h2, lambda, t, &mut qx);
        }
        qt = output_marginal_raw(&qx, &qb);
        value = gamma_rb(px, w, &qx, &qb, r, t);
        last_delta = prev - value;
        prev = value;
        if last_delta < cfg.obj_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        cfg.out_of_iterations("e_rb", iters, last_delta)?;
    }
    let joint = qb
        .iter()
        .zip(&qx)
        .map(|(row, &p)| row.iter().map(|v| v * p).collect())
        .collect();
    Ok(SolveResult {
        value,
        minimizer: JointPmf::from_rows_unchecked(joint),
        multiplier: lambda,
        iters,
        converged,
    })
}
