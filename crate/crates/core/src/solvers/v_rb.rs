use super::mappings::geometric_row;
use super::root::{bisect_monotone, Bracket};
use super::{SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::prob::{cond_kl_raw, kl_raw, output_marginal_raw, CondPmf, Pmf, Source};

/// Applies the geometric mapping to the active rows; inactive rows are left alone.
fn geometric_all(w: &[Vec<f64>], qy: &[f64], alpha: f64, active: &[bool], out: &mut [Vec<f64>]) -> Result<()> {
    for (x, row) in out.iter_mut().enumerate() {
        if active[x] && !geometric_row(&w[x], qy, alpha, row) {
            return Err(Error::DegenerateRow { row: x });
        }
    }
    Ok(())
}

/// Alternating minimization of `I(Q) + eta D(Q || W | qx)` over conditionals
/// with `D(qx x Q || P_XY) <= ee`.
///
/// Each iteration takes the geometric combination of the channel with the
/// current output distribution at the smallest admissible `alpha` and then
/// replaces the output distribution by the induced marginal.
pub fn v_rb(src: &Source, qx: &Pmf, ee: f64, eta: f64, cfg: &SolverConfig) -> Result<SolveResult<CondPmf>> {
    cfg.validate()?;
    src.check_qx(qx)?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta = {eta} must be finite and nonnegative")));
    }
    if ee.is_nan() {
        return Err(Error::InvalidArgument("ee is NaN".into()));
    }
    let qx = qx.as_slice();
    let w = src.pygx().rows();
    let d0 = kl_raw(qx, src.px().as_slice());
    let c = ee - d0;
    if c < 0.0 {
        return Err(Error::Infeasible(format!(
            "ee = {ee} is below D(qx||px) = {d0}"
        )));
    }
    let (nx, ny) = (src.x_size(), src.y_size());
    let active: Vec<bool> = qx.iter().map(|&q| q > 0.0).collect();
    let alpha0 = eta / (1.0 + eta);

    let mut qy = output_marginal_raw(qx, w);
    let mut q = vec![vec![1.0 / ny as f64; ny]; nx];
    let mut scratch = q.clone();
    let mut alpha = alpha0;
    let mut prev = f64::INFINITY;
    let mut value = f64::INFINITY;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;

    while iters < cfg.max_outer_iters {
        iters += 1;
        geometric_all(w, &qy, alpha0, &active, &mut q)?;
        alpha = alpha0;
        if cond_kl_raw(qx, &q, w) > c {
            let mut failed = None;
            alpha = bisect_monotone(
                |a| match geometric_all(w, &qy, a, &active, &mut scratch) {
                    Ok(()) => cond_kl_raw(qx, &scratch, w),
                    Err(e) => {
                        failed = Some(e);
                        f64::NAN
                    }
                },
                c,
                Bracket::fixed(alpha0, 1.0),
                cfg,
            )?;
            if let Some(e) = failed {
                return Err(e);
            }
            geometric_all(w, &qy, alpha, &active, &mut q)?;
        }
        qy = output_marginal_raw(qx, &q);
        let qy_rows = vec![qy.clone(); nx];
        value = cond_kl_raw(qx, &q, &qy_rows) + eta * cond_kl_raw(qx, &q, w);
        last_delta = prev - value;
        prev = value;
        if last_delta < cfg.obj_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        cfg.out_of_iterations("v_rb", iters, last_delta)?;
    }
    Ok(SolveResult {
        value: value.max(0.0),
        minimizer: CondPmf::from_rows_unchecked(q),
        multiplier: alpha,
        iters,
        converged,
    })
}
