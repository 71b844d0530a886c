use super::mappings::{bhatt_row, lump_in_place};
use super::root::{bisect_monotone, Bracket};
use super::{SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::prob::{bhatt_avg_raw, bhattacharyya_matrix, kl_raw, CondPmf, JointPmf, Pmf, Source};

/// `qx x qx` with the pairs at infinite distance removed.
fn start_coupling(qx: &[f64], d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = qx.len();
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if d[i][j].is_finite() { qx[i] * qx[j] } else { 0.0 })
                .collect()
        })
        .collect()
}

fn product_kl(j: &[Vec<f64>], qx: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in j.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v > 0.0 {
                acc += v * (v / (qx[i] * qx[k])).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Rows of `j` normalized to conditionals; rows without mass stay zero.
fn conditionals(j: &[Vec<f64>]) -> Vec<Vec<f64>> {
    j.iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            if s > 0.0 {
                r.iter().map(|v| v / s).collect()
            } else {
                vec![0.0; r.len()]
            }
        })
        .collect()
}

/// Tilts every active conditional row by `lambda` and scales by `qx`.
fn tilt(cond: &[Vec<f64>], d: &[Vec<f64>], qx: &[f64], lambda: f64, out: &mut [Vec<f64>]) -> Result<()> {
    let k = qx.len();
    let mut scratch = vec![0.0; k];
    for x in 0..k {
        if qx[x] > 0.0 {
            if !bhatt_row(&cond[x], &d[x], lambda, &mut scratch, &mut out[x]) {
                return Err(Error::DegenerateRow { row: x });
            }
            out[x].iter_mut().for_each(|v| *v *= qx[x]);
        } else {
            out[x].iter_mut().for_each(|v| *v = 0.0);
        }
    }
    Ok(())
}

/// Cyclic I-projection for `min I(J)` over couplings `J` with both marginals
/// `qx` and `D(qx||px) + E_J d = ee`.
///
/// Odd steps tilt the conditional rows so the distance constraint holds
/// exactly, even steps rescale the columns back to `qx`. The reported value
/// is `D(J || qx x qx)` at the last tilted iterate.
pub fn v_ex(src: &Source, qx: &Pmf, ee: f64, cfg: &SolverConfig) -> Result<SolveResult<JointPmf>> {
    cfg.validate()?;
    src.check_qx(qx)?;
    if ee.is_nan() {
        return Err(Error::InvalidArgument("ee is NaN".into()));
    }
    let q = qx.as_slice();
    let d = bhattacharyya_matrix(src.pygx());
    let d = d.rows();
    let d0 = kl_raw(q, src.px().as_slice());
    let c = ee - d0;
    if c < 0.0 {
        return Err(Error::Infeasible(format!("ee = {ee} is below D(qx||px) = {d0}")));
    }
    let k = q.len();
    let mut j = start_coupling(q, d);
    let mut tilted = j.clone();
    let mut total_lambda = 0.0;
    let mut prev = f64::NEG_INFINITY;
    let mut value = 0.0;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;

    while iters < cfg.max_outer_iters {
        iters += 1;
        let cond = conditionals(&j);
        let mut scratch = vec![vec![0.0; k]; k];
        let mut failed = None;
        let lambda = bisect_monotone(
            |l| match tilt(&cond, d, q, l, &mut scratch) {
                Ok(()) => bhatt_avg_raw(&scratch, d),
                Err(e) => {
                    failed = Some(e);
                    f64::NAN
                }
            },
            c,
            Bracket::expandable(-1.0, 1.0, -cfg.bracket_limit, cfg.bracket_limit),
            cfg,
        )
        .map_err(|e| match e {
            Error::BracketFailure { f_lo, f_hi, .. } => Error::Infeasible(format!(
                "distance target {c} outside the attainable range [{}, {}]",
                f_lo.min(f_hi),
                f_lo.max(f_hi)
            )),
            other => other,
        })?;
        if let Some(e) = failed {
            return Err(e);
        }
        total_lambda += lambda;
        tilt(&cond, d, q, lambda, &mut tilted)?;
        value = product_kl(&tilted, q);
        last_delta = value - prev;
        prev = value;
        if last_delta.abs() < cfg.obj_tol {
            converged = true;
            break;
        }
        j.clone_from(&tilted);
        lump_in_place(&mut j, q)?;
    }
    if !converged {
        cfg.out_of_iterations("v_ex", iters, last_delta)?;
    }
    Ok(SolveResult {
        value,
        minimizer: JointPmf::from_rows_unchecked(tilted),
        multiplier: total_lambda,
        iters,
        converged,
    })
}

/// Unconstrained minimizer of `E_J d + I(J)` over couplings with both
/// marginals `qx`, by alternating row and column scaling of `qx x qx e^{-d}`.
/// Returns the conditional `J(x~|x)` and the objective value.
pub fn ex_unconstrained(src: &Source, qx: &Pmf, cfg: &SolverConfig) -> Result<SolveResult<CondPmf>> {
    cfg.validate()?;
    src.check_qx(qx)?;
    let q = qx.as_slice();
    let d = bhattacharyya_matrix(src.pygx());
    let d = d.rows();
    let k = q.len();
    let mut j = start_coupling(q, d);
    for x in 0..k {
        for y in 0..k {
            if j[x][y] > 0.0 {
                j[x][y] *= (-d[x][y]).exp();
            }
        }
    }
    let mut rows = j.clone();
    let mut prev = f64::NEG_INFINITY;
    let mut value = 0.0;
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_outer_iters {
        iters += 1;
        tilt(&conditionals(&j), d, q, 0.0, &mut rows)?;
        value = bhatt_avg_raw(&rows, d) + product_kl(&rows, q);
        last_delta = value - prev;
        prev = value;
        if last_delta.abs() < cfg.obj_tol {
            converged = true;
            break;
        }
        j.clone_from(&rows);
        lump_in_place(&mut j, q)?;
    }
    if !converged {
        cfg.out_of_iterations("ex_unconstrained", iters, last_delta)?;
    }
    let cond = conditionals(&rows)
        .into_iter()
        .map(|r| if r.iter().sum::<f64>() > 0.0 { r } else { vec![1.0 / k as f64; k] })
        .collect();
    Ok(SolveResult {
        value,
        minimizer: CondPmf::from_rows_unchecked(cond),
        multiplier: 1.0,
        iters,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{bhattacharyya_avg, entropy, mutual_information};
    use approx::assert_abs_diff_eq;

    fn sec7() -> Source {
        Source::new(
            Pmf::new(vec![0.2, 0.8]).unwrap(),
            CondPmf::new(vec![vec![0.8, 0.15, 0.05], vec![0.05, 0.15, 0.8]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn product_coupling_threshold_gives_zero() {
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let d = bhattacharyya_matrix(src.pygx());
        let b = bhattacharyya_avg(&JointPmf::product(&qx, &qx), &d).unwrap();
        let d0 = kl_raw(qx.as_slice(), src.px().as_slice());
        let r = v_ex(&src, &qx, d0 + b, &SolverConfig::default()).unwrap();
        assert!(r.value < 1e-9, "{}", r.value);
    }

    #[test]
    fn zero_distance_forces_diagonal() {
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let d0 = kl_raw(qx.as_slice(), src.px().as_slice());
        let r = v_ex(&src, &qx, d0, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, entropy(&qx), epsilon = 1e-9);
        assert!(r.minimizer.get(0, 1) < 1e-12);
    }

    #[test]
    fn binary_case_matches_closed_form() {
        // With two letters the coupling is pinned by the distance constraint.
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let dist = bhattacharyya_matrix(src.pygx()).get(0, 1);
        let d0 = kl_raw(qx.as_slice(), src.px().as_slice());
        let off = 0.1 / (2.0 * dist);
        let c = 2.0 * off * dist;
        let j = JointPmf::new(vec![vec![0.25 - off, off], vec![off, 0.75 - off]]).unwrap();
        let expect = mutual_information(&qx, &j.conditional()).unwrap();
        let r = v_ex(&src, &qx, d0 + c, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, expect, epsilon = 1e-9);
    }

    #[test]
    fn unreachable_distance_is_infeasible() {
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let err = v_ex(&src, &qx, 50.0, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn unconstrained_is_a_coupling() {
        let src = sec7();
        let qx = Pmf::new(vec![0.25, 0.75]).unwrap();
        let r = ex_unconstrained(&src, &qx, &SolverConfig::default()).unwrap();
        let col = r.minimizer.output_marginal(&qx);
        assert_abs_diff_eq!(col[0], 0.25, epsilon = 1e-8);
    }
}
