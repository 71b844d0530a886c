//! Rate functions of variable-rate Slepian-Wolf codes as a function of the
//! error exponent, for a fixed source type `qx`.
//!
//! Three functions are provided: the random-binning bound `rho_rb`, the
//! expurgated bound `rho_ex` and the sphere-packing bound `rho_sp`. Each is
//! zero up to `D(qx||px)`, saturates at `H(qx)`, and in between follows a
//! curved segment computed by the solvers plus (for the first two) a slope-one
//! affine segment.

use serde::Serialize;

use crate::error::Result;
use crate::prob::{
    bhatt_avg_raw, bhattacharyya_matrix, cond_kl_raw, entropy_raw, kl_raw, mutual_information_raw, output_marginal_raw,
    CondPmf, Pmf, Source,
};
use crate::solvers::{ex_unconstrained, v_ex, v_rb, SolverConfig};

/// Exponent thresholds separating the cases of the rate functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakpoints {
    pub ee0: f64,
    pub ee_a_rb: f64,
    pub ee_max_rb: f64,
    pub ee_a_ex: f64,
    pub ee_max_ex: f64,
    pub ee_max_sp: f64,
    /// Unconstrained minimizer of `I + D(.||W|qx)`.
    pub q_prime_ygx: CondPmf,
    /// Unconstrained minimizer of `B + I` over couplings.
    pub q_prime_xtgx: CondPmf,
    /// `H(qx)`.
    pub h: f64,
    /// `I(qx x q_prime_ygx)`.
    pub i_prime_rb: f64,
    /// `I` of the coupling `qx x q_prime_xtgx`.
    pub i_prime_ex: f64,
}

/// One row of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCurvePoint {
    pub ee: f64,
    pub rho_rb: f64,
    pub rho_ex: f64,
    pub rho_sp: f64,
    pub rho_ub: f64,
}

/// A point of the parametric description of the curved random-binning
/// segment, obtained from the unconstrained problem with weight `lambda + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// `(lambda + 1) / (lambda + 2)`.
    pub alpha: f64,
    pub ee: f64,
    pub rho: f64,
}

/// Closed-form approximation for weakly correlated sources.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakApprox {
    pub rho: f64,
    /// Geometric mixing weight at the optimum, clamped below at 1/2.
    pub alpha_bar: f64,
}

pub fn breakpoints(src: &Source, qx: &Pmf, cfg: &SolverConfig) -> Result<Breakpoints> {
    src.check_qx(qx)?;
    let q = qx.as_slice();
    let w = src.pygx().rows();
    let ee0 = kl_raw(q, src.px().as_slice());
    let h = entropy_raw(q);

    let rb = v_rb(src, qx, f64::INFINITY, 1.0, cfg)?;
    let d_prime = cond_kl_raw(q, rb.minimizer.rows(), w);
    let i_prime_rb = mutual_information_raw(q, rb.minimizer.rows());

    let ex = ex_unconstrained(src, qx, cfg)?;
    let dist = bhattacharyya_matrix(src.pygx());
    let coupling = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        rows.iter()
            .zip(q)
            .map(|(r, &p)| r.iter().map(|v| v * p).collect())
            .collect()
    };
    let b_prime = bhatt_avg_raw(&coupling(ex.minimizer.rows()), dist.rows());
    let i_prime_ex = mutual_information_raw(q, ex.minimizer.rows());
    let product: Vec<Vec<f64>> = q.iter().map(|&a| q.iter().map(|&b| a * b).collect()).collect();
    let b_product = bhatt_avg_raw(&product, dist.rows());

    let qy = output_marginal_raw(q, w);
    let indep: Vec<Vec<f64>> = vec![qy; q.len()];
    let ee_max_sp = 2.0 * ee0 + cond_kl_raw(q, &indep, w);

    Ok(Breakpoints {
        ee0,
        ee_a_rb: ee0 + d_prime,
        ee_max_rb: ee0 + d_prime + i_prime_rb,
        ee_a_ex: ee0 + b_prime,
        ee_max_ex: ee0 + b_product,
        ee_max_sp,
        q_prime_ygx: rb.minimizer,
        q_prime_xtgx: ex.minimizer,
        h,
        i_prime_rb,
        i_prime_ex,
    })
}

/// Rate functions for a fixed `(src, qx)` with the breakpoints computed once.
#[derive(Debug, Clone)]
pub struct RateFunctions<'a> {
    src: &'a Source,
    qx: Pmf,
    cfg: SolverConfig,
    bp: Breakpoints,
}

impl<'a> RateFunctions<'a> {
    pub fn new(src: &'a Source, qx: &Pmf, cfg: &SolverConfig) -> Result<Self> {
        let bp = breakpoints(src, qx, cfg)?;
        Ok(Self {
            src,
            qx: qx.clone(),
            cfg: cfg.clone(),
            bp,
        })
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.bp
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(0.0, self.bp.h)
    }

    pub fn rho_rb(&self, ee: f64) -> Result<f64> {
        let bp = &self.bp;
        if ee <= bp.ee0 {
            return Ok(0.0);
        }
        if ee <= bp.ee_a_rb {
            let v = v_rb(self.src, &self.qx, ee, 1.0, &self.cfg)?.value;
            return Ok(self.clamp(ee + bp.h - bp.ee0 - v));
        }
        if ee <= bp.ee_max_rb {
            return Ok(self.clamp(ee - bp.ee_a_rb + bp.h - bp.i_prime_rb));
        }
        Ok(bp.h)
    }

    pub fn rho_ex(&self, ee: f64) -> Result<f64> {
        let bp = &self.bp;
        if ee <= bp.ee0 {
            return Ok(0.0);
        }
        if ee <= bp.ee_a_ex {
            return Ok(self.clamp(ee - bp.ee_a_ex + bp.h - bp.i_prime_ex));
        }
        if ee <= bp.ee_max_ex {
            let v = v_ex(self.src, &self.qx, ee, &self.cfg)?.value;
            return Ok(self.clamp(bp.h - v));
        }
        Ok(bp.h)
    }

    pub fn rho_sp(&self, ee: f64) -> Result<f64> {
        let bp = &self.bp;
        if ee <= bp.ee0 {
            return Ok(0.0);
        }
        if ee <= bp.ee_max_sp {
            let v = v_rb(self.src, &self.qx, ee, 0.0, &self.cfg)?.value;
            return Ok(self.clamp(bp.h - v));
        }
        Ok(bp.h)
    }

    pub fn rho_ub(&self, ee: f64) -> Result<f64> {
        Ok(self.rho_rb(ee)?.min(self.rho_ex(ee)?))
    }

    pub fn point(&self, ee: f64) -> Result<RateCurvePoint> {
        let rho_rb = self.rho_rb(ee)?;
        let rho_ex = self.rho_ex(ee)?;
        Ok(RateCurvePoint {
            ee,
            rho_rb,
            rho_ex,
            rho_sp: self.rho_sp(ee)?,
            rho_ub: rho_rb.min(rho_ex),
        })
    }

    /// Traces the curved random-binning segment by solving the unconstrained
    /// problem with weight `lambda + 1` for each `lambda >= 0`.
    pub fn sweep(&self, lambdas: &[f64]) -> Result<Vec<SweepPoint>> {
        let q = self.qx.as_slice();
        let w = self.src.pygx().rows();
        lambdas
            .iter()
            .map(|&lambda| {
                let eta = lambda + 1.0;
                let res = v_rb(self.src, &self.qx, f64::INFINITY, eta, &self.cfg)?;
                let rows = res.minimizer.rows();
                Ok(SweepPoint {
                    lambda,
                    alpha: eta / (1.0 + eta),
                    ee: self.bp.ee0 + cond_kl_raw(q, rows, w),
                    rho: self.clamp(self.bp.h - mutual_information_raw(q, rows)),
                })
            })
            .collect()
    }
}

pub fn rho_rb(src: &Source, qx: &Pmf, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    RateFunctions::new(src, qx, cfg)?.rho_rb(ee)
}

pub fn rho_ex(src: &Source, qx: &Pmf, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    RateFunctions::new(src, qx, cfg)?.rho_ex(ee)
}

pub fn rho_sp(src: &Source, qx: &Pmf, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    RateFunctions::new(src, qx, cfg)?.rho_sp(ee)
}

pub fn rho_ub(src: &Source, qx: &Pmf, ee: f64, cfg: &SolverConfig) -> Result<f64> {
    RateFunctions::new(src, qx, cfg)?.rho_ub(ee)
}

/// Evaluates all rate functions on a sorted grid of exponents.
pub fn rho_curve(src: &Source, qx: &Pmf, ee_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<RateCurvePoint>> {
    if ee_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(crate::Error::InvalidArgument("ee grid must be sorted".into()));
    }
    let rf = RateFunctions::new(src, qx, cfg)?;
    ee_grid.iter().map(|&ee| rf.point(ee)).collect()
}

/// Random-binning rate for weakly correlated sources, using the output
/// distribution `qx W` in place of the optimal one.
pub fn rho_rb_weak_approx(src: &Source, qx: &Pmf, ee: f64) -> WeakApprox {
    let q = qx.as_slice();
    let w = src.pygx().rows();
    let d0 = kl_raw(q, src.px().as_slice());
    if !(ee >= d0) {
        return WeakApprox { rho: 0.0, alpha_bar: 1.0 };
    }
    let h = entropy_raw(q);
    let qstar = output_marginal_raw(q, w);
    let dterm = cond_kl_raw(q, w, &vec![qstar; q.len()]);
    let x = ee - d0;
    if dterm <= 0.0 {
        return WeakApprox { rho: h, alpha_bar: 1.0 };
    }
    let alpha_bar = 1.0 - (x / dterm).sqrt();
    let rho = if alpha_bar >= 0.5 {
        h - x - dterm + 2.0 * (dterm * x).sqrt()
    } else {
        h + x - 0.5 * dterm
    };
    WeakApprox {
        rho: rho.clamp(0.0, h),
        alpha_bar: alpha_bar.max(0.5),
    }
}
