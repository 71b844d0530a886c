use serde::Serialize;

use crate::error::{Error, Result};

/// Stopping rules shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stop once one outer iteration changes the objective by less than this.
    pub obj_tol: f64,
    pub max_outer_iters: usize,
    /// Relative width at which a bisection stops.
    pub bisect_tol: f64,
    pub bracket_growth: f64,
    /// Largest magnitude a multiplier bracket may expand to.
    pub bracket_limit: f64,
    pub max_bisect_iters: usize,
    /// When set, running out of iterations with a last change below
    /// `factor * obj_tol` yields the current iterate with `converged = false`
    /// instead of an error.
    pub lenient_factor: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            obj_tol: 1e-10,
            max_outer_iters: 10_000,
            bisect_tol: 1e-12,
            bracket_growth: 2.0,
            bracket_limit: 2f64.powi(40),
            max_bisect_iters: 200,
            lenient_factor: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.obj_tol) || !positive(self.bisect_tol) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.bracket_growth > 1.0) || !(self.bracket_limit >= 1.0) {
            return Err(Error::InvalidArgument("bracket growth must exceed 1 and the limit be at least 1".into()));
        }
        if self.max_outer_iters == 0 || self.max_bisect_iters == 0 {
            return Err(Error::InvalidArgument("iteration caps must be at least 1".into()));
        }
        if let Some(f) = self.lenient_factor {
            if !(f >= 1.0) {
                return Err(Error::InvalidArgument("lenient factor must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Decides what to do when an iteration cap is hit.
    pub(crate) fn out_of_iterations(&self, solver: &'static str, iters: usize, last_delta: f64) -> Result<()> {
        match self.lenient_factor {
            Some(f) if last_delta.abs() < f * self.obj_tol => {
                log::warn!("{solver} stopped after {iters} iterations with last change {last_delta:e}");
                Ok(())
            }
            _ => Err(Error::NotConverged {
                solver,
                iters,
                last_delta,
            }),
        }
    }
}

/// Outcome of one of the exponent solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<M> {
    pub value: f64,
    pub minimizer: M,
    /// Final `alpha` for the random binning problems, the accumulated tilt for
    /// the expurgated one, the divergence-ball multiplier for the excess-rate ones.
    pub multiplier: f64,
    pub iters: usize,
    pub converged: bool,
}
