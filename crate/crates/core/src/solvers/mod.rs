//! The exponent solvers and the mappings they iterate.
//!
//! * [`v_rb`]: constrained minimum of mutual information plus channel divergence.
//! * [`v_ex`]: constrained minimum of mutual information over couplings with a
//!   prescribed average Bhattacharyya distance.
//! * [`e_rb`], [`e_ex`]: the Lagrangian value functions whose maxima over `t`
//!   decide achievability of a (rate, excess-rate exponent) pair.

mod config;
mod e_ex;
mod e_rb;
mod mappings;
mod root;
mod v_ex;
mod v_rb;

pub use config::{SolveResult, SolverConfig};
pub use e_ex::e_ex;
pub use e_rb::e_rb;
pub use mappings::{map_bhatt, map_geometric, map_h, map_lumping};
pub use root::{bisect_monotone, maximize_concave, Bracket, ConcaveMax};
pub use v_ex::{ex_unconstrained, v_ex};
pub use v_rb::v_rb;

