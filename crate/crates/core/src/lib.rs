//! Rate functions and excess-rate exponents for variable-rate Slepian-Wolf
//! coding of finite-alphabet memoryless sources.
//!
//! All rates and exponents are in nats.

pub mod binning_sim;
pub mod cli;
mod error;
pub mod excess_rate;
pub mod grid_oracle;
pub mod prob;
pub mod rate_functions;
pub mod solvers;

pub use error::{Error, Result};
pub use prob::{CondPmf, DistMatrix, JointPmf, Pmf, Source, TypeDescriptor};
pub use solvers::{SolveResult, SolverConfig};
