//! Independent ground-truth machinery for constrained MDPs: the exact
//! occupancy-measure LP, the Slater-margin LP, soft value iteration for
//! exact regularized optima, dense dual-grid search, and a certified
//! mixing-constant helper. Nothing here depends on
//! the solver, so these can serve as oracles in tests and benchmarks.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod dual;
mod lp;
mod mixing;
mod simplex;
mod soft_vi;

pub use dual::{dual_value_exact, grid_dual_min, grid_dual_min_regularized, GridDualMin};
pub use lp::{lp_solve_cmdp, slater_margin, slater_margin_with_policy, LpOutcome, LpSolution};
pub use mixing::mixing_certificate;
pub use simplex::{solve_standard_form, LpOutcome as RawLpOutcome, LpStatus, StandardLp};
pub use soft_vi::{soft_value_iteration, soft_value_iteration_from, value_iteration, SoftViResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{what} exceeded its iteration cap of {cap}")]
    IterationCap { what: String, cap: usize },

    #[error("grid dual search supports 1 or 2 constraints, got {0}")]
    GridDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Mdp(#[from] mdp_core::MdpError),
}
