//! Cutting-plane solver for constrained MDPs.
//!
//! The constrained problem `max V_0(rho) s.t. V_i(rho) >= c_i` is attacked
//! through its entropy-regularized Lagrangian dual: the dual function
//! `d_tau(lambda) = max_pi [V_0 + <lambda, V - c> + tau H(pi)]` is convex in
//! the multipliers, its (inexact) gradients come from an exact
//! natural-policy-gradient inner solver, and the outer minimization over
//! `lambda >= 0` runs the volumetric-barrier cutting-plane method. Points
//! with negative coordinates get separation cuts instead of oracle calls.
//! The final policy is one more inner solve at the best multiplier visited.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod diagnostics;
mod geometry;
mod oracle;
mod solve;
mod trace;

pub use config::{BLambdaSource, DualConfig, MixingParams, ResolvedParams};
pub use diagnostics::{
    constraint_violation_bound, dual_gap_epsilon, dual_gap_epsilon_alt, dual_range_bound,
    dual_smoothness, mixing_factor, optimality_gap_bound, sufficient_npg_accuracy,
    sufficient_outer_iterations, DiagnosticsReport,
};
pub use geometry::{compute_b_lambda, initial_simplex};
pub use oracle::{dual_oracle, dual_value_estimate};
pub use solve::{convergence_bounds, solve, Solution};
pub use trace::{ConvergenceTrace, TraceAction, TraceRow};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("the instance has no constraints; nothing to dualize")]
    NoConstraints,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Slater margin is not positive (xi = {xi}); the dual multiplier set is unbounded")]
    SlaterNotSatisfied { xi: f64 },

    #[error("no iterate with a nonnegative multiplier was ever visited")]
    NoFeasibleIterate(Box<ConvergenceTrace>),

    #[error(transparent)]
    Npg(#[from] npg::NpgError),

    #[error(transparent)]
    Oracle(#[from] oracles::OracleError),

    #[error(transparent)]
    CutPlane(#[from] cutting_plane::CutPlaneError),

    #[error(transparent)]
    Mdp(#[from] mdp_core::MdpError),
}
