//! Exact machinery for finite discounted MDPs and constrained MDPs.
//!
//! Everything here is computed with dense linear solves rather than sampling:
//! policy evaluation (plain and entropy-regularized), soft Q-values,
//! discounted state-action visitation distributions, discounted policy
//! entropy, and Lagrangian values for the constrained problem. Instances are
//! small (tens to a few hundred states), so exactness is cheap and every
//! downstream tolerance can be tight.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmdp;
mod error;
mod eval;
mod io;
mod mdp;
mod policy;

pub use cmdp::TabularCmdp;
pub use error::MdpError;
pub use eval::{
    discounted_entropy, evaluate, lagrangian, visitation, CmdpValues, PolicyEvaluator, ValueReport,
};
pub use io::CmdpFile;
pub use mdp::TabularMdp;
pub use policy::Policy;

/// Tolerance used when validating stochastic rows (kernel, rho, policies).
pub const STOCHASTIC_TOL: f64 = 1e-12;
