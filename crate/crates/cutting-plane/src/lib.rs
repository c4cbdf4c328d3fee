//! Vaidya-style cutting-plane method with inexact subgradient oracles.
//!
//! The method maintains a bounded polytope `{x : Ax >= b}` of candidate
//! minimizers. Each iteration queries the oracle at the volumetric center
//! (the minimizer of `1/2 log det H(x)` where `H` is the log-barrier
//! Hessian), then either drops the plane with the smallest leverage score or
//! adds the returned cutting plane at a depth controlled by the `eta`/`zeta`
//! parameters. The module is generic over the oracle and has no dependency on
//! what is being minimized.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod barrier;
mod center;
mod error;
mod polytope;
mod vaidya;

pub use barrier::{barrier_hessian, leverage_scores, log_barrier, volumetric_value};
pub use center::{volumetric_center, NewtonSettings};
pub use error::CutPlaneError;
pub use polytope::Polytope;
pub use vaidya::{
    cut_offset, vaidya_run, CutKind, CutResponse, IterationAction, IterationRecord, VaidyaParams,
    VaidyaRun, VisitedPoint,
};
