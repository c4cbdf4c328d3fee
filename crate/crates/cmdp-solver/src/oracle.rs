//! The dual oracle: inexact subgradients of `d_tau` from the inner NPG
//! solver, separation cuts outside the nonnegative orthant, and the
//! associated dual-value estimates.

use cutting_plane::{CutKind, CutResponse};
use mdp_core::{CmdpValues, PolicyEvaluator, TabularCmdp};
use nalgebra::DVector;
use npg::run_npg;

use crate::SolveError;

/// Extra per-query data kept alongside the cut for tracing and final-policy
/// selection. Only subgradient queries produce it.
#[derive(Debug, Clone)]
pub(crate) struct QueryRecord {
    pub lambda: DVector<f64>,
    pub value_estimate: f64,
    pub values: CmdpValues,
}

/// Answers one dual query at `lambda`.
///
/// For `lambda` in the nonnegative orthant, runs the inner solver on the
/// combined reward `r_0 + <lambda, r>` and returns the cut
/// `c - V(rho) - mu lambda` (the negated inexact dual gradient) together
/// with the Lagrangian value estimate, which sits within `6 tau gamma delta`
/// below the true dual value. Otherwise returns the separation cut with
/// ones at the negative coordinates and no value.
pub(crate) fn query(
    cmdp: &TabularCmdp,
    lambda: &DVector<f64>,
    tau: f64,
    delta: f64,
    mu: f64,
) -> Result<(CutResponse, Option<QueryRecord>), SolveError> {
    let m = cmdp.num_constraints();
    assert_eq!(lambda.len(), m, "multiplier dimension");

    if lambda.iter().any(|&v| v < 0.0) {
        let vector = DVector::from_fn(m, |i, _| if lambda[i] < 0.0 { 1.0 } else { 0.0 });
        return Ok((
            CutResponse {
                kind: CutKind::Separation,
                vector,
                value_estimate: None,
            },
            None,
        ));
    }

    let reward = cmdp.combined_reward(lambda)?;
    let inner = run_npg(cmdp.mdp(), &reward, tau, delta)?;
    let evaluator = PolicyEvaluator::new(cmdp.mdp(), &inner.policy)?;
    let values = evaluator.cmdp_values(cmdp)?;

    let slack = &values.constraints - cmdp.thresholds();
    let lagrangian = values.objective + lambda.dot(&slack) + tau * values.entropy;
    let value_estimate = lagrangian + 0.5 * mu * lambda.norm_squared();
    let vector = cmdp.thresholds() - &values.constraints - lambda * mu;

    Ok((
        CutResponse {
            kind: CutKind::Subgradient,
            vector,
            value_estimate: Some(value_estimate),
        },
        Some(QueryRecord {
            lambda: lambda.clone(),
            value_estimate,
            values,
        }),
    ))
}

/// Public dual-oracle entry point (see [`query`] for semantics).
pub fn dual_oracle(
    cmdp: &TabularCmdp,
    lambda: &DVector<f64>,
    tau: f64,
    delta: f64,
    mu: f64,
) -> Result<CutResponse, SolveError> {
    Ok(query(cmdp, lambda, tau, delta, mu)?.0)
}

/// Estimate of the dual value `d_tau(lambda)` for `lambda >= 0`: the
/// Lagrangian of a fresh inner solve, guaranteed to lie within
/// `6 tau gamma delta` below the true value.
pub fn dual_value_estimate(
    cmdp: &TabularCmdp,
    lambda: &DVector<f64>,
    tau: f64,
    delta: f64,
) -> Result<f64, SolveError> {
    if lambda.iter().any(|&v| v < 0.0) {
        return Err(SolveError::InvalidConfig(
            "dual_value_estimate requires a nonnegative multiplier".into(),
        ));
    }
    let (_, record) = query(cmdp, lambda, tau, delta, 0.0)?;
    Ok(record
        .expect("nonnegative multiplier produces a record")
        .value_estimate)
}
