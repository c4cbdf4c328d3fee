//! Fixed points of the (soft) Bellman optimality operator.
//!
//! `soft_value_iteration` iterates
//! `V(s) <- tau log sum_a exp((r(s,a) + gamma E[V(s')]) / tau)` in log space
//! until the sup-norm step falls below `tol (1-gamma)/gamma`, which bounds
//! the distance to the fixed point by `tol`. The optimal regularized policy
//! is the softmax `pi*(a|s) ∝ exp(q*(s,a)/tau)`. `value_iteration` is the
//! plain (tau = 0) variant with a greedy policy.

use mdp_core::{Policy, TabularMdp};
use nalgebra::{DMatrix, DVector};

use crate::OracleError;

#[derive(Debug, Clone)]
pub struct SoftViResult {
    pub values: DVector<f64>,
    pub q_values: DMatrix<f64>,
    pub policy: Policy,
    pub iterations: usize,
}

fn q_from_values(mdp: &TabularMdp, reward: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
    let na = mdp.n_actions();
    let expected = mdp.kernel() * values;
    DMatrix::from_fn(mdp.n_states(), na, |s, a| {
        reward[(s, a)] + mdp.gamma() * expected[s * na + a]
    })
}

fn iteration_cap(mdp: &TabularMdp, value_scale: f64, target: f64) -> usize {
    let gamma = mdp.gamma();
    let needed = ((value_scale.max(1.0) / target.min(1.0)).ln() / (1.0 / gamma).ln()).ceil();
    (4.0 * needed.max(8.0)) as usize + 1000
}

/// Runs soft value iteration to within `tol` of the fixed point (sup norm).
pub fn soft_value_iteration(
    mdp: &TabularMdp,
    reward: &DMatrix<f64>,
    tau: f64,
    tol: f64,
) -> Result<SoftViResult, OracleError> {
    soft_value_iteration_from(mdp, reward, tau, tol, DVector::zeros(mdp.n_states()))
}

/// [`soft_value_iteration`] from a caller-supplied starting value function
/// (used to warm-start sweeps over many nearby reward tables).
pub fn soft_value_iteration_from(
    mdp: &TabularMdp,
    reward: &DMatrix<f64>,
    tau: f64,
    tol: f64,
    initial: DVector<f64>,
) -> Result<SoftViResult, OracleError> {
    if !(tau > 0.0) || !(tol > 0.0) {
        return Err(OracleError::InvalidArgument(
            "soft value iteration needs tau > 0 and tol > 0".into(),
        ));
    }
    if reward.nrows() != mdp.n_states() || reward.ncols() != mdp.n_actions() {
        return Err(OracleError::InvalidArgument(
            "reward table dimensions do not match the MDP".into(),
        ));
    }
    if initial.len() != mdp.n_states() {
        return Err(OracleError::InvalidArgument(
            "initial value vector has the wrong length".into(),
        ));
    }
    let gamma = mdp.gamma();
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let r_max = reward.iter().cloned().fold(0.0f64, f64::max);
    let value_scale = (r_max + tau * (na as f64).ln()) / (1.0 - gamma) + initial.abs().max();
    let target = tol * (1.0 - gamma) / gamma;
    let cap = iteration_cap(mdp, value_scale, target);

    let mut values = initial;
    for iteration in 1..=cap {
        let q = q_from_values(mdp, reward, &values);
        let mut next = DVector::zeros(ns);
        for s in 0..ns {
            // tau * logsumexp(q/tau) with max subtraction.
            let row_max = q.row(s).max();
            let sum: f64 = (0..na).map(|a| ((q[(s, a)] - row_max) / tau).exp()).sum();
            next[s] = row_max + tau * sum.ln();
        }
        let diff = (&next - &values).abs().max();
        values = next;
        if diff <= target {
            let q = q_from_values(mdp, reward, &values);
            let mut logits = q.clone();
            logits.unscale_mut(tau);
            return Ok(SoftViResult {
                policy: Policy::from_logits(&logits),
                q_values: q,
                values,
                iterations: iteration,
            });
        }
    }
    Err(OracleError::IterationCap {
        what: "soft value iteration".into(),
        cap,
    })
}

/// Plain value iteration with a greedy (lowest-index tie-break) policy.
pub fn value_iteration(
    mdp: &TabularMdp,
    reward: &DMatrix<f64>,
    tol: f64,
) -> Result<(DVector<f64>, Policy), OracleError> {
    if !(tol > 0.0) {
        return Err(OracleError::InvalidArgument("tol must be positive".into()));
    }
    if reward.nrows() != mdp.n_states() || reward.ncols() != mdp.n_actions() {
        return Err(OracleError::InvalidArgument(
            "reward table dimensions do not match the MDP".into(),
        ));
    }
    let gamma = mdp.gamma();
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let r_max = reward.iter().cloned().fold(0.0f64, f64::max);
    let target = tol * (1.0 - gamma) / gamma;
    let cap = iteration_cap(mdp, r_max / (1.0 - gamma), target);

    let mut values = DVector::zeros(ns);
    for _ in 1..=cap {
        let q = q_from_values(mdp, reward, &values);
        let next = DVector::from_fn(ns, |s, _| q.row(s).max());
        let diff = (&next - &values).abs().max();
        values = next;
        if diff <= target {
            let q = q_from_values(mdp, reward, &values);
            let mut actions = Vec::with_capacity(ns);
            for s in 0..ns {
                let mut best = (0usize, f64::NEG_INFINITY);
                for a in 0..na {
                    if q[(s, a)] > best.1 {
                        best = (a, q[(s, a)]);
                    }
                }
                actions.push(best.0);
            }
            return Ok((values, Policy::deterministic(na, &actions)));
        }
    }
    Err(OracleError::IterationCap {
        what: "value iteration".into(),
        cap,
    })
}
