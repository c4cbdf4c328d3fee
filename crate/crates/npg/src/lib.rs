//! Exact entropy-regularized natural policy gradient.
//!
//! With entropy coefficient `tau` and learning rate `eta`, the natural
//! gradient update for a softmax-parametrized policy has the closed form
//!
//! ```text
//! pi'(a|s) = pi(a|s)^(1 - eta tau / (1-gamma)) * exp(eta q(s,a) / (1-gamma)) / Z(s)
//! ```
//!
//! which converges linearly to the unique regularized optimum. The
//! [`run_npg`] wrapper rescales rewards into `[0, 1]`, runs the update with
//! the maximal learning rate `eta = (1-gamma)/tau` (where it reduces to a
//! softmax of `q/tau`), and uses a closed-form iteration count that
//! guarantees `delta` accuracy in policy sup-norm and `6 tau gamma delta` in
//! soft value.

// Negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use mdp_core::{MdpError, Policy, PolicyEvaluator, TabularMdp};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NpgError {
    #[error("learning rate must lie in (0, (1-gamma)/tau], got eta={eta} with cap {cap}")]
    InvalidLearningRate { eta: f64, cap: f64 },

    #[error("tau must be positive, got {0}")]
    InvalidTau(f64),

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("reward must be finite and nonnegative (entry ({0}, {1}))")]
    InvalidReward(usize, usize),

    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Outcome of a [`run_npg`] call.
#[derive(Debug, Clone)]
pub struct NpgResult {
    pub policy: Policy,
    pub iterations_used: usize,
    /// Guaranteed sup-norm distance to the optimal regularized policy.
    pub policy_gap_bound: f64,
    /// Guaranteed sup-norm soft-value gap: `6 tau gamma delta`.
    pub value_gap_bound: f64,
}

/// One exact NPG update from `policy` given its soft Q-table.
///
/// Computed in log space with per-row max subtraction, so `q/tau` values in
/// the hundreds stay finite.
pub fn npg_step(
    policy: &Policy,
    soft_q: &DMatrix<f64>,
    eta: f64,
    tau: f64,
    gamma: f64,
) -> Result<Policy, NpgError> {
    if !(tau > 0.0) {
        return Err(NpgError::InvalidTau(tau));
    }
    let cap = (1.0 - gamma) / tau;
    if !(eta > 0.0 && eta <= cap) {
        return Err(NpgError::InvalidLearningRate { eta, cap });
    }
    // At the maximal learning rate the exponent is 0 in exact arithmetic but
    // rounds to +-1e-16; a negative residue would turn log(0) terms into
    // +inf, so snap it to zero.
    let raw_exponent = 1.0 - eta * tau / (1.0 - gamma);
    let prev_exponent = if raw_exponent.abs() < 1e-12 {
        0.0
    } else {
        raw_exponent
    };
    let scale = eta / (1.0 - gamma);
    let (ns, na) = (policy.n_states(), policy.n_actions());
    let mut logits = DMatrix::zeros(ns, na);
    for s in 0..ns {
        for a in 0..na {
            let mut l = scale * soft_q[(s, a)];
            if prev_exponent != 0.0 {
                // ln(0) = -inf carries zero-probability actions through;
                // at the maximal learning rate the term vanishes exactly.
                l += prev_exponent * policy.prob(s, a).ln();
            }
            logits[(s, a)] = l;
        }
    }
    Ok(Policy::from_logits(&logits))
}

/// Computable upper bound on `||q* - q^(0)||_inf` for a tau-regularized MDP
/// with rewards in [0, 1]: both Q-tables lie in `[0, (1 + tau log|A|)/(1-gamma)]`.
pub fn c1_upper_bound(tau: f64, n_actions: usize, gamma: f64) -> f64 {
    (1.0 + tau * (n_actions as f64).ln()) / (1.0 - gamma)
}

/// Iterations sufficient for `delta` policy accuracy:
/// `ceil((log(2 c1 r_scale) + log(1/delta) + log(1/tau)) / log(1/gamma)) + 1`,
/// at least 1.
pub fn npg_iteration_bound(c1: f64, r_scale: f64, delta: f64, tau: f64, gamma: f64) -> usize {
    let numer = (2.0 * c1 * r_scale).ln() + (1.0 / delta).ln() + (1.0 / tau).ln();
    let t = (numer / (1.0 / gamma).ln()).ceil() + 1.0;
    if t < 1.0 {
        1
    } else {
        t as usize
    }
}

/// Solves `max_pi V_reward(rho) + tau H(pi)` to `delta` accuracy in policy
/// sup-norm by exact NPG from the uniform policy.
///
/// Rewards are rescaled by `R = max(max r, 1)` (and `tau` with them) so the
/// linear-convergence guarantee for rewards in [0, 1] applies; the optimal
/// policy is invariant under this rescaling.
pub fn run_npg(
    mdp: &TabularMdp,
    reward: &DMatrix<f64>,
    tau: f64,
    delta: f64,
) -> Result<NpgResult, NpgError> {
    run_npg_observed(mdp, reward, tau, delta, |_, _| {})
}

/// [`run_npg`] with a per-iteration observer receiving `(t, policy_after_t)`.
pub fn run_npg_observed(
    mdp: &TabularMdp,
    reward: &DMatrix<f64>,
    tau: f64,
    delta: f64,
    mut observer: impl FnMut(usize, &Policy),
) -> Result<NpgResult, NpgError> {
    if !(tau > 0.0) {
        return Err(NpgError::InvalidTau(tau));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(NpgError::InvalidDelta(delta));
    }
    if reward.nrows() != mdp.n_states() || reward.ncols() != mdp.n_actions() {
        return Err(NpgError::Mdp(MdpError::DimensionMismatch {
            what: "reward table".into(),
            expected: mdp.n_states() * mdp.n_actions(),
            actual: reward.nrows() * reward.ncols(),
        }));
    }
    let mut r_max = 0.0f64;
    for s in 0..reward.nrows() {
        for a in 0..reward.ncols() {
            let v = reward[(s, a)];
            if !v.is_finite() || v < 0.0 {
                return Err(NpgError::InvalidReward(s, a));
            }
            r_max = r_max.max(v);
        }
    }

    let r_scale = r_max.max(1.0);
    let scaled_reward = reward / r_scale;
    let scaled_tau = tau / r_scale;
    let gamma = mdp.gamma();
    let eta = (1.0 - gamma) / scaled_tau;
    let c1 = c1_upper_bound(scaled_tau, mdp.n_actions(), gamma);
    let iterations = npg_iteration_bound(c1, r_scale, delta, tau, gamma);

    let mut policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
    for t in 0..iterations {
        let evaluator = PolicyEvaluator::new(mdp, &policy)?;
        let (_, soft_q) = evaluator.values_and_q(&scaled_reward, scaled_tau)?;
        policy = npg_step(&policy, &soft_q, eta, scaled_tau, gamma)?;
        observer(t, &policy);
    }

    Ok(NpgResult {
        policy,
        iterations_used: iterations,
        policy_gap_bound: delta,
        value_gap_bound: 6.0 * tau * gamma * delta,
    })
}
