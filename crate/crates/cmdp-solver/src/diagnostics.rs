//! Closed-form convergence bounds reported alongside solutions.
//!
//! All formulas are evaluated exactly as configured, with no calibration:
//! the a-priori dual-gap bound after `t` outer iterations, the dual range
//! bound, the mixing-dependent smoothness constant, the terminal
//! optimality-gap and constraint-violation bounds, and sufficient budgets
//! for a requested accuracy.

use mdp_core::TabularCmdp;

use crate::config::MixingParams;

/// ln(pi), the geometry constant in the cutting-plane rate.
pub(crate) const LOG_PI: f64 = 1.1447298858494002;

/// Mixing-dependent factor `ceil(log_beta(1/c_m)) + 1/(1-beta) + 1`
/// (the ceiling term is clamped at zero).
pub fn mixing_factor(mixing: MixingParams) -> f64 {
    assert!(mixing.c_m > 0.0, "c_m must be positive");
    assert!(
        mixing.beta > 0.0 && mixing.beta < 1.0,
        "beta must lie in (0, 1)"
    );
    let log_term = ((1.0 / mixing.c_m).ln() / mixing.beta.ln()).ceil().max(0.0);
    log_term + 1.0 / (1.0 - mixing.beta) + 1.0
}

/// Smoothness constant of the dual function:
/// `R_max^2 L_beta / ((1-gamma)^2 tau)`.
pub fn dual_smoothness(cmdp: &TabularCmdp, tau: f64, mixing: MixingParams) -> f64 {
    let r = cmdp.constraint_reward_norm();
    let one_minus_gamma = 1.0 - cmdp.gamma();
    r * r * mixing_factor(mixing) / (one_minus_gamma * one_minus_gamma * tau)
}

/// A-priori dual-gap bound after `t` outer iterations with plane-drop
/// threshold `zeta` (coefficient `2 m^2 B_lambda / zeta`):
/// `(2 m^2 B / zeta) (xi + sqrt(m) R_max / (1-gamma)) exp((log pi - zeta t) / (2m))`.
pub fn dual_gap_epsilon(cmdp: &TabularCmdp, b_lambda: f64, xi: f64, zeta: f64, t: usize) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let coeff = 2.0 * m * m * b_lambda / zeta;
    epsilon_tail(cmdp, coeff, xi, zeta, t)
}

/// Same bound with the coefficient that follows from the enclosing and
/// inscribed ball radii of the starting simplex:
/// `m^2 (1 + sqrt(m)) B_lambda / zeta`.
pub fn dual_gap_epsilon_alt(
    cmdp: &TabularCmdp,
    b_lambda: f64,
    xi: f64,
    zeta: f64,
    t: usize,
) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let coeff = m * m * (1.0 + m.sqrt()) * b_lambda / zeta;
    epsilon_tail(cmdp, coeff, xi, zeta, t)
}

fn epsilon_tail(cmdp: &TabularCmdp, coeff: f64, xi: f64, zeta: f64, t: usize) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let range = xi + m.sqrt() * cmdp.constraint_reward_norm() / (1.0 - cmdp.gamma());
    coeff * range * ((LOG_PI - zeta * t as f64) / (2.0 * m)).exp()
}

/// Range bound on the dual function over the multiplier set:
/// `(max r_0 + sqrt(m) B_lambda R_max + tau log|A|) / (1-gamma)`.
pub fn dual_range_bound(cmdp: &TabularCmdp, b_lambda: f64, tau: f64) -> f64 {
    let m = cmdp.num_constraints() as f64;
    (cmdp.reward_max(0)
        + m.sqrt() * b_lambda * cmdp.constraint_reward_norm()
        + tau * (cmdp.n_actions() as f64).ln())
        / (1.0 - cmdp.gamma())
}

/// Terminal optimality-gap bound for the returned policy, given the
/// a-priori dual gap `epsilon` and inner accuracy `delta`.
pub fn optimality_gap_bound(
    cmdp: &TabularCmdp,
    b_lambda: f64,
    epsilon: f64,
    delta: f64,
    mixing: MixingParams,
) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let gamma = cmdp.gamma();
    let one_minus_gamma = 1.0 - gamma;
    let r = cmdp.constraint_reward_norm();
    let l_beta = mixing_factor(mixing);
    let n_actions = cmdp.n_actions() as f64;
    let cbrt = epsilon.cbrt();

    b_lambda * r * (2.0 * m * l_beta).sqrt() / one_minus_gamma
        * (epsilon.powf(2.0 / 3.0) + 6.0 * gamma * delta).sqrt()
        + 2.0 * epsilon
        + 18.0 * gamma * delta * cbrt
        + n_actions.ln() / one_minus_gamma * cbrt
        + m.sqrt() * b_lambda * l_beta * n_actions * r / one_minus_gamma * delta
}

/// Terminal constraint-violation bound (l2 norm of the positive part).
pub fn constraint_violation_bound(
    cmdp: &TabularCmdp,
    epsilon: f64,
    delta: f64,
    mixing: MixingParams,
) -> f64 {
    let gamma = cmdp.gamma();
    let one_minus_gamma = 1.0 - gamma;
    let r = cmdp.constraint_reward_norm();
    let l_beta = mixing_factor(mixing);
    let n_actions = cmdp.n_actions() as f64;

    2.0 * r * r * l_beta / one_minus_gamma * (epsilon.powf(2.0 / 3.0) + 6.0 * gamma * delta)
        + l_beta * n_actions * r / one_minus_gamma * delta
}

/// Sufficient a-priori dual gap for a target accuracy `kappa` on both the
/// optimality gap and the constraint violation.
fn epsilon_budget(cmdp: &TabularCmdp, b_lambda: f64, kappa: f64, l_beta: f64) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let gamma = cmdp.gamma();
    let omg = 1.0 - gamma;
    let r = cmdp.constraint_reward_norm();
    let ln_a = (cmdp.n_actions() as f64).ln();
    [
        kappa.powi(3) * omg.powi(3)
            / (1000.0 * b_lambda.powi(3) * r.powi(3) * m.powf(1.5) * l_beta.powf(1.5)),
        kappa / 10.0,
        kappa / (90.0 * gamma),
        kappa.powi(3) * omg.powi(3) / (125.0 * ln_a.powi(3)),
        kappa.powf(1.5) * omg.powf(1.5) / (16.0 * 2.0f64.sqrt() * r.powi(3) * l_beta.powf(1.5)),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Outer iterations sufficient for `kappa` accuracy in gap and violation.
pub fn sufficient_outer_iterations(
    cmdp: &TabularCmdp,
    b_lambda: f64,
    xi: f64,
    zeta: f64,
    kappa: f64,
    mixing: MixingParams,
) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let c_eps = epsilon_budget(cmdp, b_lambda, kappa, mixing_factor(mixing));
    let range = xi + m.sqrt() * cmdp.constraint_reward_norm() / (1.0 - cmdp.gamma());
    let numer = 2.0 * m * m * b_lambda * range / (zeta * c_eps);
    (LOG_PI / zeta + 2.0 * m / zeta * numer.ln()).ceil()
}

/// Inner accuracy sufficient for `kappa` accuracy in gap and violation.
pub fn sufficient_npg_accuracy(
    cmdp: &TabularCmdp,
    b_lambda: f64,
    kappa: f64,
    mixing: MixingParams,
) -> f64 {
    let m = cmdp.num_constraints() as f64;
    let gamma = cmdp.gamma();
    let omg = 1.0 - gamma;
    let r = cmdp.constraint_reward_norm();
    let n_actions = cmdp.n_actions() as f64;
    let l_beta = mixing_factor(mixing);
    [
        kappa * kappa * omg * omg / (600.0 * gamma * b_lambda * b_lambda * r * r * m * l_beta),
        kappa.powf(2.0 / 3.0) / (90.0 * gamma).powf(2.0 / 3.0),
        kappa * omg / (5.0 * m.sqrt() * b_lambda * l_beta * n_actions * r),
        kappa * omg / (48.0 * gamma * r * r * l_beta),
        kappa * omg / (2.0 * l_beta * n_actions * r),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

/// Bound report attached to every solution; mixing-dependent fields are
/// filled only when mixing constants were supplied, measured fields only
/// when the LP oracle ran.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub m: usize,
    pub tau: f64,
    pub delta: f64,
    pub mu: f64,
    pub b_lambda: f64,
    pub xi: Option<f64>,
    /// A-priori dual-gap bound at the configured budget (main coefficient).
    pub dual_gap_epsilon: f64,
    /// Same bound with the ball-geometry coefficient `m^2 (1 + sqrt m) B / zeta`.
    pub dual_gap_epsilon_alt: f64,
    pub dual_range_bound: f64,
    pub mixing_factor: Option<f64>,
    pub dual_smoothness: Option<f64>,
    pub optimality_gap_bound: Option<f64>,
    pub violation_bound: Option<f64>,
    pub lp_optimal_value: Option<f64>,
    pub measured_gap: Option<f64>,
    pub measured_violation: Option<f64>,
}
