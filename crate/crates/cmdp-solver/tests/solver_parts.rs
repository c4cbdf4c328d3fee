//! Component-level checks: the multiplier bound, the starting simplex, the
//! dual oracle (subgradient and separation branches), value estimates and
//! the closed-form bound report.

mod common;

use cmdp_solver::{
    compute_b_lambda, convergence_bounds, dual_gap_epsilon, dual_oracle, dual_range_bound,
    dual_smoothness, dual_value_estimate, initial_simplex, mixing_factor, optimality_gap_bound,
    BLambdaSource, DualConfig, MixingParams, SolveError,
};
use common::{binding_cmdp, random_cmdp};
use cutting_plane::{CutKind, VaidyaParams};
use mdp_core::{TabularCmdp, TabularMdp};
use nalgebra::{DMatrix, DVector};
use oracles::{dual_value_exact, soft_value_iteration};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn b_lambda_closed_form_and_homogeneity() {
    // r0_max = 1, |A| = 2, gamma = 0.9, xi = 0.5.
    let mdp = TabularMdp::new(
        1,
        2,
        DMatrix::from_element(2, 1, 1.0),
        0.9,
        DVector::from_element(1, 1.0),
    )
    .unwrap();
    let cmdp = TabularCmdp::new(
        mdp,
        vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ],
        DVector::from_element(1, 0.1),
    )
    .unwrap();
    let b = compute_b_lambda(&cmdp, 0.5).unwrap();
    let expected = (1.0 + 2.0f64.ln()) / (0.1 * 0.5);
    assert!((b - expected).abs() < 1e-12, "{b} vs {expected}");
    let b2 = compute_b_lambda(&cmdp, 1.0).unwrap();
    assert!((b2 - b / 2.0).abs() < 1e-12);
    assert!(matches!(
        compute_b_lambda(&cmdp, 0.0),
        Err(SolveError::SlaterNotSatisfied { .. })
    ));
}

#[test]
fn dual_argmin_lies_inside_the_multiplier_bound() {
    // Dense grid of NPG-estimated dual values over [0, 3B]: the minimizer
    // must land inside [0, B].
    let cmdp = binding_cmdp(5, 2, 2, 0.5);
    let xi = oracles::slater_margin(&cmdp).unwrap();
    let b = compute_b_lambda(&cmdp, xi).unwrap();
    let (tau, delta) = (0.5, 1e-4);
    let step = 1e-3;
    let mut best = (f64::INFINITY, 0.0);
    let mut x = 0.0;
    while x <= 3.0 * b {
        let value = dual_value_estimate(&cmdp, &DVector::from_element(1, x), tau, delta).unwrap();
        if value < best.0 {
            best = (value, x);
        }
        x += step;
    }
    assert!(best.1 <= b + step, "argmin {} outside [0, B = {b}]", best.1);
}

#[test]
fn initial_simplex_contains_the_multiplier_set() {
    let (b_lambda, m) = (2.0, 3);
    let poly = initial_simplex(b_lambda, m);
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let mut accepted = 0;
    while accepted < 1000 {
        let candidate = DVector::from_fn(m, |_, _| rng.random::<f64>() * b_lambda);
        if candidate.sum() > b_lambda {
            continue; // sample uniformly from the l1 ball corner
        }
        accepted += 1;
        assert!(
            poly.slacks(&candidate).min() >= 0.0,
            "point {candidate:?} escaped the simplex"
        );
    }
}

#[test]
fn separation_cut_flags_negative_coordinates() {
    let cmdp = random_cmdp(3, 4, 2, 2, 0.9, 0.5);
    let lambda = DVector::from_vec(vec![-0.3, 0.7]);
    let cut = dual_oracle(&cmdp, &lambda, 1e-2, 1e-4, 0.0).unwrap();
    assert_eq!(cut.kind, CutKind::Separation);
    assert_eq!(cut.vector.as_slice(), &[1.0, 0.0]);
    assert!(cut.value_estimate.is_none());

    let both = dual_oracle(&cmdp, &DVector::from_vec(vec![-0.1, -0.2]), 1e-2, 1e-4, 0.0).unwrap();
    assert_eq!(both.vector.as_slice(), &[1.0, 1.0]);
}

#[test]
fn subgradient_at_zero_matches_unconstrained_soft_optimum() {
    let cmdp = random_cmdp(11, 5, 3, 2, 0.9, 0.5);
    let tau = 0.05;
    let cut = dual_oracle(&cmdp, &DVector::zeros(2), tau, 1e-8, 0.0).unwrap();
    assert_eq!(cut.kind, CutKind::Subgradient);

    // Independent route: constraint values of the soft-optimal policy for
    // the bare objective reward.
    let oracle_policy = soft_value_iteration(cmdp.mdp(), cmdp.reward(0), tau, 1e-12)
        .unwrap()
        .policy;
    let values = mdp_core::PolicyEvaluator::new(cmdp.mdp(), &oracle_policy)
        .unwrap()
        .cmdp_values(&cmdp)
        .unwrap();
    let expected = cmdp.thresholds() - &values.constraints;
    assert!(
        (&cut.vector - &expected).abs().max() < 1e-6,
        "cut {:?} vs oracle {:?}",
        cut.vector.as_slice(),
        expected.as_slice()
    );
}

#[test]
fn subgradient_matches_central_finite_differences() {
    // Danskin check at interior multipliers on a 1-constraint instance.
    let cmdp = binding_cmdp(21, 4, 2, 0.85);
    let tau = 0.1;
    let delta = 1e-8;
    let h = 1e-4;
    for &x in &[0.3, 0.8, 1.5] {
        let lambda = DVector::from_element(1, x);
        let cut = dual_oracle(&cmdp, &lambda, tau, delta, 0.0).unwrap();
        let up = dual_value_estimate(&cmdp, &DVector::from_element(1, x + h), tau, delta).unwrap();
        let down =
            dual_value_estimate(&cmdp, &DVector::from_element(1, x - h), tau, delta).unwrap();
        let fd_gradient = (up - down) / (2.0 * h);
        // The cut is the negated gradient.
        assert!(
            (cut.vector[0] + fd_gradient).abs() < 5e-3,
            "x={x}: cut {} vs -fd {}",
            cut.vector[0],
            -fd_gradient
        );
    }
}

#[test]
fn regularized_oracle_shifts_the_cut_by_mu_lambda() {
    let cmdp = random_cmdp(31, 4, 2, 2, 0.9, 0.5);
    let lambda = DVector::from_vec(vec![0.4, 0.9]);
    let (tau, delta, mu) = (1e-2, 1e-6, 0.25);
    let plain = dual_oracle(&cmdp, &lambda, tau, delta, 0.0).unwrap();
    let shifted = dual_oracle(&cmdp, &lambda, tau, delta, mu).unwrap();
    let diff = &shifted.vector - &plain.vector;
    let expected = -&lambda * mu;
    assert!((diff - expected).abs().max() < 1e-12);
    // And the value estimate gains mu/2 ||lambda||^2.
    let d = shifted.value_estimate.unwrap() - plain.value_estimate.unwrap();
    assert!((d - 0.5 * mu * lambda.norm_squared()).abs() < 1e-12);
}

#[test]
fn value_estimate_of_pure_entropy_problem() {
    // r_0 = 0: the soft optimum is the uniform policy with value
    // tau log|A| / (1 - gamma).
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let mdp = common::random_mdp(&mut rng, 4, 3, 0.9);
    let cmdp = TabularCmdp::new(
        mdp,
        vec![
            DMatrix::zeros(4, 3),
            DMatrix::from_fn(4, 3, |_, _| rng.random::<f64>()),
        ],
        DVector::from_element(1, -1.0),
    )
    .unwrap();
    let (tau, delta) = (0.2, 1e-6);
    let estimate = dual_value_estimate(&cmdp, &DVector::zeros(1), tau, delta).unwrap();
    let ideal = tau * 3.0f64.ln() / 0.1;
    assert!(
        (estimate - ideal).abs() <= 6.0 * tau * 0.9 * delta + 1e-9,
        "estimate {estimate} vs {ideal}"
    );
}

#[test]
fn value_estimate_never_exceeds_the_exact_dual() {
    let cmdp = binding_cmdp(51, 4, 3, 0.9);
    let tau = 0.1;
    for &x in &[0.0, 0.5, 1.0, 2.0] {
        let lambda = DVector::from_element(1, x);
        let estimate = dual_value_estimate(&cmdp, &lambda, tau, 1e-6).unwrap();
        let exact = dual_value_exact(&cmdp, &lambda, tau, 1e-11).unwrap();
        assert!(
            estimate <= exact + 1e-9,
            "x={x}: estimate {estimate} above exact {exact}"
        );
        assert!(exact - estimate <= 6.0 * tau * 0.9 * 1e-6 + 1e-9);
    }
}

#[test]
fn value_estimate_is_linear_in_the_thresholds() {
    let cmdp = binding_cmdp(61, 4, 2, 0.9);
    let lambda = DVector::from_element(1, 0.7);
    let (tau, delta) = (0.05, 1e-6);
    let base = dual_value_estimate(&cmdp, &lambda, tau, delta).unwrap();
    let raised = cmdp
        .with_thresholds(DVector::from_element(1, cmdp.thresholds()[0] + 1.0))
        .unwrap();
    let shifted = dual_value_estimate(&raised, &lambda, tau, delta).unwrap();
    assert!((base - shifted - lambda[0]).abs() < 1e-12);
}

#[test]
fn value_estimate_rejects_negative_multipliers() {
    let cmdp = binding_cmdp(71, 3, 2, 0.9);
    assert!(dual_value_estimate(&cmdp, &DVector::from_element(1, -0.1), 0.1, 1e-6).is_err());
}

#[test]
fn epsilon_budget_limits_and_monotonicity() {
    let cmdp = random_cmdp(81, 4, 2, 2, 0.9, 0.5);
    let (b, xi) = (5.0, 1.0);
    // zeta t -> infinity drives the a-priori gap to zero.
    let far = dual_gap_epsilon(&cmdp, b, xi, 0.1, 30_000);
    assert!(far < 1e-250);
    // Doubling zeta at fixed t strictly decreases the bound.
    let t = 500;
    let loose = dual_gap_epsilon(&cmdp, b, xi, 0.05, t);
    let tight = dual_gap_epsilon(&cmdp, b, xi, 0.1, t);
    assert!(tight < loose);

    // In the epsilon -> 0 limit only the delta terms of the terminal bounds
    // survive.
    let mixing = MixingParams {
        c_m: 1.0,
        beta: 0.5,
    };
    let delta = 1e-6;
    let at_zero = optimality_gap_bound(&cmdp, b, 0.0, delta, mixing);
    let survivors = {
        let m = cmdp.num_constraints() as f64;
        let r = cmdp.constraint_reward_norm();
        let gamma = cmdp.gamma();
        let l_beta = mixing_factor(mixing);
        let n_actions = cmdp.n_actions() as f64;
        b * r * (2.0 * m * l_beta).sqrt() / (1.0 - gamma) * (6.0 * gamma * delta).sqrt()
            + m.sqrt() * b * l_beta * n_actions * r / (1.0 - gamma) * delta
    };
    assert!((at_zero - survivors).abs() < 1e-15);
}

#[test]
fn bound_report_cross_checked_by_second_arithmetic_route() {
    let cmdp = random_cmdp(91, 5, 3, 2, 0.9, 0.5);
    let params = VaidyaParams::theory(1e-4, 1e-7, 150).unwrap();
    let cfg = DualConfig::new(params)
        .with_tau(1e-3)
        .with_delta(1e-6)
        .with_b_lambda(BLambdaSource::FromXi(2.0));
    let mixing = MixingParams {
        c_m: 1.0,
        beta: 0.7,
    };
    let report = convergence_bounds(&cmdp, &cfg, Some(mixing)).unwrap();

    // Independent recomputation through logarithms.
    let m = 2.0f64;
    let b = report.b_lambda;
    let r = cmdp.constraint_reward_norm();
    let gamma: f64 = 0.9;
    let range = 2.0 + m.sqrt() * r / (1.0 - gamma);
    let log_eps = (2.0f64).ln() + 2.0 * m.ln() + b.ln() - (1e-7f64).ln()
        + range.ln()
        + (std::f64::consts::PI.ln() - 1e-7 * 150.0) / (2.0 * m);
    assert!(
        ((report.dual_gap_epsilon.ln() - log_eps) / log_eps).abs() < 1e-12,
        "{} vs {}",
        report.dual_gap_epsilon.ln(),
        log_eps
    );

    // Alternative coefficient ratio is exactly (1 + sqrt m) / 2.
    let ratio = report.dual_gap_epsilon_alt / report.dual_gap_epsilon;
    assert!((ratio - (1.0 + m.sqrt()) / 2.0).abs() < 1e-12);

    // Range bound, smoothness and mixing factor by hand.
    let l_beta = 0.0f64.max(0.0) + 1.0 / (1.0 - 0.7) + 1.0;
    assert!((report.mixing_factor.unwrap() - l_beta).abs() < 1e-12);
    let l_d = r * r * l_beta / ((1.0 - gamma) * (1.0 - gamma) * report.tau);
    assert!((report.dual_smoothness.unwrap() - l_d).abs() / l_d < 1e-12);
    let b_d = (cmdp.reward_max(0) + m.sqrt() * b * r + report.tau * 3.0f64.ln()) / (1.0 - gamma);
    assert!((report.dual_range_bound - b_d).abs() / b_d < 1e-12);
    assert!((dual_range_bound(&cmdp, b, report.tau) - b_d).abs() / b_d < 1e-12);
    assert!((dual_smoothness(&cmdp, report.tau, mixing) - l_d).abs() / l_d < 1e-12);
    assert!(report.optimality_gap_bound.unwrap() >= 0.0);
    assert!(report.violation_bound.unwrap() >= 0.0);
    assert!(report.measured_gap.is_none());
}

#[test]
fn default_tau_is_cube_root_of_epsilon_capped_at_one() {
    let cmdp = random_cmdp(101, 4, 2, 1, 0.9, 0.5);
    let params = VaidyaParams::theory(1e-4, 1e-7, 100).unwrap();
    let cfg = DualConfig::new(params).with_b_lambda(BLambdaSource::FromXi(1.5));
    let report = convergence_bounds(&cmdp, &cfg, None).unwrap();
    let expected = report.dual_gap_epsilon.cbrt().min(1.0);
    assert!((report.tau - expected).abs() < 1e-15);
}
