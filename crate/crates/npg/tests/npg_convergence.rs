//! NPG update and solver checks: closed-form single-state cases, the linear
//! convergence rates along exact runs (against the soft-value-iteration
//! fixed point), and the accuracy guarantee of the rescaling wrapper.

use mdp_core::{Policy, PolicyEvaluator, TabularMdp};
use nalgebra::{DMatrix, DVector};
use npg::{c1_upper_bound, npg_iteration_bound, npg_step, run_npg, NpgError};
use oracles::soft_value_iteration;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn random_mdp(rng: &mut ChaCha20Rng, ns: usize, na: usize, gamma: f64) -> TabularMdp {
    let mut kernel = DMatrix::zeros(ns * na, ns);
    for mut row in kernel.row_iter_mut() {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = rng.random::<f64>() + 1e-3;
            sum += *v;
        }
        row /= sum;
    }
    let mut rho = DVector::from_fn(ns, |_, _| rng.random::<f64>() + 1e-3);
    rho /= rho.sum();
    TabularMdp::new(ns, na, kernel, gamma, rho).unwrap()
}

fn single_state_mdp(n_actions: usize, gamma: f64) -> TabularMdp {
    TabularMdp::new(
        1,
        n_actions,
        DMatrix::from_element(n_actions, 1, 1.0),
        gamma,
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

#[test]
fn constant_q_produces_uniform_policy() {
    let policy = Policy::from_probs(DMatrix::from_row_slice(1, 3, &[0.7, 0.2, 0.1])).unwrap();
    let q = DMatrix::from_element(1, 3, 2.5);
    let gamma = 0.9;
    let tau = 0.5;
    let eta = (1.0 - gamma) / tau;
    let next = npg_step(&policy, &q, eta, tau, gamma).unwrap();
    for a in 0..3 {
        assert!((next.prob(0, a) - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn maximal_rate_step_is_softmax_of_q_over_tau() {
    let policy = Policy::from_probs(DMatrix::from_row_slice(1, 2, &[0.9, 0.1])).unwrap();
    let q = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let gamma = 0.9;
    let tau = 1.0;
    let next = npg_step(&policy, &q, (1.0 - gamma) / tau, tau, gamma).unwrap();
    let e = 1.0f64.exp();
    assert!((next.prob(0, 0) - e / (e + 1.0)).abs() < 1e-12);
    assert!((next.prob(0, 1) - 1.0 / (e + 1.0)).abs() < 1e-12);
}

#[test]
fn half_rate_step_has_geometric_mean_structure() {
    // eta = (1-gamma)/(2 tau): pi' ∝ sqrt(pi) exp(q / (2 tau)).
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let gamma = 0.8;
    let tau = 0.4;
    let eta = (1.0 - gamma) / (2.0 * tau);
    for _ in 0..10 {
        let mut row = [
            rng.random::<f64>() + 0.05,
            rng.random::<f64>() + 0.05,
            rng.random::<f64>() + 0.05,
        ];
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= sum);
        let policy = Policy::from_probs(DMatrix::from_row_slice(1, 3, &row)).unwrap();
        let q = DMatrix::from_fn(1, 3, |_, _| rng.random::<f64>() * 3.0);
        let next = npg_step(&policy, &q, eta, tau, gamma).unwrap();
        let unnormalized: Vec<f64> = (0..3)
            .map(|a| policy.prob(0, a).sqrt() * (q[(0, a)] / (2.0 * tau)).exp())
            .collect();
        let z: f64 = unnormalized.iter().sum();
        for (a, u) in unnormalized.iter().enumerate() {
            assert!((next.prob(0, a) - u / z).abs() < 1e-12);
        }
    }
}

#[test]
fn learning_rate_outside_range_is_rejected() {
    let policy = Policy::uniform(1, 2);
    let q = DMatrix::zeros(1, 2);
    let cap = (1.0 - 0.9) / 0.5;
    assert!(matches!(
        npg_step(&policy, &q, 0.0, 0.5, 0.9),
        Err(NpgError::InvalidLearningRate { .. })
    ));
    assert!(matches!(
        npg_step(&policy, &q, cap * 1.01, 0.5, 0.9),
        Err(NpgError::InvalidLearningRate { .. })
    ));
    assert!(npg_step(&policy, &q, cap, 0.5, 0.9).is_ok());
}

#[test]
fn npg_steps_preserve_zero_probability_actions_below_max_rate() {
    // With eta < (1-gamma)/tau the previous-policy exponent is positive, so
    // an action with zero probability stays at zero.
    let policy = Policy::from_probs(DMatrix::from_row_slice(1, 3, &[0.6, 0.4, 0.0])).unwrap();
    let q = DMatrix::from_row_slice(1, 3, &[0.1, 0.2, 5.0]);
    let gamma = 0.9;
    let tau = 1.0;
    let next = npg_step(&policy, &q, 0.5 * (1.0 - gamma) / tau, tau, gamma).unwrap();
    assert_eq!(next.prob(0, 2), 0.0);
    let row_sum: f64 = (0..3).map(|a| next.prob(0, a)).sum();
    assert!((row_sum - 1.0).abs() < 1e-12);
}

#[test]
fn single_state_run_reaches_softmax_of_rewards() {
    let mdp = single_state_mdp(2, 0.9);
    let reward = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let result = run_npg(&mdp, &reward, 0.5, 1e-6).unwrap();
    let e2 = (2.0f64).exp();
    let expected = [e2 / (e2 + 1.0), 1.0 / (e2 + 1.0)];
    for (a, want) in expected.iter().enumerate() {
        assert!(
            (result.policy.prob(0, a) - want).abs() <= 1e-6,
            "action {a}: {} vs {want}",
            result.policy.prob(0, a),
        );
    }
}

#[test]
fn zero_reward_returns_uniform_policy() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mdp = random_mdp(&mut rng, 4, 3, 0.9);
    let result = run_npg(&mdp, &DMatrix::zeros(4, 3), 0.7, 1e-8).unwrap();
    for s in 0..4 {
        for a in 0..3 {
            assert!((result.policy.prob(s, a) - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn run_matches_soft_value_iteration_fixed_point() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for trial in 0..3 {
        let mdp = random_mdp(&mut rng, 5, 3, 0.9);
        let reward = DMatrix::from_fn(5, 3, |_, _| rng.random::<f64>() * 2.0);
        let tau = 0.2;
        let delta = 1e-8;
        let result = run_npg(&mdp, &reward, tau, delta).unwrap();
        let oracle = soft_value_iteration(&mdp, &reward, tau, 1e-12).unwrap();
        let distance = result.policy.linf_distance(&oracle.policy);
        assert!(
            distance <= 2.0 * delta,
            "trial {trial}: policy distance {distance} vs 2 delta"
        );
    }
}

#[test]
fn guarantees_hold_against_the_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let mdp = random_mdp(&mut rng, 5, 2, 0.85);
    let reward = DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>() * 3.0);
    let tau = 0.3;
    let delta = 1e-6;
    let result = run_npg(&mdp, &reward, tau, delta).unwrap();
    let oracle = soft_value_iteration(&mdp, &reward, tau, 1e-12).unwrap();

    assert!(result.policy.linf_distance(&oracle.policy) <= delta);

    // Soft-value gap bound 6 tau gamma delta for the returned policy.
    let eval = PolicyEvaluator::new(&mdp, &result.policy).unwrap();
    let v_pi = eval.state_values(&reward, tau).unwrap();
    let value_gap = (&oracle.values - &v_pi).abs().max();
    assert!(
        value_gap <= result.value_gap_bound + 1e-9,
        "value gap {value_gap} vs bound {}",
        result.value_gap_bound
    );
}

#[test]
fn linear_convergence_rates_along_the_run() {
    // Rates with eta = (1-gamma)/tau and rewards in [0, 1]:
    //   ||log pi* - log pi_(t+1)||_inf <= 2 C1 gamma^t / tau
    //   ||v* - v_(t+1)||_inf <= 3 C1 gamma^(t+1)
    // with C1 the computable bound.
    let mut rng = ChaCha20Rng::seed_from_u64(29);
    let gamma = 0.9;
    let tau = 0.1;
    for _ in 0..4 {
        let mdp = random_mdp(&mut rng, 5, 3, gamma);
        let reward = DMatrix::from_fn(5, 3, |_, _| rng.random::<f64>());
        let oracle = soft_value_iteration(&mdp, &reward, tau, 1e-12).unwrap();
        let c1 = c1_upper_bound(tau, 3, gamma);
        let eta = (1.0 - gamma) / tau;

        let mut policy = Policy::uniform(5, 3);
        for t in 0..200 {
            let eval = PolicyEvaluator::new(&mdp, &policy).unwrap();
            let (v, q) = eval.values_and_q(&reward, tau).unwrap();
            let value_gap = (&oracle.values - &v).abs().max();
            if t >= 1 {
                assert!(
                    value_gap <= 3.0 * c1 * gamma.powi(t) + 1e-10,
                    "t={t}: value gap {value_gap}"
                );
            }
            policy = npg_step(&policy, &q, eta, tau, gamma).unwrap();
            let log_gap = oracle.policy.log_linf_distance(&policy);
            assert!(
                log_gap <= 2.0 * c1 / tau * gamma.powi(t) + 1e-10,
                "t={t}: log-policy gap {log_gap}"
            );
        }
    }
}

#[test]
fn iteration_bound_closed_forms() {
    assert_eq!(npg_iteration_bound(1.0, 1.0, 1.0, 1.0, 0.5), 2);
    assert_eq!(npg_iteration_bound(10.0, 1.0, 1e-4, 0.1, 0.9), 139);
}

#[test]
fn iteration_bound_monotone_in_delta() {
    let (c1, r, tau, gamma) = (3.0f64, 2.0f64, 0.25f64, 0.8f64);
    let per_halving = 2.0f64.ln() / (1.0 / gamma).ln();
    let mut delta = 0.3;
    for _ in 0..12 {
        let a = npg_iteration_bound(c1, r, delta, tau, gamma);
        let b = npg_iteration_bound(c1, r, delta / 2.0, tau, gamma);
        let diff = b as f64 - a as f64;
        assert!(diff >= per_halving.floor() && diff <= per_halving.ceil());
        delta /= 2.0;
    }
}

#[test]
fn run_rejects_bad_inputs() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let mdp = random_mdp(&mut rng, 3, 2, 0.9);
    let reward = DMatrix::from_fn(3, 2, |_, _| rng.random::<f64>());
    assert!(matches!(
        run_npg(&mdp, &reward, 0.1, 1.0),
        Err(NpgError::InvalidDelta(_))
    ));
    assert!(matches!(
        run_npg(&mdp, &reward, 0.0, 1e-4),
        Err(NpgError::InvalidTau(_))
    ));
    let mut bad = reward.clone();
    bad[(0, 0)] = f64::NAN;
    assert!(matches!(
        run_npg(&mdp, &bad, 0.1, 1e-4),
        Err(NpgError::InvalidReward(0, 0))
    ));
    let mut negative = reward;
    negative[(1, 1)] = -0.1;
    assert!(matches!(
        run_npg(&mdp, &negative, 0.1, 1e-4),
        Err(NpgError::InvalidReward(1, 1))
    ));
}

#[test]
fn every_step_output_is_row_stochastic() {
    let mut rng = ChaCha20Rng::seed_from_u64(37);
    let mdp = random_mdp(&mut rng, 6, 4, 0.95);
    let reward = DMatrix::from_fn(6, 4, |_, _| rng.random::<f64>() * 5.0);
    // Tiny tau stresses the log-space path: q / tau is in the thousands.
    let tau = 1e-3;
    let result = run_npg(&mdp, &reward, tau, 1e-4).unwrap();
    for s in 0..6 {
        let sum: f64 = (0..4).map(|a| result.policy.prob(s, a)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((0..4).all(|a| result.policy.prob(s, a) >= 0.0));
    }
}
