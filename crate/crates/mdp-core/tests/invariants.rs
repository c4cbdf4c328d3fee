//! Property tests for the evaluation identities that every policy and reward
//! table must satisfy.

use mdp_core::{evaluate, Policy, TabularMdp};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const MAX_STATES: usize = 5;
const MAX_ACTIONS: usize = 4;

fn stochastic_rows(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(0.01f64..1.0, rows * cols).prop_map(move |raw| {
        let mut m = DMatrix::from_vec(rows, cols, raw);
        for mut row in m.row_iter_mut() {
            let sum: f64 = row.iter().sum();
            row /= sum;
        }
        m
    })
}

#[derive(Debug, Clone)]
struct Case {
    mdp: TabularMdp,
    policy: Policy,
    reward: DMatrix<f64>,
    tau: f64,
}

fn case_strategy() -> impl Strategy<Value = Case> {
    (2..=MAX_STATES, 2..=MAX_ACTIONS, 0.05f64..0.95).prop_flat_map(|(ns, na, gamma)| {
        (
            stochastic_rows(ns * na, ns),
            stochastic_rows(1, ns),
            stochastic_rows(ns, na),
            proptest::collection::vec(0.0f64..2.0, ns * na),
            0.0f64..1.5,
        )
            .prop_map(move |(kernel, rho_row, policy, reward_raw, tau)| {
                let rho = DVector::from_iterator(ns, rho_row.iter().copied());
                Case {
                    mdp: TabularMdp::new(ns, na, kernel, gamma, rho).unwrap(),
                    policy: Policy::from_probs(policy).unwrap(),
                    reward: DMatrix::from_vec(ns, na, reward_raw),
                    tau,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn value_visitation_identity(case in case_strategy()) {
        let report = evaluate(&case.mdp, &case.policy, &case.reward, 0.0).unwrap();
        let inner: f64 = report
            .visitation
            .iter()
            .zip(case.reward.iter())
            .map(|(nu, r)| nu * r)
            .sum();
        prop_assert!((report.scalar_value * (1.0 - case.mdp.gamma()) - inner).abs() < 1e-9);
    }

    #[test]
    fn visitation_is_a_distribution(case in case_strategy()) {
        let report = evaluate(&case.mdp, &case.policy, &case.reward, 0.0).unwrap();
        prop_assert!(report.visitation.iter().all(|&v| v >= -1e-14));
        prop_assert!((report.visitation.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn soft_value_consistency(case in case_strategy()) {
        let report = evaluate(&case.mdp, &case.policy, &case.reward, case.tau).unwrap();
        for s in 0..case.mdp.n_states() {
            let mut rhs = 0.0;
            for a in 0..case.mdp.n_actions() {
                let p = case.policy.prob(s, a);
                if p > 0.0 {
                    rhs += p * (report.soft_q[(s, a)] - case.tau * p.ln());
                }
            }
            prop_assert!((report.per_state_values[s] - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_bounds(case in case_strategy()) {
        let report = evaluate(&case.mdp, &case.policy, &case.reward, 0.0).unwrap();
        let cap = (case.mdp.n_actions() as f64).ln() / (1.0 - case.mdp.gamma());
        prop_assert!(report.entropy >= -1e-12);
        prop_assert!(report.entropy <= cap + 1e-9);
    }

    #[test]
    fn scalar_value_is_rho_weighted(case in case_strategy()) {
        let report = evaluate(&case.mdp, &case.policy, &case.reward, case.tau).unwrap();
        let weighted = case.mdp.rho().dot(&report.per_state_values);
        prop_assert!((report.scalar_value - weighted).abs() < 1e-12);
    }
}
