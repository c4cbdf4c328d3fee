//! Shared instance builders for the solver tests.
#![allow(dead_code)] // each test target uses a subset

use mdp_core::{PolicyEvaluator, TabularCmdp, TabularMdp};
use nalgebra::{DMatrix, DVector};
use oracles::value_iteration;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn random_mdp(rng: &mut ChaCha20Rng, ns: usize, na: usize, gamma: f64) -> TabularMdp {
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

/// Random instance with thresholds at `tightness` times the constraint
/// values of the unconstrained optimal policy (strictly feasible for any
/// tightness below one).
pub fn random_cmdp(
    seed: u64,
    ns: usize,
    na: usize,
    m: usize,
    gamma: f64,
    tightness: f64,
) -> TabularCmdp {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mdp = random_mdp(&mut rng, ns, na, gamma);
    let rewards: Vec<DMatrix<f64>> = (0..=m)
        .map(|_| DMatrix::from_fn(ns, na, |_, _| 1.0 - rng.random::<f64>()))
        .collect();
    let provisional = TabularCmdp::new(mdp, rewards, DVector::zeros(m)).unwrap();
    let (_, pi0) = value_iteration(provisional.mdp(), provisional.reward(0), 1e-10).unwrap();
    let values = PolicyEvaluator::new(provisional.mdp(), &pi0)
        .unwrap()
        .cmdp_values(&provisional)
        .unwrap();
    let thresholds = DVector::from_fn(m, |i, _| tightness * values.constraints[i]);
    provisional.with_thresholds(thresholds).unwrap()
}

/// Instance whose constraint binds at the optimum: the threshold sits midway
/// between the unconstrained-optimal constraint value and the best
/// achievable one.
pub fn binding_cmdp(seed: u64, ns: usize, na: usize, gamma: f64) -> TabularCmdp {
    let base = random_cmdp(seed, ns, na, 1, gamma, 0.0);
    let (_, pi0) = value_iteration(base.mdp(), base.reward(0), 1e-10).unwrap();
    let at_opt = PolicyEvaluator::new(base.mdp(), &pi0)
        .unwrap()
        .cmdp_values(&base)
        .unwrap()
        .constraints[0];
    let (v1, _) = value_iteration(base.mdp(), base.reward(1), 1e-10).unwrap();
    let best = base.mdp().rho().dot(&v1);
    let c = 0.5 * (at_opt + best);
    base.with_thresholds(DVector::from_element(1, c)).unwrap()
}

/// Single-state two-action instance with objective (1, 0), constraint
/// reward (0, 1) and threshold 1/2: optimal value 1/2 at the fifty-fifty
/// policy, with the constraint binding.
pub fn knife_edge_cmdp() -> TabularCmdp {
    let mdp = TabularMdp::new(
        1,
        2,
        DMatrix::from_element(2, 1, 1.0),
        1e-6,
        DVector::from_element(1, 1.0),
    )
    .unwrap();
    TabularCmdp::new(
        mdp,
        vec![
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        ],
        DVector::from_element(1, 0.5),
    )
    .unwrap()
}
