//! Seeded random instance generation.
//!
//! Instances are deterministic in the seed: kernels are normalized positive
//! random weights over a sparse successor set blended with a small self-loop
//! mass, rewards are uniform in (0, reward_scale], and thresholds sit at a
//! configured fraction of the constraint values of the unconstrained optimal
//! policy, which keeps them strictly feasible. A Slater-margin check rejects
//! (and deterministically re-rolls) degenerate draws.

use mdp_core::{PolicyEvaluator, TabularCmdp, TabularMdp};
use nalgebra::{DMatrix, DVector};
use oracles::{slater_margin, value_iteration};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SELF_LOOP_MASS: f64 = 1e-3;
const RETRY_BUDGET: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceSpec {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub m: usize,
    pub gamma: f64,
    /// Maximum reward magnitude; rewards are uniform in (0, reward_scale].
    pub reward_scale: f64,
    /// Fraction in [0, 1) of the unconstrained-optimal constraint values at
    /// which the thresholds are placed.
    pub constraint_tightness: f64,
    /// Expected successor count per (state, action) pair.
    pub kernel_sparsity: f64,
}

impl InstanceSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            n_states: 10,
            n_actions: 3,
            m: 2,
            gamma: 0.9,
            reward_scale: 1.0,
            constraint_tightness: 0.5,
            kernel_sparsity: 10.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error("no draw with an adequate Slater margin in {RETRY_BUDGET} attempts (seed {seed})")]
    RetryBudgetExhausted { seed: u64 },

    #[error(transparent)]
    Mdp(#[from] mdp_core::MdpError),

    #[error(transparent)]
    Oracle(#[from] oracles::OracleError),
}

fn validate(spec: &InstanceSpec) -> Result<(), GenerateError> {
    if spec.n_states == 0 || spec.n_actions == 0 || spec.m == 0 {
        return Err(GenerateError::InvalidSpec(
            "n_states, n_actions and m must be at least 1".into(),
        ));
    }
    if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
        return Err(GenerateError::InvalidSpec(format!(
            "gamma must lie in (0, 1), got {}",
            spec.gamma
        )));
    }
    if !(spec.reward_scale > 0.0) {
        return Err(GenerateError::InvalidSpec(
            "reward_scale must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&spec.constraint_tightness) {
        return Err(GenerateError::InvalidSpec(format!(
            "constraint_tightness must lie in [0, 1), got {}",
            spec.constraint_tightness
        )));
    }
    if !(spec.kernel_sparsity > 0.0) {
        return Err(GenerateError::InvalidSpec(
            "kernel_sparsity must be positive".into(),
        ));
    }
    Ok(())
}

fn draw_kernel(rng: &mut ChaCha20Rng, spec: &InstanceSpec) -> DMatrix<f64> {
    let (ns, na) = (spec.n_states, spec.n_actions);
    let p = (spec.kernel_sparsity / ns as f64).min(1.0);
    let mut kernel = DMatrix::zeros(ns * na, ns);
    for s in 0..ns {
        for a in 0..na {
            let row = s * na + a;
            let mut successors: Vec<usize> = (0..ns).filter(|_| rng.random::<f64>() < p).collect();
            if successors.is_empty() {
                successors.push(rng.random_range(0..ns));
            }
            let mut total = 0.0;
            let mut weights = vec![0.0; successors.len()];
            for w in weights.iter_mut() {
                *w = 1.0 - rng.random::<f64>(); // in (0, 1]
                total += *w;
            }
            for (&next, &w) in successors.iter().zip(weights.iter()) {
                kernel[(row, next)] += (1.0 - SELF_LOOP_MASS) * w / total;
            }
            kernel[(row, s)] += SELF_LOOP_MASS;
        }
    }
    kernel
}

/// Generates the instance for `spec`, deterministically in `spec.seed`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<TabularCmdp, GenerateError> {
    validate(spec)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let (ns, na, m) = (spec.n_states, spec.n_actions, spec.m);

    let margin_floor = 0.01 * spec.reward_scale / (1.0 - spec.gamma);
    for _ in 0..RETRY_BUDGET {
        let kernel = draw_kernel(&mut rng, spec);
        let mut rho = DVector::from_fn(ns, |_, _| 1.0 - rng.random::<f64>());
        rho /= rho.sum();
        let mdp = TabularMdp::new(ns, na, kernel, spec.gamma, rho)?;

        let rewards: Vec<DMatrix<f64>> = (0..=m)
            .map(|_| {
                DMatrix::from_fn(ns, na, |_, _| {
                    spec.reward_scale * (1.0 - rng.random::<f64>())
                })
            })
            .collect();

        let provisional = TabularCmdp::new(mdp, rewards, DVector::zeros(m))?;
        let (_, unconstrained_policy) =
            value_iteration(provisional.mdp(), provisional.reward(0), 1e-10)?;
        let at_optimum = PolicyEvaluator::new(provisional.mdp(), &unconstrained_policy)?
            .cmdp_values(&provisional)?;
        let thresholds = DVector::from_fn(m, |i, _| {
            spec.constraint_tightness * at_optimum.constraints[i]
        });
        let instance = provisional.with_thresholds(thresholds)?;

        let xi = slater_margin(&instance)?;
        if xi > margin_floor {
            return Ok(instance);
        }
    }
    Err(GenerateError::RetryBudgetExhausted { seed: spec.seed })
}
