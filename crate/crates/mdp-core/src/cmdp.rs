use nalgebra::{DMatrix, DVector};

use crate::{MdpError, TabularMdp};

/// A finite constrained MDP: shared dynamics, an objective reward `r_0`,
/// constraint rewards `r_1..r_m` and thresholds `c_1..c_m`. The constraints
/// require `V_i(rho) >= c_i` for every `i`.
///
/// All reward tables must be finite and nonnegative. The per-table maxima and
/// the Euclidean norm of the constraint-reward maxima are cached at
/// construction since many bound formulas use them.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularCmdp {
    mdp: TabularMdp,
    /// m + 1 reward tables, each |S| x |A|; index 0 is the objective.
    rewards: Vec<DMatrix<f64>>,
    thresholds: DVector<f64>,
    reward_maxes: Vec<f64>,
    constraint_reward_norm: f64,
}

impl TabularCmdp {
    pub fn new(
        mdp: TabularMdp,
        rewards: Vec<DMatrix<f64>>,
        thresholds: DVector<f64>,
    ) -> Result<Self, MdpError> {
        if rewards.is_empty() {
            return Err(MdpError::InvalidArgument(
                "at least the objective reward table is required".into(),
            ));
        }
        if thresholds.len() + 1 != rewards.len() {
            return Err(MdpError::DimensionMismatch {
                what: "thresholds".into(),
                expected: rewards.len() - 1,
                actual: thresholds.len(),
            });
        }
        let mut reward_maxes = Vec::with_capacity(rewards.len());
        for (i, table) in rewards.iter().enumerate() {
            if table.nrows() != mdp.n_states() || table.ncols() != mdp.n_actions() {
                return Err(MdpError::DimensionMismatch {
                    what: format!("rewards[{i}]"),
                    expected: mdp.n_states() * mdp.n_actions(),
                    actual: table.nrows() * table.ncols(),
                });
            }
            let mut max = 0.0f64;
            for (k, &v) in table.iter().enumerate() {
                if !v.is_finite() {
                    return Err(MdpError::NonFinite {
                        what: format!("rewards[{i}]"),
                        index: k,
                    });
                }
                if v < 0.0 {
                    return Err(MdpError::NegativeEntry {
                        what: format!("rewards[{i}]"),
                        index: k,
                        value: v,
                    });
                }
                max = max.max(v);
            }
            reward_maxes.push(max);
        }
        for (i, &c) in thresholds.iter().enumerate() {
            if !c.is_finite() {
                return Err(MdpError::NonFinite {
                    what: "thresholds".into(),
                    index: i,
                });
            }
        }
        let constraint_reward_norm = reward_maxes[1..].iter().map(|r| r * r).sum::<f64>().sqrt();
        Ok(Self {
            mdp,
            rewards,
            thresholds,
            reward_maxes,
            constraint_reward_norm,
        })
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    pub fn gamma(&self) -> f64 {
        self.mdp.gamma()
    }

    /// Number of constraints m.
    pub fn num_constraints(&self) -> usize {
        self.thresholds.len()
    }

    /// Reward table `r_i`; index 0 is the objective.
    pub fn reward(&self, i: usize) -> &DMatrix<f64> {
        &self.rewards[i]
    }

    pub fn rewards(&self) -> &[DMatrix<f64>] {
        &self.rewards
    }

    pub fn thresholds(&self) -> &DVector<f64> {
        &self.thresholds
    }

    /// Cached `max_{s,a} r_i(s,a)`.
    pub fn reward_max(&self, i: usize) -> f64 {
        self.reward_maxes[i]
    }

    /// Cached `sqrt(sum_{i=1}^m max(r_i)^2)` over the constraint rewards.
    pub fn constraint_reward_norm(&self) -> f64 {
        self.constraint_reward_norm
    }

    /// Combined reward `r_0 + sum_i lambda_i r_i` used by the Lagrangian
    /// inner problem.
    pub fn combined_reward(&self, lambda: &DVector<f64>) -> Result<DMatrix<f64>, MdpError> {
        if lambda.len() != self.num_constraints() {
            return Err(MdpError::DimensionMismatch {
                what: "lambda".into(),
                expected: self.num_constraints(),
                actual: lambda.len(),
            });
        }
        let mut r = self.rewards[0].clone();
        for (i, &w) in lambda.iter().enumerate() {
            r += &self.rewards[i + 1] * w;
        }
        Ok(r)
    }

    /// Replaces the thresholds, revalidating dimensions.
    pub fn with_thresholds(&self, thresholds: DVector<f64>) -> Result<Self, MdpError> {
        Self::new(self.mdp.clone(), self.rewards.clone(), thresholds)
    }
}
