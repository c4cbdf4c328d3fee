//! Policy evaluation via dense linear solves.
//!
//! For a fixed policy the (regularized) Bellman evaluation equation is the
//! linear system `(I - gamma P_pi) V = r_pi`, solved here by one LU
//! factorization. The factorization is reused across reward tables, which is
//! what the natural-policy-gradient inner loop and the dual oracle rely on.

use nalgebra::{DMatrix, DVector, LU};

use crate::{MdpError, Policy, TabularCmdp, TabularMdp};

/// Everything `evaluate` knows about a (policy, reward, tau) triple.
#[derive(Debug, Clone)]
pub struct ValueReport {
    /// V(s) for every state, solving the regularized evaluation equation.
    pub per_state_values: DVector<f64>,
    /// V(rho) = <rho, V>.
    pub scalar_value: f64,
    /// Soft Q-table `q(s,a) = r(s,a) + gamma E[V(s')]` (the plain Q-table
    /// when tau = 0).
    pub soft_q: DMatrix<f64>,
    /// Discounted entropy H(pi) at rho.
    pub entropy: f64,
    /// Discounted state-action visitation distribution at rho.
    pub visitation: DMatrix<f64>,
}

/// Exact values of a policy on a constrained instance: objective value,
/// constraint values and discounted entropy, all at rho.
#[derive(Debug, Clone)]
pub struct CmdpValues {
    pub objective: f64,
    pub constraints: DVector<f64>,
    pub entropy: f64,
}

impl CmdpValues {
    /// l2 norm of the positive part of `c - V(rho)`.
    pub fn constraint_violation(&self, thresholds: &DVector<f64>) -> f64 {
        (thresholds - &self.constraints).map(|x| x.max(0.0)).norm()
    }
}

/// A policy fixed against given dynamics, holding the LU factorization of
/// `I - gamma P_pi` so that many reward tables can be evaluated cheaply.
pub struct PolicyEvaluator<'a> {
    mdp: &'a TabularMdp,
    policy: &'a Policy,
    p_pi: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> PolicyEvaluator<'a> {
    pub fn new(mdp: &'a TabularMdp, policy: &'a Policy) -> Result<Self, MdpError> {
        if policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions() {
            return Err(MdpError::DimensionMismatch {
                what: "policy".into(),
                expected: mdp.n_states() * mdp.n_actions(),
                actual: policy.n_states() * policy.n_actions(),
            });
        }
        let p_pi = mdp.policy_transition_matrix(policy.probs());
        let system = DMatrix::identity(mdp.n_states(), mdp.n_states()) - &p_pi * mdp.gamma();
        let lu = system.lu();
        Ok(Self {
            mdp,
            policy,
            p_pi,
            lu,
        })
    }

    fn solve(&self, rhs: DVector<f64>) -> DVector<f64> {
        // Nonsingular whenever gamma < 1 (the spectral radius of gamma P_pi
        // is below one); a failure here means corrupted inputs.
        self.lu
            .solve(&rhs)
            .expect("Bellman evaluation system is singular; gamma < 1 violated")
    }

    fn check_reward(&self, reward: &DMatrix<f64>) -> Result<(), MdpError> {
        if reward.nrows() != self.mdp.n_states() || reward.ncols() != self.mdp.n_actions() {
            return Err(MdpError::DimensionMismatch {
                what: "reward table".into(),
                expected: self.mdp.n_states() * self.mdp.n_actions(),
                actual: reward.nrows() * reward.ncols(),
            });
        }
        Ok(())
    }

    /// Per-state expected one-step payoff `sum_a pi(a|s) (r(s,a) - tau log pi(a|s))`
    /// with the 0 * log 0 := 0 convention.
    fn policy_reward(&self, reward: &DMatrix<f64>, tau: f64) -> DVector<f64> {
        let probs = self.policy.probs();
        DVector::from_fn(self.mdp.n_states(), |s, _| {
            let mut acc = 0.0;
            for a in 0..self.mdp.n_actions() {
                let p = probs[(s, a)];
                if p == 0.0 {
                    continue;
                }
                let mut term = reward[(s, a)];
                if tau != 0.0 {
                    term -= tau * p.ln();
                }
                acc += p * term;
            }
            acc
        })
    }

    /// Solves the regularized evaluation equation for `reward` and `tau`.
    pub fn state_values(&self, reward: &DMatrix<f64>, tau: f64) -> Result<DVector<f64>, MdpError> {
        self.check_reward(reward)?;
        Ok(self.solve(self.policy_reward(reward, tau)))
    }

    /// State values together with the soft Q-table
    /// `q(s,a) = r(s,a) + gamma sum_{s'} P(s'|s,a) V(s')`.
    pub fn values_and_q(
        &self,
        reward: &DMatrix<f64>,
        tau: f64,
    ) -> Result<(DVector<f64>, DMatrix<f64>), MdpError> {
        let v = self.state_values(reward, tau)?;
        let q = self.soft_q_from_values(reward, &v);
        Ok((v, q))
    }

    pub fn soft_q_from_values(&self, reward: &DMatrix<f64>, values: &DVector<f64>) -> DMatrix<f64> {
        let n_actions = self.mdp.n_actions();
        let expected_next = self.mdp.kernel() * values;
        DMatrix::from_fn(self.mdp.n_states(), n_actions, |s, a| {
            reward[(s, a)] + self.mdp.gamma() * expected_next[s * n_actions + a]
        })
    }

    /// Discounted entropy H(pi) at rho: evaluation with reward
    /// `-log pi(a|s)` and tau = 0.
    pub fn entropy(&self) -> f64 {
        let probs = self.policy.probs();
        let rhs = DVector::from_fn(self.mdp.n_states(), |s, _| {
            let mut acc = 0.0;
            for a in 0..self.mdp.n_actions() {
                let p = probs[(s, a)];
                if p > 0.0 {
                    acc -= p * p.ln();
                }
            }
            acc
        });
        self.mdp.rho().dot(&self.solve(rhs))
    }

    /// Discounted state-action visitation distribution:
    /// `nu(s,a) = d(s) pi(a|s)` with `d = (1-gamma) rho + gamma P_pi^T d`.
    pub fn visitation(&self) -> DMatrix<f64> {
        let n = self.mdp.n_states();
        let system = DMatrix::identity(n, n) - self.p_pi.transpose() * self.mdp.gamma();
        let d = system
            .lu()
            .solve(&(self.mdp.rho() * (1.0 - self.mdp.gamma())))
            .expect("visitation system is singular; gamma < 1 violated");
        let probs = self.policy.probs();
        DMatrix::from_fn(n, self.mdp.n_actions(), |s, a| d[s] * probs[(s, a)])
    }

    /// Objective value, constraint values and entropy of the policy on a
    /// constrained instance, reusing one factorization for all rewards.
    pub fn cmdp_values(&self, cmdp: &TabularCmdp) -> Result<CmdpValues, MdpError> {
        let rho = self.mdp.rho();
        let objective = rho.dot(&self.state_values(cmdp.reward(0), 0.0)?);
        let constraints = DVector::from_fn(cmdp.num_constraints(), |i, _| {
            rho.dot(&self.solve(self.policy_reward(cmdp.reward(i + 1), 0.0)))
        });
        Ok(CmdpValues {
            objective,
            constraints,
            entropy: self.entropy(),
        })
    }
}

/// Full evaluation of a policy against one reward table: state values, the
/// scalar value at rho, the soft Q-table, discounted entropy and the
/// visitation distribution.
pub fn evaluate(
    mdp: &TabularMdp,
    policy: &Policy,
    reward: &DMatrix<f64>,
    tau: f64,
) -> Result<ValueReport, MdpError> {
    if tau < 0.0 {
        return Err(MdpError::InvalidArgument(format!(
            "tau must be nonnegative, got {tau}"
        )));
    }
    let eval = PolicyEvaluator::new(mdp, policy)?;
    let (per_state_values, soft_q) = eval.values_and_q(reward, tau)?;
    let scalar_value = mdp.rho().dot(&per_state_values);
    Ok(ValueReport {
        scalar_value,
        soft_q,
        entropy: eval.entropy(),
        visitation: eval.visitation(),
        per_state_values,
    })
}

/// Discounted state-action visitation distribution of a policy.
pub fn visitation(mdp: &TabularMdp, policy: &Policy) -> Result<DMatrix<f64>, MdpError> {
    Ok(PolicyEvaluator::new(mdp, policy)?.visitation())
}

/// Discounted entropy H(pi) at rho. Always lies in [0, log|A| / (1-gamma)].
pub fn discounted_entropy(mdp: &TabularMdp, policy: &Policy) -> Result<f64, MdpError> {
    Ok(PolicyEvaluator::new(mdp, policy)?.entropy())
}

/// Entropy-regularized Lagrangian
/// `L_tau(pi, lambda) = V_0(rho) + <lambda, V(rho) - c> + tau H(pi)`,
/// assembled from exact per-reward evaluations.
pub fn lagrangian(
    cmdp: &TabularCmdp,
    policy: &Policy,
    lambda: &DVector<f64>,
    tau: f64,
) -> Result<f64, MdpError> {
    if lambda.len() != cmdp.num_constraints() {
        return Err(MdpError::DimensionMismatch {
            what: "lambda".into(),
            expected: cmdp.num_constraints(),
            actual: lambda.len(),
        });
    }
    let eval = PolicyEvaluator::new(cmdp.mdp(), policy)?;
    let values = eval.cmdp_values(cmdp)?;
    Ok(values.objective
        + lambda.dot(&(&values.constraints - cmdp.thresholds()))
        + tau * values.entropy)
}
