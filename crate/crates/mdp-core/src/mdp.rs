use nalgebra::{DMatrix, DVector};

use crate::{MdpError, STOCHASTIC_TOL};

/// Dynamics of a finite discounted MDP: transition kernel, discount factor
/// and initial state distribution. Rewards live outside this type so the same
/// dynamics can be evaluated against many reward tables.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// Row `s * n_actions + a` holds the distribution P(. | s, a).
    kernel: DMatrix<f64>,
    gamma: f64,
    rho: DVector<f64>,
}

impl TabularMdp {
    /// Builds and validates the dynamics. `kernel` has one row per (s, a)
    /// pair in row-major (state, action) order and one column per successor.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        kernel: DMatrix<f64>,
        gamma: f64,
        rho: DVector<f64>,
    ) -> Result<Self, MdpError> {
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::InvalidArgument(
                "state and action counts must be positive".into(),
            ));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::InvalidDiscount(gamma));
        }
        if kernel.nrows() != n_states * n_actions {
            return Err(MdpError::DimensionMismatch {
                what: "kernel rows".into(),
                expected: n_states * n_actions,
                actual: kernel.nrows(),
            });
        }
        if kernel.ncols() != n_states {
            return Err(MdpError::DimensionMismatch {
                what: "kernel columns".into(),
                expected: n_states,
                actual: kernel.ncols(),
            });
        }
        if rho.len() != n_states {
            return Err(MdpError::DimensionMismatch {
                what: "rho".into(),
                expected: n_states,
                actual: rho.len(),
            });
        }
        for (row_idx, row) in kernel.row_iter().enumerate() {
            let s = row_idx / n_actions;
            let a = row_idx % n_actions;
            validate_distribution(row.iter().copied(), &format!("kernel[{s}][{a}]"))?;
        }
        validate_distribution(rho.iter().copied(), "rho")?;
        Ok(Self {
            n_states,
            n_actions,
            kernel,
            gamma,
            rho,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    /// Full kernel, one row per (s, a) pair.
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// Transition probability P(next | s, a).
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.kernel[(s * self.n_actions + a, next)]
    }

    /// State-to-state transition matrix induced by a policy:
    /// `P_pi[s, s'] = sum_a pi(a|s) P(s'|s,a)`.
    pub fn policy_transition_matrix(&self, probs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.n_states, self.n_states);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let w = probs[(s, a)];
                if w == 0.0 {
                    continue;
                }
                let row = self.kernel.row(s * self.n_actions + a);
                for next in 0..self.n_states {
                    p[(s, next)] += w * row[next];
                }
            }
        }
        p
    }
}

pub(crate) fn validate_distribution<I: Iterator<Item = f64>>(
    entries: I,
    what: &str,
) -> Result<(), MdpError> {
    let mut sum = 0.0;
    for (i, v) in entries.enumerate() {
        if !v.is_finite() {
            return Err(MdpError::NonFinite {
                what: what.into(),
                index: i,
            });
        }
        if v < 0.0 {
            return Err(MdpError::NegativeEntry {
                what: what.into(),
                index: i,
                value: v,
            });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(MdpError::NotStochastic {
            what: what.into(),
            sum,
        });
    }
    Ok(())
}
