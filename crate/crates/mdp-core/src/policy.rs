use nalgebra::DMatrix;

use crate::mdp::validate_distribution;
use crate::MdpError;

/// A stationary stochastic policy stored as a row-stochastic |S| x |A| table
/// of action probabilities.
///
/// Policies are kept in probability space. The softmax parametrization
/// `theta[s, a] = log pi(a|s)` is an equivalent view available through
/// [`Policy::log_probs`]; the exact natural-gradient update used elsewhere is
/// closed-form in probability space, so logits are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    /// Validates row-stochasticity (each row sums to 1 within 1e-12,
    /// entries nonnegative).
    pub fn from_probs(probs: DMatrix<f64>) -> Result<Self, MdpError> {
        for (s, row) in probs.row_iter().enumerate() {
            validate_distribution(row.iter().copied(), &format!("policy row {s}"))?;
        }
        Ok(Self { probs })
    }

    /// Uniform policy over `n_actions` in every state.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = 1.0 / n_actions as f64;
        Self {
            probs: DMatrix::from_element(n_states, n_actions, p),
        }
    }

    /// Deterministic policy taking `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        let mut probs = DMatrix::zeros(actions.len(), n_actions);
        for (s, &a) in actions.iter().enumerate() {
            probs[(s, a)] = 1.0;
        }
        Self { probs }
    }

    /// Row-wise softmax of a logits table.
    pub fn from_logits(logits: &DMatrix<f64>) -> Self {
        let mut probs = DMatrix::zeros(logits.nrows(), logits.ncols());
        for s in 0..logits.nrows() {
            let row_max = logits.row(s).max();
            let mut z = 0.0;
            for a in 0..logits.ncols() {
                let e = (logits[(s, a)] - row_max).exp();
                probs[(s, a)] = e;
                z += e;
            }
            for a in 0..logits.ncols() {
                probs[(s, a)] /= z;
            }
        }
        Self { probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    /// Softmax-parametrization view: `log pi(a|s)`, `-inf` where pi = 0.
    pub fn log_probs(&self) -> DMatrix<f64> {
        self.probs.map(f64::ln)
    }

    /// Sup-norm distance between the probability tables.
    pub fn linf_distance(&self, other: &Policy) -> f64 {
        (&self.probs - &other.probs).abs().max()
    }

    /// Sup-norm distance between log-probability tables; infinite when the
    /// supports differ.
    pub fn log_linf_distance(&self, other: &Policy) -> f64 {
        let mut d: f64 = 0.0;
        for s in 0..self.n_states() {
            for a in 0..self.n_actions() {
                let (p, q) = (self.probs[(s, a)], other.probs[(s, a)]);
                if p == 0.0 && q == 0.0 {
                    continue;
                }
                d = d.max((p.ln() - q.ln()).abs());
            }
        }
        d
    }
}
