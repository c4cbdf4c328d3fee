use cutting_plane::Polytope;
use mdp_core::TabularCmdp;
use nalgebra::{DMatrix, DVector};

use crate::SolveError;

/// l1 bound on the dual optimum under a Slater margin `xi`:
/// `(max r_0 + log|A|) / ((1 - gamma) xi)`.
pub fn compute_b_lambda(cmdp: &TabularCmdp, xi: f64) -> Result<f64, SolveError> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(SolveError::SlaterNotSatisfied { xi });
    }
    let n_actions = cmdp.n_actions() as f64;
    Ok((cmdp.reward_max(0) + n_actions.ln()) / ((1.0 - cmdp.gamma()) * xi))
}

/// Starting polytope for the dual search: the simplex
/// `{lambda : lambda_j >= -B, sum_j lambda_j <= m B}` as
/// `A = [I_m; -1^T]`, `b = [-B 1; -m B]`. It contains the Euclidean ball of
/// radius `B` around the origin and hence the whole multiplier set
/// `{lambda >= 0 : ||lambda||_1 <= B}`.
pub fn initial_simplex(b_lambda: f64, m: usize) -> Polytope {
    assert!(b_lambda > 0.0, "b_lambda must be positive");
    assert!(m >= 1, "need at least one constraint");
    let mut a = DMatrix::zeros(m + 1, m);
    let mut b = DVector::zeros(m + 1);
    for j in 0..m {
        a[(j, j)] = 1.0;
        b[j] = -b_lambda;
        a[(m, j)] = -1.0;
    }
    b[m] = -(m as f64) * b_lambda;
    Polytope::new(a, b).expect("simplex data is finite and has m + 1 planes")
}
