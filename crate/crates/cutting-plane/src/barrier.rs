//! Log-barrier and volumetric-barrier quantities at an interior point.
//!
//! For slacks `s_i = a_i . x - b_i` the log-barrier Hessian is
//! `H = sum_i a_i a_i^T / s_i^2`, the leverage scores are
//! `sigma_i = a_i^T H^{-1} a_i / s_i^2` (they always sum to the dimension),
//! and the volumetric barrier is `1/2 log det H`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::{CutPlaneError, Polytope};

/// Everything the Newton step and the plane bookkeeping need at one point.
pub(crate) struct BarrierEval {
    pub slacks: DVector<f64>,
    pub chol_h: Cholesky<f64, Dyn>,
    pub sigmas: DVector<f64>,
    /// Gradient of the volumetric barrier: `-sum_i sigma_i a_i / s_i`.
    pub grad: DVector<f64>,
    /// Approximate-Newton metric `Q = sum_i sigma_i a_i a_i^T / s_i^2`; used
    /// for the stopping criterion.
    pub q: DMatrix<f64>,
    /// Volumetric barrier value `1/2 log det H`.
    pub value: f64,
    /// Slack-scaled normals, row i = `a_i / s_i`.
    scaled_normals: DMatrix<f64>,
}

impl BarrierEval {
    pub fn compute(poly: &Polytope, x: &DVector<f64>) -> Result<Self, CutPlaneError> {
        let m = poly.dim();
        let k = poly.num_planes();
        let slacks = poly.slacks(x);
        for (i, &s) in slacks.iter().enumerate() {
            if !(s > 0.0) {
                return Err(CutPlaneError::NotInterior { plane: i, slack: s });
            }
        }
        let a = poly.normals();
        let h = assemble_hessian(poly, &slacks);
        let chol_h = h.cholesky().ok_or(CutPlaneError::NotPositiveDefinite)?;
        // log det H from the Cholesky factor.
        let value = chol_h.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();

        let mut sigmas = DVector::zeros(k);
        let mut grad = DVector::zeros(m);
        let mut q_metric = DMatrix::zeros(m, m);
        for i in 0..k {
            let ai = a.row(i).transpose();
            let hinv_ai = chol_h.solve(&ai);
            let sigma = ai.dot(&hinv_ai) / (slacks[i] * slacks[i]);
            sigmas[i] = sigma;
            let w = sigma / slacks[i];
            grad.axpy(-w, &ai, 1.0);
            let wq = sigma / (slacks[i] * slacks[i]);
            for p in 0..m {
                for q in 0..m {
                    q_metric[(p, q)] += wq * ai[p] * ai[q];
                }
            }
        }
        let mut scaled_normals = DMatrix::zeros(k, m);
        for i in 0..k {
            for p in 0..m {
                scaled_normals[(i, p)] = a[(i, p)] / slacks[i];
            }
        }
        Ok(Self {
            slacks,
            chol_h,
            sigmas,
            grad,
            q: q_metric,
            value,
            scaled_normals,
        })
    }

    pub fn h_inverse(&self) -> DMatrix<f64> {
        self.chol_h.inverse()
    }

    /// Exact Hessian of the volumetric barrier:
    /// `3 Q - 2 B^T (C .* C) B` with `B` the slack-scaled normals and
    /// `C = B H^{-1} B^T` (so `C_ii = sigma_i`). Satisfies
    /// `Q <= hessian <= 3 Q` in the PSD order.
    pub fn exact_hessian(&self) -> DMatrix<f64> {
        let b = &self.scaled_normals;
        let m = self.chol_h.l().nrows();
        let hinv_bt = self.chol_h.solve(&b.transpose());
        let c = b * &hinv_bt;
        let c_sq = c.component_mul(&c);
        let t = b.transpose() * c_sq * b;
        let mut hess = &self.q * 3.0;
        hess -= t * 2.0;
        debug_assert_eq!(hess.nrows(), m);
        hess
    }
}

/// Log-barrier value `-sum_i log(a_i . x - b_i)` at a strictly interior point.
pub fn log_barrier(x: &DVector<f64>, poly: &Polytope) -> Result<f64, CutPlaneError> {
    let slacks = poly.slacks(x);
    let mut total = 0.0;
    for (i, &s) in slacks.iter().enumerate() {
        if !(s > 0.0) {
            return Err(CutPlaneError::NotInterior { plane: i, slack: s });
        }
        total -= s.ln();
    }
    Ok(total)
}

fn assemble_hessian(poly: &Polytope, slacks: &DVector<f64>) -> DMatrix<f64> {
    let m = poly.dim();
    let a = poly.normals();
    let mut h = DMatrix::zeros(m, m);
    for i in 0..poly.num_planes() {
        let w = 1.0 / (slacks[i] * slacks[i]);
        let row = a.row(i);
        for p in 0..m {
            for q in 0..m {
                h[(p, q)] += w * row[p] * row[q];
            }
        }
    }
    h
}

/// Hessian of the log-barrier at a strictly interior point; positive definite
/// whenever the plane normals span the space (checked via Cholesky).
pub fn barrier_hessian(x: &DVector<f64>, poly: &Polytope) -> Result<DMatrix<f64>, CutPlaneError> {
    let slacks = poly.slacks(x);
    for (i, &s) in slacks.iter().enumerate() {
        if !(s > 0.0) {
            return Err(CutPlaneError::NotInterior { plane: i, slack: s });
        }
    }
    let h = assemble_hessian(poly, &slacks);
    if h.clone().cholesky().is_none() {
        return Err(CutPlaneError::NotPositiveDefinite);
    }
    Ok(h)
}

/// Leverage scores `sigma_i` at a strictly interior point. Each lies in
/// (0, 1] and they sum to the dimension.
pub fn leverage_scores(x: &DVector<f64>, poly: &Polytope) -> Result<DVector<f64>, CutPlaneError> {
    Ok(BarrierEval::compute(poly, x)?.sigmas)
}

/// Volumetric barrier value `1/2 log det H(x)`.
pub fn volumetric_value(x: &DVector<f64>, poly: &Polytope) -> Result<f64, CutPlaneError> {
    Ok(BarrierEval::compute(poly, x)?.value)
}
