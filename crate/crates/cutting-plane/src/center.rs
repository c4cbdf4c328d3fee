//! Volumetric center computation: damped Newton steps in the metric
//! `Q = sum_i sigma_i a_i a_i^T / s_i^2`, with a backtracking line search
//! that keeps the iterate strictly interior and the barrier value
//! nonincreasing (up to rounding).

use nalgebra::DVector;

use crate::barrier::BarrierEval;
use crate::{CutPlaneError, Polytope};

#[derive(Debug, Clone, Copy)]
pub struct NewtonSettings {
    /// Stop once the Newton decrement `||grad||_{Q^{-1}}` falls below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 500,
        }
    }
}

impl NewtonSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Minimizes the volumetric barrier over the interior of `poly`.
///
/// A strictly interior `warm_start` skips the interior-point search; after a
/// plane is added or removed the previous center remains interior and makes
/// the Newton iteration converge in a handful of steps.
pub fn volumetric_center(
    poly: &Polytope,
    warm_start: Option<&DVector<f64>>,
    settings: &NewtonSettings,
) -> Result<DVector<f64>, CutPlaneError> {
    let mut x = match warm_start {
        Some(x0) if poly.is_interior(x0) => x0.clone(),
        Some(_) | None => find_interior_point(poly)?,
    };

    // Scale-aware divergence guard: an unbounded polytope sends the center
    // to infinity instead of converging.
    let offset_scale = poly
        .offsets()
        .iter()
        .zip(poly.normals().row_iter())
        .map(|(&b, row)| (b / row.norm().max(1e-300)).abs())
        .fold(0.0f64, f64::max);
    let radius_limit = 1e8 * (1.0 + x.norm() + offset_scale);

    for _ in 0..settings.max_iters {
        let eval = BarrierEval::compute(poly, &x)?;
        let chol_q = eval
            .q
            .clone()
            .cholesky()
            .ok_or(CutPlaneError::NotPositiveDefinite)?;
        // Stopping rule in the Q metric.
        let q_decrement_sq = eval.grad.dot(&chol_q.solve(&eval.grad));
        if q_decrement_sq.max(0.0).sqrt() <= settings.tol {
            return Ok(x);
        }

        // Steps use the exact Hessian of the volumetric barrier. Q alone
        // underestimates the curvature (up to a factor 3), which makes
        // Q-metric steps overshoot and ping-pong at the f64 noise floor of
        // the barrier value; the exact Hessian restores local quadratic
        // convergence so the decrement drops through the tolerance cleanly.
        let hess = eval.exact_hessian();
        let step = match hess.cholesky() {
            Some(chol_hess) => -chol_hess.solve(&eval.grad),
            None => -chol_q.solve(&eval.grad),
        };
        let model_decrease = -eval.grad.dot(&step);
        if !(model_decrease > 0.0) {
            return Err(CutPlaneError::NewtonStalled(settings.max_iters));
        }

        // Largest step keeping every slack positive.
        let dirs = poly.normals() * &step;
        let mut t_bound = f64::INFINITY;
        for (i, &d) in dirs.iter().enumerate() {
            if d < 0.0 {
                t_bound = t_bound.min(eval.slacks[i] / -d);
            }
        }
        let mut t = (0.995 * t_bound).min(1.0);
        // Armijo descent with an absolute allowance for the f64 granularity
        // of the barrier value.
        let noise = 1e-13 * (1.0 + eval.value.abs());
        let mut advanced = false;
        while t > 1e-18 {
            let candidate = &x + &step * t;
            if let Ok(cand_eval) = BarrierEval::compute(poly, &candidate) {
                if cand_eval.value <= eval.value - 1e-4 * t * model_decrease + noise {
                    x = candidate;
                    advanced = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !advanced {
            return Err(CutPlaneError::NewtonStalled(settings.max_iters));
        }
        if x.norm() > radius_limit {
            return Err(CutPlaneError::Unbounded);
        }
    }
    Err(CutPlaneError::NewtonStalled(settings.max_iters))
}

/// Phase-1 search for a strictly interior point: centers the inflated
/// polytope `{x : Ax >= b - shift}` under its log-barrier and halves the
/// inflation margin until the true slacks are all positive.
pub(crate) fn find_interior_point(poly: &Polytope) -> Result<DVector<f64>, CutPlaneError> {
    let m = poly.dim();
    let mut x = DVector::zeros(m);
    let mut min_slack = poly.min_slack(&x).1;
    if min_slack > 0.0 {
        return Ok(x);
    }
    let mut shift = -min_slack + 1.0;

    let radius_limit = {
        let offset_scale = poly
            .offsets()
            .iter()
            .zip(poly.normals().row_iter())
            .map(|(&b, row)| (b / row.norm().max(1e-300)).abs())
            .fold(0.0f64, f64::max);
        1e8 * (1.0 + offset_scale)
    };

    for _ in 0..128 {
        // Analytic centering of the inflated polytope by damped Newton on
        // the plain log-barrier.
        for _ in 0..80 {
            let slacks = poly.slacks(&x).add_scalar(shift);
            if slacks.iter().any(|&s| !(s > 0.0)) {
                return Err(CutPlaneError::NoInteriorPoint);
            }
            let a = poly.normals();
            let mut grad = DVector::zeros(m);
            let mut hess = nalgebra::DMatrix::zeros(m, m);
            for i in 0..poly.num_planes() {
                let ai = a.row(i).transpose();
                grad.axpy(-1.0 / slacks[i], &ai, 1.0);
                let w = 1.0 / (slacks[i] * slacks[i]);
                for p in 0..m {
                    for q in 0..m {
                        hess[(p, q)] += w * ai[p] * ai[q];
                    }
                }
            }
            // Tiny ridge keeps the search usable when the inflated planes do
            // not yet span the space.
            for d in 0..m {
                hess[(d, d)] += 1e-12;
            }
            let step = -hess
                .cholesky()
                .ok_or(CutPlaneError::NotPositiveDefinite)?
                .solve(&grad);
            let decrement_sq = -grad.dot(&step);
            if decrement_sq.max(0.0).sqrt() <= 1e-8 {
                break;
            }
            let dirs = a * &step;
            let mut t_bound = f64::INFINITY;
            for (i, &d) in dirs.iter().enumerate() {
                if d < 0.0 {
                    t_bound = t_bound.min(slacks[i] / -d);
                }
            }
            let t = (0.9 * t_bound).min(1.0);
            x += step * t;
            if x.norm() > radius_limit {
                return Err(CutPlaneError::Unbounded);
            }
        }

        min_slack = poly.min_slack(&x).1;
        if min_slack > 0.0 {
            return Ok(x);
        }
        // Shrink the inflation while keeping the current iterate feasible
        // for the next inflated barrier.
        let margin = min_slack + shift;
        if !(margin > 0.0) || margin < 1e-14 * (1.0 + shift.abs()) {
            return Err(CutPlaneError::NoInteriorPoint);
        }
        shift -= 0.5 * margin;
    }
    Err(CutPlaneError::NoInteriorPoint)
}
