//! Exact dual-function machinery for small numbers of constraints.
//!
//! The dual function is
//! `d_tau(lambda) = max_pi [ V_{r_lambda, tau}(rho) ] - <lambda, c>` with
//! `r_lambda = r_0 + sum_i lambda_i r_i`; soft value iteration gives the
//! inner maximum to any accuracy, and for m <= 2 the dual optimum is found
//! by dense grid search (warm-starting the value function across the grid).

use mdp_core::TabularCmdp;
use nalgebra::DVector;

use crate::soft_vi::soft_value_iteration_from;
use crate::OracleError;

/// `d_tau(lambda)` via soft value iteration run to `tol`.
pub fn dual_value_exact(
    cmdp: &TabularCmdp,
    lambda: &DVector<f64>,
    tau: f64,
    tol: f64,
) -> Result<f64, OracleError> {
    let reward = cmdp.combined_reward(lambda)?;
    let result = soft_value_iteration_from(
        cmdp.mdp(),
        &reward,
        tau,
        tol,
        DVector::zeros(cmdp.n_states()),
    )?;
    Ok(cmdp.mdp().rho().dot(&result.values) - lambda.dot(cmdp.thresholds()))
}

#[derive(Debug, Clone)]
pub struct GridDualMin {
    pub lambda: DVector<f64>,
    pub value: f64,
    pub points_evaluated: usize,
}

/// Dense grid minimization of `d_tau` over `[0, b_lambda]^m` at the given
/// resolution (m <= 2). With `mu > 0` the regularized dual
/// `d_tau(lambda) + mu/2 ||lambda||^2` is minimized instead.
pub fn grid_dual_min_regularized(
    cmdp: &TabularCmdp,
    tau: f64,
    mu: f64,
    b_lambda: f64,
    resolution: f64,
) -> Result<GridDualMin, OracleError> {
    let m = cmdp.num_constraints();
    if m == 0 || m > 2 {
        return Err(OracleError::GridDimension(m));
    }
    if !(b_lambda > 0.0) || !(resolution > 0.0) {
        return Err(OracleError::InvalidArgument(
            "grid search needs b_lambda > 0 and resolution > 0".into(),
        ));
    }
    let steps = (b_lambda / resolution).ceil() as usize;
    let axis: Vec<f64> = (0..=steps)
        .map(|i| (i as f64 * resolution).min(b_lambda))
        .collect();
    let soft_vi_tol = 1e-10;

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut evaluated = 0usize;
    let mut warm = DVector::zeros(cmdp.n_states());
    let visit = |lambda: DVector<f64>, warm: &mut DVector<f64>| -> Result<f64, OracleError> {
        let reward = cmdp.combined_reward(&lambda)?;
        let result =
            soft_value_iteration_from(cmdp.mdp(), &reward, tau, soft_vi_tol, warm.clone())?;
        *warm = result.values.clone();
        let d = cmdp.mdp().rho().dot(&result.values) - lambda.dot(cmdp.thresholds());
        Ok(d + 0.5 * mu * lambda.norm_squared())
    };

    if m == 1 {
        for &x in &axis {
            let lambda = DVector::from_vec(vec![x]);
            let value = visit(lambda.clone(), &mut warm)?;
            evaluated += 1;
            if best.as_ref().is_none_or(|(v, _)| value < *v) {
                best = Some((value, lambda));
            }
        }
    } else {
        for &x in &axis {
            for &y in &axis {
                let lambda = DVector::from_vec(vec![x, y]);
                let value = visit(lambda.clone(), &mut warm)?;
                evaluated += 1;
                if best.as_ref().is_none_or(|(v, _)| value < *v) {
                    best = Some((value, lambda));
                }
            }
        }
    }
    let (value, lambda) = best.expect("grid contains at least one point");
    Ok(GridDualMin {
        lambda,
        value,
        points_evaluated: evaluated,
    })
}

/// Dense grid minimization of the plain dual over `[0, b_lambda]^m`.
pub fn grid_dual_min(
    cmdp: &TabularCmdp,
    tau: f64,
    b_lambda: f64,
    resolution: f64,
) -> Result<GridDualMin, OracleError> {
    grid_dual_min_regularized(cmdp, tau, 0.0, b_lambda, resolution)
}
