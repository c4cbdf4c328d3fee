//! The outer solve: parameter resolution, the cutting-plane run over the
//! dual, best-iterate selection and the final inner solve.

use std::cell::RefCell;
use std::collections::VecDeque;

use cutting_plane::{vaidya_run, CutPlaneError, IterationAction, Polytope};
use mdp_core::{CmdpValues, Policy, PolicyEvaluator, TabularCmdp};
use nalgebra::DVector;
use npg::run_npg;
use oracles::{lp_solve_cmdp, slater_margin};

use crate::config::{BLambdaSource, DualConfig, MixingParams, ResolvedParams};
use crate::diagnostics::{
    constraint_violation_bound, dual_gap_epsilon, dual_gap_epsilon_alt, dual_range_bound,
    dual_smoothness, mixing_factor, optimality_gap_bound, DiagnosticsReport,
};
use crate::geometry::{compute_b_lambda, initial_simplex};
use crate::oracle::{query, QueryRecord};
use crate::trace::{ConvergenceTrace, TraceAction, TraceRow};
use crate::SolveError;

/// Result of a solve: the final policy and multiplier, the full iteration
/// trace, the bound report and the exact values of the returned policy.
#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: Policy,
    pub lambda: DVector<f64>,
    pub trace: ConvergenceTrace,
    pub diagnostics: DiagnosticsReport,
    pub resolved: ResolvedParams,
    pub final_values: CmdpValues,
}

fn validate(cfg: &DualConfig) -> Result<(), SolveError> {
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(SolveError::InvalidConfig(format!(
            "delta must lie in (0, 1), got {}",
            cfg.delta
        )));
    }
    if !(cfg.mu >= 0.0 && cfg.mu.is_finite()) {
        return Err(SolveError::InvalidConfig(format!(
            "mu must be finite and nonnegative, got {}",
            cfg.mu
        )));
    }
    if let Some(tau) = cfg.tau {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SolveError::InvalidConfig(format!(
                "tau must be finite and positive, got {tau}"
            )));
        }
    }
    Ok(())
}

pub(crate) fn resolve(
    cmdp: &TabularCmdp,
    cfg: &DualConfig,
) -> Result<(ResolvedParams, f64, f64), SolveError> {
    if cmdp.num_constraints() == 0 {
        return Err(SolveError::NoConstraints);
    }
    validate(cfg)?;

    let (xi, b_lambda) = match cfg.b_lambda {
        BLambdaSource::Explicit(b) => {
            if !(b > 0.0 && b.is_finite()) {
                return Err(SolveError::InvalidConfig(format!(
                    "explicit b_lambda must be finite and positive, got {b}"
                )));
            }
            (None, b)
        }
        BLambdaSource::FromXi(xi) => (Some(xi), compute_b_lambda(cmdp, xi)?),
        BLambdaSource::FromSlaterLp => {
            let xi = slater_margin(cmdp)?;
            if !(xi > 0.0) {
                return Err(SolveError::SlaterNotSatisfied { xi });
            }
            (Some(xi), compute_b_lambda(cmdp, xi)?)
        }
    };

    // When only the bound is known, back out the margin the bound formula
    // would correspond to; the a-priori gap formula needs some margin value.
    let xi_eff = xi.unwrap_or_else(|| {
        (cmdp.reward_max(0) + (cmdp.n_actions() as f64).ln()) / ((1.0 - cmdp.gamma()) * b_lambda)
    });
    let epsilon = dual_gap_epsilon(cmdp, b_lambda, xi_eff, cfg.vaidya.zeta, cfg.vaidya.t_max);
    let epsilon_alt =
        dual_gap_epsilon_alt(cmdp, b_lambda, xi_eff, cfg.vaidya.zeta, cfg.vaidya.t_max);
    let tau = cfg.tau.unwrap_or_else(|| epsilon.cbrt().min(1.0));

    Ok((
        ResolvedParams {
            tau,
            delta: cfg.delta,
            mu: cfg.mu,
            b_lambda,
            xi,
        },
        epsilon,
        epsilon_alt,
    ))
}

/// Evaluates every closed-form bound for this configuration without running
/// the solver. Mixing-dependent fields require explicit constants.
pub fn convergence_bounds(
    cmdp: &TabularCmdp,
    cfg: &DualConfig,
    mixing: Option<MixingParams>,
) -> Result<DiagnosticsReport, SolveError> {
    let (resolved, epsilon, epsilon_alt) = resolve(cmdp, cfg)?;
    Ok(build_report(
        cmdp,
        &resolved,
        epsilon,
        epsilon_alt,
        mixing,
        None,
        None,
        None,
    ))
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    cmdp: &TabularCmdp,
    resolved: &ResolvedParams,
    epsilon: f64,
    epsilon_alt: f64,
    mixing: Option<MixingParams>,
    lp_optimal_value: Option<f64>,
    measured_gap: Option<f64>,
    measured_violation: Option<f64>,
) -> DiagnosticsReport {
    DiagnosticsReport {
        m: cmdp.num_constraints(),
        tau: resolved.tau,
        delta: resolved.delta,
        mu: resolved.mu,
        b_lambda: resolved.b_lambda,
        xi: resolved.xi,
        dual_gap_epsilon: epsilon,
        dual_gap_epsilon_alt: epsilon_alt,
        dual_range_bound: dual_range_bound(cmdp, resolved.b_lambda, resolved.tau),
        mixing_factor: mixing.map(mixing_factor),
        dual_smoothness: mixing.map(|m| dual_smoothness(cmdp, resolved.tau, m)),
        optimality_gap_bound: mixing
            .map(|m| optimality_gap_bound(cmdp, resolved.b_lambda, epsilon, resolved.delta, m)),
        violation_bound: mixing
            .map(|m| constraint_violation_bound(cmdp, epsilon, resolved.delta, m)),
        lp_optimal_value,
        measured_gap,
        measured_violation,
    }
}

#[derive(Debug)]
struct StashedOracleFailure;

impl std::fmt::Display for StashedOracleFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "dual oracle failed; see the solver error")
    }
}

impl std::error::Error for StashedOracleFailure {}

/// Runs the full dual cutting-plane solve.
pub fn solve(cmdp: &TabularCmdp, cfg: &DualConfig) -> Result<Solution, SolveError> {
    let (resolved, epsilon, epsilon_alt) = resolve(cmdp, cfg)?;
    let m = cmdp.num_constraints();

    let lp_value = if cfg.oracle_check {
        lp_solve_cmdp(cmdp)?.optimal().map(|sol| sol.optimal_value)
    } else {
        None
    };

    let simplex: Polytope = initial_simplex(resolved.b_lambda, m);

    let records: RefCell<Vec<QueryRecord>> = RefCell::new(Vec::new());
    let pending: RefCell<VecDeque<(Option<f64>, f64)>> = RefCell::new(VecDeque::new());
    let stashed: RefCell<Option<SolveError>> = RefCell::new(None);
    let rows: RefCell<Vec<TraceRow>> = RefCell::new(Vec::new());
    let best_so_far: RefCell<Option<f64>> = RefCell::new(None);

    let oracle = |lambda: &DVector<f64>| match query(
        cmdp,
        lambda,
        resolved.tau,
        resolved.delta,
        resolved.mu,
    ) {
        Ok((response, record)) => {
            if let Some(record) = record {
                let violation = record.values.constraint_violation(cmdp.thresholds());
                let gap = lp_value.map(|v| v - record.values.objective);
                pending.borrow_mut().push_back((gap, violation));
                records.borrow_mut().push(record);
            }
            Ok(response)
        }
        Err(err) => {
            *stashed.borrow_mut() = Some(err);
            Err(CutPlaneError::oracle(StashedOracleFailure))
        }
    };

    let on_iteration = |record: &cutting_plane::IterationRecord| {
        let action = match record.action {
            IterationAction::DroppedPlane { .. } => TraceAction::Drop,
            IterationAction::DropRejected { .. } => TraceAction::DropRejected,
            IterationAction::AddedSubgradientCut => TraceAction::SubgradientCut,
            IterationAction::AddedSeparationCut => TraceAction::SeparationCut,
            IterationAction::ZeroSubgradientStop => TraceAction::ZeroSubgradient,
        };
        let (gap, violation) = if matches!(
            action,
            TraceAction::SubgradientCut | TraceAction::ZeroSubgradient
        ) {
            pending
                .borrow_mut()
                .pop_front()
                .map(|(g, v)| (g, Some(v)))
                .unwrap_or((None, None))
        } else {
            (None, None)
        };
        if let Some(estimate) = record.value_estimate {
            let mut best = best_so_far.borrow_mut();
            *best = Some(best.map_or(estimate, |b: f64| b.min(estimate)));
        }
        rows.borrow_mut().push(TraceRow {
            t: record.t,
            action,
            k: record.num_planes,
            sigma_min: record.sigma_min,
            lambda: record.point.clone(),
            value_estimate: record.value_estimate,
            best_so_far: *best_so_far.borrow(),
            gap_vs_lp: gap,
            violation_l2: violation,
        });
    };

    match vaidya_run(oracle, simplex, &cfg.vaidya, on_iteration) {
        Ok(_) => {}
        Err(err) => {
            return Err(stashed.take().unwrap_or(SolveError::CutPlane(err)));
        }
    }

    let trace = ConvergenceTrace {
        rows: rows.into_inner(),
    };
    let records = records.into_inner();

    // Best visited nonnegative multiplier by dual value estimate; separation
    // iterates carry no estimate and never qualify.
    let best = records
        .iter()
        .min_by(|a, b| {
            a.value_estimate
                .partial_cmp(&b.value_estimate)
                .expect("value estimates are finite")
        })
        .cloned();
    let Some(best) = best else {
        return Err(SolveError::NoFeasibleIterate(Box::new(trace)));
    };

    // Final inner solve at the selected multiplier.
    let final_reward = cmdp.combined_reward(&best.lambda)?;
    let final_policy = run_npg(cmdp.mdp(), &final_reward, resolved.tau, resolved.delta)?.policy;
    let final_values = PolicyEvaluator::new(cmdp.mdp(), &final_policy)?.cmdp_values(cmdp)?;

    let measured_gap = lp_value.map(|v| v - final_values.objective);
    let measured_violation = lp_value
        .is_some()
        .then(|| final_values.constraint_violation(cmdp.thresholds()));

    let diagnostics = build_report(
        cmdp,
        &resolved,
        epsilon,
        epsilon_alt,
        None,
        lp_value,
        measured_gap,
        measured_violation,
    );

    Ok(Solution {
        policy: final_policy,
        lambda: best.lambda,
        trace,
        diagnostics,
        resolved,
        final_values,
    })
}
