//! Config-driven batch solving with trace and summary export.
//!
//! Each instance is generated from its seed, solved, compared against the
//! occupancy LP when requested, and written out as a trace CSV plus one
//! summary entry. Instances may solve concurrently; results are assembled in
//! config order so outputs are byte-identical across runs regardless of
//! scheduling. Wall time is measured but only printed to stderr: the emitted
//! files are deterministic.

use std::path::Path;
use std::time::Instant;

use cmdp_solver::{solve, BLambdaSource, DualConfig, SolveError, TraceAction};
use cutting_plane::VaidyaParams;
use oracles::grid_dual_min;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generate::{generate_instance, InstanceSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Entropy coefficient; omit for the configured-budget default.
    pub tau: Option<f64>,
    pub delta: f64,
    #[serde(default)]
    pub mu: f64,
    pub eta: f64,
    pub zeta: f64,
    pub t_outer: usize,
    /// Allow eta/zeta outside the analyzed regime.
    #[serde(default)]
    pub unsafe_params: bool,
    /// Explicit multiplier bound (overrides xi and the LP estimate).
    #[serde(default)]
    pub b_lambda: Option<f64>,
    /// Explicit Slater margin (overrides the LP estimate).
    #[serde(default)]
    pub xi: Option<f64>,
}

impl SolverSettings {
    pub fn to_dual_config(&self, oracle_check: bool) -> Result<DualConfig, BenchError> {
        let vaidya = if self.unsafe_params {
            VaidyaParams::relaxed(self.eta, self.zeta, self.t_outer)
        } else {
            VaidyaParams::theory(self.eta, self.zeta, self.t_outer)
        }
        .map_err(|e| BenchError::Config(e.to_string()))?;
        let mut cfg = DualConfig::new(vaidya)
            .with_delta(self.delta)
            .with_mu(self.mu)
            .with_oracle_check(oracle_check);
        if let Some(tau) = self.tau {
            cfg = cfg.with_tau(tau);
        }
        cfg = match (self.b_lambda, self.xi) {
            (Some(b), _) => cfg.with_b_lambda(BLambdaSource::Explicit(b)),
            (None, Some(xi)) => cfg.with_b_lambda(BLambdaSource::FromXi(xi)),
            (None, None) => cfg.with_b_lambda(BLambdaSource::FromSlaterLp),
        };
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instances: Vec<InstanceSpec>,
    pub solver: SolverSettings,
    /// Compare against the occupancy LP (fills gap columns). Default true.
    #[serde(default = "default_true")]
    pub oracle_check: bool,
    /// Relative grid resolution (fraction of b_lambda) for the dual-gap
    /// reference used by the slope fit; only applied when m <= 2.
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: f64,
}

fn default_true() -> bool {
    true
}

fn default_grid_resolution() -> f64 {
    1e-3
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad benchmark config: {0}")]
    Config(String),

    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse failure: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub seed: u64,
    pub n_states: usize,
    pub n_actions: usize,
    pub m: usize,
    pub status: String,
    pub iterations: usize,
    pub tau: Option<f64>,
    pub b_lambda: Option<f64>,
    pub xi: Option<f64>,
    pub lambda: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub final_gap: Option<f64>,
    pub final_violation: Option<f64>,
    pub lp_optimal_value: Option<f64>,
    /// Least-squares slope of log10(best dual gap) per iteration over the
    /// decaying segment (m <= 2 only).
    pub dual_gap_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub entries: Vec<SummaryEntry>,
}

fn error_entry(spec: &InstanceSpec, message: String) -> SummaryEntry {
    SummaryEntry {
        seed: spec.seed,
        n_states: spec.n_states,
        n_actions: spec.n_actions,
        m: spec.m,
        status: message,
        iterations: 0,
        tau: None,
        b_lambda: None,
        xi: None,
        lambda: None,
        objective_value: None,
        final_gap: None,
        final_violation: None,
        lp_optimal_value: None,
        dual_gap_slope: None,
    }
}

/// Least-squares slope of `ln(best-so-far dual gap)` against `t` over the
/// decaying segment, converted to natural-log units per iteration.
fn dual_gap_slope(rows: &[cmdp_solver::TraceRow], d_ref: f64, noise_floor: f64) -> Option<f64> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for row in rows {
        if row.action != TraceAction::SubgradientCut && row.action != TraceAction::ZeroSubgradient {
            continue;
        }
        let gap = row.best_so_far? - d_ref;
        if gap <= noise_floor {
            break; // reached the resolution of the estimates
        }
        points.push((row.t as f64, gap.ln()));
    }
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn run_one(spec: &InstanceSpec, config: &BenchConfig) -> (SummaryEntry, Option<String>) {
    let cmdp = match generate_instance(spec) {
        Ok(c) => c,
        Err(e) => return (error_entry(spec, format!("error: {e}")), None),
    };
    let cfg = match config.solver.to_dual_config(config.oracle_check) {
        Ok(c) => c,
        Err(e) => return (error_entry(spec, format!("error: {e}")), None),
    };
    let solution = match solve(&cmdp, &cfg) {
        Ok(s) => s,
        Err(SolveError::NoFeasibleIterate(trace)) => {
            let mut entry = error_entry(spec, "error: no nonnegative iterate visited".into());
            entry.iterations = trace.rows.len();
            return (entry, Some(trace.to_csv()));
        }
        Err(e) => return (error_entry(spec, format!("error: {e}")), None),
    };

    let slope = if spec.m <= 2 {
        // Cap the grid density so the dual-gap reference stays cheap: the
        // slope fit only needs a reasonable d* estimate.
        let min_rel = if spec.m == 1 { 5e-4 } else { 5e-3 };
        let resolution = config.grid_resolution.max(min_rel) * solution.resolved.b_lambda;
        grid_dual_min(
            &cmdp,
            solution.resolved.tau,
            solution.resolved.b_lambda,
            resolution,
        )
        .ok()
        .and_then(|grid| {
            let noise =
                (6.0 * solution.resolved.tau * cmdp.gamma() * solution.resolved.delta).max(1e-12);
            dual_gap_slope(&solution.trace.rows, grid.value, noise)
        })
    } else {
        None
    };

    let entry = SummaryEntry {
        seed: spec.seed,
        n_states: spec.n_states,
        n_actions: spec.n_actions,
        m: spec.m,
        status: "ok".into(),
        iterations: solution.trace.rows.len(),
        tau: Some(solution.resolved.tau),
        b_lambda: Some(solution.resolved.b_lambda),
        xi: solution.resolved.xi,
        lambda: Some(solution.lambda.iter().copied().collect()),
        objective_value: Some(solution.final_values.objective),
        final_gap: solution.diagnostics.measured_gap,
        final_violation: solution.diagnostics.measured_violation,
        lp_optimal_value: solution.diagnostics.lp_optimal_value,
        dual_gap_slope: slope,
    };
    (entry, Some(solution.trace.to_csv()))
}

/// Runs the batch, writing `trace_seed<seed>.csv` per instance and a
/// `summary.json` with entries in config order.
pub fn run_benchmark(config: &BenchConfig, out_dir: &Path) -> Result<BenchReport, BenchError> {
    std::fs::create_dir_all(out_dir)?;
    let started = Instant::now();

    let results: Vec<(SummaryEntry, Option<String>)> = config
        .instances
        .par_iter()
        .map(|spec| {
            let instance_started = Instant::now();
            let (entry, trace_csv) = run_one(spec, config);
            eprintln!(
                "bench: seed {} finished in {:.2}s ({})",
                spec.seed,
                instance_started.elapsed().as_secs_f64(),
                entry.status
            );
            (entry, trace_csv)
        })
        .collect();

    let mut entries = Vec::with_capacity(results.len());
    for (spec, (entry, trace_csv)) in config.instances.iter().zip(results) {
        if let Some(csv) = trace_csv {
            std::fs::write(out_dir.join(format!("trace_seed{}.csv", spec.seed)), csv)?;
        }
        entries.push(entry);
    }
    let report = BenchReport { entries };
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    eprintln!(
        "bench: {} instance(s) in {:.2}s",
        config.instances.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(report)
}
