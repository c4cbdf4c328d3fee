//! `cmdp`: command-line front end for the constrained-MDP solver, its exact
//! oracles and the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use bench_cli::bench::{run_benchmark, BenchConfig};
use bench_cli::checks;
use bench_cli::generate::{generate_instance, InstanceSpec};
use clap::{Args, Parser, Subcommand};
use cmdp_solver::{solve, BLambdaSource, DualConfig};
use cutting_plane::{vaidya_run, CutKind, CutResponse, Polytope, VaidyaParams};
use mdp_core::TabularCmdp;
use nalgebra::DVector;
use npg::run_npg;
use oracles::{grid_dual_min, lp_solve_cmdp, slater_margin, soft_value_iteration, LpOutcome};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "cmdp",
    about = "Tabular constrained-MDP solver: cutting-plane dual method with an entropy-regularized natural-policy-gradient inner solver, plus exact LP and value-iteration oracles."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file from a seed.
    Gen(GenArgs),
    /// Solve an instance file with the cutting-plane dual method.
    Solve(SolveArgs),
    /// Run an exact oracle on an instance file.
    Oracle(OracleArgs),
    /// Run the inner natural-policy-gradient solver on one reward.
    Npg(NpgArgs),
    /// Exercise the cutting-plane component on built-in objectives.
    Cutplane(CutplaneArgs),
    /// Run a config-driven benchmark batch.
    Bench(BenchArgs),
    /// Run the verification suite and print a pass/fail table.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n_states: usize,
    #[arg(long, default_value_t = 3)]
    n_actions: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    reward_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    tightness: f64,
    /// Expected successors per (state, action) pair.
    #[arg(long, default_value_t = 10.0)]
    sparsity: f64,
    /// Output path for the instance JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Entropy coefficient (defaults to the budget-derived value).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Explicit Slater margin (skips the LP estimate).
    #[arg(long)]
    xi: Option<f64>,
    /// Explicit multiplier bound (overrides --xi).
    #[arg(long)]
    b_lambda: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
    #[arg(long, default_value_t = 1e-7)]
    zeta: f64,
    #[arg(long, default_value_t = 150)]
    t_outer: usize,
    /// Accept eta/zeta outside the analyzed regime (eta <= 1e-4,
    /// zeta <= 1e-3 eta).
    #[arg(long)]
    unsafe_params: bool,
    /// Solve the occupancy LP and report measured gap and violation.
    #[arg(long)]
    oracle_check: bool,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Accepted for interface stability; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// lp | slater | softvi | griddual
    #[arg(long)]
    mode: String,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Reward table index for softvi (0 = objective).
    #[arg(long, default_value_t = 0)]
    reward_index: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Upper grid limit for griddual (defaults to the Slater-derived bound).
    #[arg(long)]
    b_lambda: Option<f64>,
    /// Grid step for griddual.
    #[arg(long, default_value_t = 1e-2)]
    resolution: f64,
}

#[derive(Args)]
struct NpgArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    tau: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Optimize this reward table (0 = objective).
    #[arg(long)]
    reward_index: Option<usize>,
    /// Optimize the combined reward for these comma-separated multipliers.
    #[arg(long)]
    lambda: Option<String>,
}

#[derive(Args)]
struct CutplaneArgs {
    /// quadratic | linear
    #[arg(long, default_value = "quadratic")]
    objective: String,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    t: usize,
    #[arg(long, default_value_t = 1e-4)]
    eta: f64,
    #[arg(long, default_value_t = 1e-7)]
    zeta: f64,
    #[arg(long)]
    unsafe_params: bool,
    /// Comma-separated minimizer for the quadratic objective.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Run only the check with this name (substring match).
    #[arg(long)]
    only: Option<String>,
}

fn parse_lambda(text: &str, expected: usize) -> Result<DVector<f64>, String> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let parts = parts.map_err(|e| format!("bad multiplier list: {e}"))?;
    if parts.len() != expected {
        return Err(format!(
            "expected {expected} multipliers, got {}",
            parts.len()
        ));
    }
    Ok(DVector::from_vec(parts))
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Gen(args) => {
            let spec = InstanceSpec {
                seed: args.seed,
                n_states: args.n_states,
                n_actions: args.n_actions,
                m: args.m,
                gamma: args.gamma,
                reward_scale: args.reward_scale,
                constraint_tightness: args.tightness,
                kernel_sparsity: args.sparsity,
            };
            let cmdp = generate_instance(&spec).map_err(|e| e.to_string())?;
            cmdp.save(&args.out).map_err(|e| e.to_string())?;
            eprintln!("wrote instance to {}", args.out.display());
            Ok(())
        }
        Command::Solve(args) => {
            let cmdp = TabularCmdp::load(&args.instance).map_err(|e| e.to_string())?;
            let params = if args.unsafe_params {
                VaidyaParams::relaxed(args.eta, args.zeta, args.t_outer)
            } else {
                VaidyaParams::theory(args.eta, args.zeta, args.t_outer)
            }
            .map_err(|e| e.to_string())?;
            let mut cfg = DualConfig::new(params)
                .with_delta(args.delta)
                .with_mu(args.mu)
                .with_oracle_check(args.oracle_check);
            if let Some(tau) = args.tau {
                cfg = cfg.with_tau(tau);
            }
            cfg = match (args.b_lambda, args.xi) {
                (Some(b), _) => cfg.with_b_lambda(BLambdaSource::Explicit(b)),
                (None, Some(xi)) => cfg.with_b_lambda(BLambdaSource::FromXi(xi)),
                (None, None) => cfg.with_b_lambda(BLambdaSource::FromSlaterLp),
            };
            let solution = solve(&cmdp, &cfg).map_err(|e| e.to_string())?;
            if let Some(path) = args.trace {
                std::fs::write(&path, solution.trace.to_csv()).map_err(|e| e.to_string())?;
                eprintln!("wrote trace to {}", path.display());
            }
            let d = &solution.diagnostics;
            let out = json!({
                "lambda": solution.lambda.as_slice(),
                "objective_value": solution.final_values.objective,
                "constraint_values": solution.final_values.constraints.as_slice(),
                "constraint_violation_l2":
                    solution.final_values.constraint_violation(cmdp.thresholds()),
                "tau": solution.resolved.tau,
                "b_lambda": solution.resolved.b_lambda,
                "xi": solution.resolved.xi,
                "dual_gap_epsilon": d.dual_gap_epsilon,
                "dual_gap_epsilon_alt": d.dual_gap_epsilon_alt,
                "dual_range_bound": d.dual_range_bound,
                "lp_optimal_value": d.lp_optimal_value,
                "measured_gap": d.measured_gap,
                "measured_violation": d.measured_violation,
                "iterations": solution.trace.rows.len(),
                "policy": policy_rows(&solution.policy),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(())
        }
        Command::Oracle(args) => {
            let cmdp = TabularCmdp::load(&args.instance).map_err(|e| e.to_string())?;
            let out = match args.mode.as_str() {
                "lp" => match lp_solve_cmdp(&cmdp).map_err(|e| e.to_string())? {
                    LpOutcome::Optimal(sol) => json!({
                        "status": "optimal",
                        "optimal_value": sol.optimal_value,
                        "occupancy": matrix_rows(&sol.occupancy),
                        "policy": policy_rows(&sol.policy),
                    }),
                    LpOutcome::Infeasible => json!({ "status": "infeasible" }),
                    LpOutcome::Unbounded => json!({ "status": "unbounded" }),
                },
                "slater" => {
                    let xi = slater_margin(&cmdp).map_err(|e| e.to_string())?;
                    if xi.is_infinite() {
                        json!({ "status": "unconstrained" })
                    } else {
                        json!({ "status": "ok", "margin": xi })
                    }
                }
                "softvi" => {
                    let result = soft_value_iteration(
                        cmdp.mdp(),
                        cmdp.reward(args.reward_index),
                        args.tau,
                        args.tol,
                    )
                    .map_err(|e| e.to_string())?;
                    json!({
                        "values": result.values.as_slice(),
                        "value_at_rho": cmdp.mdp().rho().dot(&result.values),
                        "iterations": result.iterations,
                        "policy": policy_rows(&result.policy),
                    })
                }
                "griddual" => {
                    let b = match args.b_lambda {
                        Some(b) => b,
                        None => {
                            let xi = slater_margin(&cmdp).map_err(|e| e.to_string())?;
                            cmdp_solver::compute_b_lambda(&cmdp, xi).map_err(|e| e.to_string())?
                        }
                    };
                    let grid = grid_dual_min(&cmdp, args.tau, b, args.resolution)
                        .map_err(|e| e.to_string())?;
                    json!({
                        "lambda": grid.lambda.as_slice(),
                        "value": grid.value,
                        "points_evaluated": grid.points_evaluated,
                        "b_lambda": b,
                    })
                }
                other => return Err(format!("unknown oracle mode '{other}'")),
            };
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(())
        }
        Command::Npg(args) => {
            let cmdp = TabularCmdp::load(&args.instance).map_err(|e| e.to_string())?;
            let reward = match (&args.lambda, args.reward_index) {
                (Some(text), None) => {
                    let lambda = parse_lambda(text, cmdp.num_constraints())?;
                    cmdp.combined_reward(&lambda).map_err(|e| e.to_string())?
                }
                (None, Some(idx)) => cmdp.reward(idx).clone(),
                (None, None) => cmdp.reward(0).clone(),
                (Some(_), Some(_)) => {
                    return Err("pass either --lambda or --reward-index, not both".into())
                }
            };
            let result =
                run_npg(cmdp.mdp(), &reward, args.tau, args.delta).map_err(|e| e.to_string())?;
            let report = mdp_core::evaluate(cmdp.mdp(), &result.policy, &reward, args.tau)
                .map_err(|e| e.to_string())?;
            let out = json!({
                "iterations_used": result.iterations_used,
                "policy_gap_bound": result.policy_gap_bound,
                "value_gap_bound": result.value_gap_bound,
                "soft_value_at_rho": report.scalar_value + args.tau * report.entropy,
                "policy": policy_rows(&result.policy),
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(())
        }
        Command::Cutplane(args) => {
            let params = if args.unsafe_params {
                VaidyaParams::relaxed(args.eta, args.zeta, args.t)
            } else {
                VaidyaParams::theory(args.eta, args.zeta, args.t)
            }
            .map_err(|e| e.to_string())?;
            let m = args.m;
            let target = match &args.target {
                Some(text) => parse_lambda(text, m)?,
                None => DVector::from_fn(m, |i, _| if i % 2 == 0 { 0.35 } else { -0.25 }),
            };
            type BoxedOracle =
                Box<dyn FnMut(&DVector<f64>) -> Result<CutResponse, cutting_plane::CutPlaneError>>;
            let poly =
                Polytope::axis_box(&vec![-1.0; m], &vec![1.0; m]).map_err(|e| e.to_string())?;
            let oracle: BoxedOracle = match args.objective.as_str() {
                "quadratic" => {
                    let target = target.clone();
                    Box::new(move |x: &DVector<f64>| {
                        Ok(CutResponse {
                            kind: CutKind::Subgradient,
                            vector: (x - &target) * -2.0,
                            value_estimate: Some((x - &target).norm_squared()),
                        })
                    })
                }
                "linear" => {
                    let g = target.clone();
                    Box::new(move |x: &DVector<f64>| {
                        Ok(CutResponse {
                            kind: CutKind::Subgradient,
                            vector: -&g,
                            value_estimate: Some(g.dot(x)),
                        })
                    })
                }
                other => return Err(format!("unknown objective '{other}'")),
            };
            let mut rows = 0usize;
            let run = vaidya_run(oracle, poly, &params, |record| {
                rows += 1;
                eprintln!(
                    "t={} k={} sigma_min={:.3e} action={:?} value={:?}",
                    record.t,
                    record.num_planes,
                    record.sigma_min,
                    record.action,
                    record.value_estimate
                );
            })
            .map_err(|e| e.to_string())?;
            let best = run.best.ok_or("no point was ever queried")?;
            let out = json!({
                "iterations": rows,
                "queries": run.visited.len(),
                "best_point": best.point.as_slice(),
                "best_value_estimate": best.value_estimate,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            Ok(())
        }
        Command::Bench(args) => {
            let text = std::fs::read_to_string(&args.config).map_err(|e| e.to_string())?;
            let config: BenchConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let report = run_benchmark(&config, &args.out).map_err(|e| e.to_string())?;
            eprintln!(
                "wrote {} summary entries to {}",
                report.entries.len(),
                args.out.join("summary.json").display()
            );
            Ok(())
        }
        Command::Check(args) => {
            let selected: Vec<_> = checks::check_registry()
                .into_iter()
                .filter(|(name, _)| {
                    args.only
                        .as_deref()
                        .is_none_or(|needle| name.contains(needle))
                })
                .collect();
            if selected.is_empty() {
                return Err("no check matches the given name".into());
            }
            let outcomes: Vec<_> = selected.into_iter().map(|(_, run)| run()).collect();
            let mut failures = 0usize;
            for outcome in &outcomes {
                println!(
                    "[{}] {}",
                    if outcome.passed { "PASS" } else { "FAIL" },
                    outcome.name
                );
                print!("{}", outcome.details);
                if !outcome.passed {
                    failures += 1;
                }
            }
            println!(
                "{} of {} checks passed",
                outcomes.len() - failures,
                outcomes.len()
            );
            if failures > 0 {
                return Err(format!("{failures} check(s) failed"));
            }
            Ok(())
        }
    }
}

fn policy_rows(policy: &mdp_core::Policy) -> Vec<Vec<f64>> {
    (0..policy.n_states())
        .map(|s| (0..policy.n_actions()).map(|a| policy.prob(s, a)).collect())
        .collect()
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
