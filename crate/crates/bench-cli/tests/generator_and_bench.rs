//! Generator determinism and feasibility, and the benchmark batch runner.

use bench_cli::bench::{run_benchmark, BenchConfig, SolverSettings};
use bench_cli::generate::{generate_instance, InstanceSpec};
use mdp_core::PolicyEvaluator;
use oracles::{slater_margin, value_iteration};

fn spec(seed: u64) -> InstanceSpec {
    InstanceSpec {
        seed,
        n_states: 10,
        n_actions: 3,
        m: 2,
        gamma: 0.9,
        reward_scale: 1.0,
        constraint_tightness: 0.5,
        kernel_sparsity: 10.0,
    }
}

#[test]
fn same_seed_gives_bit_identical_instances() {
    let a = generate_instance(&spec(42)).unwrap();
    let b = generate_instance(&spec(42)).unwrap();
    assert_eq!(a.mdp().kernel(), b.mdp().kernel());
    assert_eq!(a.mdp().rho(), b.mdp().rho());
    assert_eq!(a.thresholds(), b.thresholds());
    for i in 0..=2 {
        assert_eq!(a.reward(i), b.reward(i));
    }
    // And through the JSON round trip.
    assert_eq!(a.to_json_string(), b.to_json_string());
}

#[test]
fn different_seeds_differ() {
    let a = generate_instance(&spec(1)).unwrap();
    let b = generate_instance(&spec(2)).unwrap();
    assert_ne!(a.mdp().kernel(), b.mdp().kernel());
}

#[test]
fn zero_tightness_gives_trivially_feasible_thresholds() {
    let mut s = spec(7);
    s.constraint_tightness = 0.0;
    let cmdp = generate_instance(&s).unwrap();
    for i in 0..cmdp.num_constraints() {
        assert_eq!(cmdp.thresholds()[i], 0.0);
    }
    // Positive rewards make any policy strictly feasible.
    assert!(slater_margin(&cmdp).unwrap() > 0.0);
}

#[test]
fn generated_instances_have_comfortable_slater_margins() {
    // 100 seeds at the acceptance shape: every margin clears the generator's
    // floor.
    let floor = 0.01 * 1.0 / (1.0 - 0.9);
    for seed in 1..=100u64 {
        let cmdp = generate_instance(&spec(seed)).unwrap();
        let xi = slater_margin(&cmdp).unwrap();
        assert!(xi > floor, "seed {seed}: margin {xi}");
    }
}

#[test]
fn thresholds_sit_at_the_configured_fraction() {
    let s = spec(11);
    let cmdp = generate_instance(&s).unwrap();
    let (_, pi0) = value_iteration(cmdp.mdp(), cmdp.reward(0), 1e-10).unwrap();
    let values = PolicyEvaluator::new(cmdp.mdp(), &pi0)
        .unwrap()
        .cmdp_values(&cmdp)
        .unwrap();
    for i in 0..cmdp.num_constraints() {
        assert!(
            (cmdp.thresholds()[i] - 0.5 * values.constraints[i]).abs() < 1e-9,
            "threshold {i}"
        );
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut s = spec(1);
    s.constraint_tightness = 1.0;
    assert!(generate_instance(&s).is_err());
    let mut s = spec(1);
    s.gamma = 1.0;
    assert!(generate_instance(&s).is_err());
    let mut s = spec(1);
    s.m = 0;
    assert!(generate_instance(&s).is_err());
}

fn practical_settings(t_outer: usize) -> SolverSettings {
    SolverSettings {
        tau: Some(1e-3),
        delta: 1e-6,
        mu: 0.0,
        eta: 1000.0,
        zeta: 0.1,
        t_outer,
        unsafe_params: true,
        b_lambda: None,
        xi: None,
    }
}

#[test]
fn batch_of_ten_seeds_reaches_small_gaps() {
    let config = BenchConfig {
        instances: (1..=10u64).map(spec).collect(),
        solver: practical_settings(150),
        oracle_check: true,
        grid_resolution: 1e-3,
    };
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&config, dir.path()).unwrap();
    assert_eq!(report.entries.len(), 10);
    for entry in &report.entries {
        assert_eq!(entry.status, "ok", "seed {}: {}", entry.seed, entry.status);
        let tolerance = 0.05 * 1.0 / (1.0 - 0.9); // reward_scale 1, gamma 0.9
        assert!(entry.final_gap.unwrap() <= tolerance);
        assert!(entry.final_violation.unwrap() <= tolerance);
        // Linear decay of the best dual gap: generated m = 2 instances start
        // away from the optimum, so the fitted slope must clear the rate
        // floor -zeta/(4m) whenever a fit exists.
        if let Some(slope) = entry.dual_gap_slope {
            assert!(slope <= -0.1 / 8.0, "seed {}: slope {slope}", entry.seed);
        }
        // Trace file exists and is non-trivial.
        let trace =
            std::fs::read_to_string(dir.path().join(format!("trace_seed{}.csv", entry.seed)))
                .unwrap();
        assert!(trace.lines().count() > 10);
    }
    // At least some entries carry a slope (m = 2 is grid-referenced).
    assert!(report.entries.iter().any(|e| e.dual_gap_slope.is_some()));
}

#[test]
fn empty_instance_list_produces_empty_report() {
    let config = BenchConfig {
        instances: vec![],
        solver: practical_settings(10),
        oracle_check: false,
        grid_resolution: 1e-3,
    };
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&config, dir.path()).unwrap();
    assert!(report.entries.is_empty());
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("\"entries\": []"));
}

#[test]
fn per_instance_failures_do_not_abort_the_batch() {
    let mut bad = spec(1);
    bad.constraint_tightness = 0.99; // may fail the Slater floor; if it
                                     // generates, solving still proceeds
    let config = BenchConfig {
        instances: vec![bad, spec(2)],
        solver: SolverSettings {
            // Invalid without the unsafe flag: eta above the analyzed cap.
            tau: Some(1e-3),
            delta: 1e-6,
            mu: 0.0,
            eta: 1000.0,
            zeta: 0.1,
            t_outer: 10,
            unsafe_params: false,
            b_lambda: None,
            xi: None,
        },
        oracle_check: false,
        grid_resolution: 1e-3,
    };
    let dir = tempfile::tempdir().unwrap();
    let report = run_benchmark(&config, dir.path()).unwrap();
    assert_eq!(report.entries.len(), 2);
    for entry in &report.entries {
        assert!(entry.status.starts_with("error:"), "{}", entry.status);
    }
}
