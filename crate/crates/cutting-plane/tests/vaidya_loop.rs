//! End-to-end cutting-plane runs: convergence on known objectives, the
//! theoretical upper envelope, robustness to adversarial subgradient
//! perturbations, plane-count bookkeeping and determinism.

use cutting_plane::{
    vaidya_run, CutKind, CutPlaneError, CutResponse, IterationAction, Polytope, VaidyaParams,
    VaidyaRun,
};
use nalgebra::DVector;
use proptest::prelude::*;

const LOG_PI: f64 = 1.1447298858494002; // ln(3.14159...)

fn quadratic_oracle(
    target: DVector<f64>,
) -> impl FnMut(&DVector<f64>) -> Result<CutResponse, CutPlaneError> {
    move |x: &DVector<f64>| {
        let diff = x - &target;
        Ok(CutResponse {
            kind: CutKind::Subgradient,
            vector: diff.clone() * -2.0, // negated gradient of ||x - target||^2
            value_estimate: Some(diff.norm_squared()),
        })
    }
}

fn unit_box(m: usize) -> Polytope {
    Polytope::axis_box(&vec![-1.0; m], &vec![1.0; m]).unwrap()
}

/// Upper envelope on the best value gap for a run with a delta-subgradient
/// oracle: `(B m^1.5 R / (zeta R_in)) exp((log pi - zeta t) / (2m)) + delta`.
fn envelope(b: f64, m: usize, r: f64, r_in: f64, zeta: f64, t: usize, delta: f64) -> f64 {
    let md = m as f64;
    b * md.powf(1.5) * r / (zeta * r_in) * ((LOG_PI - zeta * t as f64) / (2.0 * md)).exp() + delta
}

#[test]
fn quadratic_on_box_theory_params_reaches_center() {
    // The minimizer sits at the box center, so even the glacial guaranteed
    // parameter regime must report a best value near zero.
    let params = VaidyaParams::theory(1e-4, 1e-7, 60).unwrap();
    let run = vaidya_run(
        quadratic_oracle(DVector::zeros(2)),
        unit_box(2),
        &params,
        |_| {},
    )
    .unwrap();
    let best = run.best.expect("oracle was queried");
    assert!(best.value_estimate.unwrap() < 1e-2);
}

#[test]
fn quadratic_off_center_converges_with_relaxed_params() {
    // Off-center minimizer requires genuine cutting-plane progress.
    let target = DVector::from_vec(vec![0.55, -0.4]);
    let params = VaidyaParams::relaxed(1000.0, 0.1, 120).unwrap();
    let run = vaidya_run(
        quadratic_oracle(target.clone()),
        unit_box(2),
        &params,
        |_| {},
    )
    .unwrap();
    let best = run.best.unwrap();
    assert!(
        best.value_estimate.unwrap() < 1e-3,
        "best value {}",
        best.value_estimate.unwrap()
    );
    assert!((best.point - target).norm() < 0.05);
}

#[test]
fn theoretical_envelope_holds_along_runs() {
    for (m, t_max) in [(2usize, 200usize), (3, 250), (5, 350)] {
        let target = DVector::from_fn(m, |i, _| if i % 2 == 0 { 0.3 } else { -0.25 });
        let params = VaidyaParams::relaxed(1000.0, 0.1, t_max).unwrap();
        let mut best_so_far = f64::INFINITY;
        let mut envelope_ok = true;
        let b = {
            // Range of f over the box: max at the farthest corner.
            let corner = DVector::from_fn(m, |i, _| if target[i] >= 0.0 { -1.0 } else { 1.0 });
            (corner - &target).norm_squared()
        };
        let r = (m as f64).sqrt();
        let r_in = 1.0;
        let run = vaidya_run(
            quadratic_oracle(target.clone()),
            unit_box(m),
            &params,
            |record| {
                if let Some(v) = record.value_estimate {
                    best_so_far = best_so_far.min(v);
                }
                if best_so_far.is_finite()
                    && best_so_far > envelope(b, m, r, r_in, params.zeta, record.t, 0.0) + 1e-9
                {
                    envelope_ok = false;
                }
            },
        )
        .unwrap();
        assert!(envelope_ok, "envelope violated for m={m}");
        assert!(
            run.best.unwrap().value_estimate.unwrap()
                <= envelope(b, m, r, r_in, params.zeta, t_max, 0.0)
        );
    }
}

#[test]
fn linear_objective_produces_parallel_cuts_and_decreasing_best() {
    let g = DVector::from_vec(vec![1.0, 2.0]);
    let cut = -&g; // negated gradient, constant for a linear objective
    let mut oracle = |x: &DVector<f64>| {
        Ok(CutResponse {
            kind: CutKind::Subgradient,
            vector: cut.clone(),
            value_estimate: Some(g.dot(x)),
        })
    };
    let params = VaidyaParams::relaxed(1000.0, 0.1, 60).unwrap();
    let run = vaidya_run(&mut oracle, unit_box(2), &params, |_| {}).unwrap();

    let values: Vec<f64> = run
        .visited
        .iter()
        .map(|v| v.value_estimate.unwrap())
        .collect();
    assert!(values.len() > 5);
    let mut best = f64::INFINITY;
    let mut strict_improvements = 0;
    for &v in &values {
        if v < best {
            strict_improvements += 1;
            best = v;
        }
    }
    // All subgradient cuts share a direction; the iterates slide toward the
    // minimizing corner so the best estimate keeps strictly improving.
    assert!(strict_improvements as f64 >= 0.9 * values.len() as f64);
    assert!(best < g.dot(&DVector::from_vec(vec![-1.0, -1.0])) + 0.2);

    // Every plane beyond the initial box is parallel to the constant cut.
    let normals = run.final_polytope.normals();
    for i in 4..run.final_polytope.num_planes() {
        let row = normals.row(i).transpose();
        let cos = row.dot(&cut) / (row.norm() * cut.norm());
        assert!((cos - 1.0).abs() < 1e-12, "plane {i} not parallel");
    }
}

#[test]
fn adversarial_delta_perturbation_does_not_accumulate() {
    let target = DVector::from_vec(vec![0.35, -0.2]);
    let delta = 1e-3;
    let params = VaidyaParams::relaxed(1000.0, 0.1, 150).unwrap();

    let exact = vaidya_run(
        quadratic_oracle(target.clone()),
        unit_box(2),
        &params,
        |_| {},
    )
    .unwrap();

    // Tilt the subgradient by an alternating-sign vector small enough that
    // the answer remains a delta-subgradient over the box (diameter 2*sqrt2),
    // and bias the value estimates by up to delta as well.
    let mut flip = 1.0;
    let diam = 2.0 * 2.0f64.sqrt();
    let mut perturbed_oracle = |x: &DVector<f64>| {
        flip = -flip;
        let diff = x - &target;
        let tilt = DVector::from_vec(vec![flip, -flip]) * (delta / diam / 2.0f64.sqrt());
        Ok(CutResponse {
            kind: CutKind::Subgradient,
            vector: diff.clone() * -2.0 + tilt,
            value_estimate: Some(diff.norm_squared() + flip * delta * 0.5),
        })
    };
    let perturbed = vaidya_run(&mut perturbed_oracle, unit_box(2), &params, |_| {}).unwrap();

    let true_value = |run: &VaidyaRun| {
        run.visited
            .iter()
            .filter(|v| v.value_estimate.is_some())
            .map(|v| (&v.point - &target).norm_squared())
            .fold(f64::INFINITY, f64::min)
    };
    let exact_err = true_value(&exact);
    let perturbed_err = true_value(&perturbed);
    assert!(
        perturbed_err <= 1.1 * exact_err + delta + 1e-12,
        "exact {exact_err:.3e}, perturbed {perturbed_err:.3e}"
    );
}

#[test]
fn plane_count_stays_in_bounds_and_centers_stay_interior() {
    let target = DVector::from_vec(vec![0.1, 0.2, -0.3]);
    let params = VaidyaParams::relaxed(10.0, 0.05, 120).unwrap();
    let m = 3;
    let k0 = 2 * m; // the box has 2m planes
    let mut seen_drop = false;
    let mut ok = true;
    let poly = unit_box(m);
    let run = vaidya_run(quadratic_oracle(target), poly, &params, |record| {
        if record.num_planes < m + 1 || record.num_planes > k0 + record.t {
            ok = false;
        }
        if record.sigma_min <= 0.0 {
            ok = false;
        }
        if matches!(record.action, IterationAction::DroppedPlane { .. }) {
            seen_drop = true;
        }
    })
    .unwrap();
    assert!(ok);
    // With zeta = 0.05 drops actually happen; the run should have exercised
    // both branches.
    assert!(seen_drop, "no plane was ever dropped");
    assert!(run.final_polytope.num_planes() > m);
}

#[test]
fn identical_runs_are_bit_identical() {
    let target = DVector::from_vec(vec![0.4, -0.15]);
    let params = VaidyaParams::relaxed(100.0, 0.01, 80).unwrap();
    let mut points_a: Vec<DVector<f64>> = Vec::new();
    let mut points_b: Vec<DVector<f64>> = Vec::new();
    vaidya_run(
        quadratic_oracle(target.clone()),
        unit_box(2),
        &params,
        |r| {
            points_a.push(r.point.clone());
        },
    )
    .unwrap();
    vaidya_run(quadratic_oracle(target), unit_box(2), &params, |r| {
        points_b.push(r.point.clone());
    })
    .unwrap();
    assert_eq!(points_a.len(), points_b.len());
    for (a, b) in points_a.iter().zip(points_b.iter()) {
        assert_eq!(a.as_slice(), b.as_slice(), "iterate sequences diverged");
    }
}

#[test]
fn oracle_errors_propagate() {
    #[derive(Debug)]
    struct Boom;
    impl std::fmt::Display for Boom {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            write!(f, "boom")
        }
    }
    impl std::error::Error for Boom {}

    let params = VaidyaParams::theory(1e-4, 1e-7, 5).unwrap();
    let result = vaidya_run(
        |_: &DVector<f64>| Err(CutPlaneError::oracle(Boom)),
        unit_box(2),
        &params,
        |_| {},
    );
    assert!(matches!(result, Err(CutPlaneError::Oracle(_))));
}

#[test]
fn separation_cuts_are_excluded_from_best_selection() {
    // Oracle that alternates: separation cut (no value) then subgradient.
    let mut toggle = false;
    let mut oracle = |x: &DVector<f64>| {
        toggle = !toggle;
        if toggle {
            Ok(CutResponse {
                kind: CutKind::Separation,
                vector: DVector::from_vec(vec![1.0, 0.0]),
                value_estimate: None,
            })
        } else {
            Ok(CutResponse {
                kind: CutKind::Subgradient,
                vector: x * -2.0,
                value_estimate: Some(x.norm_squared()),
            })
        }
    };
    let params = VaidyaParams::relaxed(1.0, 1e-4, 20).unwrap();
    let run = vaidya_run(&mut oracle, unit_box(2), &params, |_| {}).unwrap();
    let best = run.best.unwrap();
    assert!(best.value_estimate.is_some());
    let n_no_value = run
        .visited
        .iter()
        .filter(|v| v.value_estimate.is_none())
        .count();
    assert!(n_no_value > 0, "separation branch never exercised");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Leverage scores sum to the dimension at any strictly interior point
    /// of any bounded polytope with spanning normals.
    #[test]
    fn leverage_scores_sum_to_dimension(
        m in 1usize..5,
        seed in 0u64..1000,
    ) {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let lo: Vec<f64> = (0..m).map(|_| -1.0 - rng.random::<f64>()).collect();
        let hi: Vec<f64> = (0..m).map(|_| 0.5 + rng.random::<f64>()).collect();
        let mut poly = Polytope::axis_box(&lo, &hi).unwrap();
        let interior = DVector::from_fn(m, |i, _| 0.5 * (lo[i] + hi[i]));
        for _ in 0..3 {
            let normal = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            if normal.norm() < 1e-3 { continue; }
            let offset = normal.dot(&interior) - (0.3 + rng.random::<f64>());
            poly.push_plane(&normal, offset);
        }
        // A random strictly interior probe near the known interior point.
        let probe = &interior + DVector::from_fn(m, |_, _| (rng.random::<f64>() - 0.5) * 0.2);
        let probe = if poly.is_interior(&probe) { probe } else { interior };
        let sigmas = cutting_plane::leverage_scores(&probe, &poly).unwrap();
        prop_assert!((sigmas.sum() - m as f64).abs() < 1e-9);
        for &s in sigmas.iter() {
            prop_assert!(s > 0.0 && s <= 1.0 + 1e-12);
        }
    }
}
