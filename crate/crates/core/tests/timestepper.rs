use std::sync::Arc;

use adaptsc_core::analytic_ode::{timestepping_study, ComplexOde, Stepping};
use adaptsc_core::fem::{FemModel, SpatialMesh, WindModel};
use adaptsc_core::linalg::Euclidean;
use adaptsc_core::timestepper::*;
use proptest::prelude::*;

fn rotate(u: &[f64], alpha: [f64; 2], dt: f64) -> [f64; 2] {
    let r = (alpha[0] * dt).exp();
    let (s, c) = (alpha[1] * dt).sin_cos();
    [r * (c * u[0] - s * u[1]), r * (s * u[0] + c * u[1])]
}

#[test]
fn trapezoidal_rule_is_second_order() {
    let prob = ComplexOde::default();
    for y in [0.5, 1.0] {
        let err = |dt: f64| {
            let r = timestepping_study(&prob, y, Stepping::Fixed { dt }, 2.0).unwrap();
            *r.global_error.last().unwrap()
        };
        for dt in [0.1, 0.05] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((ratio - 4.0).abs() <= 0.8, "y={y} dt={dt}: ratio {ratio}");
        }
    }
}

#[test]
fn accepted_local_errors_respect_the_tolerance() {
    let prob = ComplexOde::default();
    let delta = 1e-6;
    for y in [0.3, 1.0] {
        let alpha = prob.alpha(y);
        let r = timestepping_study(&prob, y, Stepping::Adaptive { delta }, 10.0).unwrap();
        let tr = &r.trajectory;
        // The cold-start step is taken without a local error check.
        for k in 1..tr.times.len() - 1 {
            let dt = tr.times[k + 1] - tr.times[k];
            let exact = rotate(&tr.states[k], alpha, dt);
            let le = (exact[0] - tr.states[k + 1][0]).hypot(exact[1] - tr.states[k + 1][1]);
            assert!(le <= 5.0 * delta, "y={y} step {k}: local error {le}");
        }
    }
}

#[test]
fn damped_solutions_decay() {
    let prob = ComplexOde::default();
    for stepping in [Stepping::Fixed { dt: 0.5 }, Stepping::Adaptive { delta: 1e-5 }] {
        let r = timestepping_study(&prob, 1.0, stepping, 20.0).unwrap();
        let mags: Vec<f64> = r.trajectory.states.iter().map(|u| u[0].hypot(u[1])).collect();
        for w in mags.windows(2) {
            assert!(w[1] < w[0]);
        }
    }
}

#[test]
fn global_error_estimate_tracks_the_true_error() {
    let prob = ComplexOde::default();
    let (delta, delta0) = (1e-6, 1e-4);
    for y in [0.5, 1.0] {
        let sys = prob.system_at(&[y]).unwrap();
        let u0 = [prob.u0, 0.0];
        let fine = integrate_adaptive(&sys, &u0, 0.0, 10.0, delta).unwrap();
        let coarse = integrate_adaptive(&sys, &u0, 0.0, 10.0, delta0).unwrap();
        for t in [1.0, 2.5, 5.0, 10.0] {
            let est = global_error_estimate(&fine, &coarse, 2, &Euclidean, t).unwrap();
            let u = eval_in_time(&fine, t).unwrap();
            let e = prob.exact_solution(t, y);
            let truth = (e[0] - u[0]).hypot(e[1] - u[1]);
            let ratio = est / truth;
            assert!((0.1..=10.0).contains(&ratio), "y={y} t={t}: estimate {est} vs error {truth}");
        }
    }
}

fn heat_model() -> Arc<FemModel> {
    Arc::new(FemModel::new(SpatialMesh::new(3).unwrap(), WindModel::FourQuadrant { sigma: 0.5 }, 0.1, 0.1).unwrap())
}

#[test]
fn steps_grow_once_the_wall_has_heated() {
    let model = heat_model();
    let sys = model.system(&[0.0; 4]).unwrap();
    let u0 = vec![0.0; sys.dim()];
    let tr = integrate_adaptive(&sys, &u0, 0.0, 20.0, 1e-4).unwrap();
    let largest = tr.steps().into_iter().fold(0.0, f64::max);
    assert!(largest > 0.1, "largest step {largest}");
    let first = tr.steps()[1];
    assert!(first < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn window_boundaries_do_not_change_the_steps(cuts in prop::collection::vec(0.0f64..10.0, 0..6), y in -1.0f64..1.0) {
        let prob = ComplexOde::default();
        let sys = prob.system_at(&[y]).unwrap();
        let delta = 1e-5;
        let mut single = IntegratorState::cold(0.0, vec![prob.u0, 0.0]);
        let whole = tr_ab2_advance(&sys, &mut single, 10.0, delta).unwrap();

        let mut ends = cuts.clone();
        ends.sort_by(f64::total_cmp);
        ends.push(10.0);
        let mut st = IntegratorState::cold(0.0, vec![prob.u0, 0.0]);
        let mut joined: Option<Trajectory> = None;
        for end in ends {
            let part = tr_ab2_advance(&sys, &mut st, end, delta).unwrap();
            prop_assert!(part.start_time() <= end.min(st.t));
            prop_assert!(part.end_time() >= end);
            match joined.as_mut() {
                None => joined = Some(part),
                Some(j) => j.append_after(&part),
            }
        }
        let joined = joined.unwrap();
        prop_assert_eq!(&joined.times, &whole.times);
        prop_assert_eq!(&joined.states, &whole.states);
        prop_assert_eq!(st.t, single.t);
    }
}
