use std::f64::consts::PI;

use adaptsc_core::analytic_ode::*;

/// Quadrature value of the degree-16 interpolation error at `t = 1`.
const K4_T1_ERROR: f64 = 2.0e-16;

#[test]
fn exact_solution_identities() {
    let p = ComplexOde::default();
    assert_eq!(p.exact_solution(0.0, 0.7), [1.0, 0.0]);
    assert!((p.exact_solution(10.0, 0.0)[0] - (-1.0f64).exp()).abs() < 1e-15);
    for y in [-1.0, -0.3, 0.5, 1.0] {
        let u = p.exact_solution(3.0, y);
        assert!((u[0].hypot(u[1]) - (-0.3f64).exp()).abs() < 1e-15);
    }
    assert_eq!(p.exact_mean(0.0), 1.0);
    assert_eq!(p.exact_stddev(0.0), 0.0);
    assert!(p.exact_mean(PI).abs() < 1e-16);
    assert!((p.exact_stddev(PI) - (-0.1 * PI).exp()).abs() < 1e-15);
    assert!(p.exact_stddev(2.0) > p.exact_stddev(0.1) && p.exact_stddev(2.0) > p.exact_stddev(50.0));
}

#[test]
fn interpolation_error_vanishes_at_time_zero() {
    let p = ComplexOde::default();
    for k in 1..=4 {
        assert!(interp_error_study(&p, k, &[0.0]).unwrap()[0] <= 1e-14);
    }
}

#[test]
fn interpolation_error_decreases_with_level() {
    let p = ComplexOde::default();
    let times = log_times(0.1, 20.0, 50);
    let curves: Vec<Vec<f64>> = (1..=4).map(|k| interp_error_study(&p, k, &times).unwrap()).collect();
    for k in 0..3 {
        for (i, t) in times.iter().enumerate() {
            // Once the coarser interpolant stops resolving e^{iyt} the two
            // errors are both O(1) and can cross.
            let resolved_up_to = [5.0, 10.0, f64::INFINITY][k];
            if *t > resolved_up_to {
                continue;
            }
            assert!(curves[k + 1][i] <= curves[k][i].max(1e-14), "k={} t={t}", k + 1);
        }
    }
}

#[test]
fn finer_levels_can_lose_before_resolving() {
    let p = ComplexOde::default();
    let e = |k, t| interp_error_study(&p, k, &[t]).unwrap()[0];
    assert!(e(2, 10.0) > e(1, 10.0));
    assert!(e(3, 13.0) > e(2, 13.0));
}

#[test]
fn degree_sixteen_error_at_unit_time() {
    let e = interp_error_study(&ComplexOde::default(), 4, &[1.0]).unwrap()[0];
    assert!(e < 1e-10);
    assert!((e - K4_T1_ERROR).abs() < 1e-16, "{e}");
}

#[test]
fn interpolation_error_grows_in_time() {
    let p = ComplexOde::default();
    for k in 1..=4 {
        let e = interp_error_study(&p, k, &[0.5, 5.0]).unwrap();
        assert!(e[1] >= 10.0 * e[0], "k={k}: {e:?}");
    }
}

#[test]
fn interpolant_statistics_match_closed_forms_at_small_times() {
    let p = ComplexOde::default();
    for t in log_times(0.1, 3.0, 10) {
        let (m, s) = interp_statistics(&p, 4, t).unwrap();
        assert!((m - p.exact_mean(t)).abs() < 1e-8, "t={t}");
        assert!((s - p.exact_stddev(t)).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn step_counts() {
    let p = ComplexOde::default();
    let tr = timestepping_study(&p, 1.0, Stepping::Fixed { dt: 0.1 }, 1e3).unwrap();
    assert_eq!(tr.step_count(), 10_000);
    let n0 = timestepping_study(&p, 0.0, Stepping::Adaptive { delta: 1e-7 }, 1e3).unwrap().step_count();
    let n1 = timestepping_study(&p, 1.0, Stepping::Adaptive { delta: 1e-7 }, 1e3).unwrap().step_count();
    assert!((150..=600).contains(&n0), "{n0}");
    assert!((1500..=6000).contains(&n1), "{n1}");
}

#[test]
fn bad_levels_rejected() {
    let p = ComplexOde::default();
    assert!(interp_error_study(&p, 0, &[1.0]).is_err());
    assert!(interp_statistics(&p, 10, 1.0).is_err());
}
