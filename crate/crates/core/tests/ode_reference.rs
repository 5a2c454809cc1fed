//! Accuracy checks for the reference integrator and quadrature used by the
//! order-estimation harness, against closed-form solutions.

use nalgebra::DVector;
use varint_core::ode::{gauss_legendre_10, integrate, quadrature_along};

#[test]
fn gauss_legendre_10_is_exact_for_low_degree_polynomials() {
    // A 10-node rule integrates polynomials of degree <= 19 exactly.
    for deg in 0..=19usize {
        let g = |x: f64| x.powi(deg as i32);
        let (a, b) = (-0.7f64, 1.9f64);
        let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg as f64 + 1.0);
        let got = gauss_legendre_10(&g, a, b);
        let scale = 1.0 + exact.abs();
        assert!(
            (got - exact).abs() / scale < 1e-13,
            "degree {deg}: got {got}, expected {exact}"
        );
    }
}

#[test]
fn gauss_legendre_10_matches_transcendental_integrals() {
    // integral of sin over [0, pi] = 2
    let got = gauss_legendre_10(&|x: f64| x.sin(), 0.0, std::f64::consts::PI);
    assert!((got - 2.0).abs() < 1e-12, "got {got}");
    // integral of exp over [0, 1] = e - 1
    let got = gauss_legendre_10(&|x: f64| x.exp(), 0.0, 1.0);
    assert!((got - (std::f64::consts::E - 1.0)).abs() < 1e-14, "got {got}");
    // Orientation: reversing the limits flips the sign.
    let fwd = gauss_legendre_10(&|x: f64| x * x, 0.0, 2.0);
    let bwd = gauss_legendre_10(&|x: f64| x * x, 2.0, 0.0);
    assert!((fwd + bwd).abs() < 1e-14);
    assert!((fwd - 8.0 / 3.0).abs() < 1e-13);
}

#[test]
fn integrator_matches_exponential_growth() {
    let rhs = |_t: f64, y: &DVector<f64>| y.clone();
    let y0 = DVector::from_vec(vec![1.0]);
    let sol = integrate(&rhs, 0.0, 1.0, &y0, 1e-12, 1e-12).unwrap();
    let got = sol.end_state()[0];
    assert!(
        (got - std::f64::consts::E).abs() < 1e-10,
        "got {got}, expected e"
    );
}

#[test]
fn integrator_matches_harmonic_oscillator_over_full_period() {
    // y'' = -y started at (1, 0): y = cos t, y' = -sin t.
    let rhs = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
    let y0 = DVector::from_vec(vec![1.0, 0.0]);
    let t_end = 2.0 * std::f64::consts::PI;
    let sol = integrate(&rhs, 0.0, t_end, &y0, 1e-12, 1e-12).unwrap();
    let end = sol.end_state();
    assert!((end[0] - 1.0).abs() < 1e-9, "q(2pi) = {}", end[0]);
    assert!(end[1].abs() < 1e-9, "v(2pi) = {}", end[1]);

    // Dense output stays close to the closed form between accepted steps.
    let mut worst = 0.0f64;
    for i in 0..=200 {
        let t = t_end * i as f64 / 200.0;
        let y = sol.eval(t);
        worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
    }
    assert!(worst < 1e-8, "dense output deviation {worst:.3e}");
}

#[test]
fn integrator_handles_time_dependent_forcing() {
    // y' = 2t => y = t^2 + y0.
    let rhs = |t: f64, _y: &DVector<f64>| DVector::from_vec(vec![2.0 * t]);
    let y0 = DVector::from_vec(vec![0.5]);
    let sol = integrate(&rhs, 0.0, 3.0, &y0, 1e-12, 1e-12).unwrap();
    assert!((sol.end_state()[0] - 9.5).abs() < 1e-10);
    let mid = sol.eval(1.5);
    assert!((mid[0] - (1.5f64 * 1.5 + 0.5)).abs() < 1e-9);
}

#[test]
fn quadrature_along_solution_matches_closed_form_action() {
    // Harmonic oscillator, L = v^2/2 - q^2/2 along q = cos t:
    // integral_0^T L dt = -sin(2T)/4.
    let rhs = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
    let y0 = DVector::from_vec(vec![1.0, 0.0]);
    let t_end = 1.7;
    let sol = integrate(&rhs, 0.0, t_end, &y0, 1e-12, 1e-12).unwrap();
    let action = quadrature_along(&sol, &|_t, y| 0.5 * y[1] * y[1] - 0.5 * y[0] * y[0]);
    let exact = -(2.0 * t_end).sin() / 4.0;
    assert!(
        (action - exact).abs() < 1e-9,
        "action {action}, expected {exact}"
    );
}

#[test]
fn integrator_tightens_steps_with_tolerance() {
    let rhs = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
    let y0 = DVector::from_vec(vec![1.0, 0.0]);
    let loose = integrate(&rhs, 0.0, 10.0, &y0, 1e-6, 1e-6).unwrap();
    let tight = integrate(&rhs, 0.0, 10.0, &y0, 1e-12, 1e-12).unwrap();
    assert!(
        tight.n_steps > loose.n_steps,
        "expected more steps at tighter tolerance ({} vs {})",
        tight.n_steps,
        loose.n_steps
    );
}

#[test]
fn integrator_rejects_degenerate_span() {
    let rhs = |_t: f64, y: &DVector<f64>| y.clone();
    let y0 = DVector::from_vec(vec![1.0]);
    assert!(integrate(&rhs, 1.0, 1.0, &y0, 1e-9, 1e-9).is_err());
    assert!(integrate(&rhs, 2.0, 1.0, &y0, 1e-9, 1e-9).is_err());
}

#[test]
fn dense_output_clamps_outside_span() {
    let rhs = |_t: f64, y: &DVector<f64>| y.clone();
    let y0 = DVector::from_vec(vec![2.0]);
    let sol = integrate(&rhs, 0.0, 1.0, &y0, 1e-10, 1e-10).unwrap();
    let past = sol.eval(5.0);
    assert_eq!(past[0], sol.end_state()[0]);
}
