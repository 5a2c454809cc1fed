use std::sync::Arc;
use varint_core::diagnostics::{assemble_hessian, spectral_radius_jacobi};
use varint_core::problems::fuel_interpolation_problem;
use varint_core::solver::{solve, SolveProblem, SolverConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let damping: f64 = args
        .iter()
        .position(|a| a == "--damping")
        .and_then(|i| args.get(i + 1))
        .map(|s| s.parse().unwrap())
        .unwrap_or(0.0);
    let knotless = args.iter().any(|a| a == "--knotless");
    let spec = fuel_interpolation_problem();
    for &(n, iters) in &[(24usize, 100_000usize), (48, 100_000), (96, 150_000)] {
        let mut boundary = spec.boundary_for(n).unwrap();
        if knotless {
            boundary.knots.clear();
        }
        let guess = spec.initial_guess(n).unwrap();
        let factory = |times: &[f64]| spec.build_model(times);
        let problem = SolveProblem {
            model_factory: &factory,
            boundary: boundary.clone(),
            time_recurrence: None,
            sundman_monitor: None,
        };
        let config = SolverConfig {
            max_iters: iters,
            tol_residual: 1e-10,
            refinement: vec![],
            damping,
            ..spec.config.clone()
        };
        let report = solve(&problem, guess, &config, None).unwrap();
        let hist = &report.residual_history;
        let m = hist.len();
        let tail = (m / 4).max(2).min(m - 1);
        let rate = (hist[m - 1 - tail] / hist[m - 1]).ln() / tail as f64;
        let model = spec.build_model(&report.trajectory.times).unwrap();
        let hess = assemble_hessian(model.as_ref(), &report.trajectory).unwrap();
        let rho = spectral_radius_jacobi(&hess).unwrap();
        let last: Vec<String> = hist[m.saturating_sub(6)..]
            .iter()
            .map(|r| format!("{r:.6e}"))
            .collect();
        println!(
            "n={n:3} damping={damping} knots={} converged={} iters={} tail_rate={:.3e} 1-rho={:.3e}\n   last: {}",
            !knotless,
            report.converged,
            report.iterations,
            rate,
            1.0 - rho,
            last.join(" ")
        );
    }
}
