//! Probe: interpolation-problem convergence at the full grid.
//! (a) default schedule 60 -> 120 -> 240, long budget, residual trace;
//! (b) direct N=240 from the piecewise-linear default guess, damping 0 / 0.5.

use varint_core::problems::problem;

fn main() {
    let spec = problem("fuel_interpolation").unwrap();

    // (a) default schedule with residual trace
    {
        let mut config = spec.config.clone();
        config.max_iters = 300_000;
        let mut cb = |it: usize, res: f64| {
            if it % 5_000 == 0 {
                println!("sched it {it:>7}  res {res:.6e}");
            }
        };
        let report = spec
            .solve(
                spec.boundary_for(spec.default_n).unwrap(),
                spec.initial_guess(spec.default_n).unwrap(),
                &config,
                Some(&mut cb),
            )
            .unwrap();
        println!(
            "sched: converged={} iters={} final_res={:.6e} n={}",
            report.converged,
            report.iterations,
            report.residual_history.last().unwrap(),
            report.trajectory.n_intervals()
        );
    }

    // (b) direct 240 with two dampings
    for damping in [0.0, 0.5] {
        let mut config = spec.config.clone();
        config.refinement.clear();
        config.damping = damping;
        config.max_iters = 200_000;
        let mut cb = |it: usize, res: f64| {
            if it % 5_000 == 0 {
                println!("direct eps={damping} it {it:>7}  res {res:.6e}");
            }
        };
        let report = spec
            .solve(
                spec.boundary_for(240).unwrap(),
                spec.initial_guess(240).unwrap(),
                &config,
                Some(&mut cb),
            )
            .unwrap();
        println!(
            "direct eps={damping}: converged={} iters={} final_res={:.6e}",
            report.converged,
            report.iterations,
            report.residual_history.last().unwrap()
        );
    }
}
