//! Subcommand implementations. Each returns a process exit code:
//! 0 = success/converged, 2 = completed without convergence, 1 = error.

use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use varint_core::diagnostics::check_theorem_conditions;
use varint_core::error::Result;
use varint_core::matrices;
use varint_core::problems::{self, ProblemSpec, SmoothedDriftControlLagrangian};
use varint_core::trajectory::Trajectory;

use crate::config::RunConfig;
use crate::io;

fn fail(err: impl std::fmt::Display) -> i32 {
    eprintln!("error: {err}");
    1
}

/// Applies config overrides onto the cataloged problem definition.
fn apply_overrides(spec: &mut ProblemSpec, cfg: &RunConfig) -> Result<()> {
    use varint_core::error::Error;

    if let Some(t) = cfg.total_time {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "total_time must be finite and positive, got {t}"
            )));
        }
        spec.span.1 = spec.span.0 + t;
    }
    if let Some(s) = &cfg.scheme {
        let scheme = s.to_scheme();
        scheme.validate()?;
        if scheme.gamma() != spec.gamma {
            return Err(Error::InvalidArgument(format!(
                "scheme handles order {} but problem '{}' has order {}",
                scheme.gamma(),
                spec.id,
                spec.gamma
            )));
        }
        spec.scheme = scheme;
    }
    if let Some(b) = &cfg.boundary {
        spec.left = b.left.clone();
        spec.right = b.right.clone();
        spec.timed_knots = b
            .knots
            .iter()
            .map(|k| (k.time, k.position.clone()))
            .collect();
    }
    if let Some(w) = &cfg.guess_waypoints {
        spec.guess_waypoints = w.clone();
    }
    if let Some(solver) = &cfg.solver {
        solver.validate()?;
        spec.config = solver.clone();
    }
    if let Some(c) = cfg.weight_c {
        if spec.id != "fuel_interpolation" {
            return Err(Error::InvalidArgument(format!(
                "weight_c only applies to fuel_interpolation, not '{}'",
                spec.id
            )));
        }
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight_c must be finite and non-negative, got {c}"
            )));
        }
        spec.lagrangian = Arc::new(SmoothedDriftControlLagrangian::new(
            Arc::new(problems::FuelWind),
            c,
        ));
    }
    if let Some(constants) = &cfg.constants {
        if spec.id != "four_body" {
            return Err(Error::InvalidArgument(format!(
                "constants only apply to four_body, not '{}'",
                spec.id
            )));
        }
        spec.lagrangian = Arc::new(problems::ControlledOrbitLagrangian::new(constants.clone()));
    }
    if let Some(n) = cfg.n_intervals {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_intervals must be at least 2, got {n}"
            )));
        }
    }
    Ok(())
}

fn build_pool(threads: usize) -> std::result::Result<rayon::ThreadPool, i32> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| fail(format!("cannot build thread pool: {e}")))
}

pub fn cmd_run(config_path: &Path) -> i32 {
    let cfg = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut spec = match problems::problem(&cfg.problem) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Err(e) = apply_overrides(&mut spec, &cfg) {
        return fail(e);
    }
    let n = cfg.n_intervals.unwrap_or(spec.default_n);

    let prepared = (|| -> Result<(varint_core::trajectory::BoundaryData, Trajectory)> {
        let boundary = spec.boundary_for(n)?;
        let mut guess = spec.initial_guess(n)?;
        if cfg.guess_noise > 0.0 {
            guess = guess.perturb_interior(cfg.guess_noise, cfg.seed);
        }
        Ok((boundary, guess))
    })();
    let (boundary, guess) = match prepared {
        Ok(p) => p,
        Err(e) => return fail(e),
    };

    let pool = match build_pool(cfg.resolve_threads()) {
        Ok(p) => p,
        Err(code) => return code,
    };
    eprintln!(
        "running '{}' with {} intervals on {} thread(s)",
        spec.id,
        n,
        pool.current_num_threads()
    );
    let mut progress = |iter: usize, residual: f64| {
        if iter % 5_000 == 0 {
            eprintln!("  iter {iter:>8}  residual {residual:.3e}");
        }
    };
    let solve_cfg = spec.config.clone();
    let report = pool.install(|| spec.solve(boundary, guess, &solve_cfg, Some(&mut progress)));
    let report = match report {
        Ok(r) => r,
        Err(e) => return fail(e),
    };

    let out_dir = Path::new(&cfg.output_dir);
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        return fail(format!("cannot create {}: {e}", out_dir.display()));
    }
    let traj = &report.trajectory;
    if let Err(e) = io::write_trajectory_csv(&out_dir.join("trajectory.csv"), traj) {
        return fail(e);
    }
    if let Err(e) = io::write_residuals_csv(&out_dir.join("residuals.csv"), &report.residual_history)
    {
        return fail(e);
    }

    // Final-state convergence diagnostics (best effort: an aborted run may
    // hold a state where the Hessian is not evaluable).
    let convergence = spec
        .build_model(&traj.times)
        .and_then(|model| pool.install(|| check_theorem_conditions(model.as_ref(), traj)))
        .ok();
    let travel_time = match (&spec.speed, spec.gamma) {
        (Some(speed), 1) => {
            let h = (spec.span.1 - spec.span.0) / traj.n_intervals() as f64;
            problems::travel_time(traj, speed.as_ref(), h).ok()
        }
        _ => None,
    };

    let final_residual = report.residual_history.last().copied().unwrap_or(f64::NAN);
    let run_report = io::RunReport {
        problem: cfg.problem.clone(),
        gamma: spec.gamma,
        dim: spec.dim,
        n_intervals: traj.n_intervals(),
        converged: report.converged,
        iterations: report.iterations,
        final_residual,
        wall_time_seconds: report.wall_time,
        aborted: report.aborted.clone(),
        travel_time,
        convergence,
        diagnostics: report.diagnostics,
    };
    if let Err(e) = io::write_json(&out_dir.join("report.json"), &run_report) {
        return fail(e);
    }

    if let Some(reason) = &report.aborted {
        return fail(format!("run aborted: {reason}"));
    }
    if report.converged {
        eprintln!(
            "converged in {} iterations (residual {:.3e}, {:.2}s)",
            report.iterations, final_residual, report.wall_time
        );
        0
    } else {
        eprintln!(
            "NOT converged after {} iterations (residual {:.3e})",
            report.iterations, final_residual
        );
        2
    }
}

pub fn cmd_diag(config_path: &Path) -> i32 {
    let cfg = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut spec = match problems::problem(&cfg.problem) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Err(e) = apply_overrides(&mut spec, &cfg) {
        return fail(e);
    }
    let out_dir = Path::new(&cfg.output_dir);
    let traj = match io::read_trajectory_csv(&out_dir.join("trajectory.csv"), spec.gamma, spec.dim)
    {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let pool = match build_pool(cfg.resolve_threads()) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let report = (|| -> Result<varint_core::diagnostics::ConvergenceReport> {
        let model = spec.build_model(&traj.times)?;
        pool.install(|| check_theorem_conditions(model.as_ref(), &traj))
    })();
    let report = match report {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if let Err(e) = io::write_json(&out_dir.join("convergence_report.json"), &report) {
        return fail(e);
    }
    println!("{:?}", report.guarantee);
    0
}

fn dense_to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn cmd_matrices(gamma: usize, h: f64) -> i32 {
    let payload = (|| -> Result<serde_json::Value> {
        let set = matrices::build_matrices(gamma, h)?;
        let identities = matrices::verify_identities(gamma, h)?;
        let (l, u) = matrices::lu_factors_c(gamma, h)?;
        Ok(json!({
            "gamma": gamma,
            "h": h,
            "A": dense_to_rows(&set.a),
            "B": dense_to_rows(&set.b),
            "C": dense_to_rows(&set.c),
            "D": dense_to_rows(&set.d),
            "E": dense_to_rows(&set.e),
            "L": dense_to_rows(&l),
            "U": dense_to_rows(&u),
            "det_C": matrices::det_c(gamma, h)?,
            "det_B": matrices::det_b(gamma, h)?,
            "identity_deviations": identities,
        }))
    })();
    match payload {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap());
            0
        }
        Err(e) => fail(e),
    }
}
