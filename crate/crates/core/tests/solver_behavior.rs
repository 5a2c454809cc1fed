//! Relaxation-solver behavior on problems with known exact answers: damping
//! arithmetic, fixed points, contraction rates, refinement and step
//! rescaling.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use varint_core::diagnostics::{assemble_hessian, spectral_radius_jacobi};
use varint_core::discretize::{discretize, Scheme};
use varint_core::problems::{OscillatorLagrangian, QuadraticVelocityLagrangian};
use varint_core::solver::{
    apply_damping, refine, solve, sundman_rescale, Method, RefinementStep, SolveProblem,
    SolverConfig,
};
use varint_core::trajectory::{del_residual, BoundaryData, Knot, Trajectory, TrajectoryNode};

fn uniform_times(n: usize, h: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * h).collect()
}

fn line_trajectory(values: &[f64], h: f64) -> Trajectory {
    let nodes = values
        .iter()
        .map(|&v| TrajectoryNode::new(vec![v]).unwrap())
        .collect();
    Trajectory::new(1, 1, nodes, uniform_times(values.len() - 1, h)).unwrap()
}

fn free_particle_factory(
) -> impl Fn(&[f64]) -> varint_core::error::Result<Box<dyn varint_core::model::DiscreteLagrangianModel>>
       + Sync {
    |times: &[f64]| {
        let lagr = Arc::new(QuadraticVelocityLagrangian::new(DMatrix::identity(1, 1)).unwrap());
        Ok(Box::new(discretize(lagr, Scheme::Trapezoidal, times)?)
            as Box<dyn varint_core::model::DiscreteLagrangianModel>)
    }
}

#[test]
fn damped_sweep_blends_toward_the_nodewise_solution() {
    // Free particle, interior node between pinned 0 and 1. The undamped
    // Jacobi update moves the node to the neighbor midpoint 0.5; with
    // damping 0.3 one sweep gives 0.3 + 0.7 * (0.5 - 0.3) = 0.44.
    let factory = free_particle_factory();
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![0.0]).unwrap(),
            TrajectoryNode::new(vec![1.0]).unwrap(),
        ),
        time_recurrence: None,
        sundman_monitor: None,
    };
    let config = SolverConfig {
        method: Method::Jacobi,
        damping: 0.3,
        max_iters: 1,
        tol_residual: 1e-30,
        ..SolverConfig::default()
    };
    let report = solve(&problem, line_trajectory(&[0.0, 0.3, 1.0], 1.0), &config, None).unwrap();
    assert_eq!(report.iterations, 1);
    assert!(
        (report.trajectory.nodes[1].data[0] - 0.44).abs() < 1e-15,
        "damped node value {}",
        report.trajectory.nodes[1].data[0]
    );
}

#[test]
fn apply_damping_validates_and_blends() {
    let old = line_trajectory(&[0.0, 0.3, 1.0], 1.0);
    let proposed = line_trajectory(&[0.0, 0.5, 1.0], 1.0);
    let blended = apply_damping(&old, &proposed, 0.3).unwrap();
    assert!((blended.nodes[1].data[0] - 0.44).abs() < 1e-15);
    // eps = 0 returns the proposal unchanged.
    let pass = apply_damping(&old, &proposed, 0.0).unwrap();
    assert_eq!(pass.nodes[1].data[0], 0.5);
    assert!(apply_damping(&old, &proposed, 1.0).is_err());
    assert!(apply_damping(&old, &proposed, -0.1).is_err());
}

#[test]
fn solver_rejects_out_of_range_damping() {
    let factory = free_particle_factory();
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![0.0]).unwrap(),
            TrajectoryNode::new(vec![1.0]).unwrap(),
        ),
        time_recurrence: None,
        sundman_monitor: None,
    };
    let config = SolverConfig {
        damping: 1.5,
        ..SolverConfig::default()
    };
    let err = solve(&problem, line_trajectory(&[0.0, 0.3, 1.0], 1.0), &config, None)
        .err()
        .expect("damping 1.5 must be rejected");
    assert!(err.to_string().contains("damping"), "got: {err}");
}

#[test]
fn solver_recognizes_exact_fixed_point_without_moving_it() {
    // A straight line is the exact discrete free-particle solution; the
    // solver must converge on the spot and return it bit-identically.
    let factory = free_particle_factory();
    let values: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let initial = line_trajectory(&values, 0.5);
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![0.0]).unwrap(),
            TrajectoryNode::new(vec![1.0]).unwrap(),
        ),
        time_recurrence: None,
        sundman_monitor: None,
    };
    let config = SolverConfig {
        method: Method::Jacobi,
        tol_residual: 1e-13,
        ..SolverConfig::default()
    };
    let report = solve(&problem, initial.clone(), &config, None).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 0);
    for (a, b) in report.trajectory.nodes.iter().zip(initial.nodes.iter()) {
        assert_eq!(a.data, b.data, "fixed point must not move");
    }
}

/// Dense oracle: the discrete equations of a quadratic model are affine in
/// the interior unknowns, so the solution solves `H x = H x0 - r(x0)`.
fn dense_affine_solution(
    model: &dyn varint_core::model::DiscreteLagrangianModel,
    base: &Trajectory,
) -> Vec<DVector<f64>> {
    let n = base.n_intervals();
    let len = base.node_len();
    let dense = assemble_hessian(model, base).unwrap().to_dense();
    let mut r0 = DVector::zeros((n - 1) * len);
    let mut x0 = DVector::zeros((n - 1) * len);
    for k in 1..n {
        let r = del_residual(model, base, k).unwrap();
        r0.rows_mut((k - 1) * len, len).copy_from(&r);
        x0.rows_mut((k - 1) * len, len)
            .copy_from(&base.nodes[k].data);
    }
    let rhs = &dense * &x0 - &r0;
    let sol = dense.lu().solve(&rhs).expect("dense solve");
    (1..n)
        .map(|k| sol.rows((k - 1) * len, len).into_owned())
        .collect()
}

#[test]
fn both_sweep_variants_reach_the_dense_solution_of_the_oscillator() {
    // Harmonic oscillator, trapezoidal, h = 0.1, N = 20, ends pinned. Both
    // sweep variants, started from independently perturbed lines, must agree
    // with the dense affine solution to high accuracy.
    let (n, h) = (20usize, 0.1f64);
    let factory = |times: &[f64]| {
        let lagr = Arc::new(OscillatorLagrangian { omega: 1.0, dim: 1 });
        Ok(Box::new(discretize(lagr, Scheme::Trapezoidal, times)?)
            as Box<dyn varint_core::model::DiscreteLagrangianModel>)
    };
    let boundary = BoundaryData::new(
        TrajectoryNode::new(vec![1.0]).unwrap(),
        TrajectoryNode::new(vec![0.2]).unwrap(),
    );
    let mut rng = StdRng::seed_from_u64(11);

    // Oracle at the (arbitrary) zero-interior base point.
    let base_values: Vec<f64> = (0..=n)
        .map(|k| if k == 0 { 1.0 } else if k == n { 0.2 } else { 0.0 })
        .collect();
    let base = line_trajectory(&base_values, h);
    let model = factory(&base.times).unwrap();
    let oracle = dense_affine_solution(model.as_ref(), &base);

    for method in [Method::Jacobi, Method::JacobiNewton] {
        let mut values: Vec<f64> = (0..=n).map(|k| 1.0 - 0.8 * k as f64 / n as f64).collect();
        for v in values.iter_mut().skip(1).take(n - 1) {
            *v += rng.random_range(-0.5..0.5);
        }
        let initial = line_trajectory(&values, h);
        let problem = SolveProblem {
            model_factory: &factory,
            boundary: boundary.clone(),
            time_recurrence: None,
            sundman_monitor: None,
        };
        let config = SolverConfig {
            method,
            tol_residual: 1e-13,
            max_iters: 20_000,
            ..SolverConfig::default()
        };
        let report = solve(&problem, initial, &config, None).unwrap();
        assert!(report.converged, "{method:?} did not converge");
        let mut worst = 0.0f64;
        for k in 1..n {
            worst = worst.max((report.trajectory.nodes[k].data[0] - oracle[k - 1][0]).abs());
        }
        assert!(
            worst < 1e-8,
            "{method:?} deviates from dense solution by {worst:.3e}"
        );
    }
}

#[test]
fn asymptotic_contraction_matches_jacobi_spectral_radius() {
    // On a quadratic model the error contracts exactly by J each sweep, so
    // the tail residual ratio must match rho(J).
    let (n, h) = (20usize, 0.1f64);
    let lagr = Arc::new(OscillatorLagrangian { omega: 1.0, dim: 1 });
    let factory = move |times: &[f64]| {
        Ok(Box::new(discretize(lagr.clone(), Scheme::Trapezoidal, times)?)
            as Box<dyn varint_core::model::DiscreteLagrangianModel>)
    };
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![1.0]).unwrap(),
            TrajectoryNode::new(vec![0.2]).unwrap(),
        ),
        time_recurrence: None,
        sundman_monitor: None,
    };
    let mut rng = StdRng::seed_from_u64(3);
    let values: Vec<f64> = (0..=n)
        .map(|k| {
            if k == 0 {
                1.0
            } else if k == n {
                0.2
            } else {
                rng.random_range(-0.5..0.5)
            }
        })
        .collect();
    let initial = line_trajectory(&values, h);
    let config = SolverConfig {
        method: Method::JacobiNewton,
        tol_residual: 1e-12,
        max_iters: 20_000,
        ..SolverConfig::default()
    };
    let report = solve(&problem, initial.clone(), &config, None).unwrap();
    assert!(report.converged);

    let hist = &report.residual_history;
    let tail = &hist[hist.len().saturating_sub(40)..hist.len() - 1];
    let mut ratios = Vec::new();
    for w in tail.windows(2) {
        if w[0] > 0.0 && w[1] > 0.0 {
            ratios.push(w[1] / w[0]);
        }
    }
    let measured = ratios.iter().sum::<f64>() / ratios.len() as f64;

    let model = factory(&initial.times).unwrap();
    let hess = assemble_hessian(model.as_ref(), &initial).unwrap();
    let rho = spectral_radius_jacobi(&hess).unwrap();
    assert!(
        (measured - rho).abs() / rho < 0.05,
        "measured contraction {measured:.6} vs rho {rho:.6}"
    );
}

#[test]
fn refinement_of_affine_data_is_exact_and_remaps_knots() {
    // gamma = 2, dim = 1 nodes (position, velocity); affine position series
    // with constant velocity is reproduced exactly by the cubic resampler.
    let n = 10usize;
    let h = 0.4f64;
    let nodes: Vec<TrajectoryNode> = (0..=n)
        .map(|k| TrajectoryNode::new(vec![0.3 * (k as f64 * h) - 1.0, 0.3]).unwrap())
        .collect();
    let traj = Trajectory::new(2, 1, nodes, uniform_times(n, h)).unwrap();
    let boundary = BoundaryData::new(
        traj.nodes[0].clone(),
        traj.nodes[n].clone(),
    )
    .with_knots(vec![Knot::new(5, vec![0.3 * (5.0 * h) - 1.0])]);

    let (fine, fine_boundary) = refine(&traj, 25, &boundary).unwrap();
    assert_eq!(fine.n_intervals(), 25);
    // Endpoints bit-exact.
    assert_eq!(fine.nodes[0].data, traj.nodes[0].data);
    assert_eq!(fine.nodes[25].data, traj.nodes[n].data);
    // Knot remapped through time: t = 2.0 on the fine grid (h = 0.16) sits at
    // index 12.5 -> rounds to 13 (round half away from zero); the prescribed
    // position value is re-pinned there even though the node time moved.
    assert_eq!(fine_boundary.knots.len(), 1);
    let knot = &fine_boundary.knots[0];
    assert_eq!(knot.index, 13);
    assert_eq!(fine.nodes[13].data[0], knot.position[0]);
    assert_eq!(knot.position[0], 0.3 * (5.0 * h) - 1.0);
    // Affine reproduction everywhere else (the re-pinned knot position is
    // intentionally off the line by the knot-time shift).
    for (k, t) in fine.times.iter().enumerate() {
        if k != 13 {
            assert!(
                (fine.nodes[k].data[0] - (0.3 * t - 1.0)).abs() < 1e-12,
                "node {k}"
            );
        }
        assert!((fine.nodes[k].data[1] - 0.3).abs() < 1e-12);
    }

    // Coarsening or same-size targets are rejected.
    assert!(refine(&traj, 10, &boundary).is_err());
    assert!(refine(&traj, 6, &boundary).is_err());
}

#[test]
fn mid_run_refinement_still_converges_to_the_dense_solution() {
    let factory = free_particle_factory();
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![0.0]).unwrap(),
            TrajectoryNode::new(vec![1.0]).unwrap(),
        ),
        time_recurrence: None,
        sundman_monitor: None,
    };
    let mut rng = StdRng::seed_from_u64(8);
    let values: Vec<f64> = (0..=6)
        .map(|k| {
            if k == 0 {
                0.0
            } else if k == 6 {
                1.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    let initial = line_trajectory(&values, 1.0 / 6.0);
    let config = SolverConfig {
        method: Method::Jacobi,
        tol_residual: 1e-12,
        max_iters: 10_000,
        refinement: vec![RefinementStep {
            target_n: 18,
            at_iteration: 5,
        }],
        ..SolverConfig::default()
    };
    let report = solve(&problem, initial, &config, None).unwrap();
    assert!(report.converged);
    assert_eq!(report.trajectory.n_intervals(), 18);
    // Free particle solution is the straight line through the endpoints.
    for (k, t) in report.trajectory.times.iter().enumerate() {
        assert!(
            (report.trajectory.nodes[k].data[0] - t).abs() < 1e-9,
            "node {k} off the line"
        );
    }
}

#[test]
fn sundman_rescaling_is_proportional_and_conserves_total_time() {
    let n = 8usize;
    let nodes: Vec<TrajectoryNode> = (0..=n)
        .map(|k| TrajectoryNode::new(vec![k as f64]).unwrap())
        .collect();
    let traj = Trajectory::new(1, 1, nodes, uniform_times(n, 0.5)).unwrap();
    let total = traj.times[n] - traj.times[0];

    // Constant monitor: uniform grid back.
    let uniform = sundman_rescale(&traj, &|_a, _b| 2.5, total).unwrap();
    for (k, t) in uniform.times.iter().enumerate() {
        assert!((t - k as f64 * 0.5).abs() < 1e-14);
    }

    // Two-level monitor: first half of intervals twice the step of second.
    let monitor = |a: &DVector<f64>, _b: &DVector<f64>| if a[0] < 3.5 { 2.0 } else { 1.0 };
    let scaled = sundman_rescale(&traj, &monitor, total).unwrap();
    // Sum of monitor values: 4 intervals at 2.0 + 4 at 1.0 = 12 -> c = 4/12.
    let c = total / 12.0;
    let mut expect = 0.0;
    for k in 1..=n {
        let g = if (k as f64 - 1.0) < 3.5 { 2.0 } else { 1.0 };
        expect += c * g;
        assert!(
            (scaled.times[k] - expect).abs() < 1e-12,
            "time {k}: {} vs {expect}",
            scaled.times[k]
        );
    }
    // Deltas proportional to the monitor, total conserved.
    let sum: f64 = scaled
        .times
        .windows(2)
        .map(|w| w[1] - w[0])
        .sum();
    assert!((sum - total).abs() < 1e-12);
    for k in 1..=n {
        let dt = scaled.times[k] - scaled.times[k - 1];
        let g = monitor(&traj.nodes[k - 1].data, &traj.nodes[k].data);
        assert!(
            (dt / g - c).abs() < 1e-12 * (1.0 + c.abs()),
            "interval {k} not proportional"
        );
    }

    // Monotone times out of a monotone-positive monitor.
    for w in scaled.times.windows(2) {
        assert!(w[1] > w[0]);
    }

    // Invalid monitor values are rejected with the offending interval.
    let err = sundman_rescale(&traj, &|a: &DVector<f64>, _b: &DVector<f64>| a[0] - 3.0, total)
        .err()
        .expect("negative monitor must fail");
    assert!(err.to_string().contains("monitor"), "got: {err}");
}

#[test]
fn time_recurrence_updates_the_grid_on_schedule() {
    // A recurrence that always produces the grid t_k = k * 0.2 regardless of
    // the trajectory; after one update period the solver's grid must match.
    let factory = free_particle_factory();
    let recurrence = |traj: &Trajectory| {
        let n = traj.n_intervals();
        Ok((0..=n).map(|k| 0.2 * k as f64).collect::<Vec<f64>>())
    };
    let problem = SolveProblem {
        model_factory: &factory,
        boundary: BoundaryData::new(
            TrajectoryNode::new(vec![0.0]).unwrap(),
            TrajectoryNode::new(vec![1.0]).unwrap(),
        ),
        time_recurrence: Some(&recurrence),
        sundman_monitor: None,
    };
    let mut rng = StdRng::seed_from_u64(21);
    let values: Vec<f64> = (0..=8)
        .map(|k| {
            if k == 0 {
                0.0
            } else if k == 8 {
                1.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect();
    let initial = line_trajectory(&values, 1.0);
    let config = SolverConfig {
        method: Method::Jacobi,
        tol_residual: 1e-12,
        max_iters: 5_000,
        time_grid_update_period: 3,
        ..SolverConfig::default()
    };
    let report = solve(&problem, initial, &config, None).unwrap();
    assert!(report.converged);
    for (k, t) in report.trajectory.times.iter().enumerate() {
        assert!((t - 0.2 * k as f64).abs() < 1e-14, "grid not updated");
    }
}

/// Second-order `L = a^2/2 + v^2/2`: positive definite, so the relaxation
/// certificate holds everywhere.
struct StiffBeamLagrangian;

impl varint_core::discretize::ContinuousLagrangian for StiffBeamLagrangian {
    fn gamma(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        1
    }
    fn partials(&self) -> varint_core::discretize::Partials {
        varint_core::discretize::Partials::Full
    }
    fn eval(&self, _t: f64, jet: &DVector<f64>) -> f64 {
        0.5 * jet[2] * jet[2] + 0.5 * jet[1] * jet[1]
    }
    fn grad(&self, _t: f64, jet: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![0.0, jet[1], jet[2]])
    }
    fn hess(&self, _t: f64, _jet: &DVector<f64>) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]))
    }
}

#[test]
fn knot_positions_are_pinned_throughout_the_solve() {
    // Beam-type energy with a knot forcing a bump: the knot position block
    // must stay bit-exact at its prescribed value through the whole solve.
    let n = 8usize;
    let factory = move |times: &[f64]| {
        Ok(Box::new(discretize(
            Arc::new(StiffBeamLagrangian),
            Scheme::AlphaTrapezoidal { alpha: 1.0 / 3.0 },
            times,
        )?) as Box<dyn varint_core::model::DiscreteLagrangianModel>)
    };
    // gamma = 2 nodes: (position, velocity).
    let left = TrajectoryNode::new(vec![0.0, 0.0]).unwrap();
    let right = TrajectoryNode::new(vec![0.0, 0.0]).unwrap();
    let knot_value = 1.0;
    let boundary = BoundaryData::new(left.clone(), right.clone())
        .with_knots(vec![Knot::new(4, vec![knot_value])]);
    let nodes: Vec<TrajectoryNode> = (0..=n)
        .map(|_| TrajectoryNode::new(vec![0.0, 0.0]).unwrap())
        .collect();
    let initial = Trajectory::new(2, 1, nodes, uniform_times(n, 0.25)).unwrap();
    let problem = SolveProblem {
        model_factory: &factory,
        boundary,
        time_recurrence: None,
        sundman_monitor: None,
    };
    let config = SolverConfig {
        method: Method::JacobiNewton,
        tol_residual: 1e-11,
        max_iters: 50_000,
        ..SolverConfig::default()
    };
    let report = solve(&problem, initial, &config, None).unwrap();
    assert!(report.converged);
    assert_eq!(report.trajectory.nodes[4].data[0], knot_value);
}
