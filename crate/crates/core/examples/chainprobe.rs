use nalgebra::DMatrix;
use varint_core::diagnostics::assemble_hessian;
use varint_core::problems::fuel_interpolation_problem;
use varint_core::solver::{refine, solve, SolveProblem, SolverConfig};
use varint_core::trajectory::{BoundaryData, Trajectory};

/// Eigenvalue edges (lambda_min, lambda_max) of the knot-masked block Jacobi
/// iteration matrix J = I - D^-1 H at the given point.
fn masked_jacobi_edges(
    spec: &varint_core::problems::ProblemSpec,
    traj: &Trajectory,
    boundary: &BoundaryData,
) -> (f64, f64) {
    let model = spec.build_model(&traj.times).unwrap();
    let hess = assemble_hessian(model.as_ref(), traj).unwrap();
    let dense = hess.to_dense();
    let n = traj.n_intervals();
    let dim = traj.dim();
    let len = traj.node_len();
    // Keep-list of flat indices (interior nodes 1..n-1 of the assembled H).
    let mut is_knot = vec![false; n + 1];
    for knot in &boundary.knots {
        is_knot[knot.index] = true;
    }
    let mut keep: Vec<usize> = Vec::new();
    let mut node_sizes: Vec<usize> = Vec::new();
    for k in 1..n {
        let base = (k - 1) * len;
        if is_knot[k] {
            keep.extend(base + dim..base + len);
            node_sizes.push(len - dim);
        } else {
            keep.extend(base..base + len);
            node_sizes.push(len);
        }
    }
    let m = keep.len();
    let hr = DMatrix::from_fn(m, m, |r, c| dense[(keep[r], keep[c])]);
    // Block-diagonal inverse square root of D.
    let mut dhalf = DMatrix::zeros(m, m);
    let mut base = 0usize;
    for &sz in &node_sizes {
        if sz == 0 {
            continue;
        }
        let block = hr.view((base, base), (sz, sz)).into_owned();
        let se = block.symmetric_eigen();
        for v in se.eigenvalues.iter() {
            assert!(*v > 0.0, "diagonal block not PD: eig {v}");
        }
        let mut inv_sqrt = DMatrix::zeros(sz, sz);
        for (i, v) in se.eigenvalues.iter().enumerate() {
            let col = se.eigenvectors.column(i);
            inv_sqrt += col * col.transpose() / v.sqrt();
        }
        dhalf.view_mut((base, base), (sz, sz)).copy_from(&inv_sqrt);
        base += sz;
    }
    let w = &dhalf * &hr * &dhalf;
    let eigs = w.symmetric_eigen().eigenvalues;
    let mu_min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mu_max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (1.0 - mu_max, 1.0 - mu_min)
}

fn main() {
    let spec = fuel_interpolation_problem();
    let n0 = 24usize;
    let mut boundary = spec.boundary_for(n0).unwrap();
    let mut traj = spec.initial_guess(n0).unwrap();
    for &(n, tol) in &[(24usize, 1e-8f64), (48, 1e-8)] {
        if n != traj.n_intervals() {
            let (t2, b2) = refine(&traj, n, &boundary).unwrap();
            traj = t2;
            boundary = b2;
        }
        let factory = |times: &[f64]| spec.build_model(times);
        let problem = SolveProblem {
            model_factory: &factory,
            boundary: boundary.clone(),
            time_recurrence: None,
            sundman_monitor: None,
        };
        let config = SolverConfig {
            max_iters: 500_000,
            tol_residual: tol,
            refinement: vec![],
            damping: 0.5,
            ..spec.config.clone()
        };
        let report = solve(&problem, traj, &config, None).unwrap();
        traj = report.trajectory;
        let (lo, hi) = masked_jacobi_edges(&spec, &traj, &boundary);
        println!(
            "converged n={n}: ok={} iters={} lambda(J) in [{lo:.6}, {hi:.9}]  1-max={:.3e}",
            report.converged,
            report.iterations,
            1.0 - hi
        );
    }
    for target in [96usize, 240] {
        let (t2, b2) = refine(&traj, target, &boundary).unwrap();
        let (lo, hi) = masked_jacobi_edges(&spec, &t2, &b2);
        println!(
            "refined-from-48 n={target}: lambda(J) in [{lo:.6}, {hi:.9}]  1-max={:.3e}",
            1.0 - hi
        );
    }
}
