use nalgebra::{DMatrix, DVector};
use varint_core::diagnostics::assemble_hessian;
use varint_core::problems::{fuel_interpolation_problem, ProblemSpec};
use varint_core::solver::{refine, solve, SolveProblem, SolverConfig};
use varint_core::trajectory::{del_residual, BoundaryData, Trajectory, TrajectoryNode};

struct Mask {
    keep: Vec<usize>,
    node_sizes: Vec<usize>,
}

fn build_mask(traj: &Trajectory, boundary: &BoundaryData) -> Mask {
    let n = traj.n_intervals();
    let dim = traj.dim();
    let len = traj.node_len();
    let mut is_knot = vec![false; n + 1];
    for knot in &boundary.knots {
        is_knot[knot.index] = true;
    }
    let mut keep = Vec::new();
    let mut node_sizes = Vec::new();
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
    Mask { keep, node_sizes }
}

fn masked_residual(
    model: &dyn varint_core::model::DiscreteLagrangianModel,
    traj: &Trajectory,
    mask: &Mask,
) -> DVector<f64> {
    let n = traj.n_intervals();
    let len = traj.node_len();
    let mut full = DVector::zeros((n - 1) * len);
    for k in 1..n {
        let r = del_residual(model, traj, k).unwrap();
        full.rows_mut((k - 1) * len, len).copy_from(&r);
    }
    DVector::from_fn(mask.keep.len(), |i, _| full[mask.keep[i]])
}

fn masked_hessian(
    model: &dyn varint_core::model::DiscreteLagrangianModel,
    traj: &Trajectory,
    mask: &Mask,
) -> DMatrix<f64> {
    let dense = assemble_hessian(model, traj).unwrap().to_dense();
    let m = mask.keep.len();
    DMatrix::from_fn(m, m, |r, c| dense[(mask.keep[r], mask.keep[c])])
}

fn apply_step(traj: &mut Trajectory, mask: &Mask, delta: &DVector<f64>, alpha: f64) {
    let mut idx = 0usize;
    let len = traj.node_len();
    let dim = traj.dim();
    for (node_i, &sz) in mask.node_sizes.iter().enumerate() {
        let k = node_i + 1;
        let offset = if sz == len { 0 } else { dim };
        for j in 0..sz {
            traj.nodes[k].data[offset + j] += alpha * delta[idx + j];
        }
        idx += sz;
    }
}

/// Eigen edges of whitened masked Hessian; returns (mu_min, mu_max).
fn whitened_edges(h: &DMatrix<f64>, node_sizes: &[usize]) -> (f64, f64) {
    let m = h.nrows();
    let mut dhalf = DMatrix::zeros(m, m);
    let mut base = 0usize;
    for &sz in node_sizes {
        let block = h.view((base, base), (sz, sz)).into_owned();
        let se = block.symmetric_eigen();
        let mut inv_sqrt = DMatrix::zeros(sz, sz);
        for (i, v) in se.eigenvalues.iter().enumerate() {
            assert!(*v > 0.0, "diag block not PD: {v}");
            let col = se.eigenvectors.column(i);
            inv_sqrt += col * col.transpose() / v.sqrt();
        }
        dhalf.view_mut((base, base), (sz, sz)).copy_from(&inv_sqrt);
        base += sz;
    }
    let w = dhalf.transpose() * h * &dhalf;
    let eigs = w.symmetric_eigen().eigenvalues;
    (
        eigs.iter().cloned().fold(f64::INFINITY, f64::min),
        eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn newton(
    spec: &ProblemSpec,
    traj: &mut Trajectory,
    boundary: &BoundaryData,
    label: &str,
) -> bool {
    let model = spec.build_model(&traj.times).unwrap();
    let mask = build_mask(traj, boundary);
    let mut r = masked_residual(model.as_ref(), traj, &mask);
    let mut rn = r.norm();
    for it in 0..120 {
        if rn < 1e-11 {
            break;
        }
        let h = masked_hessian(model.as_ref(), traj, &mask);
        let delta = match h.clone().lu().solve(&(-&r)) {
            Some(d) => d,
            None => {
                println!("{label}: singular Hessian at iter {it}");
                return false;
            }
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut cand = traj.clone();
            apply_step(&mut cand, &mask, &delta, alpha);
            let rc = masked_residual(model.as_ref(), &cand, &mask);
            let rcn = rc.norm();
            if rcn < rn * (1.0 - 1e-4 * alpha) || rcn < 1e-12 {
                *traj = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            println!("{label}: line search failed at iter {it}, |r|={rn:.3e}");
            return false;
        }
        if it % 10 == 0 || rn < 1e-11 {
            println!("{label}: iter {it} alpha {alpha:.4} |r| = {rn:.6e}");
        }
    }
    let h = masked_hessian(model.as_ref(), traj, &mask);
    let (lo, hi) = whitened_edges(&h, &mask.node_sizes);
    println!(
        "{label}: final |r| = {rn:.3e}, whitened masked H eigen in [{lo:.6e}, {hi:.3}]  (PD = {})  lambda_max(J) = {:.6}",
        lo > 0.0,
        1.0 - lo
    );
    rn < 1e-9
}

fn save_traj(path: &str, traj: &Trajectory) {
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", traj.gamma(), traj.dim(), traj.n_intervals()));
    for (k, t) in traj.times.iter().enumerate() {
        out.push_str(&format!("{t:.17e}"));
        for v in traj.nodes[k].data.iter() {
            out.push_str(&format!(" {v:.17e}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

fn load_traj(path: &str) -> Option<Trajectory> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut lines = text.lines();
    let head: Vec<usize> = lines.next()?.split_whitespace().map(|t| t.parse().unwrap()).collect();
    let (gamma, dim, n) = (head[0], head[1], head[2]);
    let mut times = Vec::new();
    let mut nodes = Vec::new();
    for line in lines {
        let vals: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        times.push(vals[0]);
        nodes.push(TrajectoryNode::new(vals[1..].to_vec()).unwrap());
    }
    assert_eq!(nodes.len(), n + 1);
    Some(Trajectory::new(gamma, dim, nodes, times).unwrap())
}

fn main() {
    let spec = fuel_interpolation_problem();
    let n0 = 24usize;
    let mut boundary = spec.boundary_for(n0).unwrap();
    let mut traj = spec.initial_guess(n0).unwrap();
    if let Some(cached) = load_traj("/tmp/sol48.txt") {
        println!("using cached n=48 solution");
        boundary = spec.boundary_for(48).unwrap();
        traj = cached;
        // remap knots exactly as a real chain would have
        let kn = boundary.knots.iter().map(|k| k.index).collect::<Vec<_>>();
        println!("knots on cached grid: {kn:?}");
        run_probes(&spec, traj, boundary);
        return;
    }
    // Converge the coarse levels with the damped relaxation first.
    for n in [24usize, 48] {
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
            tol_residual: 1e-8,
            refinement: vec![],
            damping: 0.5,
            ..spec.config.clone()
        };
        let report = solve(&problem, traj, &config, None).unwrap();
        println!("relax n={n}: ok={} iters={}", report.converged, report.iterations);
        traj = report.trajectory;
    }
    save_traj("/tmp/sol48.txt", &traj);
    run_probes(&spec, traj, boundary);
}

fn run_probes(spec: &ProblemSpec, mut traj: Trajectory, mut boundary: BoundaryData) {
    for target in [96usize, 240] {
        let (mut t2, b2) = refine(&traj, target, &boundary).unwrap();
        let ok = newton(spec, &mut t2, &b2, &format!("newton n={target}"));
        if ok && target == 96 {
            // Continue the chain from the exact n=96 solution.
            traj = t2;
            boundary = b2;
            save_traj("/tmp/sol96.txt", &traj);
        }
    }
}
