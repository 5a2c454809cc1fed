use std::sync::Arc;
use nalgebra::DVector;
use varint_core::diagnostics::{assemble_hessian, spectral_radius_jacobi};
use varint_core::discretize::{discretize, ContinuousLagrangian, Partials, Scheme};
use varint_core::solver::{solve, Method, SolveProblem, SolverConfig};
use varint_core::trajectory::{BoundaryData, Knot, Trajectory, TrajectoryNode};

struct StiffBeamLagrangian;
impl ContinuousLagrangian for StiffBeamLagrangian {
    fn gamma(&self) -> usize { 2 }
    fn dim(&self) -> usize { 1 }
    fn partials(&self) -> Partials { Partials::EvalOnly }
    fn eval(&self, _t: f64, jet: &DVector<f64>) -> f64 {
        0.5 * jet[2] * jet[2] + 0.5 * jet[1] * jet[1]
    }
}

fn main() {
    let n = 8usize;
    let times: Vec<f64> = (0..=n).map(|k| 0.25 * k as f64).collect();
    let factory = move |ts: &[f64]| {
        Ok(Box::new(discretize(Arc::new(StiffBeamLagrangian), Scheme::AlphaTrapezoidal { alpha: 1.0/3.0 }, ts)?)
            as Box<dyn varint_core::model::DiscreteLagrangianModel>)
    };
    let left = TrajectoryNode::new(vec![0.0, 0.0]).unwrap();
    let right = TrajectoryNode::new(vec![0.0, 0.0]).unwrap();
    let boundary = BoundaryData::new(left, right).with_knots(vec![Knot::new(4, vec![1.0])]);
    let nodes: Vec<TrajectoryNode> = (0..=n).map(|_| TrajectoryNode::new(vec![0.0, 0.0]).unwrap()).collect();
    let initial = Trajectory::new(2, 1, nodes, times.clone()).unwrap();
    let problem = SolveProblem { model_factory: &factory, boundary, time_recurrence: None, sundman_monitor: None };
    let config = SolverConfig { method: Method::JacobiNewton, tol_residual: 1e-11, max_iters: 50_000, ..SolverConfig::default() };
    let report = solve(&problem, initial.clone(), &config, None).unwrap();
    let h = &report.residual_history;
    println!("converged={} iters={} last residuals:", report.converged, report.iterations);
    for r in h.iter().rev().take(8).rev() { println!("  {r:.6e}"); }
    if h.len() > 40 {
        let a = h[h.len()-21]; let b = h[h.len()-1];
        println!("tail ratio per iter: {:.8}", (b/a).powf(1.0/20.0));
    }
    let model = factory(&times).unwrap();
    let hess = assemble_hessian(model.as_ref(), &report.trajectory).unwrap();
    println!("unmasked rho = {:.8}", spectral_radius_jacobi(&hess).unwrap());
    println!("node4 = {:?}", report.trajectory.nodes[4].data.as_slice());
}
