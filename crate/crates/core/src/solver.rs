//! Parallel relaxation of discrete Euler-Lagrange boundary-value problems.
//!
//! Both sweep variants update every interior node from the *previous*
//! iterate only, so a sweep is a pure map over nodes: embarrassingly
//! parallel, and bit-deterministic regardless of thread count or processing
//! order. Computed points remain unused until the next iteration (never
//! Gauss-Seidel).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{check_theorem_conditions, ConvergenceReport};
use crate::error::{Error, Result};
use crate::model::DiscreteLagrangianModel;
use crate::trajectory::{BoundaryData, Knot, Trajectory, TrajectoryNode};

/// Inner Newton tolerance of the block Jacobi sweep.
pub const INNER_NEWTON_TOL: f64 = 1e-12;
/// Number of damped iterations after a refinement or time-grid update.
pub const POST_UPDATE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Full inner-Newton solve of the per-node equation.
    Jacobi,
    /// One (or a few) Newton steps per node against the diagonal block.
    JacobiNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub target_n: usize,
    pub at_iteration: usize,
}

/// Solver parameters. `Default` gives the one-step Jacobi-Newton method
/// with residual tolerance `1e-8` and no damping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    /// Max-norm residual threshold declaring convergence.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Damping coefficient in `[0, 1)`: new node = old + (1-eps)(proposed - old).
    pub damping: f64,
    /// Inner Newton iteration cap of the Jacobi sweep.
    pub inner_newton_iters: usize,
    /// Newton substeps per node of the Jacobi-Newton sweep.
    pub newton_substeps: usize,
    /// Coarse-to-fine schedule, applied when the iteration counter hits each
    /// entry.
    pub refinement: Vec<RefinementStep>,
    /// Period of the sequential time-grid recurrence (0 disables).
    pub time_grid_update_period: usize,
    /// Monitor id enabling per-iteration proportional step rescaling; the
    /// id is resolved by the problem catalog.
    pub adaptive_sundman: Option<String>,
    /// Run the convergence certificate every this many iterations (0 = never).
    pub diagnostics_every: usize,
    /// Damping used for a few iterations after refinement/time-grid updates.
    pub epsilon_post_refine: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::JacobiNewton,
            tol_residual: 1e-8,
            max_iters: 50_000,
            damping: 0.0,
            inner_newton_iters: 5,
            newton_substeps: 1,
            refinement: Vec::new(),
            time_grid_update_period: 100,
            adaptive_sundman: None,
            diagnostics_every: 0,
            epsilon_post_refine: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon_post_refine) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_post_refine must lie in [0, 1), got {}",
                self.epsilon_post_refine
            )));
        }
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidArgument(
                "tol_residual must be positive".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if self.inner_newton_iters == 0 || self.newton_substeps == 0 {
            return Err(Error::InvalidArgument(
                "inner iteration counts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a solve run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Residuals including the initial one at index 0.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Certificate snapshots `(iteration, report)` when requested.
    pub diagnostics: Vec<(usize, ConvergenceReport)>,
    pub wall_time: f64,
    /// Present when a node error aborted the run early (partial results kept).
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeMask {
    Free,
    /// Configuration block pinned; derivative blocks relax.
    PinnedPosition,
    PinnedFull,
}

fn build_masks(boundary: &BoundaryData, n: usize) -> Vec<NodeMask> {
    let mut masks = vec![NodeMask::Free; n + 1];
    masks[0] = NodeMask::PinnedFull;
    masks[n] = NodeMask::PinnedFull;
    for knot in &boundary.knots {
        masks[knot.index] = if knot.pin_full_node {
            NodeMask::PinnedFull
        } else {
            NodeMask::PinnedPosition
        };
    }
    masks
}

/// Per-interval derivatives of one iterate. Each interval is shared by its
/// two neighboring nodes, so evaluating once per interval (instead of once
/// per node side) halves the derivative work of a sweep.
struct IntervalCache {
    g1: DVector<f64>,
    g2: DVector<f64>,
    /// `(D11, D22)`; absent for the plain Jacobi method, whose inner Newton
    /// only evaluates Hessians on demand.
    hess: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

fn gather_intervals(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    with_hessians: bool,
) -> Result<Vec<IntervalCache>> {
    if model.n_intervals() != traj.n_intervals() {
        return Err(Error::ModelError(format!(
            "model has {} intervals but trajectory has {}",
            model.n_intervals(),
            traj.n_intervals()
        )));
    }
    (0..traj.n_intervals())
        .into_par_iter()
        .map(|j| {
            let x0 = &traj.nodes[j].data;
            let x1 = &traj.nodes[j + 1].data;
            let (g1, g2) = model.grads(j, x0, x1);
            let hess = if with_hessians {
                let (h11, _, h22) = model.hess_all(j, x0, x1);
                Some((h11, h22))
            } else {
                None
            };
            Ok(IntervalCache { g1, g2, hess })
        })
        .collect()
}

fn mask_rows(mask: NodeMask, dim: usize, len: usize) -> (usize, usize) {
    match mask {
        NodeMask::PinnedFull => (0, 0),
        NodeMask::PinnedPosition => (dim, len - dim),
        NodeMask::Free => (0, len),
    }
}

/// Inner-Newton update of one node with frozen neighbors (block Jacobi).
/// The first inner residual is the cached `r0`; a node already at its local
/// solution is returned unchanged without any Hessian evaluation.
fn update_node_jacobi(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    k: usize,
    mask: NodeMask,
    inner_iters: usize,
    r0: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (off, sub) = mask_rows(mask, traj.dim(), traj.node_len());
    if sub == 0 {
        return Ok(traj.nodes[k].data.clone());
    }
    let prev = &traj.nodes[k - 1].data;
    let next = &traj.nodes[k + 1].data;
    let mut y = traj.nodes[k].data.clone();
    for it in 0..inner_iters {
        let r = if it == 0 {
            r0.clone()
        } else {
            model.grad2(k - 1, prev, &y) + model.grad1(k, &y, next)
        };
        let r_sub = r.rows(off, sub).into_owned();
        if r_sub.amax() <= INNER_NEWTON_TOL {
            break;
        }
        let d = model.hess22(k - 1, prev, &y) + model.hess11(k, &y, next);
        let d_sub = d.view((off, off), (sub, sub)).into_owned();
        let delta = d_sub
            .lu()
            .solve(&r_sub)
            .ok_or(Error::SingularDiagonalBlock(k))?;
        let mut target = y.rows_mut(off, sub);
        target -= &delta;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedAtNode(k));
        }
    }
    Ok(y)
}

/// One-step Newton update of one node against the diagonal block `D_k`,
/// neighbors frozen; first substep consumes the cached residual/Hessians.
fn update_node_newton(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    k: usize,
    mask: NodeMask,
    substeps: usize,
    r0: &DVector<f64>,
    cache: &[IntervalCache],
) -> Result<DVector<f64>> {
    let (off, sub) = mask_rows(mask, traj.dim(), traj.node_len());
    if sub == 0 {
        return Ok(traj.nodes[k].data.clone());
    }
    let prev = &traj.nodes[k - 1].data;
    let next = &traj.nodes[k + 1].data;
    let mut y = traj.nodes[k].data.clone();
    for s in 0..substeps {
        let (r, d) = if s == 0 {
            let (_, h22_prev) = cache[k - 1].hess.as_ref().expect("cached Hessians");
            let (h11_next, _) = cache[k].hess.as_ref().expect("cached Hessians");
            (r0.clone(), h22_prev + h11_next)
        } else {
            (
                model.grad2(k - 1, prev, &y) + model.grad1(k, &y, next),
                model.hess22(k - 1, prev, &y) + model.hess11(k, &y, next),
            )
        };
        let r_sub = r.rows(off, sub).into_owned();
        let d_sub = d.view((off, off), (sub, sub)).into_owned();
        let delta = d_sub
            .lu()
            .solve(&r_sub)
            .ok_or(Error::SingularDiagonalBlock(k))?;
        let mut target = y.rows_mut(off, sub);
        target -= &delta;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::DivergedAtNode(k));
        }
    }
    Ok(y)
}

/// A fused sweep: the masked max-norm residual of the *input* iterate plus
/// the proposed next iterate, from one derivative pass over the intervals.
struct SweepOutcome {
    proposed: Trajectory,
    /// Masked DEL residual of the input iterate (pinned rows excluded).
    residual: f64,
}

fn fused_sweep(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    masks: &[NodeMask],
    method: Method,
    inner_iters: usize,
    substeps: usize,
) -> Result<SweepOutcome> {
    let n = traj.n_intervals();
    let with_hess = matches!(method, Method::JacobiNewton);
    let cache = gather_intervals(model, traj, with_hess)?;
    let updated: std::result::Result<Vec<(DVector<f64>, f64)>, Error> = (1..n)
        .into_par_iter()
        .map(|k| {
            let r_full = &cache[k - 1].g2 + &cache[k].g1;
            let (off, sub) = mask_rows(masks[k], traj.dim(), traj.node_len());
            let res = if sub == 0 {
                0.0
            } else {
                let rows = r_full.rows(off, sub);
                if rows.iter().any(|v| v.is_nan()) {
                    f64::NAN
                } else {
                    rows.amax()
                }
            };
            if !res.is_finite() {
                // Skip the update; the caller aborts on the residual.
                return Ok((traj.nodes[k].data.clone(), res));
            }
            let y = match method {
                Method::Jacobi => {
                    update_node_jacobi(model, traj, k, masks[k], inner_iters, &r_full)?
                }
                Method::JacobiNewton => {
                    update_node_newton(model, traj, k, masks[k], substeps, &r_full, &cache)?
                }
            };
            Ok((y, res))
        })
        .collect();
    let updated = updated?;
    let mut residual = 0.0_f64;
    let mut out = traj.clone();
    for (i, (data, res)) in updated.into_iter().enumerate() {
        residual = if res.is_nan() || residual.is_nan() {
            f64::NAN
        } else {
            residual.max(res)
        };
        out.nodes[i + 1] = TrajectoryNode { data };
    }
    Ok(SweepOutcome {
        proposed: out,
        residual,
    })
}

fn sweep(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    masks: &[NodeMask],
    method: Method,
    inner_iters: usize,
    substeps: usize,
) -> Result<Trajectory> {
    fused_sweep(model, traj, masks, method, inner_iters, substeps).map(|o| o.proposed)
}

/// Block Jacobi sweep: each interior node is replaced by the inner-Newton
/// solution of its own discrete Euler-Lagrange equation, neighbors frozen at
/// the previous iterate.
pub fn jacobi_sweep(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    boundary: &BoundaryData,
    inner_iters: usize,
) -> Result<Trajectory> {
    let masks = build_masks(boundary, traj.n_intervals());
    sweep(model, traj, &masks, Method::Jacobi, inner_iters.max(1), 1)
}

/// Jacobi-Newton sweep: one Newton step per node against the diagonal block
/// `D_k`, neighbors frozen at the previous iterate.
pub fn jacobi_newton_sweep(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    boundary: &BoundaryData,
) -> Result<Trajectory> {
    jacobi_newton_sweep_substeps(model, traj, boundary, 1)
}

/// Jacobi-Newton sweep with several Newton substeps per node.
pub fn jacobi_newton_sweep_substeps(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    boundary: &BoundaryData,
    substeps: usize,
) -> Result<Trajectory> {
    let masks = build_masks(boundary, traj.n_intervals());
    sweep(
        model,
        traj,
        &masks,
        Method::JacobiNewton,
        1,
        substeps.max(1),
    )
}

/// Damped blend: `old + (1 - eps) * (proposed - old)` per node; `eps = 0`
/// returns the proposal unchanged.
pub fn apply_damping(old: &Trajectory, proposed: &Trajectory, eps: f64) -> Result<Trajectory> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in [0, 1), got {eps}"
        )));
    }
    if old.nodes.len() != proposed.nodes.len() || old.node_len() != proposed.node_len() {
        return Err(Error::InvalidArgument(
            "damping requires trajectories of equal shape".into(),
        ));
    }
    if eps == 0.0 {
        return Ok(proposed.clone());
    }
    let mut out = proposed.clone();
    for (node, old_node) in out.nodes.iter_mut().zip(old.nodes.iter()) {
        let blended = &old_node.data + (&node.data - &old_node.data) * (1.0 - eps);
        node.data = blended;
    }
    Ok(out)
}

/// Problem hooks consumed by [`solve`]: a model factory bound to the current
/// time grid plus optional grid-update rules.
pub struct SolveProblem<'a> {
    pub model_factory:
        &'a (dyn Fn(&[f64]) -> Result<Box<dyn DiscreteLagrangianModel>> + Sync),
    pub boundary: BoundaryData,
    /// Sequential physical-time recurrence (arc-length parametrized
    /// problems); returns the full new time grid.
    pub time_recurrence: Option<&'a (dyn Fn(&Trajectory) -> Result<Vec<f64>> + Sync)>,
    /// Step-size monitor `g_d(x_{k-1}, x_k)` for proportional rescaling.
    pub sundman_monitor: Option<&'a (dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync)>,
}

/// Overwrites the boundary-controlled parts of `traj` (end nodes and knot
/// positions) so the iteration invariant holds from the start.
fn impose_boundary(traj: &mut Trajectory, boundary: &BoundaryData) {
    let dim = traj.dim();
    let n = traj.n_intervals();
    traj.nodes[0] = boundary.left.clone();
    traj.nodes[n] = boundary.right.clone();
    for knot in &boundary.knots {
        traj.nodes[knot.index]
            .data
            .rows_mut(0, dim)
            .copy_from(&knot.position);
    }
}

/// Iterates damped sweeps until the max-norm residual drops below
/// `tol_residual` or the budget runs out, handling the refinement schedule,
/// time-grid updates, adaptive step rescaling and certificate snapshots.
///
/// Node errors abort the run and are reported in `SolveReport::aborted`
/// together with the partial history; non-convergence is not an error.
pub fn solve(
    problem: &SolveProblem,
    initial: Trajectory,
    config: &SolverConfig,
    mut progress: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<SolveReport> {
    config.validate()?;
    let mut traj = initial;
    let mut boundary = problem.boundary.clone();
    boundary.validate(traj.gamma(), traj.dim(), traj.n_intervals())?;
    impose_boundary(&mut traj, &boundary);
    let total_span = traj.times[traj.n_intervals()] - traj.times[0];

    let start = Instant::now();
    let mut model = (problem.model_factory)(&traj.times)?;
    let mut masks = build_masks(&boundary, traj.n_intervals());
    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut aborted = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut post_window = 0usize;

    // Each pass measures the masked residual of the current iterate and
    // proposes the next one from the same derivative evaluations; the final
    // pass only measures (its proposal is dropped).
    for it in 0..=config.max_iters {
        let outcome = match fused_sweep(
            model.as_ref(),
            &traj,
            &masks,
            config.method,
            config.inner_newton_iters,
            config.newton_substeps,
        ) {
            Ok(o) => o,
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        };
        let res = outcome.residual;
        history.push(res);
        if let Some(cb) = progress.as_deref_mut() {
            cb(it, res);
        }
        if !res.is_finite() {
            let bad = (1..traj.n_intervals())
                .find(|&k| {
                    crate::trajectory::del_residual(model.as_ref(), &traj, k)
                        .map(|r| r.iter().any(|v| !v.is_finite()))
                        .unwrap_or(true)
                })
                .unwrap_or(1);
            aborted = Some(Error::DivergedAtNode(bad).to_string());
            break;
        }
        if res < config.tol_residual {
            converged = true;
            break;
        }
        if it == config.max_iters {
            break;
        }

        let eps = if post_window > 0 {
            post_window -= 1;
            config.damping.max(config.epsilon_post_refine)
        } else {
            config.damping
        };
        traj = apply_damping(&traj, &outcome.proposed, eps)?;
        iterations = it + 1;

        // Structural updates between sweeps (sequential barriers).
        if let Some(step) = config
            .refinement
            .iter()
            .find(|s| s.at_iteration == iterations && s.target_n > traj.n_intervals())
        {
            match refine(&traj, step.target_n, &boundary) {
                Ok((t2, b2)) => {
                    traj = t2;
                    boundary = b2;
                    model = (problem.model_factory)(&traj.times)?;
                    masks = build_masks(&boundary, traj.n_intervals());
                    post_window = POST_UPDATE_WINDOW;
                }
                Err(e) => {
                    aborted = Some(e.to_string());
                    break;
                }
            }
        }
        if let Some(rec) = problem.time_recurrence {
            let period = config.time_grid_update_period;
            if period > 0 && iterations % period == 0 {
                match rec(&traj).and_then(|ts| traj.set_times(ts)) {
                    Ok(()) => {
                        model = (problem.model_factory)(&traj.times)?;
                        post_window = POST_UPDATE_WINDOW;
                    }
                    Err(e) => {
                        aborted = Some(e.to_string());
                        break;
                    }
                }
            }
        }
        if config.adaptive_sundman.is_some() {
            if let Some(monitor) = problem.sundman_monitor {
                match sundman_rescale(&traj, monitor, total_span) {
                    Ok(t2) => {
                        traj = t2;
                        model = (problem.model_factory)(&traj.times)?;
                    }
                    Err(e) => {
                        aborted = Some(e.to_string());
                        break;
                    }
                }
            }
        }

        if config.diagnostics_every > 0 && iterations % config.diagnostics_every == 0 {
            diagnostics.push((iterations, check_theorem_conditions(model.as_ref(), &traj)?));
        }
    }

    Ok(SolveReport {
        trajectory: traj,
        iterations,
        residual_history: history,
        converged,
        diagnostics,
        wall_time: start.elapsed().as_secs_f64(),
        aborted,
    })
}

/// [`solve`] specialized to interpolation problems: requires second-order
/// nodes (`gamma = 2`) so knot nodes can keep their position block while the
/// velocity block relaxes through the projected equation.
pub fn solve_with_knots(
    problem: &SolveProblem,
    initial: Trajectory,
    config: &SolverConfig,
    progress: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<SolveReport> {
    if initial.gamma() != 2 {
        return Err(Error::InvalidArgument(
            "knot interpolation requires gamma = 2 nodes".into(),
        ));
    }
    if problem.boundary.knots.is_empty() {
        return Err(Error::InvalidBoundary(
            "interpolation solve needs at least one knot".into(),
        ));
    }
    solve(problem, initial, config, progress)
}

/// Resamples onto a finer uniform grid by per-component piecewise-cubic
/// interpolation (three-point slopes); endpoints are preserved bit-exactly
/// and knots are remapped to the nearest new index, error on collision.
pub fn refine(
    traj: &Trajectory,
    new_n: usize,
    boundary: &BoundaryData,
) -> Result<(Trajectory, BoundaryData)> {
    let n = traj.n_intervals();
    if new_n <= n {
        return Err(Error::InvalidArgument(format!(
            "refinement target {new_n} must exceed current {n}"
        )));
    }
    let t0 = traj.times[0];
    let t1 = traj.times[n];
    let h_new = (t1 - t0) / new_n as f64;
    let new_times: Vec<f64> = (0..=new_n).map(|k| t0 + k as f64 * h_new).collect();

    let len = traj.node_len();
    let mut nodes: Vec<TrajectoryNode> = (0..=new_n)
        .map(|_| TrajectoryNode {
            data: DVector::zeros(len),
        })
        .collect();
    for c in 0..len {
        let series: Vec<f64> = traj.nodes.iter().map(|nd| nd.data[c]).collect();
        let interp = CubicSeries::build(&traj.times, &series);
        for (k, t) in new_times.iter().enumerate() {
            nodes[k].data[c] = interp.eval(*t);
        }
    }
    nodes[0] = traj.nodes[0].clone();
    nodes[new_n] = traj.nodes[n].clone();

    // Remap knots through physical time; pin positions exactly.
    let mut new_knots: Vec<Knot> = Vec::with_capacity(boundary.knots.len());
    let mut used = std::collections::BTreeSet::new();
    used.insert(0usize);
    used.insert(new_n);
    for knot in &boundary.knots {
        if knot.index > n {
            return Err(Error::InvalidBoundary(format!(
                "knot index {} outside current grid",
                knot.index
            )));
        }
        let t_knot = traj.times[knot.index];
        let idx = (((t_knot - t0) / h_new).round() as usize).clamp(1, new_n - 1);
        if !used.insert(idx) {
            return Err(Error::RefinementKnotClash(idx));
        }
        nodes[idx]
            .data
            .rows_mut(0, traj.dim())
            .copy_from(&knot.position);
        let mut nk = knot.clone();
        nk.index = idx;
        new_knots.push(nk);
    }

    let refined = Trajectory::new(traj.gamma(), traj.dim(), nodes, new_times)?;
    let mut new_boundary = boundary.clone();
    new_boundary.knots = new_knots;
    Ok((refined, new_boundary))
}

/// Piecewise cubic Hermite interpolant with three-point slope estimates;
/// reproduces affine data exactly.
struct CubicSeries {
    ts: Vec<f64>,
    ys: Vec<f64>,
    ms: Vec<f64>,
}

impl CubicSeries {
    fn build(ts: &[f64], ys: &[f64]) -> Self {
        let n = ts.len();
        let d: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (ts[i + 1] - ts[i]))
            .collect();
        let mut ms = vec![0.0; n];
        ms[0] = d[0];
        ms[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            let w0 = ts[i + 1] - ts[i];
            let w1 = ts[i] - ts[i - 1];
            ms[i] = (w0 * d[i - 1] + w1 * d[i]) / (w0 + w1);
        }
        Self {
            ts: ts.to_vec(),
            ys: ys.to_vec(),
            ms,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.ts.len();
        let i = match self
            .ts
            .binary_search_by(|v| v.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let h = self.ts[i + 1] - self.ts[i];
        let s = ((t - self.ts[i]) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.ms[i] + h01 * self.ys[i + 1] + h11 * h * self.ms[i + 1]
    }
}

/// Proportional step rescaling: `dt_k = c * g_d(x_{k-1}, x_k)` with `c`
/// normalizing the total to `total_t`. Returns the trajectory with the new
/// time grid (the model must be re-bound by the caller).
pub fn sundman_rescale(
    traj: &Trajectory,
    monitor: &(dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync),
    total_t: f64,
) -> Result<Trajectory> {
    if !(total_t > 0.0) {
        return Err(Error::InvalidArgument(
            "total time must be positive".into(),
        ));
    }
    let n = traj.n_intervals();
    let mut g = Vec::with_capacity(n);
    for k in 1..=n {
        let v = monitor(&traj.nodes[k - 1].data, &traj.nodes[k].data);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidMonitor(k));
        }
        g.push(v);
    }
    let c = total_t / g.iter().sum::<f64>();
    let mut times = Vec::with_capacity(n + 1);
    times.push(traj.times[0]);
    for (k, gk) in g.iter().enumerate() {
        times.push(times[k] + c * gk);
    }
    let mut out = traj.clone();
    out.set_times(times)?;
    Ok(out)
}

/// Positive, possibly time-dependent speed `F(t, q, v)` of a direction-
/// dependent metric.
pub trait SpeedFunction: Sync + Send {
    fn speed(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> f64;
}

/// Sequential physical-time recurrence for arc-length parametrized problems:
/// `t_0` kept, `t_k = t_{k-1} + h * F(t_{k-1}, q_{k-1}, (q_k - q_{k-1})/h)`
/// with `h` the uniform parameter step.
pub fn update_time_grid_zermelo(
    traj: &Trajectory,
    speed: &dyn SpeedFunction,
    param_h: f64,
) -> Result<Vec<f64>> {
    if !(param_h > 0.0) {
        return Err(Error::InvalidArgument(
            "parameter step must be positive".into(),
        ));
    }
    let n = traj.n_intervals();
    let mut times = Vec::with_capacity(n + 1);
    times.push(traj.times[0]);
    for k in 1..=n {
        let q_prev = traj.position(k - 1);
        let v = (traj.position(k) - &q_prev) / param_h;
        let f = speed.speed(times[k - 1], &q_prev, &v);
        if !f.is_finite() {
            return Err(Error::ModelError(format!(
                "speed evaluation non-finite at interval {k}"
            )));
        }
        times.push(times[k - 1] + param_h * f);
    }
    Ok(times)
}
