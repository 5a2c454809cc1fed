//! Trajectories, boundary data and discrete Euler-Lagrange residuals.
//!
//! A node is a flat vector of length `gamma * dim`: the configuration point
//! followed by its derivative blocks up to degree `gamma - 1`. A trajectory
//! is `N + 1` nodes together with a strictly increasing time grid of the same
//! length. Node `0` and node `N` are boundary data; interior nodes are the
//! unknowns of the discrete Euler-Lagrange boundary-value problem.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::model::DiscreteLagrangianModel;

/// One trajectory node: configuration plus derivative blocks, flattened.
///
/// Block `d` (degree-`d` derivative) occupies `data[d*dim .. (d+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryNode {
    pub data: DVector<f64>,
}

impl TrajectoryNode {
    /// Builds a node from raw components; rejects non-finite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("node must be non-empty".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "node contains non-finite entries".into(),
            ));
        }
        Ok(Self {
            data: DVector::from_vec(data),
        })
    }

    pub fn from_vector(data: DVector<f64>) -> Result<Self> {
        Self::new(data.as_slice().to_vec())
    }

    /// Derivative block `degree` for a node of spatial dimension `dim`.
    pub fn block(&self, degree: usize, dim: usize) -> DVector<f64> {
        self.data.rows(degree * dim, dim).into_owned()
    }
}

/// An interior node pinned by the problem statement.
///
/// Only the configuration block is prescribed. With `pin_full_node` the
/// derivative blocks are frozen as well (at whatever the initial guess put
/// there); otherwise they stay free and are relaxed by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub index: usize,
    pub position: DVector<f64>,
    pub pin_full_node: bool,
}

impl Knot {
    pub fn new(index: usize, position: Vec<f64>) -> Self {
        Self {
            index,
            position: DVector::from_vec(position),
            pin_full_node: false,
        }
    }
}

/// Fixed data of the boundary-value problem: both end nodes plus optional
/// interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub left: TrajectoryNode,
    pub right: TrajectoryNode,
    pub knots: Vec<Knot>,
}

impl BoundaryData {
    pub fn new(left: TrajectoryNode, right: TrajectoryNode) -> Self {
        Self {
            left,
            right,
            knots: Vec::new(),
        }
    }

    pub fn with_knots(mut self, knots: Vec<Knot>) -> Self {
        self.knots = knots;
        self
    }

    /// Checks shapes against `(gamma, dim)` and knot indices against the
    /// interior range `1..n_intervals`.
    pub fn validate(&self, gamma: usize, dim: usize, n_intervals: usize) -> Result<()> {
        let len = gamma * dim;
        if self.left.data.len() != len || self.right.data.len() != len {
            return Err(Error::InvalidBoundary(format!(
                "end nodes must have length {len} (= gamma*dim)"
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for knot in &self.knots {
            if knot.index == 0 || knot.index >= n_intervals {
                return Err(Error::InvalidBoundary(format!(
                    "knot index {} outside interior range 1..{}",
                    knot.index, n_intervals
                )));
            }
            if knot.position.len() != dim {
                return Err(Error::InvalidBoundary(format!(
                    "knot at index {} must prescribe {dim} position components",
                    knot.index
                )));
            }
            if !seen.insert(knot.index) {
                return Err(Error::InvalidBoundary(format!(
                    "duplicate knot index {}",
                    knot.index
                )));
            }
        }
        Ok(())
    }
}

/// Discrete trajectory: `n_intervals + 1` nodes on a strictly increasing
/// time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    gamma: usize,
    dim: usize,
    pub nodes: Vec<TrajectoryNode>,
    pub times: Vec<f64>,
}

impl Trajectory {
    pub fn new(
        gamma: usize,
        dim: usize,
        nodes: Vec<TrajectoryNode>,
        times: Vec<f64>,
    ) -> Result<Self> {
        if gamma == 0 || dim == 0 {
            return Err(Error::InvalidArgument(
                "gamma and dim must be positive".into(),
            ));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(
                "a trajectory needs at least two nodes".into(),
            ));
        }
        if times.len() != nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "time grid has {} entries for {} nodes",
                times.len(),
                nodes.len()
            )));
        }
        let len = gamma * dim;
        if let Some(bad) = nodes.iter().position(|nd| nd.data.len() != len) {
            return Err(Error::InvalidArgument(format!(
                "node {bad} has length {} but gamma*dim = {len}",
                nodes[bad].data.len()
            )));
        }
        check_times(&times)?;
        Ok(Self {
            gamma,
            dim,
            nodes,
            times,
        })
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Flat node length `gamma * dim`.
    pub fn node_len(&self) -> usize {
        self.gamma * self.dim
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Replaces the time grid, preserving the strict-monotonicity invariant.
    pub fn set_times(&mut self, times: Vec<f64>) -> Result<()> {
        if times.len() != self.nodes.len() {
            return Err(Error::InvalidArgument(
                "time grid length must match node count".into(),
            ));
        }
        check_times(&times)?;
        self.times = times;
        Ok(())
    }

    /// Configuration block of node `k`.
    pub fn position(&self, k: usize) -> DVector<f64> {
        self.nodes[k].block(0, self.dim)
    }

    /// Adds uniform noise in `[-amplitude, amplitude]` to every component of
    /// every interior node. Deterministic in `seed`.
    pub fn perturb_interior(&self, amplitude: f64, seed: u64) -> Trajectory {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        for node in &mut out.nodes[1..self.nodes.len() - 1] {
            for v in node.data.iter_mut() {
                *v += rng.random_range(-amplitude..=amplitude);
            }
        }
        out
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("non-finite time values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Builds the standard straight-line initial guess on a uniform grid over
/// `span`.
///
/// The configuration block is piecewise linear through the end points and any
/// knots; each derivative block is interpolated affinely between its boundary
/// values (knots do not constrain derivative blocks).
pub fn make_linear_initial_guess(
    gamma: usize,
    dim: usize,
    boundary: &BoundaryData,
    n_intervals: usize,
    span: (f64, f64),
) -> Result<Trajectory> {
    if n_intervals < 2 {
        return Err(Error::InvalidArgument(
            "need at least two intervals".into(),
        ));
    }
    if !(span.1 > span.0) {
        return Err(Error::InvalidArgument(
            "time span must have positive length".into(),
        ));
    }
    boundary.validate(gamma, dim, n_intervals)?;

    // Anchors for the position polyline: (index, position), sorted.
    let mut anchors: Vec<(usize, DVector<f64>)> = vec![(0, boundary.left.block(0, dim))];
    let mut knots = boundary.knots.clone();
    knots.sort_by_key(|k| k.index);
    for knot in &knots {
        anchors.push((knot.index, knot.position.clone()));
    }
    anchors.push((n_intervals, boundary.right.block(0, dim)));

    let h = (span.1 - span.0) / n_intervals as f64;
    let times: Vec<f64> = (0..=n_intervals).map(|k| span.0 + k as f64 * h).collect();

    let mut nodes = Vec::with_capacity(n_intervals + 1);
    for k in 0..=n_intervals {
        let mut data = DVector::zeros(gamma * dim);
        // Position: piecewise linear through the anchors.
        let seg = anchors.windows(2).find(|w| k <= w[1].0).expect("anchors cover 0..=N");
        let (i0, p0) = (&seg[0].0, &seg[0].1);
        let (i1, p1) = (&seg[1].0, &seg[1].1);
        let s = (k - i0) as f64 / (i1 - i0) as f64;
        data.rows_mut(0, dim).copy_from(&(p0 * (1.0 - s) + p1 * s));
        // Derivative blocks: affine between the boundary blocks.
        let u = k as f64 / n_intervals as f64;
        for d in 1..gamma {
            let left = boundary.left.block(d, dim);
            let right = boundary.right.block(d, dim);
            data.rows_mut(d * dim, dim)
                .copy_from(&(&left * (1.0 - u) + &right * u));
        }
        nodes.push(TrajectoryNode { data });
    }
    Trajectory::new(gamma, dim, nodes, times)
}

/// Piecewise-straight-line guess through explicit waypoints.
///
/// `waypoints` are `(fraction, position)` pairs with fractions strictly
/// inside `(0, 1)`; the position polyline passes through them at the nearest
/// grid node. For `gamma >= 2` the velocity block of interior nodes is set to
/// the local slope of the polyline; higher derivative blocks stay zero. End
/// nodes keep their full boundary values.
pub fn make_polyline_initial_guess(
    gamma: usize,
    dim: usize,
    boundary: &BoundaryData,
    n_intervals: usize,
    span: (f64, f64),
    waypoints: &[(f64, Vec<f64>)],
) -> Result<Trajectory> {
    let mut pseudo = boundary.clone();
    pseudo.knots = Vec::new();
    for (frac, pos) in waypoints {
        if !(*frac > 0.0 && *frac < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "waypoint fraction {frac} outside (0, 1)"
            )));
        }
        let idx = (frac * n_intervals as f64).round() as usize;
        let idx = idx.clamp(1, n_intervals - 1);
        pseudo.knots.push(Knot::new(idx, pos.clone()));
    }
    pseudo
        .knots
        .sort_by_key(|k| k.index);
    pseudo.knots.dedup_by_key(|k| k.index);
    let mut traj = make_linear_initial_guess(gamma, dim, &pseudo, n_intervals, span)?;
    if gamma >= 2 {
        let h = (span.1 - span.0) / n_intervals as f64;
        for k in 1..n_intervals {
            let slope = (traj.position(k + 1) - traj.position(k - 1)) / (2.0 * h);
            traj.nodes[k].data.rows_mut(dim, dim).copy_from(&slope);
            for d in 2..gamma {
                traj.nodes[k].data.rows_mut(d * dim, dim).fill(0.0);
            }
        }
    }
    Ok(traj)
}

/// Discrete Euler-Lagrange residual at interior node `k`:
/// `D2 L_d(x_{k-1}, x_k) + D1 L_d(x_k, x_{k+1})`.
pub fn del_residual(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
    k: usize,
) -> Result<DVector<f64>> {
    let n = traj.n_intervals();
    if k == 0 || k >= n {
        return Err(Error::IndexError {
            index: k,
            what: "interior node",
        });
    }
    let r = model.grad2(k - 1, &traj.nodes[k - 1].data, &traj.nodes[k].data)
        + model.grad1(k, &traj.nodes[k].data, &traj.nodes[k + 1].data);
    Ok(r)
}

/// Max-norm of the discrete Euler-Lagrange residual over all interior nodes.
pub fn max_residual(model: &dyn DiscreteLagrangianModel, traj: &Trajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..traj.n_intervals() {
        let r = del_residual(model, traj, k)?;
        worst = worst.max(r.amax());
    }
    Ok(worst)
}
