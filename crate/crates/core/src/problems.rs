//! Ready-to-solve example problems: navigation under drift fields, fuel-
//! optimal control, waypoint interpolation and a planar restricted four-body
//! transfer.
//!
//! Everything here is a pure evaluator; the catalog at the bottom wires the
//! Lagrangians to default grids, boundary data and solver settings keyed by a
//! string id.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::discretize::{self, ContinuousLagrangian, Partials, Scheme};
use crate::error::{Error, Result};
use crate::model::DiscreteLagrangianModel;
use crate::solver::{
    self, SolveProblem, SolveReport, SolverConfig, SpeedFunction,
};
use crate::trajectory::{
    make_linear_initial_guess, make_polyline_initial_guess, BoundaryData, Knot, Trajectory,
    TrajectoryNode,
};

/// A planar drift (wind / current) field with the spatial derivatives the
/// analytic Lagrangians need. Components are indexed `0 = x`, `1 = y`.
pub trait WindField: Sync + Send {
    fn time_dependent(&self) -> bool {
        false
    }

    fn eval(&self, t: f64, x: f64, y: f64) -> Vector2<f64>;

    /// Entry `(i, a)` is the derivative of component `i` along coordinate `a`.
    fn jacobian(&self, t: f64, x: f64, y: f64) -> Matrix2<f64>;

    /// Hessian of component `i`; required only by Lagrangians that advertise
    /// analytic Hessians of first-derivative data.
    fn component_hessian(&self, _t: f64, _x: f64, _y: f64, _i: usize) -> Matrix2<f64> {
        unreachable!("second derivatives not provided by this wind field")
    }

    /// Third derivatives of component `i` as `[xxx, xxy, xyy, yyy]`; required
    /// only by fully analytic second-order Lagrangians.
    fn component_third(&self, _t: f64, _x: f64, _y: f64, _i: usize) -> [f64; 4] {
        unreachable!("third derivatives not provided by this wind field")
    }
}

/// One localized vortex centered at `(a, b)`:
/// `strength * (-(y-b), x-a) / (3((x-a)^2 + (y-b)^2) + 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Rotor {
    pub a: f64,
    pub b: f64,
    pub strength: f64,
}

impl Rotor {
    fn eval(&self, x: f64, y: f64) -> Vector2<f64> {
        let u = x - self.a;
        let v = y - self.b;
        let d = 3.0 * (u * u + v * v) + 1.0;
        Vector2::new(-v, u) * (self.strength / d)
    }

    fn jacobian(&self, x: f64, y: f64) -> Matrix2<f64> {
        let u = x - self.a;
        let v = y - self.b;
        let d = 3.0 * (u * u + v * v) + 1.0;
        let d2 = d * d;
        Matrix2::new(
            6.0 * u * v / d2,
            (6.0 * v * v - d) / d2,
            (d - 6.0 * u * u) / d2,
            -6.0 * u * v / d2,
        ) * self.strength
    }
}

/// Superposition of localized vortices (static).
#[derive(Debug, Clone)]
pub struct RotorWind {
    pub rotors: Vec<Rotor>,
}

impl WindField for RotorWind {
    fn eval(&self, _t: f64, x: f64, y: f64) -> Vector2<f64> {
        self.rotors
            .iter()
            .fold(Vector2::zeros(), |acc, r| acc + r.eval(x, y))
    }

    fn jacobian(&self, _t: f64, x: f64, y: f64) -> Matrix2<f64> {
        self.rotors
            .iter()
            .fold(Matrix2::zeros(), |acc, r| acc + r.jacobian(x, y))
    }
}

/// The default static navigation wind: four vortices scaled so the drift
/// stays (barely) below unit speed.
pub fn zermelo_static_wind() -> RotorWind {
    RotorWind {
        rotors: vec![
            Rotor {
                a: 2.0,
                b: 2.0,
                strength: -1.7,
            },
            Rotor {
                a: 4.0,
                b: 4.0,
                strength: -1.7,
            },
            Rotor {
                a: 2.0,
                b: 5.0,
                strength: -1.7,
            },
            Rotor {
                a: 5.0,
                b: 1.0,
                strength: 1.7,
            },
        ],
    }
}

/// The fuel-problem wind `(cos(2x - y - 6), (2/3) sin y + x - 3)`, with
/// closed-form derivatives through third order.
#[derive(Debug, Clone, Copy, Default)]
pub struct FuelWind;

impl WindField for FuelWind {
    fn eval(&self, _t: f64, x: f64, y: f64) -> Vector2<f64> {
        let u = 2.0 * x - y - 6.0;
        Vector2::new(u.cos(), 2.0 / 3.0 * y.sin() + x - 3.0)
    }

    fn jacobian(&self, _t: f64, x: f64, y: f64) -> Matrix2<f64> {
        let u = 2.0 * x - y - 6.0;
        Matrix2::new(-2.0 * u.sin(), u.sin(), 1.0, 2.0 / 3.0 * y.cos())
    }

    fn component_hessian(&self, _t: f64, x: f64, y: f64, i: usize) -> Matrix2<f64> {
        match i {
            0 => {
                let c = (2.0 * x - y - 6.0).cos();
                Matrix2::new(-4.0 * c, 2.0 * c, 2.0 * c, -c)
            }
            _ => Matrix2::new(0.0, 0.0, 0.0, -2.0 / 3.0 * y.sin()),
        }
    }

    fn component_third(&self, _t: f64, x: f64, y: f64, i: usize) -> [f64; 4] {
        match i {
            0 => {
                let s = (2.0 * x - y - 6.0).sin();
                [8.0 * s, -4.0 * s, 2.0 * s, -s]
            }
            _ => [0.0, 0.0, 0.0, -2.0 / 3.0 * y.cos()],
        }
    }
}

/// Rotating sinusoidal wind `0.8 sin(2x + y) (cos(t/2), sin(t/2))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OscillatingWind;

impl WindField for OscillatingWind {
    fn time_dependent(&self) -> bool {
        true
    }

    fn eval(&self, t: f64, x: f64, y: f64) -> Vector2<f64> {
        let m = 0.8 * (2.0 * x + y).sin();
        Vector2::new(m * (t / 2.0).cos(), m * (t / 2.0).sin())
    }

    fn jacobian(&self, t: f64, x: f64, y: f64) -> Matrix2<f64> {
        let c = 0.8 * (2.0 * x + y).cos();
        let (dir_x, dir_y) = ((t / 2.0).cos(), (t / 2.0).sin());
        Matrix2::new(2.0 * c * dir_x, c * dir_x, 2.0 * c * dir_y, c * dir_y)
    }
}

// ---------------------------------------------------------------------------
// Direction-dependent navigation speed (Randers form, Euclidean base metric)
// ---------------------------------------------------------------------------

/// Value and jet gradient of the squared navigation speed `F^2` at
/// `(q, v)`; `None` when the drift reaches unit speed.
///
/// With `s = <W, v>`, `alpha = 1 - |W|^2` and `B = sqrt(alpha |v|^2 + s^2)`,
/// the speed is `F = (B - s) / alpha`. At `v = 0` the squared speed and its
/// gradient vanish (2-homogeneity).
fn randers_f2_with_grad(
    wind: &dyn WindField,
    t: f64,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
) -> Option<(f64, [f64; 4])> {
    let w = wind.eval(t, x, y);
    let alpha = 1.0 - w.norm_squared();
    if !(alpha > 0.0) {
        return None;
    }
    let s = w.x * vx + w.y * vy;
    let p = vx * vx + vy * vy;
    let b = (alpha * p + s * s).sqrt();
    if b == 0.0 {
        return Some((0.0, [0.0; 4]));
    }
    let f = (b - s) / alpha;
    let g = f * f;

    let f_vx = ((alpha * vx + s * w.x) / b - w.x) / alpha;
    let f_vy = ((alpha * vy + s * w.y) / b - w.y) / alpha;

    let jac = wind.jacobian(t, x, y);
    let mut f_q = [0.0_f64; 2];
    for (a, fq) in f_q.iter_mut().enumerate() {
        let wa = Vector2::new(jac[(0, a)], jac[(1, a)]);
        let alpha_a = -2.0 * w.dot(&wa);
        let s_a = wa.x * vx + wa.y * vy;
        let b_a = (alpha_a * p + 2.0 * s * s_a) / (2.0 * b);
        *fq = ((b_a - s_a) * alpha - (b - s) * alpha_a) / (alpha * alpha);
    }

    Some((
        g,
        [
            2.0 * f * f_q[0],
            2.0 * f * f_q[1],
            2.0 * f * f_vx,
            2.0 * f * f_vy,
        ],
    ))
}

/// Navigation speed `F(q, v) = sqrt(a(v, v)) + <b(q), v>` of the drift field
/// (Euclidean base metric): unit own-speed travel time per unit of curve
/// parameter. Positively 1-homogeneous in `v`, positive for `v != 0`.
pub fn randers_f(
    wind: &dyn WindField,
    t: f64,
    q: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    if q.len() != 2 || v.len() != 2 {
        return Err(Error::InvalidArgument(
            "navigation speed is defined on the plane (dim 2)".into(),
        ));
    }
    let w = wind.eval(t, q[0], q[1]);
    let alpha = 1.0 - w.norm_squared();
    if !(alpha > 0.0) {
        return Err(Error::DriftTooStrong(q[0], q[1]));
    }
    let s = w.x * v[0] + w.y * v[1];
    let b = (alpha * v.norm_squared() + s * s).sqrt();
    Ok((b - s) / alpha)
}

/// Squared navigation speed `F^2` (the regular Lagrangian used for solving;
/// defined and zero at `v = 0`).
pub fn randers_f2(
    wind: &dyn WindField,
    t: f64,
    q: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<f64> {
    let f = randers_f(wind, t, q, v)?;
    Ok(f * f)
}

/// First-order Lagrangian `L(t, q, v) = F^2(t, q, v)` of the navigation
/// metric. Supplies analytic gradients; Hessians are differenced from them.
///
/// Where the drift reaches unit speed the evaluation returns NaN, which the
/// solver surfaces as a diverged-node abort; the typed error is available
/// from [`randers_f`].
pub struct RandersSquaredLagrangian {
    wind: Arc<dyn WindField>,
}

impl RandersSquaredLagrangian {
    pub fn new(wind: Arc<dyn WindField>) -> Self {
        Self { wind }
    }
}

impl ContinuousLagrangian for RandersSquaredLagrangian {
    fn gamma(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        2
    }

    fn partials(&self) -> Partials {
        Partials::Gradient
    }

    fn eval(&self, t: f64, jet: &DVector<f64>) -> f64 {
        match randers_f2_with_grad(self.wind.as_ref(), t, jet[0], jet[1], jet[2], jet[3]) {
            Some((g, _)) => g,
            None => f64::NAN,
        }
    }

    fn grad(&self, t: f64, jet: &DVector<f64>) -> DVector<f64> {
        match randers_f2_with_grad(self.wind.as_ref(), t, jet[0], jet[1], jet[2], jet[3]) {
            Some((_, g)) => DVector::from_row_slice(&g),
            None => DVector::from_element(4, f64::NAN),
        }
    }
}

/// Speed evaluator for the sequential time recurrence and travel times.
pub struct RandersSpeed {
    wind: Arc<dyn WindField>,
}

impl RandersSpeed {
    pub fn new(wind: Arc<dyn WindField>) -> Self {
        Self { wind }
    }
}

impl SpeedFunction for RandersSpeed {
    fn speed(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        randers_f(self.wind.as_ref(), t, q, v).unwrap_or(f64::NAN)
    }
}

/// Total travel time of a first-order trajectory under a navigation speed:
/// the end value of the sequential recurrence
/// `t_k = t_{k-1} + h F(t_{k-1}, q_{k-1}, (q_k - q_{k-1})/h)` with uniform
/// curve-parameter step `h`. For static winds the time argument is inert.
pub fn travel_time(
    traj: &Trajectory,
    speed: &dyn SpeedFunction,
    param_h: f64,
) -> Result<f64> {
    if traj.gamma() != 1 {
        return Err(Error::InvalidArgument(
            "travel time is defined for first-order trajectories".into(),
        ));
    }
    let times = solver::update_time_grid_zermelo(traj, speed, param_h)?;
    Ok(times[times.len() - 1] - times[0])
}

// ---------------------------------------------------------------------------
// Fuel-optimal control (first order) and its smoothed second-order variant
// ---------------------------------------------------------------------------

/// Control-energy Lagrangian `L = 1/2 |v - W(q)|^2`; fully analytic.
pub struct DriftControlLagrangian {
    wind: Arc<dyn WindField>,
}

impl DriftControlLagrangian {
    pub fn new(wind: Arc<dyn WindField>) -> Self {
        Self { wind }
    }
}

impl ContinuousLagrangian for DriftControlLagrangian {
    fn gamma(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        2
    }

    fn partials(&self) -> Partials {
        Partials::Full
    }

    fn eval(&self, t: f64, jet: &DVector<f64>) -> f64 {
        let w = self.wind.eval(t, jet[0], jet[1]);
        let e = Vector2::new(jet[2] - w.x, jet[3] - w.y);
        0.5 * e.norm_squared()
    }

    fn grad(&self, t: f64, jet: &DVector<f64>) -> DVector<f64> {
        let (x, y) = (jet[0], jet[1]);
        let w = self.wind.eval(t, x, y);
        let jac = self.wind.jacobian(t, x, y);
        let e = Vector2::new(jet[2] - w.x, jet[3] - w.y);
        let mut out = DVector::zeros(4);
        for a in 0..2 {
            out[a] = -(e.x * jac[(0, a)] + e.y * jac[(1, a)]);
        }
        out[2] = e.x;
        out[3] = e.y;
        out
    }

    fn hess(&self, t: f64, jet: &DVector<f64>) -> DMatrix<f64> {
        let (x, y) = (jet[0], jet[1]);
        let w = self.wind.eval(t, x, y);
        let jac = self.wind.jacobian(t, x, y);
        let h0 = self.wind.component_hessian(t, x, y, 0);
        let h1 = self.wind.component_hessian(t, x, y, 1);
        let e = Vector2::new(jet[2] - w.x, jet[3] - w.y);
        let mut out = DMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                out[(a, b)] = jac[(0, a)] * jac[(0, b)] + jac[(1, a)] * jac[(1, b)]
                    - e.x * h0[(a, b)]
                    - e.y * h1[(a, b)];
            }
        }
        for i in 0..2 {
            for a in 0..2 {
                out[(2 + i, a)] = -jac[(i, a)];
                out[(a, 2 + i)] = -jac[(i, a)];
            }
            out[(2 + i, 2 + i)] = 1.0;
        }
        out
    }
}

/// Second-order Lagrangian adding a weighted control-variation penalty:
/// `L = 1/2 [ |v - W|^2 + c |a - DW(q) v|^2 ]`, fully analytic (uses wind
/// derivatives through third order).
pub struct SmoothedDriftControlLagrangian {
    wind: Arc<dyn WindField>,
    /// Weight of the control-variation term.
    pub c: f64,
}

impl SmoothedDriftControlLagrangian {
    pub fn new(wind: Arc<dyn WindField>, c: f64) -> Self {
        Self { wind, c }
    }

    /// Residuals `(e, d)` of thrust and thrust-variation at a jet point.
    fn residuals(&self, t: f64, jet: &DVector<f64>) -> (Vector2<f64>, Vector2<f64>) {
        let (x, y) = (jet[0], jet[1]);
        let w = self.wind.eval(t, x, y);
        let jac = self.wind.jacobian(t, x, y);
        let v = Vector2::new(jet[2], jet[3]);
        let acc = Vector2::new(jet[4], jet[5]);
        let e = v - w;
        let d = acc - jac * v;
        (e, d)
    }
}

impl ContinuousLagrangian for SmoothedDriftControlLagrangian {
    fn gamma(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        2
    }

    fn partials(&self) -> Partials {
        Partials::Full
    }

    fn eval(&self, t: f64, jet: &DVector<f64>) -> f64 {
        let (e, d) = self.residuals(t, jet);
        0.5 * (e.norm_squared() + self.c * d.norm_squared())
    }

    fn grad(&self, t: f64, jet: &DVector<f64>) -> DVector<f64> {
        let (x, y) = (jet[0], jet[1]);
        let jac = self.wind.jacobian(t, x, y);
        let hw = [
            self.wind.component_hessian(t, x, y, 0),
            self.wind.component_hessian(t, x, y, 1),
        ];
        let v = Vector2::new(jet[2], jet[3]);
        let (e, d) = self.residuals(t, jet);
        let mut out = DVector::zeros(6);
        for a in 0..2 {
            // d(d_i)/d(q_a) = -(H_i v)_a by symmetry of the mixed partials.
            let dd = [-(hw[0] * v)[a], -(hw[1] * v)[a]];
            out[a] = -(e.x * jac[(0, a)] + e.y * jac[(1, a)])
                + self.c * (d.x * dd[0] + d.y * dd[1]);
        }
        for j in 0..2 {
            out[2 + j] = e[j] - self.c * (d.x * jac[(0, j)] + d.y * jac[(1, j)]);
            out[4 + j] = self.c * d[j];
        }
        out
    }

    fn hess(&self, t: f64, jet: &DVector<f64>) -> DMatrix<f64> {
        let (x, y) = (jet[0], jet[1]);
        let jac = self.wind.jacobian(t, x, y);
        let hw = [
            self.wind.component_hessian(t, x, y, 0),
            self.wind.component_hessian(t, x, y, 1),
        ];
        let third = [
            self.wind.component_third(t, x, y, 0),
            self.wind.component_third(t, x, y, 1),
        ];
        // Symmetric third-derivative lookup: index = number of y-derivatives.
        let t3 = |i: usize, a: usize, b: usize, c: usize| third[i][a + b + c];
        let v = Vector2::new(jet[2], jet[3]);
        let (e, d) = self.residuals(t, jet);

        // Jet gradients of the residual components e_i and d_i.
        let mut ge = [[0.0_f64; 6]; 2];
        let mut gd = [[0.0_f64; 6]; 2];
        for i in 0..2 {
            for a in 0..2 {
                ge[i][a] = -jac[(i, a)];
                gd[i][a] = -(hw[i] * v)[a];
                gd[i][2 + a] = -jac[(i, a)];
            }
            ge[i][2 + i] = 1.0;
            gd[i][4 + i] = 1.0;
        }

        let mut out = DMatrix::zeros(6, 6);
        // Gauss-Newton parts: sum_i ge_i ge_i^T + c sum_i gd_i gd_i^T.
        for i in 0..2 {
            for r in 0..6 {
                for s in 0..6 {
                    out[(r, s)] += ge[i][r] * ge[i][s] + self.c * gd[i][r] * gd[i][s];
                }
            }
        }
        // Curvature parts: e_i Hess(e_i) + c d_i Hess(d_i); only q-q and q-v
        // blocks are nonzero.
        for a in 0..2 {
            for b in 0..2 {
                let mut qq = -(e.x * hw[0][(a, b)] + e.y * hw[1][(a, b)]);
                for i in 0..2 {
                    let di = if i == 0 { d.x } else { d.y };
                    let mut third_dot_v = 0.0;
                    for cdx in 0..2 {
                        third_dot_v += t3(i, a, b, cdx) * v[cdx];
                    }
                    qq -= self.c * di * third_dot_v;
                }
                out[(a, b)] += qq;
                // d^2(d_i)/d(q_a)d(v_j) = -H_i[(a, j)].
                let mut qv = 0.0;
                for i in 0..2 {
                    let di = if i == 0 { d.x } else { d.y };
                    qv -= self.c * di * hw[i][(a, b)];
                }
                out[(a, 2 + b)] += qv;
                out[(2 + b, a)] += qv;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Planar restricted four-body transfer (second order, time-dependent)
// ---------------------------------------------------------------------------

/// Physical constants of the four-body model, in the rotating frame where
/// the primary pair is fixed with unit separation (the heavy primary at
/// `(-1, 0)`, the secondary at the origin) and time is measured so the frame
/// rotates at unit rate (one revolution per `2 pi` units).
///
/// The source model prints no numbers; these defaults are standard normalized
/// Sun-Earth-Moon values (documented, not authoritative): mass ratio
/// `3.00348e-6`, lunar mass `0.0123` Earth masses, lunar distance
/// `384400 km / 1 au`, lunar rate `365.25/27.321661 - 1` per unit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct FourBodyConstants {
    pub m_sun: f64,
    pub m_earth: f64,
    pub m_moon: f64,
    /// Radius of the third body's circular orbit around the secondary.
    pub r_moon: f64,
    /// Angular rate of the third body in the rotating frame.
    pub omega_moon: f64,
    /// Initial angle of the third body against the x-axis.
    pub theta_moon0: f64,
    /// Evaluations closer than this to a primary are treated as singular
    /// (0 disables the guard).
    pub softening: f64,
}

impl Default for FourBodyConstants {
    fn default() -> Self {
        let m_earth = 3.00348e-6;
        Self {
            m_sun: 1.0 - m_earth,
            m_earth,
            m_moon: 0.0123 * m_earth,
            r_moon: 384_400.0 / 149_597_870.7,
            omega_moon: 365.25 / 27.321_661 - 1.0,
            theta_moon0: 0.0,
            softening: 0.0,
        }
    }
}

impl FourBodyConstants {
    /// Third-body position at time `t`.
    pub fn moon_position(&self, t: f64) -> Vector2<f64> {
        let theta = self.omega_moon * t + self.theta_moon0;
        Vector2::new(self.r_moon * theta.cos(), self.r_moon * theta.sin())
    }

    /// Gradient and Hessian of the effective potential
    /// `Omega = ((x+1)^2 + y^2)/2 + m_S/r_S + m_E/r_E + m_M/r_M`.
    /// Returns `None` within the softening radius of a primary.
    pub fn potential_derivs(&self, t: f64, x: f64, y: f64) -> Option<(Vector2<f64>, Matrix2<f64>)> {
        let moon = self.moon_position(t);
        let bodies = [
            (Vector2::new(-1.0, 0.0), self.m_sun),
            (Vector2::new(0.0, 0.0), self.m_earth),
            (moon, self.m_moon),
        ];
        let mut grad = Vector2::new(x + 1.0, y);
        let mut hess = Matrix2::identity();
        for (center, mass) in bodies {
            let delta = Vector2::new(x, y) - center;
            let r2 = delta.norm_squared();
            let r = r2.sqrt();
            if r <= self.softening || r == 0.0 {
                return None;
            }
            let r3 = r2 * r;
            let r5 = r3 * r2;
            grad -= delta * (mass / r3);
            hess += (delta * delta.transpose() * 3.0 / r5 - Matrix2::identity() / r3) * mass;
        }
        Some((grad, hess))
    }
}

/// Checks that every node of a trajectory stays outside the softening radius
/// of all primaries.
pub fn four_body_clearance(constants: &FourBodyConstants, traj: &Trajectory) -> Result<()> {
    for (k, node) in traj.nodes.iter().enumerate() {
        let t = traj.times[k];
        if constants
            .potential_derivs(t, node.data[0], node.data[1])
            .is_none()
        {
            return Err(Error::SingularPotential(k));
        }
    }
    Ok(())
}

/// Control-effort Lagrangian of the rotating-frame transfer problem, exactly
/// as modeled: `L = (ax - 2 vy - Omega_x)^2 + (ay - 2 vx - Omega_y)^2`.
/// Analytic gradient (uses the potential Hessian); model Hessians are
/// differenced from it. Singular evaluations yield NaN (see
/// [`four_body_clearance`] for the typed check).
pub struct ControlledOrbitLagrangian {
    pub constants: FourBodyConstants,
}

impl ControlledOrbitLagrangian {
    pub fn new(constants: FourBodyConstants) -> Self {
        Self { constants }
    }
}

impl ContinuousLagrangian for ControlledOrbitLagrangian {
    fn gamma(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        2
    }

    fn partials(&self) -> Partials {
        Partials::Gradient
    }

    fn eval(&self, t: f64, jet: &DVector<f64>) -> f64 {
        match self.constants.potential_derivs(t, jet[0], jet[1]) {
            Some((grad, _)) => {
                let e1 = jet[4] - 2.0 * jet[3] - grad.x;
                let e2 = jet[5] - 2.0 * jet[2] - grad.y;
                e1 * e1 + e2 * e2
            }
            None => f64::NAN,
        }
    }

    fn grad(&self, t: f64, jet: &DVector<f64>) -> DVector<f64> {
        match self.constants.potential_derivs(t, jet[0], jet[1]) {
            Some((grad, hess)) => {
                let e1 = jet[4] - 2.0 * jet[3] - grad.x;
                let e2 = jet[5] - 2.0 * jet[2] - grad.y;
                let mut out = DVector::zeros(6);
                out[0] = -2.0 * (e1 * hess[(0, 0)] + e2 * hess[(1, 0)]);
                out[1] = -2.0 * (e1 * hess[(0, 1)] + e2 * hess[(1, 1)]);
                out[2] = -4.0 * e2;
                out[3] = -4.0 * e1;
                out[4] = 2.0 * e1;
                out[5] = 2.0 * e2;
                out
            }
            None => DVector::from_element(6, f64::NAN),
        }
    }
}

// ---------------------------------------------------------------------------
// Simple calibration Lagrangians
// ---------------------------------------------------------------------------

/// `L = 1/2 v^T M v` with a constant symmetric positive-definite mass matrix.
pub struct QuadraticVelocityLagrangian {
    pub mass: DMatrix<f64>,
}

impl QuadraticVelocityLagrangian {
    pub fn new(mass: DMatrix<f64>) -> Result<Self> {
        if mass.nrows() != mass.ncols() || mass.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "mass matrix must be square and non-empty".into(),
            ));
        }
        if (&mass - mass.transpose()).amax() > 1e-12 * (1.0 + mass.amax()) {
            return Err(Error::InvalidArgument("mass matrix must be symmetric".into()));
        }
        Ok(Self { mass })
    }
}

impl ContinuousLagrangian for QuadraticVelocityLagrangian {
    fn gamma(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.mass.nrows()
    }

    fn partials(&self) -> Partials {
        Partials::Full
    }

    fn eval(&self, _t: f64, jet: &DVector<f64>) -> f64 {
        let n = self.dim();
        let v = jet.rows(n, n);
        0.5 * (&self.mass * v).dot(&v)
    }

    fn grad(&self, _t: f64, jet: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let v = jet.rows(n, n).into_owned();
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(n, n).copy_from(&(&self.mass * v));
        out
    }

    fn hess(&self, _t: f64, _jet: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((n, n), (n, n)).copy_from(&self.mass);
        out
    }
}

/// `L = 1/2 |v|^2 - omega^2/2 |q|^2` (scalar oscillator for `dim = 1`).
pub struct OscillatorLagrangian {
    pub omega: f64,
    pub dim: usize,
}

impl ContinuousLagrangian for OscillatorLagrangian {
    fn gamma(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn partials(&self) -> Partials {
        Partials::Full
    }

    fn eval(&self, _t: f64, jet: &DVector<f64>) -> f64 {
        let n = self.dim;
        let q = jet.rows(0, n);
        let v = jet.rows(n, n);
        0.5 * v.norm_squared() - 0.5 * self.omega * self.omega * q.norm_squared()
    }

    fn grad(&self, _t: f64, jet: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(2 * n);
        for i in 0..n {
            out[i] = -self.omega * self.omega * jet[i];
            out[n + i] = jet[n + i];
        }
        out
    }

    fn hess(&self, _t: f64, _jet: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            out[(i, i)] = -self.omega * self.omega;
            out[(n + i, n + i)] = 1.0;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// Position-pair monitor type for adaptive step rescaling.
pub type MonitorFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync + Send;

/// A problem instance: Lagrangian, discretization, default grid, boundary
/// data and solver settings, keyed by a string id.
#[derive(Clone)]
pub struct ProblemSpec {
    pub id: &'static str,
    pub description: &'static str,
    pub gamma: usize,
    pub dim: usize,
    /// Default interval count of the *starting* grid (refinement may grow it).
    pub default_n: usize,
    /// Independent-variable span: physical time, or curve parameter for
    /// parametric problems.
    pub span: (f64, f64),
    pub scheme: Scheme,
    pub lagrangian: Arc<dyn ContinuousLagrangian>,
    /// Flat left/right end nodes (`gamma * dim` entries).
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Interior waypoints `(time, position)` pinned during solving.
    pub timed_knots: Vec<(f64, Vec<f64>)>,
    /// Initial-guess detours `(fraction of span, position)`; empty = straight
    /// line.
    pub guess_waypoints: Vec<(f64, Vec<f64>)>,
    pub config: SolverConfig,
    /// True when nodes are parametrized by arc parameter while `times` holds
    /// physical sampling instants maintained by the sequential recurrence.
    pub parametric: bool,
    /// Navigation speed for the time recurrence / travel-time reports.
    pub speed: Option<Arc<dyn SpeedFunction>>,
    /// Default monitor for adaptive step rescaling.
    pub monitor: Option<Arc<MonitorFn>>,
}

impl ProblemSpec {
    /// Boundary data for an `n`-interval grid over the default span; timed
    /// knots are mapped to the nearest grid index.
    pub fn boundary_for(&self, n: usize) -> Result<BoundaryData> {
        let left = TrajectoryNode::new(self.left.clone())?;
        let right = TrajectoryNode::new(self.right.clone())?;
        let mut boundary = BoundaryData::new(left, right);
        let h = (self.span.1 - self.span.0) / n as f64;
        for (t, pos) in &self.timed_knots {
            let idx = ((t - self.span.0) / h).round() as usize;
            if idx == 0 || idx >= n {
                return Err(Error::InvalidBoundary(format!(
                    "knot time {t} maps to non-interior index {idx}"
                )));
            }
            boundary.knots.push(Knot::new(idx, pos.clone()));
        }
        boundary.validate(self.gamma, self.dim, n)?;
        Ok(boundary)
    }

    /// Straight-line (or waypoint-polyline) initial guess on `n` intervals;
    /// for parametric problems the physical time grid is initialized with the
    /// sequential recurrence.
    pub fn initial_guess(&self, n: usize) -> Result<Trajectory> {
        let boundary = self.boundary_for(n)?;
        let mut traj = if self.guess_waypoints.is_empty() {
            make_linear_initial_guess(self.gamma, self.dim, &boundary, n, self.span)?
        } else {
            make_polyline_initial_guess(
                self.gamma,
                self.dim,
                &boundary,
                n,
                self.span,
                &self.guess_waypoints,
            )?
        };
        if self.parametric {
            if let Some(speed) = &self.speed {
                let h = (self.span.1 - self.span.0) / n as f64;
                let times = solver::update_time_grid_zermelo(&traj, speed.as_ref(), h)?;
                traj.set_times(times)?;
            }
        }
        Ok(traj)
    }

    /// Discrete model bound to a time grid (used once per grid change).
    pub fn build_model(&self, times: &[f64]) -> Result<Box<dyn DiscreteLagrangianModel>> {
        if self.parametric {
            let h = (self.span.1 - self.span.0) / (times.len() - 1) as f64;
            Ok(Box::new(discretize::discretize_parametric(
                self.lagrangian.clone(),
                self.scheme,
                times.to_vec(),
                h,
            )?))
        } else {
            Ok(Box::new(discretize::discretize(
                self.lagrangian.clone(),
                self.scheme,
                times,
            )?))
        }
    }

    /// Runs the relaxation solver on this problem.
    pub fn solve(
        &self,
        boundary: BoundaryData,
        initial: Trajectory,
        config: &SolverConfig,
        progress: Option<&mut dyn FnMut(usize, f64)>,
    ) -> Result<SolveReport> {
        let factory =
            |times: &[f64]| -> Result<Box<dyn DiscreteLagrangianModel>> { self.build_model(times) };

        let span = self.span;
        let speed = self.speed.clone();
        let recurrence = if self.parametric {
            speed.map(|s| {
                move |traj: &Trajectory| -> Result<Vec<f64>> {
                    let h = (span.1 - span.0) / traj.n_intervals() as f64;
                    solver::update_time_grid_zermelo(traj, s.as_ref(), h)
                }
            })
        } else {
            None
        };

        let monitor = self.monitor.clone();
        let monitor_closure =
            monitor.map(|m| move |a: &DVector<f64>, b: &DVector<f64>| -> f64 { m(a, b) });

        let problem = SolveProblem {
            model_factory: &factory,
            boundary,
            time_recurrence: recurrence
                .as_ref()
                .map(|c| c as &(dyn Fn(&Trajectory) -> Result<Vec<f64>> + Sync)),
            sundman_monitor: monitor_closure
                .as_ref()
                .map(|c| c as &(dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Sync)),
        };
        solver::solve(&problem, initial, config, progress)
    }

    /// Convenience: default boundary, default guess, default config.
    pub fn solve_default(&self) -> Result<SolveReport> {
        self.solve(
            self.boundary_for(self.default_n)?,
            self.initial_guess(self.default_n)?,
            &self.config.clone(),
            None,
        )
    }
}

/// Ids of all cataloged problems.
pub fn problem_ids() -> Vec<&'static str> {
    vec![
        "free_particle",
        "harmonic_oscillator",
        "quadratic",
        "indefinite_toy",
        "zermelo_static",
        "zermelo_time_varying",
        "fuel",
        "fuel_interpolation",
        "four_body",
    ]
}

/// Looks up a cataloged problem by id.
pub fn problem(id: &str) -> Result<ProblemSpec> {
    match id {
        "free_particle" => Ok(free_particle_problem()),
        "harmonic_oscillator" => Ok(harmonic_oscillator_problem()),
        "quadratic" => Ok(quadratic_problem()),
        "indefinite_toy" => Ok(indefinite_toy_problem()),
        "zermelo_static" => Ok(zermelo_static_problem()),
        "zermelo_time_varying" => Ok(zermelo_time_varying_problem()),
        "fuel" => Ok(fuel_problem()),
        "fuel_interpolation" => Ok(fuel_interpolation_problem()),
        "four_body" => Ok(four_body_problem()),
        other => Err(Error::InvalidArgument(format!(
            "unknown problem id '{other}' (known: {})",
            problem_ids().join(", ")
        ))),
    }
}

/// Free particle on a line: affine solutions, residuals contract strictly.
pub fn free_particle_problem() -> ProblemSpec {
    ProblemSpec {
        id: "free_particle",
        description: "free particle on a line (affine solutions)",
        gamma: 1,
        dim: 1,
        default_n: 10,
        span: (0.0, 1.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(QuadraticVelocityLagrangian::new(DMatrix::identity(1, 1)).unwrap()),
        left: vec![0.0],
        right: vec![1.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 2_000,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Scalar oscillator inside the stable step range.
pub fn harmonic_oscillator_problem() -> ProblemSpec {
    ProblemSpec {
        id: "harmonic_oscillator",
        description: "scalar oscillator, step h = 0.1",
        gamma: 1,
        dim: 1,
        default_n: 20,
        span: (0.0, 2.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(OscillatorLagrangian { omega: 1.0, dim: 1 }),
        left: vec![1.0],
        right: vec![0.5],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 20_000,
            tol_residual: 1e-10,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Constant-mass-matrix quadratic model: the iteration matrix spectrum is
/// known in closed form (`rho = cos(pi/N)`).
pub fn quadratic_problem() -> ProblemSpec {
    let mass = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    ProblemSpec {
        id: "quadratic",
        description: "constant mass-matrix quadratic model",
        gamma: 1,
        dim: 2,
        default_n: 16,
        span: (0.0, 1.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(QuadraticVelocityLagrangian::new(mass).unwrap()),
        left: vec![0.0, 0.0],
        right: vec![1.0, 1.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 5_000,
            tol_residual: 1e-12,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Oscillator driven past the stable step bound: per-step Hessians are
/// indefinite and the iteration matrix has spectral radius above one, so no
/// convergence certificate applies.
pub fn indefinite_toy_problem() -> ProblemSpec {
    ProblemSpec {
        id: "indefinite_toy",
        description: "oscillator with step beyond the definiteness bound",
        gamma: 1,
        dim: 1,
        default_n: 20,
        span: (0.0, 38.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(OscillatorLagrangian { omega: 1.0, dim: 1 }),
        left: vec![1.0],
        right: vec![0.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 200,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Minimum-time navigation through four static vortices, solved through the
/// squared navigation speed on the unit parameter interval.
pub fn zermelo_static_problem() -> ProblemSpec {
    let wind: Arc<dyn WindField> = Arc::new(zermelo_static_wind());
    ProblemSpec {
        id: "zermelo_static",
        description: "minimum-time navigation through four static vortices",
        gamma: 1,
        dim: 2,
        default_n: 80,
        span: (0.0, 1.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(RandersSquaredLagrangian::new(wind.clone())),
        left: vec![0.0, 0.0],
        right: vec![6.0, 2.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 120_000,
            tol_residual: 1e-9,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: Some(Arc::new(RandersSpeed::new(wind))),
        monitor: None,
    }
}

/// Minimum-time navigation under a rotating sinusoidal wind; physical times
/// follow the sequential recurrence while nodes stay parameter-equispaced.
pub fn zermelo_time_varying_problem() -> ProblemSpec {
    let wind: Arc<dyn WindField> = Arc::new(OscillatingWind);
    ProblemSpec {
        id: "zermelo_time_varying",
        description: "minimum-time navigation under a rotating sinusoidal wind",
        gamma: 1,
        dim: 2,
        default_n: 50,
        span: (0.0, 1.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(RandersSquaredLagrangian::new(wind.clone())),
        left: vec![1.0, 6.0],
        right: vec![6.0, 2.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 80_000,
            tol_residual: 1e-9,
            ..SolverConfig::default()
        },
        parametric: true,
        speed: Some(Arc::new(RandersSpeed::new(wind))),
        monitor: None,
    }
}

/// Fixed-horizon fuel-optimal transfer through a drift field.
pub fn fuel_problem() -> ProblemSpec {
    let wind: Arc<dyn WindField> = Arc::new(FuelWind);
    ProblemSpec {
        id: "fuel",
        description: "fixed-horizon fuel-optimal transfer through a drift field",
        gamma: 1,
        dim: 2,
        default_n: 200,
        span: (0.0, 30.0),
        scheme: Scheme::Trapezoidal,
        lagrangian: Arc::new(DriftControlLagrangian::new(wind)),
        left: vec![0.0, 0.0],
        right: vec![6.0, 5.0],
        timed_knots: vec![],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 900_000,
            tol_residual: 1e-8,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Second-order fuel problem with a control-variation weight and two interior
/// waypoints; starts coarse and refines toward the target grid.
pub fn fuel_interpolation_problem() -> ProblemSpec {
    let wind: Arc<dyn WindField> = Arc::new(FuelWind);
    ProblemSpec {
        id: "fuel_interpolation",
        description: "second-order fuel problem with pinned interior waypoints",
        gamma: 2,
        dim: 2,
        default_n: 60,
        span: (0.0, 60.0),
        scheme: Scheme::Lobatto2,
        lagrangian: Arc::new(SmoothedDriftControlLagrangian::new(wind, 50.0)),
        left: vec![0.0, 0.0, 0.0, 0.0],
        right: vec![3.0, 5.0, 0.0, 0.0],
        timed_knots: vec![(20.0, vec![1.0, 3.0]), (40.0, vec![5.0, 2.0])],
        guess_waypoints: vec![],
        config: SolverConfig {
            max_iters: 400_000,
            tol_residual: 1e-8,
            refinement: vec![
                crate::solver::RefinementStep {
                    target_n: 120,
                    at_iteration: 6_000,
                },
                crate::solver::RefinementStep {
                    target_n: 240,
                    at_iteration: 18_000,
                },
            ],
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: None,
    }
}

/// Rotating-frame low-thrust transfer from a near-secondary circular orbit to
/// the trailing triangular libration point of the secondary-tertiary pair.
pub fn four_body_problem() -> ProblemSpec {
    let constants = FourBodyConstants::default();
    // Eight days in normalized time (year = 2 pi units).
    let total_t = 8.0 * 2.0 * std::f64::consts::PI / 365.25;
    // Departure: circular orbit of geosynchronous radius around the
    // secondary; velocity is the circular speed corrected to the rotating
    // frame. Arrival: the trailing triangular point of the
    // secondary-tertiary pair at final time, moving with the tertiary's
    // angular rate. All invented defaults (the source model prints none).
    let r_dep = 42_164.0 / 149_597_870.7;
    let v_dep = (constants.m_earth / r_dep).sqrt() - r_dep;
    let theta_end = constants.omega_moon * total_t + constants.theta_moon0;
    let theta_l5 = theta_end - std::f64::consts::FRAC_PI_3;
    let r_m = constants.r_moon;
    let arr = Vector2::new(r_m * theta_l5.cos(), r_m * theta_l5.sin());
    let v_arr = Vector2::new(-theta_l5.sin(), theta_l5.cos()) * (r_m * constants.omega_moon);
    // Guess waypoint beyond the tertiary's orbit, between departure and
    // arrival bearings.
    let waypoint = vec![1.5 * r_m * 0.9_f64.cos(), 1.5 * r_m * 0.9_f64.sin()];

    let monitor: Arc<MonitorFn> = Arc::new(|a: &DVector<f64>, b: &DVector<f64>| {
        let mx = 0.5 * (a[0] + b[0]);
        let my = 0.5 * (a[1] + b[1]);
        (mx * mx + my * my).sqrt().max(1e-5)
    });

    ProblemSpec {
        id: "four_body",
        description: "rotating-frame low-thrust transfer with lunar flyby",
        gamma: 2,
        dim: 2,
        default_n: 100,
        span: (0.0, total_t),
        scheme: Scheme::AlphaTrapezoidal { alpha: 1.0 },
        lagrangian: Arc::new(ControlledOrbitLagrangian::new(constants)),
        left: vec![r_dep, 0.0, 0.0, v_dep],
        right: vec![arr.x, arr.y, v_arr.x, v_arr.y],
        timed_knots: vec![],
        guess_waypoints: vec![(0.5, waypoint)],
        config: SolverConfig {
            max_iters: 250_000,
            tol_residual: 1e-8,
            ..SolverConfig::default()
        },
        parametric: false,
        speed: None,
        monitor: Some(monitor),
    }
}
