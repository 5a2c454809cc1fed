//! Adaptive Dormand-Prince 5(4) integrator with dense output.
//!
//! Used as the high-accuracy reference when measuring discretization orders
//! (exact trajectory segments plus the action integral along them). The
//! dense output is the standard fourth-order interpolant; the action
//! integral is accumulated per accepted step with 10-node Gauss-Legendre
//! quadrature on that interpolant.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Right-hand side of a first-order ODE `y' = f(t, y)`.
pub type Rhs<'a> = &'a dyn Fn(f64, &DVector<f64>) -> DVector<f64>;

/// One accepted step with its dense-output coefficients.
struct Segment {
    t: f64,
    h: f64,
    cont: [DVector<f64>; 5],
}

/// Continuous solution of an integration run.
pub struct OdeSolution {
    segments: Vec<Segment>,
    t_end: f64,
    y_end: DVector<f64>,
    pub n_steps: usize,
}

impl OdeSolution {
    pub fn end_state(&self) -> &DVector<f64> {
        &self.y_end
    }

    /// Dense-output evaluation; `t` must lie within the integrated span.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        if t >= self.t_end {
            return self.y_end.clone();
        }
        let seg = match self
            .segments
            .binary_search_by(|s| s.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => &self.segments[i],
            Err(0) => &self.segments[0],
            Err(i) => &self.segments[i - 1],
        };
        let theta = ((t - seg.t) / seg.h).clamp(0.0, 1.0);
        let [c1, c2, c3, c4, c5] = &seg.cont;
        c1 + theta * (c2 + (1.0 - theta) * (c3 + theta * (c4 + (1.0 - theta) * c5)))
    }
}

const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_21,
    0.433_395_394_129_247_19,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_W: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_35,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// 10-node Gauss-Legendre quadrature of `g` over `[a, b]`.
pub fn gauss_legendre_10(g: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL10_X.iter().zip(GL10_W.iter()) {
        acc += w * (g(mid + half * x) + g(mid - half * x));
    }
    acc * half
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0` with mixed error control
/// `atol + rtol * |y|` per component, landing exactly on `t1`.
pub fn integrate(f: Rhs, t0: f64, t1: f64, y0: &DVector<f64>, rtol: f64, atol: f64) -> Result<OdeSolution> {
    if !(t1 > t0) {
        return Err(Error::InvalidArgument("integration span must be forward".into()));
    }
    let dim = y0.len();
    // Dormand-Prince 5(4) tableau.
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    // Difference between the 5th-order and embedded 4th-order weights.
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    // Dense-output weights (Shampine).
    const D: [f64; 7] = [
        -12715105075.0 / 11282082432.0,
        0.0,
        87487479700.0 / 32700410799.0,
        -10690763975.0 / 1880347072.0,
        701980252875.0 / 199316789632.0,
        -1453857185.0 / 822651844.0,
        69997945.0 / 29380423.0,
    ];

    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, &y);
    let mut h = ((t1 - t0) * 1e-3).min(0.1).max(1e-10);
    let mut segments = Vec::new();
    let mut n_steps = 0usize;
    let max_steps = 10_000_000usize;

    while t < t1 {
        n_steps += 1;
        if n_steps > max_steps {
            return Err(Error::OracleError("step budget exhausted".into()));
        }
        if t + h > t1 {
            h = t1 - t;
        }
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for i in 0..6 {
            let mut yi = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                let aij = A[i][j];
                if aij != 0.0 {
                    yi += kj * (h * aij);
                }
            }
            ks.push(f(t + C[i] * h, &yi));
        }
        // FSAL: stage 7 is the derivative at the step end with 5th-order y1.
        let y1 = {
            let mut acc = y.clone();
            for (j, kj) in ks.iter().take(6).enumerate() {
                let b = A[5][j];
                if b != 0.0 {
                    acc += kj * (h * b);
                }
            }
            acc
        };
        // Error estimate.
        let mut err_sq = 0.0;
        {
            let mut e = DVector::zeros(dim);
            for (j, kj) in ks.iter().enumerate() {
                if E[j] != 0.0 {
                    e += kj * (h * E[j]);
                }
            }
            for i in 0..dim {
                let sc = atol + rtol * y[i].abs().max(y1[i].abs());
                err_sq += (e[i] / sc).powi(2);
            }
        }
        let err = (err_sq / dim as f64).sqrt();
        if err <= 1.0 || h <= 1e-14 * (t1 - t0) {
            // Accept; store dense output.
            let ydiff = &y1 - &y;
            let bspl = &ks[0] * h - &ydiff;
            let cont3 = bspl.clone();
            let cont4 = &ydiff - &ks[6] * h - &bspl;
            let mut cont5 = DVector::zeros(dim);
            for (j, kj) in ks.iter().enumerate() {
                if D[j] != 0.0 {
                    cont5 += kj * (h * D[j]);
                }
            }
            segments.push(Segment {
                t,
                h,
                cont: [y.clone(), ydiff, cont3, cont4, cont5],
            });
            t += h;
            if t1 - t < 1e-14 * (t1 - t0) {
                t = t1;
            }
            y = y1;
            k1 = ks[6].clone();
        }
        let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h = (h * fac).min(t1 - t0);
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::OracleError("step size collapsed".into()));
        }
    }

    Ok(OdeSolution {
        segments,
        t_end: t1,
        y_end: y,
        n_steps,
    })
}

/// Integral of `g(t, y(t))` along an integrated solution, accumulated with
/// 10-node Gauss-Legendre quadrature per accepted step.
pub fn quadrature_along(sol: &OdeSolution, g: &dyn Fn(f64, &DVector<f64>) -> f64) -> f64 {
    let mut acc = 0.0;
    for seg in &sol.segments {
        acc += gauss_legendre_10(&|t| g(t, &sol.eval(t)), seg.t, seg.t + seg.h);
    }
    acc
}
