//! Quadrature discretizations of continuous higher-order Lagrangians.
//!
//! Every scheme here is a two-stage quadrature rule whose stage jets are
//! linear in the pair of end nodes `(x0, x1)`:
//!
//! ```text
//! L_d(k, x0, x1) = (h_k/2) * [ L(tau_1, S_1 (x0,x1)) + L(tau_2, S_2 (x0,x1)) ]
//! ```
//!
//! so first and second derivatives of `L_d` follow from the chain rule
//! through the constant stage matrices `S_i` whenever `L` supplies its own
//! partials. Derivative degree `gamma` is 1 for the trapezoidal rule and 2
//! for the second-order rules.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{self, DiscreteLagrangianModel};
use crate::ode;

/// Which derivatives a continuous Lagrangian supplies in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Partials {
    /// Only `eval`; all model derivatives fall back to finite differences.
    EvalOnly,
    /// `eval` and `grad`; model Hessians finite-difference the gradient.
    Gradient,
    /// `eval`, `grad` and `hess`; the model is fully analytic.
    Full,
}

/// A (possibly time-dependent) Lagrangian `L(t, q, q', .., q^(gamma))`.
///
/// The jet argument is flat: `gamma + 1` blocks of length `dim`, lowest
/// derivative first.
pub trait ContinuousLagrangian: Sync + Send {
    fn gamma(&self) -> usize;
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, jet: &DVector<f64>) -> f64;

    fn partials(&self) -> Partials {
        Partials::EvalOnly
    }

    /// Gradient with respect to the full jet.
    fn grad(&self, _t: f64, _jet: &DVector<f64>) -> DVector<f64> {
        unreachable!("grad queried on an eval-only Lagrangian")
    }

    /// Hessian with respect to the full jet.
    fn hess(&self, _t: f64, _jet: &DVector<f64>) -> DMatrix<f64> {
        unreachable!("hess queried on a Lagrangian without full partials")
    }
}

/// Discretization scheme selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// First-order (`gamma = 1`) trapezoidal rule.
    Trapezoidal,
    /// Second-order trapezoidal family; `alpha` must be nonzero.
    AlphaTrapezoidal { alpha: f64 },
    /// Second-order Lobatto rule with two stages.
    Lobatto2,
    /// Two-stage Gauss rule; `alpha` couples the acceleration stages to the
    /// position difference (default `sqrt(3)` matches the cubic Hermite
    /// accelerations at the Gauss points).
    Gauss2 { alpha: f64 },
}

impl Scheme {
    pub fn gamma(&self) -> usize {
        match self {
            Scheme::Trapezoidal => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scheme::AlphaTrapezoidal { alpha } => {
                if *alpha == 0.0 || !alpha.is_finite() {
                    return Err(Error::InvalidArgument(
                        "alpha-trapezoidal rule needs a nonzero alpha".into(),
                    ));
                }
            }
            Scheme::Gauss2 { alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::InvalidArgument(
                        "gauss2 stage parameter must be finite".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Default Gauss-stage coupling parameter.
pub const GAUSS2_DEFAULT_ALPHA: f64 = 1.732_050_807_568_877_2; // sqrt(3)

/// One quadrature stage on an interval: sampling position `c` in `[0, 1]`,
/// weight `w` (a fraction of `h`), and the `(gamma+1) x 2 gamma` block
/// coefficient matrix of the linear stage map.
struct Stage {
    c: f64,
    w: f64,
    coef: Vec<Vec<f64>>,
}

fn stages_for(scheme: &Scheme, h: f64) -> Vec<Stage> {
    match *scheme {
        Scheme::Trapezoidal => vec![
            Stage {
                c: 0.0,
                w: 0.5,
                coef: vec![vec![1.0, 0.0], vec![-1.0 / h, 1.0 / h]],
            },
            Stage {
                c: 1.0,
                w: 0.5,
                coef: vec![vec![0.0, 1.0], vec![-1.0 / h, 1.0 / h]],
            },
        ],
        Scheme::AlphaTrapezoidal { alpha } => {
            let s = 3.0 * alpha;
            vec![
                Stage {
                    c: 0.0,
                    w: 0.5,
                    coef: vec![
                        vec![1.0, 0.0, 0.0, 0.0],
                        vec![0.0, 1.0, 0.0, 0.0],
                        vec![
                            -2.0 * s / (h * h),
                            -(1.0 + s) / h,
                            2.0 * s / (h * h),
                            (1.0 - s) / h,
                        ],
                    ],
                },
                Stage {
                    c: 1.0,
                    w: 0.5,
                    coef: vec![
                        vec![0.0, 0.0, 1.0, 0.0],
                        vec![0.0, 0.0, 0.0, 1.0],
                        vec![
                            2.0 * s / (h * h),
                            -(1.0 - s) / h,
                            -2.0 * s / (h * h),
                            (1.0 + s) / h,
                        ],
                    ],
                },
            ]
        }
        Scheme::Lobatto2 => vec![
            Stage {
                c: 0.0,
                w: 0.5,
                coef: vec![
                    vec![1.0, 0.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0, 0.0],
                    vec![-6.0 / (h * h), -4.0 / h, 6.0 / (h * h), -2.0 / h],
                ],
            },
            Stage {
                c: 1.0,
                w: 0.5,
                coef: vec![
                    vec![0.0, 0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 0.0, 1.0],
                    vec![6.0 / (h * h), 2.0 / h, -6.0 / (h * h), 4.0 / h],
                ],
            },
        ],
        Scheme::Gauss2 { alpha } => {
            let r3 = 3.0_f64.sqrt();
            let c1 = 0.5 - r3 / 6.0;
            let c2 = 0.5 + r3 / 6.0;
            vec![
                Stage {
                    c: c1,
                    w: 0.5,
                    coef: vec![
                        vec![c2, h / 12.0, c1, -h / 12.0],
                        vec![-1.0 / h, r3 / 6.0, 1.0 / h, -r3 / 6.0],
                        vec![
                            -2.0 * alpha / (h * h),
                            -(1.0 + r3) / h,
                            2.0 * alpha / (h * h),
                            (1.0 - r3) / h,
                        ],
                    ],
                },
                Stage {
                    c: c2,
                    w: 0.5,
                    coef: vec![
                        vec![c1, h / 12.0, c2, -h / 12.0],
                        vec![-1.0 / h, -r3 / 6.0, 1.0 / h, r3 / 6.0],
                        vec![
                            2.0 * alpha / (h * h),
                            -(1.0 - r3) / h,
                            -2.0 * alpha / (h * h),
                            (1.0 + r3) / h,
                        ],
                    ],
                },
            ]
        }
    }
}

/// A discrete Lagrangian obtained from quadrature of a continuous one.
///
/// `times` holds the sampling instants `t_0 .. t_N`; `steps[k]` is the
/// difference-quotient step of interval `k`. For plain problems the steps are
/// `times[k+1] - times[k]`; for problems parametrized by arc length the
/// parameter step is uniform while the sampling instants follow the current
/// physical time grid.
pub struct QuadratureModel {
    lagrangian: Arc<dyn ContinuousLagrangian>,
    scheme: Scheme,
    times: Vec<f64>,
    steps: Vec<f64>,
}

/// Discretizes `lagrangian` on the given time grid; difference-quotient
/// steps are taken from the grid itself (variable steps allowed).
pub fn discretize(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    scheme: Scheme,
    times: &[f64],
) -> Result<QuadratureModel> {
    let steps = times.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    discretize_with_steps(lagrangian, scheme, times.to_vec(), steps)
}

/// Discretizes with a uniform parameter step `h` while sampling the
/// Lagrangian at the supplied physical instants.
pub fn discretize_parametric(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    scheme: Scheme,
    sample_times: Vec<f64>,
    h: f64,
) -> Result<QuadratureModel> {
    let steps = vec![h; sample_times.len().saturating_sub(1)];
    discretize_with_steps(lagrangian, scheme, sample_times, steps)
}

fn discretize_with_steps(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    scheme: Scheme,
    times: Vec<f64>,
    steps: Vec<f64>,
) -> Result<QuadratureModel> {
    scheme.validate()?;
    if lagrangian.gamma() != scheme.gamma() {
        return Err(Error::InvalidArgument(format!(
            "scheme expects gamma = {}, Lagrangian has gamma = {}",
            scheme.gamma(),
            lagrangian.gamma()
        )));
    }
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least one interval".into()));
    }
    if steps.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
        return Err(Error::InvalidArgument(
            "interval steps must be positive".into(),
        ));
    }
    Ok(QuadratureModel {
        lagrangian,
        scheme,
        times,
        steps,
    })
}

impl QuadratureModel {
    fn block_len(&self) -> usize {
        self.lagrangian.dim()
    }

    /// Stage jet `S_i (x0, x1)` as a flat `(gamma+1)*dim` vector.
    fn stage_jet(&self, stage: &Stage, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        let n = self.block_len();
        let g = self.gamma();
        let mut jet = DVector::zeros((g + 1) * n);
        for (r, row) in stage.coef.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = if j < g { &x0 } else { &x1 };
                let off = (j % g) * n;
                for i in 0..n {
                    jet[r * n + i] += w * src[off + i];
                }
            }
        }
        jet
    }

    fn stage_time(&self, k: usize, stage: &Stage) -> f64 {
        self.times[k] * (1.0 - stage.c) + self.times[k + 1] * stage.c
    }

    /// Chain-ruled gradient over the full node pair (length `2*gamma*dim`).
    fn chain_grad(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        let n = self.block_len();
        let g = self.gamma();
        let h = self.steps[k];
        let mut out = DVector::zeros(2 * g * n);
        for stage in stages_for(&self.scheme, h) {
            let jet = self.stage_jet(&stage, x0, x1);
            let gl = self.lagrangian.grad(self.stage_time(k, &stage), &jet);
            let w = stage.w * h;
            for (r, row) in stage.coef.iter().enumerate() {
                for (j, &cjw) in row.iter().enumerate() {
                    if cjw == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        out[j * n + i] += w * cjw * gl[r * n + i];
                    }
                }
            }
        }
        out
    }

    /// Chain-ruled Hessian over the full node pair.
    fn chain_hess(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        let n = self.block_len();
        let g = self.gamma();
        let h = self.steps[k];
        let mut out = DMatrix::zeros(2 * g * n, 2 * g * n);
        for stage in stages_for(&self.scheme, h) {
            let jet = self.stage_jet(&stage, x0, x1);
            let hl = self.lagrangian.hess(self.stage_time(k, &stage), &jet);
            let w = stage.w * h;
            for (r, row_r) in stage.coef.iter().enumerate() {
                for (jr, &cr) in row_r.iter().enumerate() {
                    if cr == 0.0 {
                        continue;
                    }
                    for (s, row_s) in stage.coef.iter().enumerate() {
                        for (js, &cs) in row_s.iter().enumerate() {
                            if cs == 0.0 {
                                continue;
                            }
                            let f = w * cr * cs;
                            for i in 0..n {
                                for l in 0..n {
                                    out[(jr * n + i, js * n + l)] +=
                                        f * hl[(r * n + i, s * n + l)];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Jacobian of the chain-ruled gradient with respect to one node
    /// argument, by central differences. Rows span the full gradient
    /// `(D1 L_d; D2 L_d)`; columns span the perturbed node.
    fn grad_jacobian(
        &self,
        k: usize,
        x0: &DVector<f64>,
        x1: &DVector<f64>,
        wrt_first: bool,
    ) -> DMatrix<f64> {
        let n = self.block_len() * self.gamma();
        let step = 1e-6 * (1.0 + x0.amax().max(x1.amax()));
        let mut out = DMatrix::zeros(2 * n, n);
        let mut p = if wrt_first { x0.clone() } else { x1.clone() };
        for c in 0..n {
            let orig = p[c];
            p[c] = orig + step;
            let fp = if wrt_first {
                self.chain_grad(k, &p, x1)
            } else {
                self.chain_grad(k, x0, &p)
            };
            p[c] = orig - step;
            let fm = if wrt_first {
                self.chain_grad(k, &p, x1)
            } else {
                self.chain_grad(k, x0, &p)
            };
            p[c] = orig;
            out.set_column(c, &((fp - fm) / (2.0 * step)));
        }
        out
    }
}

impl DiscreteLagrangianModel for QuadratureModel {
    fn gamma(&self) -> usize {
        self.scheme.gamma()
    }

    fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    fn n_intervals(&self) -> usize {
        self.steps.len()
    }

    fn eval(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> f64 {
        let h = self.steps[k];
        let mut acc = 0.0;
        for stage in stages_for(&self.scheme, h) {
            let jet = self.stage_jet(&stage, x0, x1);
            acc += stage.w * h * self.lagrangian.eval(self.stage_time(k, &stage), &jet);
        }
        acc
    }

    fn derivatives_analytic(&self) -> bool {
        self.lagrangian.partials() == Partials::Full
    }

    fn grad1(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        if self.lagrangian.partials() >= Partials::Gradient {
            let n = self.gamma() * self.dim();
            self.chain_grad(k, x0, x1).rows(0, n).into_owned()
        } else {
            model::fd_gradient(&|y| self.eval(k, y, x1), x0)
        }
    }

    fn grad2(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        if self.lagrangian.partials() >= Partials::Gradient {
            let n = self.gamma() * self.dim();
            self.chain_grad(k, x0, x1).rows(n, n).into_owned()
        } else {
            model::fd_gradient(&|y| self.eval(k, x0, y), x1)
        }
    }

    fn grads(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        if self.lagrangian.partials() >= Partials::Gradient {
            let n = self.gamma() * self.dim();
            let full = self.chain_grad(k, x0, x1);
            (full.rows(0, n).into_owned(), full.rows(n, n).into_owned())
        } else {
            (self.grad1(k, x0, x1), self.grad2(k, x0, x1))
        }
    }

    fn hess11(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        let n = self.gamma() * self.dim();
        match self.lagrangian.partials() {
            Partials::Full => self.chain_hess(k, x0, x1).view((0, 0), (n, n)).into_owned(),
            Partials::Gradient => model::symmetrize(
                &self
                    .grad_jacobian(k, x0, x1, true)
                    .rows(0, n)
                    .into_owned(),
            ),
            Partials::EvalOnly => {
                model::symmetrize(&model::fd_hessian_same(&|y| self.eval(k, y, x1), x0))
            }
        }
    }

    fn hess22(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        let n = self.gamma() * self.dim();
        match self.lagrangian.partials() {
            Partials::Full => self.chain_hess(k, x0, x1).view((n, n), (n, n)).into_owned(),
            Partials::Gradient => model::symmetrize(
                &self
                    .grad_jacobian(k, x0, x1, false)
                    .rows(n, n)
                    .into_owned(),
            ),
            Partials::EvalOnly => {
                model::symmetrize(&model::fd_hessian_same(&|y| self.eval(k, x0, y), x1))
            }
        }
    }

    fn hess12(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        let n = self.gamma() * self.dim();
        match self.lagrangian.partials() {
            Partials::Full => self.chain_hess(k, x0, x1).view((0, n), (n, n)).into_owned(),
            Partials::Gradient => self
                .grad_jacobian(k, x0, x1, false)
                .rows(0, n)
                .into_owned(),
            Partials::EvalOnly => {
                model::fd_hessian_mixed(&|a, b| self.eval(k, a, b), x0, x1)
            }
        }
    }

    fn hess_all(
        &self,
        k: usize,
        x0: &DVector<f64>,
        x1: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.gamma() * self.dim();
        match self.lagrangian.partials() {
            Partials::Full => {
                let full = self.chain_hess(k, x0, x1);
                (
                    full.view((0, 0), (n, n)).into_owned(),
                    full.view((0, n), (n, n)).into_owned(),
                    full.view((n, n), (n, n)).into_owned(),
                )
            }
            Partials::Gradient => {
                let left = self.grad_jacobian(k, x0, x1, true);
                let right = self.grad_jacobian(k, x0, x1, false);
                (
                    model::symmetrize(&left.rows(0, n).into_owned()),
                    right.rows(0, n).into_owned(),
                    model::symmetrize(&right.rows(n, n).into_owned()),
                )
            }
            Partials::EvalOnly => (
                self.hess11(k, x0, x1),
                self.hess12(k, x0, x1),
                self.hess22(k, x0, x1),
            ),
        }
    }
}

/// Named constructor: first-order trapezoidal discretization.
pub fn trapezoidal_first_order(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    times: &[f64],
) -> Result<QuadratureModel> {
    discretize(lagrangian, Scheme::Trapezoidal, times)
}

/// Named constructor: second-order trapezoidal family.
pub fn alpha_trapezoidal_second_order(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    alpha: f64,
    times: &[f64],
) -> Result<QuadratureModel> {
    discretize(lagrangian, Scheme::AlphaTrapezoidal { alpha }, times)
}

/// Named constructor: second-order two-stage Lobatto discretization.
pub fn lobatto2_second_order(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    times: &[f64],
) -> Result<QuadratureModel> {
    discretize(lagrangian, Scheme::Lobatto2, times)
}

/// Named constructor: two-stage Gauss discretization.
pub fn gauss2_second_order(
    lagrangian: Arc<dyn ContinuousLagrangian>,
    alpha: f64,
    times: &[f64],
) -> Result<QuadratureModel> {
    discretize(lagrangian, Scheme::Gauss2 { alpha }, times)
}

/// Probe data for order measurement: initial states of the Euler-Lagrange
/// equations as a first-order system (flat jets `q, q', .., q^(2 gamma - 1)`)
/// and the base step `h0`.
pub struct OrderProbe {
    pub initial_states: Vec<DVector<f64>>,
    pub h0: f64,
}

/// Result of an order measurement.
#[derive(Debug, Clone)]
pub struct OrderEstimate {
    /// Measured consistency order (slope of the one-step defect minus one).
    pub order: f64,
    /// Raw log-log slope of the defect against the step.
    pub slope: f64,
    /// `(h, mean defect)` samples, largest step first.
    pub errors: Vec<(f64, f64)>,
    /// All defects sat at the integration accuracy floor; `order` is
    /// meaningless (reported as infinity).
    pub at_rounding_floor: bool,
}

/// Measures the consistency order of `scheme` applied to `lagrangian`.
///
/// `top_derivative(t, state)` closes the Euler-Lagrange equations: it returns
/// `q^(2 gamma)` given the flat jet of lower derivatives. For each probe
/// state and each step in `{h0, h0/2, h0/4, h0/8}` the exact flow and action
/// are computed with the adaptive reference integrator (tolerance `1e-12`),
/// and the defect `|L_d(x0, x1) - action|` is fit against the step.
pub fn estimate_order(
    lagrangian: &Arc<dyn ContinuousLagrangian>,
    scheme: Scheme,
    top_derivative: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>,
    probe: &OrderProbe,
) -> Result<OrderEstimate> {
    scheme.validate()?;
    let lagr = lagrangian.clone();
    let build = move |h: f64| -> Result<Box<dyn DiscreteLagrangianModel>> {
        Ok(Box::new(discretize(lagr.clone(), scheme, &[0.0, h])?))
    };
    estimate_order_with(lagrangian, &build, top_derivative, probe)
}

/// Same as [`estimate_order`] for an arbitrary one-interval model family
/// parametrized by the step (used to probe hand-built discrete Lagrangians,
/// e.g. closed-form exact ones).
pub fn estimate_order_with(
    lagrangian: &Arc<dyn ContinuousLagrangian>,
    build: &dyn Fn(f64) -> Result<Box<dyn DiscreteLagrangianModel>>,
    top_derivative: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>,
    probe: &OrderProbe,
) -> Result<OrderEstimate> {
    let g = lagrangian.gamma();
    let n = lagrangian.dim();
    if probe.initial_states.is_empty() || !(probe.h0 > 0.0) {
        return Err(Error::InvalidArgument(
            "order probe needs states and a positive base step".into(),
        ));
    }
    for s in &probe.initial_states {
        if s.len() != 2 * g * n {
            return Err(Error::InvalidArgument(format!(
                "probe states must be flat jets of length {}",
                2 * g * n
            )));
        }
    }

    let rhs = |t: f64, y: &DVector<f64>| -> DVector<f64> {
        let mut dy = DVector::zeros(2 * g * n);
        for b in 0..(2 * g - 1) {
            for i in 0..n {
                dy[b * n + i] = y[(b + 1) * n + i];
            }
        }
        let top = top_derivative(t, y);
        for i in 0..n {
            dy[(2 * g - 1) * n + i] = top[i];
        }
        dy
    };

    let mut errors = Vec::new();
    let mut scale = 0.0_f64;
    for j in 0..4 {
        let h = probe.h0 / 2f64.powi(j);
        let model = build(h)?;
        let mut acc = 0.0;
        for state in &probe.initial_states {
            let sol = ode::integrate(&rhs, 0.0, h, state, 1e-12, 1e-12)?;
            let action = ode::quadrature_along(&sol, &|t, y| {
                lagrangian.eval(t, &y.rows(0, (g + 1) * n).into_owned())
            });
            let x0 = state.rows(0, g * n).into_owned();
            let x1 = sol.end_state().rows(0, g * n).into_owned();
            acc += (model.eval(0, &x0, &x1) - action).abs();
            scale = scale.max(action.abs());
        }
        errors.push((h, acc / probe.initial_states.len() as f64));
    }

    let floor = 1e-11 * (1.0 + scale);
    if errors.iter().all(|(_, e)| *e < floor) {
        return Ok(OrderEstimate {
            order: f64::INFINITY,
            slope: f64::INFINITY,
            errors,
            at_rounding_floor: true,
        });
    }

    // Least-squares slope of log(err) against log(h).
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .map(|(h, e)| (h.ln(), e.max(1e-300).ln()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);

    Ok(OrderEstimate {
        order: slope - 1.0,
        slope,
        errors,
        at_rounding_floor: false,
    })
}
