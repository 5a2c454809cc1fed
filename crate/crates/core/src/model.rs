//! The discrete-Lagrangian interface consumed by the solver and diagnostics.
//!
//! A model evaluates `L_d(k, x0, x1)` on interval `k` together with its
//! first and second partial derivatives with respect to the two node
//! arguments. Implementors with closed-form derivatives override the
//! `grad*` / `hess*` methods and report `derivatives_analytic() == true`;
//! otherwise the central finite-difference fallback below is used.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite-difference step for first derivatives of `eval`.
pub const FD_GRAD_STEP: f64 = 1e-6;
/// Finite-difference step for second derivatives of `eval`.
pub const FD_HESS_STEP: f64 = 1e-4;

/// Relative symmetry tolerance for analytic second derivatives.
pub const TOL_SYM_ANALYTIC: f64 = 1e-8;
/// Relative symmetry tolerance for finite-differenced second derivatives.
pub const TOL_SYM_FD: f64 = 1e-5;

/// Discrete Lagrangian `L_d(k, x0, x1)` on a bound time grid.
///
/// Nodes are flat vectors of length `gamma() * dim()`. Interval indices run
/// over `0..n_intervals()`.
pub trait DiscreteLagrangianModel: Sync {
    fn gamma(&self) -> usize;
    fn dim(&self) -> usize;
    fn n_intervals(&self) -> usize;

    fn eval(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> f64;

    /// True when the derivative methods are closed-form rather than the
    /// finite-difference fallback.
    fn derivatives_analytic(&self) -> bool {
        false
    }

    /// `D1 L_d`: gradient with respect to `x0`.
    fn grad1(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        fd_gradient(&|y| self.eval(k, y, x1), x0)
    }

    /// `D2 L_d`: gradient with respect to `x1`.
    fn grad2(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        fd_gradient(&|y| self.eval(k, x0, y), x1)
    }

    /// `(D1 L_d, D2 L_d)` in one call; override when one evaluation yields
    /// the whole interval gradient anyway (sweep hot path).
    fn grads(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (self.grad1(k, x0, x1), self.grad2(k, x0, x1))
    }

    /// `D11 L_d`.
    fn hess11(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        symmetrize(&fd_hessian_same(&|y| self.eval(k, y, x1), x0))
    }

    /// `D22 L_d`.
    fn hess22(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        symmetrize(&fd_hessian_same(&|y| self.eval(k, x0, y), x1))
    }

    /// `D12 L_d`: rows index `x0` components, columns index `x1` components.
    fn hess12(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DMatrix<f64> {
        fd_hessian_mixed(&|a, b| self.eval(k, a, b), x0, x1)
    }

    /// `(D11, D12, D22)` in one call; override when one evaluation yields
    /// the whole interval Hessian anyway.
    fn hess_all(
        &self,
        k: usize,
        x0: &DVector<f64>,
        x1: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (
            self.hess11(k, x0, x1),
            self.hess12(k, x0, x1),
            self.hess22(k, x0, x1),
        )
    }

    fn check_interval(&self, k: usize) -> Result<()> {
        if k >= self.n_intervals() {
            Err(Error::IndexError {
                index: k,
                what: "interval",
            })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Central finite-difference gradient with step `1e-6 * (1 + |x|_inf)`.
pub fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let step = FD_GRAD_STEP * (1.0 + x.amax());
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Central finite-difference Hessian (one argument) with step
/// `1e-4 * (1 + |x|_inf)`.
pub fn fd_hessian_same(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let step = FD_HESS_STEP * (1.0 + x.amax());
    let f0 = f(x);
    let mut h = DMatrix::zeros(n, n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            xp[i] = x[i] + step;
            xp[j] = x[j] + step;
            let fpp = f(&xp);
            xp[j] = x[j] - step;
            let fpm = f(&xp);
            xp[i] = x[i] - step;
            let fmm = f(&xp);
            xp[j] = x[j] + step;
            let fmp = f(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Mixed finite-difference Hessian block: rows differentiate `x`, columns
/// differentiate `y`.
pub fn fd_hessian_mixed(
    f: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> DMatrix<f64> {
    let sx = FD_HESS_STEP * (1.0 + x.amax());
    let sy = FD_HESS_STEP * (1.0 + y.amax());
    let mut h = DMatrix::zeros(x.len(), y.len());
    let mut xp = x.clone();
    let mut yp = y.clone();
    for i in 0..x.len() {
        for j in 0..y.len() {
            xp[i] = x[i] + sx;
            yp[j] = y[j] + sy;
            let fpp = f(&xp, &yp);
            yp[j] = y[j] - sy;
            let fpm = f(&xp, &yp);
            xp[i] = x[i] - sx;
            let fmm = f(&xp, &yp);
            yp[j] = y[j] + sy;
            let fmp = f(&xp, &yp);
            xp[i] = x[i];
            yp[j] = y[j];
            h[(i, j)] = (fpp - fpm - fmp + fmm) / (4.0 * sx * sy);
        }
    }
    h
}

/// Worst relative deviation between the model's derivatives and central
/// finite differences of `eval` (for gradients) and of the gradients (for
/// Hessian blocks) at one probe point.
///
/// Returns `(grad_dev, hess_dev)`, each normalized by `1 +` the max-norm of
/// the quantity being checked. Useful for validating hand-written
/// derivatives; the library's own models are tested against it.
pub fn derivative_consistency(
    model: &dyn DiscreteLagrangianModel,
    k: usize,
    x0: &DVector<f64>,
    x1: &DVector<f64>,
) -> (f64, f64) {
    let step0 = 1e-5 * (1.0 + x0.amax());
    let step1 = 1e-5 * (1.0 + x1.amax());

    let g1 = model.grad1(k, x0, x1);
    let g2 = model.grad2(k, x0, x1);
    let g1_fd = fd_gradient_step(&|y| model.eval(k, y, x1), x0, step0);
    let g2_fd = fd_gradient_step(&|y| model.eval(k, x0, y), x1, step1);
    let grad_dev = ((&g1 - &g1_fd).amax() / (1.0 + g1_fd.amax()))
        .max((&g2 - &g2_fd).amax() / (1.0 + g2_fd.amax()));

    let h11 = model.hess11(k, x0, x1);
    let h22 = model.hess22(k, x0, x1);
    let h12 = model.hess12(k, x0, x1);
    let h11_fd = fd_jacobian(&|y| model.grad1(k, y, x1), x0, step0);
    let h22_fd = fd_jacobian(&|y| model.grad2(k, x0, y), x1, step1);
    let h12_fd = fd_jacobian(&|y| model.grad1(k, x0, y), x1, step1);
    let hess_dev = [(&h11, &h11_fd), (&h22, &h22_fd), (&h12, &h12_fd)]
        .iter()
        .map(|(a, b)| (*a - *b).amax() / (1.0 + b.amax()))
        .fold(0.0_f64, f64::max);

    (grad_dev, hess_dev)
}

pub(crate) fn fd_gradient_step(
    f: &dyn Fn(&DVector<f64>) -> f64,
    x: &DVector<f64>,
    step: f64,
) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Central finite-difference Jacobian of a vector map (columns follow the
/// perturbed components of `x`).
pub(crate) fn fd_jacobian(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    step: f64,
) -> DMatrix<f64> {
    let probe = f(x);
    let mut j = DMatrix::zeros(probe.len(), x.len());
    let mut xp = x.clone();
    for c in 0..x.len() {
        xp[c] = x[c] + step;
        let fp = f(&xp);
        xp[c] = x[c] - step;
        let fm = f(&xp);
        xp[c] = x[c];
        j.set_column(c, &((fp - fm) / (2.0 * step)));
    }
    j
}
