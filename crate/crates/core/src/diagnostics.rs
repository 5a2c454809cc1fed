//! Convergence certificates for the relaxation sweeps.
//!
//! The Hessian of the discrete action restricted to the interior nodes is
//! block tridiagonal: diagonal blocks `D_k = D22 L_d(x_{k-1}, x_k) +
//! D11 L_d(x_k, x_{k+1})`, off-diagonal blocks `C_k = D12 L_d(x_k, x_{k+1})`.
//! Three nested certificates are computed at a trajectory:
//!
//! 1. per-interval: every `H_k = [[A_k, C_k], [C_k^T, B_k]]` positive
//!    semidefinite with all `A_k` or all `B_k` positive definite — this
//!    forces the assembled Hessian positive definite and both sweep variants
//!    contract locally;
//! 2. assembled positive definiteness, checked directly by a block LDL^T
//!    recurrence (weaker hypothesis, same conclusion);
//! 3. a power-iteration estimate of the spectral radius of the Jacobi
//!    iteration matrix `J = -D^{-1} C`, which certifies the one-step
//!    Newton sweep alone when `rho(J) < 1`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrices::ldlt_pivots;
use crate::model::{symmetrize, DiscreteLagrangianModel};
use crate::trajectory::Trajectory;

/// Scale factor for positive-(semi)definiteness thresholds: a block passes
/// with tolerance `PSD_TOL_SCALE * max_abs_entry`.
pub const PSD_TOL_SCALE: f64 = 1e-9;

/// Power-iteration budget for the spectral-radius estimate.
pub const POWER_ITERS: usize = 200;
/// Relative stagnation tolerance of the spectral-radius estimate.
pub const POWER_STAGNATION_TOL: f64 = 1e-8;

/// The interior-node Hessian of the discrete action in block-tridiagonal
/// form. `diag[i]` is `D_(i+1)`; `offdiag[i]` couples interior nodes
/// `i+1` and `i+2`.
#[derive(Debug, Clone)]
pub struct BlockTridiagonalHessian {
    pub block_size: usize,
    pub diag: Vec<DMatrix<f64>>,
    pub offdiag: Vec<DMatrix<f64>>,
}

impl BlockTridiagonalHessian {
    pub fn n_blocks(&self) -> usize {
        self.diag.len()
    }

    /// Dense assembly (for oracles and small problems).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let s = self.block_size;
        let m = self.diag.len();
        let mut out = DMatrix::zeros(m * s, m * s);
        for (i, d) in self.diag.iter().enumerate() {
            out.view_mut((i * s, i * s), (s, s)).copy_from(d);
        }
        for (i, c) in self.offdiag.iter().enumerate() {
            out.view_mut((i * s, (i + 1) * s), (s, s)).copy_from(c);
            out.view_mut(((i + 1) * s, i * s), (s, s))
                .copy_from(&c.transpose());
        }
        out
    }

    /// Positive definiteness via the block LDL^T recurrence
    /// `S_1 = D_1`, `S_{k+1} = D_{k+1} - C_k^T S_k^{-1} C_k`.
    pub fn is_positive_definite(&self) -> bool {
        if self.diag.is_empty() {
            return true;
        }
        let tol = PSD_TOL_SCALE
            * self
                .diag
                .iter()
                .map(|d| d.amax())
                .fold(0.0_f64, f64::max);
        let mut schur = self.diag[0].clone();
        for i in 0..self.diag.len() {
            match ldlt_pivots(&symmetrize(&schur)) {
                Some(p) if p.iter().all(|&d| d > tol) => {}
                _ => return false,
            }
            if i + 1 < self.diag.len() {
                let c = &self.offdiag[i];
                let solved = match schur.clone().lu().solve(c) {
                    Some(s) => s,
                    None => return false,
                };
                schur = &self.diag[i + 1] - c.transpose() * solved;
            }
        }
        true
    }
}

/// Per-interval Hessian `H_k = [[A_k, C_k], [C_k^T, B_k]]` of `L_d` at the
/// nodes `(x0, x1)`.
pub fn per_step_hessian(
    model: &dyn DiscreteLagrangianModel,
    k: usize,
    x0: &DVector<f64>,
    x1: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    model.check_interval(k)?;
    let s = model.gamma() * model.dim();
    let (a, c, b) = model.hess_all(k, x0, x1);
    let mut out = DMatrix::zeros(2 * s, 2 * s);
    out.view_mut((0, 0), (s, s)).copy_from(&a);
    out.view_mut((0, s), (s, s)).copy_from(&c);
    out.view_mut((s, 0), (s, s)).copy_from(&c.transpose());
    out.view_mut((s, s), (s, s)).copy_from(&b);
    Ok(out)
}

/// Assembles the interior-node Hessian of the discrete action at `traj`.
pub fn assemble_hessian(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
) -> Result<BlockTridiagonalHessian> {
    let n = traj.n_intervals();
    if model.n_intervals() != n {
        return Err(Error::ModelError(format!(
            "model is bound to {} intervals, trajectory has {}",
            model.n_intervals(),
            n
        )));
    }
    let s = traj.node_len();
    let mut diag = Vec::with_capacity(n.saturating_sub(1));
    let mut offdiag = Vec::with_capacity(n.saturating_sub(2));
    for k in 1..n {
        let d = model.hess22(k - 1, &traj.nodes[k - 1].data, &traj.nodes[k].data)
            + model.hess11(k, &traj.nodes[k].data, &traj.nodes[k + 1].data);
        diag.push(symmetrize(&d));
    }
    for k in 1..n.saturating_sub(1) {
        offdiag.push(model.hess12(k, &traj.nodes[k].data, &traj.nodes[k + 1].data));
    }
    Ok(BlockTridiagonalHessian {
        block_size: s,
        diag,
        offdiag,
    })
}

/// Strength of the convergence certificate, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Guarantee {
    /// Per-interval conditions hold: both sweep variants contract locally.
    TheoremSatisfied,
    /// The assembled Hessian is positive definite: both variants contract.
    GlobalPositiveDefinite,
    /// Only `rho(J) < 1`: the one-step Newton sweep contracts.
    SpectralContraction,
    NoGuarantee,
}

/// Everything the certificate checks, reported per interval where sensible.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    /// Smallest eigenvalue of each symmetrized `H_k`, `k = 0..N-1`.
    pub per_step_min_eig: Vec<f64>,
    /// `H_k` positive semidefinite (within scaled tolerance)?
    pub per_step_psd: Vec<bool>,
    pub all_a_pd: bool,
    pub all_b_pd: bool,
    /// Per-interval hypothesis of the convergence theorem.
    pub theorem_satisfied: bool,
    /// Assembled-Hessian positive definiteness (block LDL^T).
    pub global_pd: bool,
    /// Power-iteration estimate of `rho(J)`; `None` when a diagonal block
    /// could not be factored.
    pub spectral_radius: Option<f64>,
    pub guarantee: Guarantee,
}

/// Runs all certificate layers at the given trajectory.
pub fn check_theorem_conditions(
    model: &dyn DiscreteLagrangianModel,
    traj: &Trajectory,
) -> Result<ConvergenceReport> {
    let n = traj.n_intervals();
    let s = traj.node_len();
    let mut per_step_min_eig = Vec::with_capacity(n);
    let mut per_step_psd = Vec::with_capacity(n);
    let mut all_a_pd = true;
    let mut all_b_pd = true;
    for k in 0..n {
        let x0 = &traj.nodes[k].data;
        let x1 = &traj.nodes[k + 1].data;
        let (a, c, b) = model.hess_all(k, x0, x1);
        let mut hk = DMatrix::zeros(2 * s, 2 * s);
        hk.view_mut((0, 0), (s, s)).copy_from(&a);
        hk.view_mut((0, s), (s, s)).copy_from(&c);
        hk.view_mut((s, 0), (s, s)).copy_from(&c.transpose());
        hk.view_mut((s, s), (s, s)).copy_from(&b);
        let tol = PSD_TOL_SCALE * hk.amax();
        let min_eig = symmetrize(&hk)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        per_step_min_eig.push(min_eig);
        per_step_psd.push(min_eig >= -tol);
        all_a_pd &= crate::matrices::is_positive_definite(&symmetrize(&a), tol);
        all_b_pd &= crate::matrices::is_positive_definite(&symmetrize(&b), tol);
    }
    let theorem_satisfied = per_step_psd.iter().all(|&p| p) && (all_a_pd || all_b_pd);

    let hess = assemble_hessian(model, traj)?;
    let global_pd = if hess.n_blocks() == 0 {
        true
    } else {
        hess.is_positive_definite()
    };
    let spectral_radius = if hess.n_blocks() == 0 {
        Some(0.0)
    } else {
        spectral_radius_jacobi(&hess).ok()
    };

    let guarantee = if theorem_satisfied {
        Guarantee::TheoremSatisfied
    } else if global_pd {
        Guarantee::GlobalPositiveDefinite
    } else if spectral_radius.map(|r| r < 1.0).unwrap_or(false) {
        Guarantee::SpectralContraction
    } else {
        Guarantee::NoGuarantee
    };

    Ok(ConvergenceReport {
        per_step_min_eig,
        per_step_psd,
        all_a_pd,
        all_b_pd,
        theorem_satisfied,
        global_pd,
        spectral_radius,
        guarantee,
    })
}

/// Power-iteration estimate of the spectral radius of `J = -D^{-1} C`.
///
/// The iteration runs on `J^2` (the spectrum of `J` is symmetric about zero
/// for these block structures, so odd powers need not settle) and reports the
/// square root of the dominant ratio. Matrix-free: only block solves against
/// the factored `D_k` and products with the off-diagonal blocks are formed.
pub fn spectral_radius_jacobi(hess: &BlockTridiagonalHessian) -> Result<f64> {
    let m = hess.n_blocks();
    if m == 0 {
        return Ok(0.0);
    }
    if hess.offdiag.is_empty() {
        return Ok(0.0);
    }
    let s = hess.block_size;
    let mut factors = Vec::with_capacity(m);
    for (i, d) in hess.diag.iter().enumerate() {
        let lu = d.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularDiagonalBlock(i + 1));
        }
        factors.push(lu);
    }

    let apply_j = |v: &[DVector<f64>]| -> Vec<DVector<f64>> {
        (0..m)
            .map(|i| {
                let mut rhs = DVector::zeros(s);
                if i > 0 {
                    rhs += hess.offdiag[i - 1].transpose() * &v[i - 1];
                }
                if i + 1 < m {
                    rhs += &hess.offdiag[i] * &v[i + 1];
                }
                -factors[i].solve(&rhs).expect("factored block")
            })
            .collect()
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<DVector<f64>> = (0..m)
        .map(|_| DVector::from_fn(s, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let mut nrm = norm2(&v);
    if nrm == 0.0 {
        return Ok(0.0);
    }
    scale(&mut v, 1.0 / nrm);

    let mut rho = 0.0_f64;
    for _ in 0..POWER_ITERS {
        let w = apply_j(&apply_j(&v));
        nrm = norm2(&w);
        if nrm == 0.0 {
            return Ok(0.0);
        }
        let rho_new = nrm.sqrt();
        v = w;
        scale(&mut v, 1.0 / nrm);
        if (rho_new - rho).abs() <= POWER_STAGNATION_TOL * rho_new.max(1e-300) {
            return Ok(rho_new);
        }
        rho = rho_new;
    }
    Ok(rho)
}

fn norm2(v: &[DVector<f64>]) -> f64 {
    v.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn scale(v: &mut [DVector<f64>], f: f64) {
    for b in v.iter_mut() {
        *b *= f;
    }
}
