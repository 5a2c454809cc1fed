//! Closed-form structure matrices of exact discrete Lagrangians for
//! higher-order systems.
//!
//! For derivative order `gamma`, the matrices live on blocks indexed by the
//! derivative degree `0..gamma` and satisfy a family of exact algebraic
//! identities (sign conjugation, inversion, product factorization) together
//! with explicit LU factors and determinants. They also yield the leading
//! `h -> 0` blocks of the per-interval Hessian of any consistent
//! discretization, which is what the convergence certificates in
//! [`crate::diagnostics`] ultimately rest on.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// The five structure matrices at a given derivative order and step.
#[derive(Debug, Clone)]
pub struct GammaMatrixSet {
    pub gamma: usize,
    pub h: f64,
    /// Unit upper-triangular Taylor-shift matrix, `a[(r,c)] = h^(c-r)/(c-r)!`.
    pub a: DMatrix<f64>,
    /// Symmetric Hankel-type matrix, `b[(r,c)] = h^(2g-r-c-1)/(2g-r-c-1)!`.
    pub b: DMatrix<f64>,
    /// Symmetric product matrix, see [`GammaMatrixSet::product_identity`].
    pub c: DMatrix<f64>,
    /// Alternating sign diagonal, `d[(r,r)] = (-1)^(g-r-1)`.
    pub d: DMatrix<f64>,
    /// Exchange (anti-diagonal permutation) matrix.
    pub e: DMatrix<f64>,
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn validate(gamma: usize, h: f64) -> Result<()> {
    if gamma == 0 {
        return Err(Error::InvalidArgument("gamma must be >= 1".into()));
    }
    if h == 0.0 || !h.is_finite() {
        return Err(Error::InvalidArgument("step h must be nonzero".into()));
    }
    Ok(())
}

/// Builds all five matrices for derivative order `gamma` and signed step `h`.
pub fn build_matrices(gamma: usize, h: f64) -> Result<GammaMatrixSet> {
    validate(gamma, h)?;
    let g = gamma;
    let a = DMatrix::from_fn(g, g, |r, c| {
        if c >= r {
            h.powi((c - r) as i32) / fact(c - r)
        } else {
            0.0
        }
    });
    let b = DMatrix::from_fn(g, g, |r, c| {
        let p = 2 * g - r - c - 1;
        h.powi(p as i32) / fact(p)
    });
    let c_m = DMatrix::from_fn(g, g, |r, c| {
        let p = 2 * g - r - c - 1;
        h.powi(p as i32) / (p as f64 * fact(g - r - 1) * fact(g - c - 1))
    });
    let d = DMatrix::from_fn(g, g, |r, c| {
        if r == c {
            if (g - r - 1) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            0.0
        }
    });
    let e = DMatrix::from_fn(g, g, |r, c| if c == g - r - 1 { 1.0 } else { 0.0 });
    Ok(GammaMatrixSet {
        gamma,
        h,
        a,
        b,
        c: c_m,
        d,
        e,
    })
}

/// Relative deviations (max-norm, scaled by the right-hand side) of the five
/// exact identities relating the structure matrices at `+h` and `-h`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// `A(-h) = D A(h) D`
    pub a_sign_conjugation: f64,
    /// `A(h) A(-h) = I`
    pub a_inverse: f64,
    /// `B(-h) = -D B(h) D`
    pub b_sign_conjugation: f64,
    /// `C(h) = A(h) D B(h)`
    pub c_product: f64,
    /// `C(h) = -D C(-h) D`
    pub c_sign_conjugation: f64,
    pub max_deviation: f64,
}

fn rel_dev(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>) -> f64 {
    (lhs - rhs).amax() / rhs.amax()
}

/// Evaluates all five identities at `(gamma, h)`.
pub fn verify_identities(gamma: usize, h: f64) -> Result<IdentityReport> {
    let p = build_matrices(gamma, h)?;
    let m = build_matrices(gamma, -h)?;
    let eye = DMatrix::<f64>::identity(gamma, gamma);

    let a_sign = rel_dev(&m.a, &(&p.d * &p.a * &p.d));
    let a_inv = rel_dev(&(&p.a * &m.a), &eye);
    let b_sign = rel_dev(&m.b, &(-(&p.d * &p.b * &p.d)));
    let c_prod = rel_dev(&p.c, &(&p.a * &p.d * &p.b));
    let c_sign = rel_dev(&p.c, &(-(&p.d * &m.c * &p.d)));

    let max_deviation = [a_sign, a_inv, b_sign, c_prod, c_sign]
        .into_iter()
        .fold(0.0_f64, f64::max);
    Ok(IdentityReport {
        a_sign_conjugation: a_sign,
        a_inverse: a_inv,
        b_sign_conjugation: b_sign,
        c_product: c_prod,
        c_sign_conjugation: c_sign,
        max_deviation,
    })
}

/// Closed-form Doolittle factors `C = L U` (`L` unit lower-triangular).
///
/// No pivoting is involved; the factorization exists for every nonzero `h`.
pub fn lu_factors_c(gamma: usize, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    validate(gamma, h)?;
    let g = gamma;
    let l = DMatrix::from_fn(g, g, |r, c| {
        if c > r {
            return 0.0;
        }
        h.powi(-((r - c) as i32)) * fact(r) * fact(2 * g - c - 1) * fact(g - c - 1)
            * fact(2 * g - r - c - 2)
            / (fact(c)
                * fact(r - c)
                * fact(2 * g - r - 1)
                * fact(g - r - 1)
                * fact(2 * g - 2 * c - 2))
    });
    let u = DMatrix::from_fn(g, g, |r, c| {
        if c < r {
            return 0.0;
        }
        h.powi((2 * g - r - c - 1) as i32) * fact(r) * fact(c) * fact(2 * g - 2 * r - 1)
            * fact(2 * g - r - c - 2)
            / (fact(c - r)
                * fact(2 * g - r - 1)
                * fact(2 * g - c - 1)
                * fact(g - r - 1)
                * fact(g - c - 1))
    });
    Ok((l, u))
}

/// Determinant of a square matrix whose `(a, b)` entry scales like
/// `h^(2n - a - b - 1)` (the grading shared by the `B` and `C` families).
///
/// Factoring such a matrix directly loses accuracy when `|h|` is far from 1:
/// the entries span many orders of magnitude and partial pivoting mixes the
/// scales. This routine divides out the step powers first, eliminates the
/// remaining well-graded matrix with scaled partial pivoting (rows compete on
/// their own relative magnitude, so the natural ordering of a totally
/// positive matrix is preserved), and restores the `h^(n^2)` factor at the
/// end.
pub fn graded_det(m: &DMatrix<f64>, h: f64) -> f64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "graded_det requires a square matrix");
    if n == 0 {
        return 1.0;
    }
    let mut a = DMatrix::from_fn(n, n, |r, c| {
        m[(r, c)] / h.powi((2 * n - r - c - 1) as i32)
    });
    let scales: Vec<f64> = (0..n).map(|i| a.row(i).amax()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = h.powi((n * n) as i32);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| {
                let vi = a[(perm[i], k)].abs() / scales[perm[i]];
                let vj = a[(perm[j], k)].abs() / scales[perm[j]];
                vi.total_cmp(&vj)
            })
            .expect("non-empty pivot range");
        if pivot != k {
            perm.swap(k, pivot);
            det = -det;
        }
        let pk = perm[k];
        det *= a[(pk, k)];
        for i in (k + 1)..n {
            let pi = perm[i];
            let l = a[(pi, k)] / a[(pk, k)];
            for j in (k + 1)..n {
                let upd = l * a[(pk, j)];
                a[(pi, j)] -= upd;
            }
        }
    }
    det
}

/// Closed-form determinant of `C`: `h^(gamma^2) * prod_a a!/(gamma+a)!`.
pub fn det_c(gamma: usize, h: f64) -> Result<f64> {
    validate(gamma, h)?;
    let mut det = h.powi((gamma * gamma) as i32);
    for alpha in 0..gamma {
        det *= fact(alpha) / fact(gamma + alpha);
    }
    Ok(det)
}

/// Closed-form determinant of `B`: `(-1)^(gamma(gamma-1)/2) * det C`.
pub fn det_b(gamma: usize, h: f64) -> Result<f64> {
    let sign = if (gamma * (gamma - 1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(sign * det_c(gamma, h)?)
}

/// Leading `h -> 0` blocks of the per-interval Hessian of any consistent
/// discretization, tensored against the identity in the spatial dimension.
#[derive(Debug, Clone)]
pub struct LeadingHessianBlocks {
    /// Upper-left block `D B(h)^-1 A(h)`.
    pub a_block: DMatrix<f64>,
    /// Upper-right block `-D B(h)^-1`.
    pub c_block: DMatrix<f64>,
    /// Lower-right block `-D B(-h)^-1 A(-h)`.
    pub b_block: DMatrix<f64>,
    /// The assembled symmetric `2 gamma x 2 gamma` matrix
    /// `[[a_block, c_block], [c_block^T, b_block]]`.
    pub full: DMatrix<f64>,
}

/// Computes the leading Hessian blocks via pivoted solves with `B` (no
/// explicit inverses are formed).
pub fn leading_hessian_blocks(gamma: usize, h: f64) -> Result<LeadingHessianBlocks> {
    let p = build_matrices(gamma, h)?;
    let m = build_matrices(gamma, -h)?;
    let g = gamma;

    let bp_lu = p.b.clone().lu();
    let bm_lu = m.b.clone().lu();
    let eye = DMatrix::<f64>::identity(g, g);
    let bp_inv_a = bp_lu
        .solve(&p.a)
        .ok_or_else(|| Error::ModelError("B(h) is singular".into()))?;
    let bp_inv = bp_lu
        .solve(&eye)
        .ok_or_else(|| Error::ModelError("B(h) is singular".into()))?;
    let bm_inv_am = bm_lu
        .solve(&m.a)
        .ok_or_else(|| Error::ModelError("B(-h) is singular".into()))?;

    let a_block = &p.d * bp_inv_a;
    let c_block = -(&p.d * bp_inv);
    let b_block = -(&p.d * bm_inv_am);

    let mut full = DMatrix::zeros(2 * g, 2 * g);
    full.view_mut((0, 0), (g, g)).copy_from(&a_block);
    full.view_mut((0, g), (g, g)).copy_from(&c_block);
    full.view_mut((g, 0), (g, g)).copy_from(&c_block.transpose());
    full.view_mut((g, g), (g, g)).copy_from(&b_block);
    // The assembled matrix is symmetric up to rounding; make it exact.
    full = crate::model::symmetrize(&full);
    Ok(LeadingHessianBlocks {
        a_block,
        c_block,
        b_block,
        full,
    })
}

/// Symmetric positive-definiteness test via an unpivoted LDL^T recurrence:
/// all pivots must exceed `tol`.
pub fn is_positive_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    ldlt_pivots(m)
        .map(|p| p.iter().all(|&d| d > tol))
        .unwrap_or(false)
}

/// Pivots of the unpivoted LDL^T factorization, or `None` when a leading
/// pivot vanishes exactly (factorization breakdown).
pub(crate) fn ldlt_pivots(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = DVector::zeros(n);
    for j in 0..n {
        let mut piv = a[(j, j)];
        for k in 0..j {
            piv -= a[(j, k)] * a[(j, k)] * d[k];
        }
        d[j] = piv;
        if piv == 0.0 && j + 1 < n {
            return None;
        }
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)] * d[k];
            }
            a[(i, j)] = v / piv;
        }
    }
    Some(d)
}
