//! Oracle tests for the structure matrices: hand-frozen third-order entries,
//! closed-form determinants, algebraic identities over a sign-covering step
//! grid, and the definiteness structure of the leading Hessian blocks.

use nalgebra::DMatrix;
use varint_core::matrices::{
    build_matrices, det_b, det_c, graded_det, is_positive_definite, leading_hessian_blocks,
    lu_factors_c, verify_identities,
};

const H_GRID: [f64; 8] = [0.1, -0.1, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0];

fn assert_matrix_close(label: &str, got: &DMatrix<f64>, want: &DMatrix<f64>, rel: f64) {
    assert_eq!(got.shape(), want.shape(), "{label}: shape");
    let scale = want.amax().max(1e-300);
    let dev = (got - want).amax() / scale;
    assert!(
        dev <= rel,
        "{label}: relative deviation {dev:e} exceeds {rel:e}\ngot {got}\nwant {want}"
    );
}

/// Frozen hand-written third-order matrices (entrywise rational expressions
/// in the step).
#[test]
fn third_order_matrices_match_frozen_entries() {
    for h in [0.1, 0.5, -0.7, 1.0, 2.0] {
        let set = build_matrices(3, h).unwrap();
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, h, h * h / 2.0, 0.0, 1.0, h, 0.0, 0.0, 1.0],
        );
        let b = DMatrix::from_row_slice(
            3,
            3,
            &[
                h.powi(5) / 120.0,
                h.powi(4) / 24.0,
                h.powi(3) / 6.0,
                h.powi(4) / 24.0,
                h.powi(3) / 6.0,
                h * h / 2.0,
                h.powi(3) / 6.0,
                h * h / 2.0,
                h,
            ],
        );
        let c = DMatrix::from_row_slice(
            3,
            3,
            &[
                h.powi(5) / 20.0,
                h.powi(4) / 8.0,
                h.powi(3) / 6.0,
                h.powi(4) / 8.0,
                h.powi(3) / 3.0,
                h * h / 2.0,
                h.powi(3) / 6.0,
                h * h / 2.0,
                h,
            ],
        );
        let d = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]);
        let e = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_matrix_close("A", &set.a, &a, 1e-15);
        assert_matrix_close("B", &set.b, &b, 1e-15);
        assert_matrix_close("C", &set.c, &c, 1e-15);
        assert_matrix_close("D", &set.d, &d, 0.0);
        assert_matrix_close("E", &set.e, &e, 0.0);
    }
}

/// Frozen hand-written third-order triangular factors.
#[test]
fn third_order_lu_matches_frozen_entries() {
    for h in [0.1, 0.5, -0.7, 1.0, 2.0] {
        let (l, u) = lu_factors_c(3, h).unwrap();
        let l_want = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0,
                0.0,
                0.0,
                5.0 / (2.0 * h),
                1.0,
                0.0,
                10.0 / (3.0 * h * h),
                4.0 / h,
                1.0,
            ],
        );
        let u_want = DMatrix::from_row_slice(
            3,
            3,
            &[
                h.powi(5) / 20.0,
                h.powi(4) / 8.0,
                h.powi(3) / 6.0,
                0.0,
                h.powi(3) / 48.0,
                h * h / 12.0,
                0.0,
                0.0,
                h / 9.0,
            ],
        );
        assert_matrix_close("L", &l, &l_want, 1e-15);
        assert_matrix_close("U", &u, &u_want, 1e-15);
    }
}

/// Sign-conjugation / inverse / product identities across orders and signed
/// steps, plus LU reconstruction.
#[test]
fn identities_hold_for_orders_one_through_six() {
    for gamma in 1..=6 {
        for h in H_GRID {
            let report = verify_identities(gamma, h).unwrap();
            assert!(
                report.max_deviation <= 1e-12,
                "gamma={gamma}, h={h}: identity deviation {:?}",
                report
            );
            let set = build_matrices(gamma, h).unwrap();
            let (l, u) = lu_factors_c(gamma, h).unwrap();
            assert_matrix_close(
                &format!("L*U vs C (gamma={gamma}, h={h})"),
                &(&l * &u),
                &set.c,
                1e-12,
            );
        }
    }
}

/// Closed-form determinants against the numeric determinant of the
/// constructed matrices. Entries span 2*gamma-1 powers of the step, so the
/// numeric determinant is evaluated after symmetric scaling (which changes
/// the determinant by a known power of the step but removes the artificial
/// conditioning of tiny steps).
#[test]
fn determinant_closed_forms_match() {
    for gamma in 1..=6 {
        for h in H_GRID {
            let set = build_matrices(gamma, h).unwrap();
            let dc = det_c(gamma, h).unwrap();
            let db = det_b(gamma, h).unwrap();
            let dc_num = graded_det(&set.c, h);
            let db_num = graded_det(&set.b, h);
            let rel_c = (dc - dc_num).abs() / dc.abs().max(1e-300);
            let rel_b = (db - db_num).abs() / db.abs().max(1e-300);
            assert!(rel_c <= 1e-10, "det C gamma={gamma} h={h}: {rel_c:e}");
            assert!(rel_b <= 1e-10, "det B gamma={gamma} h={h}: {rel_b:e}");
        }
    }
}

/// The quadrature-free kinetic block of a first-order model is the familiar
/// graph-Laplacian stencil divided by the step.
#[test]
fn first_order_leading_blocks_closed_form() {
    for h in [0.1, 0.5, 1.0, 2.0] {
        let blocks = leading_hessian_blocks(1, h).unwrap();
        assert!((blocks.a_block[(0, 0)] - 1.0 / h).abs() < 1e-14 / h);
        assert!((blocks.b_block[(0, 0)] - 1.0 / h).abs() < 1e-14 / h);
        assert!((blocks.c_block[(0, 0)] + 1.0 / h).abs() < 1e-14 / h);
        let want =
            DMatrix::from_row_slice(2, 2, &[1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h]);
        assert_matrix_close("full", &blocks.full, &want, 1e-13);
    }
}

/// The off-diagonal block closes the Schur complement of the diagonal ones:
/// `B = C^T A^{-1} C` exactly in exact arithmetic.
#[test]
fn leading_blocks_schur_identity() {
    for gamma in 1..=4 {
        for h in [0.3, 1.0, 1.7] {
            let blocks = leading_hessian_blocks(gamma, h).unwrap();
            let a_inv = blocks
                .a_block
                .clone()
                .lu()
                .try_inverse()
                .expect("leading A block invertible");
            let recon = blocks.c_block.transpose() * a_inv * &blocks.c_block;
            assert_matrix_close(
                &format!("Schur identity gamma={gamma} h={h}"),
                &blocks.b_block,
                &recon,
                1e-10,
            );
        }
    }
}

/// The full 2-gamma leading Hessian is positive semidefinite with exactly
/// gamma zero eigenvalues (continuum limit of a kinetic-only model). The
/// kernel is spanned by `(-A^{-1} C y, y)`, which is checked explicitly at
/// every step size; the eigenvalue count is checked at the balanced step
/// h = 1 where the zero/nonzero gap is resolvable in double precision.
#[test]
fn full_leading_hessian_semidefinite_with_gamma_kernel() {
    for gamma in 1..=5usize {
        for h in [0.2, 1.0] {
            let blocks = leading_hessian_blocks(gamma, h).unwrap();
            let scale = blocks.full.amax();
            let eig = blocks.full.clone().symmetric_eigen();
            let negatives = eig
                .eigenvalues
                .iter()
                .filter(|&&l| l < -1e-9 * eig.eigenvalues.amax())
                .count();
            assert_eq!(negatives, 0, "gamma={gamma} h={h}: negative directions");

            // Explicit kernel basis.
            let a_inv_c = blocks
                .a_block
                .clone()
                .lu()
                .solve(&blocks.c_block)
                .expect("leading A block invertible");
            let mut kernel = DMatrix::zeros(2 * gamma, gamma);
            kernel.view_mut((0, 0), (gamma, gamma)).copy_from(&(-&a_inv_c));
            kernel
                .view_mut((gamma, 0), (gamma, gamma))
                .copy_from(&DMatrix::identity(gamma, gamma));
            let residual = (&blocks.full * &kernel).amax();
            assert!(
                residual <= 1e-9 * scale,
                "gamma={gamma} h={h}: kernel residual {residual:e} vs scale {scale:e}"
            );

            if h == 1.0 {
                let zeros = eig
                    .eigenvalues
                    .iter()
                    .filter(|&&l| l.abs() <= 1e-10 * eig.eigenvalues.amax())
                    .count();
                assert_eq!(zeros, gamma, "gamma={gamma}: kernel dimension");
            }
        }
    }
}

/// `C(h)` is positive definite for positive steps and negative definite for
/// negative ones.
#[test]
fn c_matrix_definiteness_follows_step_sign() {
    for gamma in 1..=6 {
        let pos = build_matrices(gamma, 0.7).unwrap().c;
        let neg = build_matrices(gamma, -0.7).unwrap().c;
        assert!(is_positive_definite(&pos, 1e-12));
        assert!(!is_positive_definite(&neg, 1e-12));
        assert!(is_positive_definite(&(-&neg), 1e-12));
    }
}

/// Invalid inputs are rejected.
#[test]
fn rejects_degenerate_arguments() {
    assert!(build_matrices(0, 1.0).is_err());
    assert!(build_matrices(3, 0.0).is_err());
    assert!(lu_factors_c(2, 0.0).is_err());
    assert!(det_c(0, 1.0).is_err());
}
