//! Convergence-certificate diagnostics tested against hand-computed Hessians
//! and classical closed-form spectra.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use varint_core::diagnostics::{
    assemble_hessian, check_theorem_conditions, per_step_hessian, spectral_radius_jacobi,
    Guarantee,
};
use varint_core::discretize::{discretize, Scheme};
use varint_core::model::DiscreteLagrangianModel;
use varint_core::problems::{
    indefinite_toy_problem, OscillatorLagrangian, QuadraticVelocityLagrangian,
};
use varint_core::trajectory::{Trajectory, TrajectoryNode};

fn uniform_times(n: usize, h: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * h).collect()
}

fn straight_trajectory(gamma: usize, dim: usize, n: usize, h: f64) -> Trajectory {
    let len = gamma * dim;
    let nodes = (0..=n)
        .map(|k| TrajectoryNode::new(vec![k as f64 * 0.1; len]).unwrap())
        .collect();
    Trajectory::new(gamma, dim, nodes, uniform_times(n, h)).unwrap()
}

#[test]
fn free_particle_per_step_hessian_matches_hand_values() {
    // L = v^2/2 with step h: L_d = (q1 - q0)^2 / (2h), so the per-interval
    // Hessian is [[1, -1], [-1, 1]] / h. With h = 2 that is +-0.5.
    let lagr = Arc::new(QuadraticVelocityLagrangian::new(DMatrix::identity(1, 1)).unwrap());
    let model = discretize(lagr, Scheme::Trapezoidal, &[0.0, 2.0]).unwrap();
    let x0 = DVector::from_vec(vec![0.0]);
    let x1 = DVector::from_vec(vec![1.0]);
    let hk = per_step_hessian(&model, 0, &x0, &x1).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
    assert!((hk - expected).amax() < 1e-14);
}

#[test]
fn assembled_hessian_is_laplacian_kron_mass() {
    // L = v^T M v / 2 on a uniform grid assembles to (1/h) K (x) M with K the
    // second-difference matrix over the interior nodes.
    let mass = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.5]);
    let lagr = Arc::new(QuadraticVelocityLagrangian::new(mass.clone()).unwrap());
    let (n, h) = (6usize, 0.25f64);
    let model = discretize(lagr, Scheme::Trapezoidal, &uniform_times(n, h)).unwrap();
    let traj = straight_trajectory(1, 2, n, h);
    let hess = assemble_hessian(&model, &traj).unwrap();
    assert_eq!(hess.n_blocks(), n - 1);

    let m = n - 1;
    let mut k_mat = DMatrix::zeros(m, m);
    for i in 0..m {
        k_mat[(i, i)] = 2.0;
        if i + 1 < m {
            k_mat[(i, i + 1)] = -1.0;
            k_mat[(i + 1, i)] = -1.0;
        }
    }
    let expected = k_mat.kronecker(&mass) / h;
    assert!(
        (hess.to_dense() - expected).amax() < 1e-12,
        "assembly deviates from Laplacian Kronecker form"
    );
    assert!(hess.is_positive_definite());
}

#[test]
fn jacobi_spectral_radius_matches_cosine_law() {
    // For the pure second-difference Hessian the Jacobi iteration matrix has
    // spectral radius cos(pi / n).
    for n in [4usize, 8, 16] {
        let lagr = Arc::new(QuadraticVelocityLagrangian::new(DMatrix::identity(1, 1)).unwrap());
        let model = discretize(lagr, Scheme::Trapezoidal, &uniform_times(n, 0.5)).unwrap();
        let traj = straight_trajectory(1, 1, n, 0.5);
        let hess = assemble_hessian(&model, &traj).unwrap();
        let rho = spectral_radius_jacobi(&hess).unwrap();
        let expected = (std::f64::consts::PI / n as f64).cos();
        assert!(
            (rho - expected).abs() < 1e-6,
            "n={n}: rho {rho}, expected {expected}"
        );
    }
}

#[test]
fn single_interior_node_has_zero_jacobi_radius() {
    let lagr = Arc::new(QuadraticVelocityLagrangian::new(DMatrix::identity(1, 1)).unwrap());
    let model = discretize(lagr, Scheme::Trapezoidal, &uniform_times(2, 1.0)).unwrap();
    let traj = straight_trajectory(1, 1, 2, 1.0);
    let hess = assemble_hessian(&model, &traj).unwrap();
    assert_eq!(hess.n_blocks(), 1);
    assert_eq!(spectral_radius_jacobi(&hess).unwrap(), 0.0);
}

#[test]
fn oscillator_certificate_is_global_but_not_per_step() {
    // Trapezoidal oscillator, omega = 1, h = 0.1, N = 20. Each per-interval
    // Hessian has min eigenvalue -h omega^2 / 2 < 0, so the per-interval
    // certificate fails; the assembled Hessian is still positive definite and
    // the Jacobi matrix is the scaled second-difference one with
    // rho = 2 cos(pi/N) / (2 - h^2).
    let (n, h) = (20usize, 0.1f64);
    let lagr = Arc::new(OscillatorLagrangian { omega: 1.0, dim: 1 });
    let model = discretize(lagr, Scheme::Trapezoidal, &uniform_times(n, h)).unwrap();
    let traj = straight_trajectory(1, 1, n, h);
    let report = check_theorem_conditions(&model, &traj).unwrap();

    assert!(!report.theorem_satisfied);
    let min_eig = report
        .per_step_min_eig
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(
        (min_eig + h / 2.0).abs() < 1e-10,
        "per-step min eig {min_eig}, expected {}",
        -h / 2.0
    );
    assert!(report.global_pd);
    assert_eq!(report.guarantee, Guarantee::GlobalPositiveDefinite);

    let rho = report.spectral_radius.unwrap();
    let expected = 2.0 * (std::f64::consts::PI / n as f64).cos() / (2.0 - h * h);
    assert!(
        (rho - expected).abs() < 1e-6,
        "rho {rho}, expected {expected}"
    );
    assert!(rho < 1.0);
}

#[test]
fn indefinite_toy_reports_no_guarantee() {
    let spec = indefinite_toy_problem();
    let traj = spec.initial_guess(spec.default_n).unwrap();
    let model = spec.build_model(&traj.times).unwrap();
    let report = check_theorem_conditions(model.as_ref(), &traj).unwrap();
    assert!(!report.theorem_satisfied);
    assert!(!report.global_pd);
    assert!(report.spectral_radius.unwrap() > 1.0);
    assert_eq!(report.guarantee, Guarantee::NoGuarantee);
}

// ---------------------------------------------------------------------------
// Structural identity: the assembled quadratic form equals the sum of
// per-interval quadratic forms with boundary nodes clamped to zero.
// ---------------------------------------------------------------------------

struct SecondOrderToy {
    n_intervals: usize,
    h: f64,
}

impl varint_core::discretize::ContinuousLagrangian for SecondOrderToy {
    fn gamma(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        1
    }
    fn partials(&self) -> varint_core::discretize::Partials {
        varint_core::discretize::Partials::EvalOnly
    }
    fn eval(&self, _t: f64, jet: &DVector<f64>) -> f64 {
        // jet = (q, v, a)
        0.5 * jet[2] * jet[2] + 0.5 * jet[1] * jet[1] + 0.3 * jet[0].cos()
    }
}

#[test]
fn quadratic_form_decomposes_into_per_interval_blocks() {
    let toy = SecondOrderToy {
        n_intervals: 5,
        h: 0.3,
    };
    let n = toy.n_intervals;
    let h = toy.h;
    let model = discretize(
        Arc::new(SecondOrderToy { n_intervals: n, h }),
        Scheme::AlphaTrapezoidal { alpha: 0.4 },
        &uniform_times(n, h),
    )
    .unwrap();

    let mut rng = StdRng::seed_from_u64(42);
    let len = 2usize;
    let nodes = (0..=n)
        .map(|_| TrajectoryNode::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let traj = Trajectory::new(2, 1, nodes, uniform_times(n, h)).unwrap();

    let dense = assemble_hessian(&model, &traj).unwrap().to_dense();
    let m = dense.nrows();
    assert_eq!(m, (n - 1) * len);

    for _ in 0..50 {
        let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let direct = (&dense * &v).dot(&v);

        // Zero-padded copy over all nodes, boundary included.
        let mut full = DVector::zeros((n + 1) * len);
        full.rows_mut(len, m).copy_from(&v);
        let mut summed = 0.0;
        for k in 0..n {
            let hk = per_step_hessian(
                &model,
                k,
                &traj.nodes[k].data,
                &traj.nodes[k + 1].data,
            )
            .unwrap();
            let w = full.rows(k * len, 2 * len).into_owned();
            summed += (&hk * &w).dot(&w);
        }
        let scale = 1.0 + direct.abs();
        assert!(
            (direct - summed).abs() / scale < 1e-10,
            "direct {direct}, summed {summed}"
        );
    }
}

// ---------------------------------------------------------------------------
// Randomized Gram-built models: the per-interval certificate holds by
// construction; the global conclusions must then hold numerically.
// ---------------------------------------------------------------------------

struct RandomQuadraticModel {
    gamma: usize,
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl RandomQuadraticModel {
    fn new(rng: &mut StdRng, gamma: usize, dim: usize, n: usize) -> Self {
        let s = gamma * dim;
        let blocks = (0..n)
            .map(|_| {
                let g = DMatrix::from_fn(2 * s, 2 * s, |_, _| rng.random_range(-1.0..1.0));
                g.transpose() * &g + DMatrix::identity(2 * s, 2 * s) * 0.1
            })
            .collect();
        Self { gamma, dim, blocks }
    }

    fn stacked(x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(x0.len() + x1.len());
        z.rows_mut(0, x0.len()).copy_from(x0);
        z.rows_mut(x0.len(), x1.len()).copy_from(x1);
        z
    }
}

impl DiscreteLagrangianModel for RandomQuadraticModel {
    fn gamma(&self) -> usize {
        self.gamma
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn n_intervals(&self) -> usize {
        self.blocks.len()
    }
    fn derivatives_analytic(&self) -> bool {
        true
    }
    fn eval(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> f64 {
        let z = Self::stacked(x0, x1);
        0.5 * (&self.blocks[k] * &z).dot(&z)
    }
    fn grads(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let s = self.gamma * self.dim;
        let g = &self.blocks[k] * Self::stacked(x0, x1);
        (g.rows(0, s).into_owned(), g.rows(s, s).into_owned())
    }
    fn grad1(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        self.grads(k, x0, x1).0
    }
    fn grad2(&self, k: usize, x0: &DVector<f64>, x1: &DVector<f64>) -> DVector<f64> {
        self.grads(k, x0, x1).1
    }
    fn hess11(&self, k: usize, _x0: &DVector<f64>, _x1: &DVector<f64>) -> DMatrix<f64> {
        let s = self.gamma * self.dim;
        self.blocks[k].view((0, 0), (s, s)).into_owned()
    }
    fn hess22(&self, k: usize, _x0: &DVector<f64>, _x1: &DVector<f64>) -> DMatrix<f64> {
        let s = self.gamma * self.dim;
        self.blocks[k].view((s, s), (s, s)).into_owned()
    }
    fn hess12(&self, k: usize, _x0: &DVector<f64>, _x1: &DVector<f64>) -> DMatrix<f64> {
        let s = self.gamma * self.dim;
        self.blocks[k].view((0, s), (s, s)).into_owned()
    }
}

#[test]
fn gram_built_models_earn_full_certificate_and_contract() {
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..25 {
        let gamma = if rng.random_range(0..2) == 0 { 1 } else { 2 };
        let dim = if rng.random_range(0..2) == 0 { 1 } else { 2 };
        let n = rng.random_range(3..=8);
        let model = RandomQuadraticModel::new(&mut rng, gamma, dim, n);
        let len = gamma * dim;
        let nodes = (0..=n)
            .map(|_| {
                TrajectoryNode::new((0..len).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .unwrap()
            })
            .collect();
        let traj = Trajectory::new(gamma, dim, nodes, uniform_times(n, 1.0)).unwrap();

        let report = check_theorem_conditions(&model, &traj).unwrap();
        assert!(
            report.theorem_satisfied,
            "trial {trial}: per-interval certificate should hold by construction"
        );
        assert_eq!(report.guarantee, Guarantee::TheoremSatisfied);
        assert!(report.global_pd, "trial {trial}: global PD expected");
        let rho = report.spectral_radius.unwrap();
        assert!(rho < 1.0, "trial {trial}: rho = {rho}");

        // Cross-check both conclusions against dense linear algebra.
        let hess = assemble_hessian(&model, &traj).unwrap();
        let dense = hess.to_dense();
        let min_eig = dense
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig > 0.0, "trial {trial}: dense min eig {min_eig}");

        let m = dense.nrows();
        let mut dinv_h = DMatrix::zeros(m, m);
        for b in 0..hess.n_blocks() {
            let d = dense.view((b * len, b * len), (len, len)).into_owned();
            let chunk = d
                .lu()
                .solve(&dense.view((b * len, 0), (len, m)).into_owned())
                .unwrap();
            dinv_h.view_mut((b * len, 0), (len, m)).copy_from(&chunk);
        }
        let j = DMatrix::identity(m, m) - dinv_h;
        let rho_dense = j
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max);
        assert!(
            (rho - rho_dense).abs() < 1e-4 * (1.0 + rho_dense),
            "trial {trial}: power iteration {rho} vs dense {rho_dense}"
        );
    }
}
