//! Parallel relaxation solver for boundary-value problems of discrete
//! variational mechanics.
//!
//! A trajectory is a finite sequence of nodes `x_0 .. x_N`; each node packs a
//! configuration point together with its derivative blocks up to degree
//! `gamma - 1`. Interior nodes must satisfy the discrete Euler-Lagrange
//! equations of a discrete Lagrangian `L_d(x_k, x_{k+1})`, while `x_0`, `x_N`
//! (and optionally interior knots) are held fixed. The solver relaxes all
//! interior nodes simultaneously from the previous iterate, so sweeps are
//! embarrassingly parallel and bit-deterministic regardless of thread count.
//!
//! Module map:
//!
//! | module        | contents                                                       |
//! |---------------|----------------------------------------------------------------|
//! | [`trajectory`]| nodes, trajectories, boundary data, initial guesses, residuals |
//! | [`model`]     | the discrete-Lagrangian interface and finite-difference fallback |
//! | [`matrices`]  | closed-form boundary/structure matrices of exact discrete Lagrangians |
//! | [`discretize`]| quadrature discretizations of continuous Lagrangians, order estimation |
//! | [`diagnostics`]| block-tridiagonal Hessian assembly and convergence certificates |
//! | [`solver`]    | Jacobi / Jacobi-Newton sweeps, damping, refinement, time rescaling |
//! | [`problems`]  | catalog of ready-made optimal-control style problems           |

pub mod diagnostics;
pub mod discretize;
pub mod error;
pub mod matrices;
pub mod model;
pub mod ode;
pub mod problems;
pub mod solver;
pub mod trajectory;

pub use crate::error::{Error, Result};
pub use crate::model::DiscreteLagrangianModel;
pub use crate::trajectory::{BoundaryData, Knot, Trajectory, TrajectoryNode};
