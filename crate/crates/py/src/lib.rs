//! Python bindings: problem catalog, solver, diagnostics and structure
//! matrices. Reports are returned as plain dicts/lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;

use varint_core::diagnostics::check_theorem_conditions;
use varint_core::error::Error;
use varint_core::matrices as mat;
use varint_core::problems;
use varint_core::solver::Method;
use varint_core::trajectory::{Trajectory, TrajectoryNode};

fn err_to_py(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Converts any serde-serializable value into native Python objects by
/// round-tripping through the stdlib `json` module.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value)
        .map_err(|e| PyValueError::new_err(format!("serialization failed: {e}")))?;
    let json = PyModule::import(py, "json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn dense_to_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Ids of all cataloged problems.
#[pyfunction]
fn list_problems() -> Vec<String> {
    problems::problem_ids()
        .into_iter()
        .map(str::to_string)
        .collect()
}

/// Catalog metadata of one problem.
#[pyfunction]
fn problem_info(py: Python<'_>, id: &str) -> PyResult<Py<PyAny>> {
    let spec = problems::problem(id).map_err(err_to_py)?;
    to_py(
        py,
        &serde_json::json!({
            "id": spec.id,
            "description": spec.description,
            "gamma": spec.gamma,
            "dim": spec.dim,
            "default_n": spec.default_n,
            "span": [spec.span.0, spec.span.1],
            "left": spec.left,
            "right": spec.right,
            "parametric": spec.parametric,
        }),
    )
}

/// Structure matrices, LU factors, determinants and identity deviations of
/// one derivative order.
#[pyfunction]
fn matrices(py: Python<'_>, gamma: usize, h: f64) -> PyResult<Py<PyAny>> {
    let payload = (|| -> varint_core::error::Result<serde_json::Value> {
        let set = mat::build_matrices(gamma, h)?;
        let identities = mat::verify_identities(gamma, h)?;
        let (l, u) = mat::lu_factors_c(gamma, h)?;
        Ok(serde_json::json!({
            "gamma": gamma,
            "h": h,
            "A": dense_to_rows(&set.a),
            "B": dense_to_rows(&set.b),
            "C": dense_to_rows(&set.c),
            "D": dense_to_rows(&set.d),
            "E": dense_to_rows(&set.e),
            "L": dense_to_rows(&l),
            "U": dense_to_rows(&u),
            "det_C": mat::det_c(gamma, h)?,
            "det_B": mat::det_b(gamma, h)?,
            "identity_deviations": identities,
        }))
    })()
    .map_err(err_to_py)?;
    to_py(py, &payload)
}

/// Solves a cataloged problem; returns trajectory, residual history and the
/// final convergence report as a dict.
#[pyfunction]
#[pyo3(signature = (id, n_intervals=None, max_iters=None, tol_residual=None,
                    method=None, damping=None, guess_noise=0.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn solve_problem(
    py: Python<'_>,
    id: &str,
    n_intervals: Option<usize>,
    max_iters: Option<usize>,
    tol_residual: Option<f64>,
    method: Option<&str>,
    damping: Option<f64>,
    guess_noise: f64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let spec = problems::problem(id).map_err(err_to_py)?;
    let mut config = spec.config.clone();
    if let Some(m) = max_iters {
        config.max_iters = m;
    }
    if let Some(t) = tol_residual {
        config.tol_residual = t;
    }
    if let Some(d) = damping {
        config.damping = d;
    }
    if let Some(name) = method {
        config.method = match name {
            "jacobi" => Method::Jacobi,
            "jacobi_newton" | "newton" => Method::JacobiNewton,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown method '{other}' (use 'jacobi' or 'jacobi_newton')"
                )))
            }
        };
    }
    config.validate().map_err(err_to_py)?;

    let n = n_intervals.unwrap_or(spec.default_n);
    let report = (|| -> varint_core::error::Result<_> {
        let boundary = spec.boundary_for(n)?;
        let mut guess = spec.initial_guess(n)?;
        if guess_noise > 0.0 {
            guess = guess.perturb_interior(guess_noise, seed);
        }
        spec.solve(boundary, guess, &config, None)
    })()
    .map_err(err_to_py)?;

    let traj = &report.trajectory;
    let convergence = spec
        .build_model(&traj.times)
        .and_then(|model| check_theorem_conditions(model.as_ref(), traj))
        .ok();
    let nodes: Vec<Vec<f64>> = traj
        .nodes
        .iter()
        .map(|node| node.data.iter().copied().collect())
        .collect();
    to_py(
        py,
        &serde_json::json!({
            "problem": id,
            "gamma": traj.gamma(),
            "dim": traj.dim(),
            "n_intervals": traj.n_intervals(),
            "times": traj.times,
            "nodes": nodes,
            "converged": report.converged,
            "iterations": report.iterations,
            "final_residual": report.residual_history.last(),
            "residual_history": report.residual_history,
            "aborted": report.aborted,
            "convergence": convergence,
        }),
    )
}

/// Convergence diagnostics of a trajectory (`nodes[k]` = flat state of node
/// k) against a cataloged problem's discrete model.
#[pyfunction]
fn diagnose(
    py: Python<'_>,
    id: &str,
    times: Vec<f64>,
    nodes: Vec<Vec<f64>>,
) -> PyResult<Py<PyAny>> {
    let spec = problems::problem(id).map_err(err_to_py)?;
    let report = (|| -> varint_core::error::Result<_> {
        let nodes: varint_core::error::Result<Vec<TrajectoryNode>> =
            nodes.into_iter().map(TrajectoryNode::new).collect();
        let traj = Trajectory::new(spec.gamma, spec.dim, nodes?, times)?;
        let model = spec.build_model(&traj.times)?;
        check_theorem_conditions(model.as_ref(), &traj)
    })()
    .map_err(err_to_py)?;
    to_py(py, &report)
}

#[pymodule]
fn varint(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(list_problems, m)?)?;
    m.add_function(wrap_pyfunction!(problem_info, m)?)?;
    m.add_function(wrap_pyfunction!(matrices, m)?)?;
    m.add_function(wrap_pyfunction!(solve_problem, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    Ok(())
}
