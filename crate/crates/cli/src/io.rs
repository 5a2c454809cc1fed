//! CSV / JSON artifact formats.
//!
//! `trajectory.csv` columns: `k,t` then one column per state entry named
//! `q{component}_d{derivative}` in derivative-major order (all positions,
//! then all first derivatives, ...). Floats are printed with 17 significant
//! digits so read/write round-trips are bit exact.

use serde::Serialize;
use std::io::Write as _;
use std::path::Path;
use varint_core::diagnostics::ConvergenceReport;
use varint_core::error::{Error, Result};
use varint_core::trajectory::{Trajectory, TrajectoryNode};

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::new();
    out.push_str("k,t");
    for d in 0..traj.gamma() {
        for i in 0..traj.dim() {
            out.push_str(&format!(",q{i}_d{d}"));
        }
    }
    out.push('\n');
    for (k, node) in traj.nodes.iter().enumerate() {
        out.push_str(&format!("{k},{}", fmt(traj.times[k])));
        for v in node.data.iter() {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

pub fn read_trajectory_csv(path: &Path, gamma: usize, dim: usize) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{}: empty file", path.display())))?;
    let expected = 2 + gamma * dim;
    let header_cols = header.split(',').count();
    if header_cols != expected {
        return Err(Error::InvalidArgument(format!(
            "{}: expected {expected} columns for gamma={gamma}, dim={dim}, found {header_cols}",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut nodes = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} line {}: expected {expected} fields, found {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| {
                Error::InvalidArgument(format!(
                    "{} line {}: bad float {s:?}: {e}",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        times.push(parse(fields[1])?);
        let data: Result<Vec<f64>> = fields[2..].iter().map(|s| parse(s)).collect();
        nodes.push(TrajectoryNode::new(data?)?);
    }
    Trajectory::new(gamma, dim, nodes, times)
}

pub fn write_residuals_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("iter,residual\n");
    for (i, r) in history.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", fmt(*r)));
    }
    std::fs::write(path, out)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

/// Top-level `report.json` payload.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub problem: String,
    pub gamma: usize,
    pub dim: usize,
    pub n_intervals: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_time_seconds: f64,
    pub aborted: Option<String>,
    /// Travel time of parametric shortest-time runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub travel_time: Option<f64>,
    pub convergence: Option<ConvergenceReport>,
    /// Convergence snapshots taken during the run as `(iteration, report)`.
    pub diagnostics: Vec<(usize, ConvergenceReport)>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize: {e}")))?;
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .and_then(|()| file.write_all(b"\n"))
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}
