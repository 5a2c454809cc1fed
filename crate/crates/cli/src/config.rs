//! File-backed run configuration (JSON, unknown keys rejected).

use serde::{Deserialize, Serialize};
use varint_core::discretize::{Scheme, GAUSS2_DEFAULT_ALPHA};
use varint_core::error::{Error, Result};
use varint_core::problems::FourBodyConstants;
use varint_core::solver::SolverConfig;

/// Discretization override.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeConfig {
    Trapezoidal,
    AlphaTrapezoidal { alpha: f64 },
    Lobatto2,
    Gauss2 { alpha: Option<f64> },
}

impl SchemeConfig {
    pub fn to_scheme(&self) -> Scheme {
        match self {
            SchemeConfig::Trapezoidal => Scheme::Trapezoidal,
            SchemeConfig::AlphaTrapezoidal { alpha } => Scheme::AlphaTrapezoidal { alpha: *alpha },
            SchemeConfig::Lobatto2 => Scheme::Lobatto2,
            SchemeConfig::Gauss2 { alpha } => Scheme::Gauss2 {
                alpha: alpha.unwrap_or(GAUSS2_DEFAULT_ALPHA),
            },
        }
    }
}

/// Boundary override: flat end nodes and optional timed waypoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    #[serde(default)]
    pub knots: Vec<KnotConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotConfig {
    pub time: f64,
    pub position: Vec<f64>,
}

/// One run: problem id plus overrides. Every field except `problem` is
/// optional; omitted fields keep the catalog defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    /// Starting grid interval count.
    #[serde(default)]
    pub n_intervals: Option<usize>,
    /// Override of the span end (start is kept).
    #[serde(default)]
    pub total_time: Option<f64>,
    #[serde(default)]
    pub scheme: Option<SchemeConfig>,
    #[serde(default)]
    pub boundary: Option<BoundaryConfig>,
    /// Solver settings; omitted fields take the solver defaults, not the
    /// problem's tuned defaults.
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    /// Physical constants of the four-body problem.
    #[serde(default)]
    pub constants: Option<FourBodyConstants>,
    /// Control-variation weight of the interpolation problem.
    #[serde(default)]
    pub weight_c: Option<f64>,
    /// Initial-guess detours `(fraction of span, position)`.
    #[serde(default)]
    pub guess_waypoints: Option<Vec<(f64, Vec<f64>)>>,
    /// Uniform noise amplitude added to interior guess nodes.
    #[serde(default)]
    pub guess_noise: f64,
    /// Seed of the guess noise.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Worker threads; `VARINT_THREADS` wins over this, hardware default.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_output_dir() -> String {
    "out".to_string()
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| {
            Error::InvalidArgument(format!(
                "malformed config {} at line {}, column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        if cfg.problem.is_empty() {
            return Err(Error::InvalidArgument("config must name a problem".into()));
        }
        Ok(cfg)
    }

    /// Worker thread count: `VARINT_THREADS` env, else config, else hardware.
    pub fn resolve_threads(&self) -> usize {
        std::env::var("VARINT_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .or(self.threads)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            })
    }
}
