//! Error type shared by all modules.

/// Everything that can go wrong while building models or relaxing
/// trajectories. Node/interval indices are carried where they aid debugging.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A scalar or structural argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Boundary data is inconsistent with the trajectory it should pin.
    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    /// A node or interval index fell outside `0..=N` / `0..N`.
    #[error("index {index} out of range ({what})")]
    IndexError { index: usize, what: &'static str },

    /// The per-node Newton matrix `D_k` could not be factored.
    #[error("singular diagonal block at node {0}")]
    SingularDiagonalBlock(usize),

    /// A node update produced non-finite values.
    #[error("update diverged at node {0}")]
    DivergedAtNode(usize),

    /// Grid refinement would map two pinned nodes to the same new index.
    #[error("refinement maps pinned nodes to the same index {0}")]
    RefinementKnotClash(usize),

    /// The step-size monitor returned a non-positive value.
    #[error("non-positive monitor value at interval {0}")]
    InvalidMonitor(usize),

    /// A drift field reached or exceeded unit speed, so the direction-speed
    /// metric degenerates.
    #[error("drift field has magnitude >= 1 at ({0}, {1})")]
    DriftTooStrong(f64, f64),

    /// A model evaluation failed or returned non-finite values.
    #[error("model error: {0}")]
    ModelError(String),

    /// The reference integrator used for order estimation failed.
    #[error("reference solution error: {0}")]
    OracleError(String),

    /// A gravitational potential was evaluated too close to a primary.
    #[error("singular potential near a primary at node {0}")]
    SingularPotential(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
