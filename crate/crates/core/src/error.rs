//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A chart coordinate fell outside its admissible interval.
    #[error("coordinate {axis} = {value} outside chart interval [{lo}, {hi}] (periodic: {periodic})")]
    OutsideDomain {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
        periodic: bool,
    },

    /// A point sits too close to a non-periodic chart boundary for the
    /// requested finite-difference stencil.
    #[error("coordinate {axis} = {value} within {margin} of a non-periodic chart boundary; finite differences need interior room")]
    InsufficientMargin { axis: usize, value: f64, margin: f64 },

    /// A matrix that must be invertible produced a pivot below tolerance.
    #[error("singular matrix in {context}: pivot {pivot:.3e} below tolerance {tolerance:.3e}")]
    SingularMatrix {
        context: &'static str,
        pivot: f64,
        tolerance: f64,
    },

    /// A geodesic trajectory left the chart through a non-periodic face.
    #[error("trajectory exited the chart domain at t = {exit_time} (axis {axis})")]
    ChartEscape { exit_time: f64, axis: usize },

    /// The k-nearest-neighbor graph split into more than one component.
    #[error("k-NN graph with k = {k} is disconnected ({components} components); increase k or the sample count")]
    DisconnectedGraph { k: usize, components: usize },

    /// Array dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A scalar or structural argument is invalid.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input exceeds a documented size cap.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// Requested construction cannot exist with the given parameters.
    #[error("infeasible construction: {0}")]
    Infeasible(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// A requested quantity is smaller than the numerical resolution used to
    /// certify it.
    #[error("requested value {requested:.3e} is below the achievable resolution {resolution:.3e} ({context})")]
    BelowResolution {
        context: &'static str,
        requested: f64,
        resolution: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized artifact (checkpoint, CSV cloud) failed to parse.
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
}
