use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid circuit parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis dimension {dim} outside the supported range [32, 2000]")]
    BasisDimension { dim: usize },

    #[error("eigensolver did not converge for eigenpair {index} (residual {residual:.3e})")]
    EigenNotConverged { index: usize, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("no sub-barrier doublet")]
    NoSubBarrierDoublet,

    #[error("wavefunction leaks through the grid boundary (edge/peak density {ratio:.3e})")]
    BoundaryLeak { ratio: f64 },

    #[error("grid spacing {spacing:.3e} too coarse, need < {required:.3e}")]
    Resolution { spacing: f64, required: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("projection onto the oscillator basis discarded {discarded:.3e} of the trace")]
    TruncationLoss { discarded: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("outcome distributions use different binnings")]
    BinningMismatch,

    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),

    #[error("evolution time must be non-zero")]
    ZeroTime,

    #[error("weak-dephasing bound is unbounded for B = 0; use the averaged bound instead")]
    UnboundedWeakBound,

    #[error("bound function not decreasing near I = {at:.6e}")]
    MonotonicityViolation { at: f64 },

    #[error("oracle mismatch: max relative difference {max_rel:.3e} exceeds {tolerance:.1e}")]
    OracleMismatch { max_rel: f64, tolerance: f64 },

    #[error("at phi_x = {phi_x}: {source}")]
    Sweep {
        phi_x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for configuration and I/O problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::InvalidParams(_) => 2,
            Error::Sweep { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
