//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Two sequences were expected to have equal length.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A vector with zero variance was passed where variation is required.
    #[error("input vector is constant (zero variance)")]
    ConstantVector,
    /// A statistic needs more points than were supplied.
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    /// The sample covariance does not have enough strictly positive eigenvalues.
    #[error("degenerate covariance: rank {rank} < requested {requested} directions")]
    DegenerateCovariance { rank: usize, requested: usize },

    /// An operation over a batch of sequences received no sequences.
    #[error("empty batch")]
    EmptyBatch,
    /// A dataset-level operation received no subjects.
    #[error("empty dataset")]
    EmptyDataset,
    /// A point-set operation received no points.
    #[error("empty input")]
    EmptyInput,
    /// The training loss left the finite range.
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {loss}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    /// Config values violate a documented invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A trajectory distance was asked of an empty sequence.
    #[error("empty trajectory")]
    EmptyTrajectory,
    /// More clusters requested than items available.
    #[error("k = {k} exceeds the number of items ({n})")]
    KTooLarge { k: usize, n: usize },
    /// An EM cluster lost all responsibility mass and restarts were exhausted.
    #[error("cluster {cluster} degenerated (mass {mass:.3e}) after {attempts} attempts")]
    DegenerateCluster { cluster: usize, mass: f64, attempts: usize },
    /// The polynomial design matrix is singular.
    #[error("singular design matrix")]
    SingularDesign,

    /// A partition is unusable for the requested criterion.
    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),
    /// Two partitions cover different numbers of items.
    #[error("size mismatch: {a} vs {b} items")]
    SizeMismatch { a: usize, b: usize },
    /// A membership column is constant and cannot be correlated.
    #[error("constant membership column: {0}")]
    ConstantColumn(String),

    /// A simulation was configured with zero subjects.
    #[error("simulation config produces no subjects")]
    EmptyConfig,

    /// A text input failed to parse.
    #[error("parse error at {path}:{row}:{col}: {message}")]
    ParseError { path: String, row: usize, col: usize, message: String },
    /// A CSV row has the wrong number of values.
    #[error("ragged row for subject `{subject_id}`: expected {expected} values, got {got}")]
    RaggedRows { subject_id: String, expected: usize, got: usize },
    /// A non-finite value appeared where finite data is required.
    #[error("non-finite value for subject `{subject_id}` at column {col}")]
    NonFiniteValue { subject_id: String, col: usize },
    /// Two rows share a subject id.
    #[error("duplicate subject id `{0}`")]
    DuplicateId(String),
    /// A plot was asked to render nothing.
    #[error("no data to render")]
    EmptyData,
    /// Filesystem failure; the source carries the OS-level message.
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
