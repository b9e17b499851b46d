use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need at least {needed} snapshots, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-uniform sampling at row {row}: relative jitter {jitter:.3e} exceeds {tolerance:.1e}")]
    NonUniformSampling { row: usize, jitter: f64, tolerance: f64 },

    #[error("invalid data at row {row}, column '{column}': {reason}")]
    InvalidData { row: usize, column: String, reason: String },

    #[error("truncation removed every singular value")]
    OverTruncation,

    #[error("eigenvalue is zero: continuous-time pole is infinitely fast")]
    SingularEigenvalue,

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("system is not underdamped (zeta = {zeta})")]
    NotUnderdamped { zeta: f64 },

    #[error("unsupported damping: {0}")]
    UnsupportedDamping(String),

    #[error("incompatible records: {0}")]
    IncompatibleRecords(String),

    #[error("segmentation error: {0}")]
    Segmentation(String),

    #[error("ill-conditioned LSCF fit at order {order}: {reason}; try a lower order or a narrower band")]
    IllConditionedFit { order: usize, reason: String },

    #[error("MAC undefined for a zero vector")]
    UndefinedMac,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("cannot decimate {master_hz} Hz to {requested_hz} Hz; valid rates include {valid:?}")]
    Decimation { master_hz: f64, requested_hz: f64, valid: Vec<f64> },

    #[error("perturbation too large: |delta_mu / mu| = {0} >= 1")]
    PerturbationTooLarge(f64),

    #[error("incompatible modes: {0}")]
    IncompatibleModes(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
