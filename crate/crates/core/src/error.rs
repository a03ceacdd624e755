//! Crate-wide error type.

use crate::network::RxId;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("scheme supports K = 2 receivers only, got K = {k}")]
    UnsupportedK { k: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("receiver {receiver}: slot {slot} selects mode {mode}, valid modes are 1..={num_modes}")]
    ModeOutOfRange {
        receiver: usize,
        slot: usize,
        mode: usize,
        num_modes: usize,
    },

    #[error("extension length {required} exceeds the desk-scale cap {cap}")]
    ExtensionCap { required: usize, cap: usize },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("no channel entry for rx {rx:?}, tx {tx}")]
    MissingChannel { rx: RxId, tx: usize },

    #[error("matrix {index} is not contained in the reference span (residual {residual:.3e})")]
    SpanPrecondition { index: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid power: {0}")]
    InvalidPower(String),

    #[error("target message set is empty")]
    EmptyTargetSet,

    #[error("target messages are intended for the observer (rx {observer})")]
    TargetIntendedForObserver { observer: usize },

    #[error("target messages carry zero rate at their intended receivers")]
    ZeroTargetRate,

    #[error("degenerate rate grid: {0}")]
    DegenerateGrid(String),

    #[error("invalid bound arguments: {0}")]
    InvalidBoundArgs(String),

    #[error("experimental blind layout failed its build-time rank checks: {0}")]
    ExperimentalBlindRank(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code the CLI maps this error to. Verification failures are
    /// reported separately (exit 1); everything here is a config/build error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
