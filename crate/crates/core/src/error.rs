use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("{kind} index {index} out of range (size {size})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        size: usize,
    },

    #[error("signal has probability {probability:e}, below the admissibility threshold")]
    ZeroProbabilitySignal { probability: f64 },

    #[error("history is inadmissible from the given belief (normalizer {normalizer:e})")]
    InadmissibleHistory { normalizer: f64 },

    #[error("signal {signal} is inadmissible from the abstract state")]
    InadmissibleSignal { signal: usize },

    #[error("{what}: enumeration exceeded cap of {cap}")]
    CapExceeded { what: &'static str, cap: usize },

    #[error("matrix is not row-stochastic (row {row} sums to {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("operation requires a blind game but |S| = {signals}")]
    NotBlind { signals: usize },

    #[error("game is not ergodic: no scrambling length up to {bound}")]
    NotErgodic { bound: usize },

    #[error("game is not primitive: no positive length up to {bound}")]
    NotPrimitive { bound: usize },

    #[error("certificate underflow: delta_eps rounds to zero at m_eps = {m_eps}")]
    CertificateUnderflow { m_eps: u64 },

    #[error("eta = {eta} is too small (needs at least {needed})")]
    EtaTooSmall { eta: usize, needed: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("no convergence after {refinements} refinements (last gap {last_gap:e})")]
    NoConvergence { refinements: usize, last_gap: f64 },

    #[error("no Doeblin certificate: supply one or use a primitive/ergodic game")]
    NoCertificate,

    #[error("invalid block structure: {0}")]
    InvalidBlockStructure(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("game file error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
