use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A derived configuration cannot be realized (quantile level above 1,
    /// sample count overflow, violated instance inequality, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// The caller violated a mechanism's contract.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("no samples")]
    NoSamples,

    #[error("query cap exceeded: {required} statistic evaluations requested, cap is {cap}")]
    QueryCapExceeded { required: u64, cap: u64 },

    #[error("insufficient samples for k blocks: n = {n}, k = {k}")]
    InsufficientSamples { n: usize, k: usize },

    #[error("singular Gram matrix (condition estimate {condition:.3e})")]
    SingularGram { condition: f64 },

    #[error("rank-deficient subsample")]
    RankDeficient,

    #[error("no stable core")]
    NoStableCore,

    #[error("no stable arm")]
    NoStableArm,

    #[error("empty partition")]
    EmptyPartition,

    #[error("dataset I/O: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
