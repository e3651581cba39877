use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph is disconnected: {reached} of {nodes} nodes reachable from node 0")]
    Disconnected { reached: usize, nodes: usize },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("mixing matrix has negative diagonal {value} at node {node}")]
    NegativeDiagonal { node: usize, value: f64 },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("mixing matrix is not doubly stochastic: row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("spectral gap {0} is not positive")]
    NoSpectralGap(f64),
    #[error("row count {m} outside 1..={max}")]
    RowsOutOfRange { m: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quantizer overflow at element {index} (value {value})")]
    QuantizerOverflow { index: usize, value: f64 },
    #[error("non-finite feature in sample {sample}")]
    NonFiniteFeature { sample: usize },
    #[error("dataset too small: {0}")]
    DatasetTooSmall(String),
    #[error("schedule does not match topology: {0}")]
    ScheduleMismatch(String),
    #[error("bound hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("did not converge: {0}")]
    NotConverged(String),
}
