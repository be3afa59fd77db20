use std::path::PathBuf;

use thiserror::Error;

use crate::network::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },

    #[error("noise grid has more than 2^64 points or exceeds the cap of {cap}")]
    GridTooLarge { cap: u64 },

    #[error("box holds a single grid point and cannot be split")]
    SingletonBox,

    #[error("invalid noise range at node {node}: {lo} > {hi}")]
    InvalidRange { node: usize, lo: i32, hi: i32 },

    #[error("sample {sample_id} is not classified as its true label without noise")]
    BaselineMisclassified { sample_id: u64 },

    #[error("no sample in the dataset is classified correctly without noise")]
    NoCorrectSamples,

    #[error("counterexample for sample {sample_id} predicts its true label")]
    InvalidCounterexample { sample_id: u64 },

    #[error("input node {node} out of range for a network with {input_dim} inputs")]
    NodeOutOfRange { node: usize, input_dim: usize },

    #[error("invalid band cuts: fragile {fragile} / robust {robust}")]
    InvalidCuts { fragile: u32, robust: u32 },

    #[error("unsupported activation `{0}`")]
    UnsupportedActivation(String),

    #[error("network failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },

    #[error("label `{label}` in row {row} is not one of the network labels")]
    LabelUnknown { label: String, row: usize },

    #[error("row {row}: expected {expected} features, found {actual}")]
    RowDimension {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("unrecognized model checker output")]
    UnrecognizedOutput,

    #[error("model checker failed: {0}")]
    Checker(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(position: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            position: position.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
