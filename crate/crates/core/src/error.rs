use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid memory configuration: {0}")]
    Config(&'static str),

    #[error("block index {index} out of range for array with {blocks} blocks")]
    BlockOutOfRange { index: usize, blocks: usize },

    #[error("record index {index} out of range for array of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("block transfer of {got} records, expected {expected}")]
    BlockLength { got: usize, expected: usize },

    #[error("primary memory budget exceeded: {requested} requested, {in_use} of {capacity} in use")]
    BudgetExceeded {
        requested: usize,
        in_use: usize,
        capacity: usize,
    },

    #[error("base case holds at most {limit} records, got {len}")]
    BaseCaseTooLarge { len: usize, limit: usize },

    #[error("merge fan-in is at most {fanout}, got {runs} runs")]
    TooManyRuns { runs: usize, fanout: usize },

    #[error("delete-min on an empty priority queue")]
    EmptyQueue,

    #[error("placement exceeded {limit} tries in one group")]
    PlacementFailure { limit: usize },

    #[error("matrix dimensions do not match: {0}")]
    Dimension(&'static str),

    #[error("unsupported problem size {0}")]
    UnsupportedSize(usize),
}
