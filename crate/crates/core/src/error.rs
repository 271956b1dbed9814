use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("input has {got} elements but the tree was built for {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("value {value} at position {position} does not fit in {width} bits")]
    ValueOutOfRange {
        value: u64,
        position: usize,
        width: u32,
    },

    #[error("element index {index} at position {position} is out of range or repeated")]
    BadIndex { index: usize, position: usize },

    #[error("no valid leaf left to extract")]
    NoValidLeaf,

    #[error(
        "no root transaction for {stalled} cycles (cycle {cycle}, {emitted} of {expected} outputs emitted)"
    )]
    NonTermination {
        cycle: u64,
        stalled: u64,
        emitted: usize,
        expected: usize,
    },
}
