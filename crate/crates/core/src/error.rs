use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An orbit evaluation needed more iterations than the configured budget.
    #[error("iteration budget exceeded: time {requested} > budget {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    /// Witness search ran out of budget before collecting enough times.
    #[error("search budget exhausted for pair ({0}, {1}) on the {2} clause: found {3} of {4} required times")]
    BudgetExhausted(usize, usize, Clause, usize, usize),

    /// A family member cannot supply terms beyond the current maximum of the merged sequence.
    #[error("merge stalled: member {member} has no term after {after} (needed {needed} more)")]
    ConstructionStalled { member: usize, after: String, needed: String },

    #[error("witness invalid at level {level}, time {time}: measured distance {measured} does not meet precision 2^-{precision}")]
    WitnessInvalid {
        level: usize,
        time: u64,
        precision: u32,
        measured: String,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which half of a Li-Yorke witness a search was looking for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    Proximal,
    Distal,
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Clause::Proximal => f.write_str("proximal"),
            Clause::Distal => f.write_str("distal"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
