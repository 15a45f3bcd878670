use std::io;

use thiserror::Error;

/// Errors raised anywhere in the training / prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty corpus: at least one document is required")]
    EmptyCorpus,

    #[error("degenerate moment: {0}")]
    DegenerateMoment(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank deficiency: eigenvalue {index} of the pairwise moment is {value:e} (<= {tol:e}); try a smaller K")]
    RankDeficient { index: usize, value: f64, tol: f64 },

    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("tensor decomposition failed at round {round}: best eigenvalue {lambda:e} is not positive (K too large or too few samples)")]
    DecompositionFailed { round: usize, lambda: f64 },

    #[error("topic {0} is degenerate: all entries are non-positive after clamping")]
    DegenerateTopic(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    /// True for failures of the numerical stages (eigensolver, tensor
    /// decomposition, degenerate estimates) as opposed to bad input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMoment(_)
                | Error::RankDeficient { .. }
                | Error::NoConvergence(_)
                | Error::DecompositionFailed { .. }
                | Error::DegenerateTopic(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
