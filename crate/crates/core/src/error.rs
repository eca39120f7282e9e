use std::fmt;

/// Grid-cell indices at which an attenuation extraction left its domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BadCells(pub Vec<usize>);

impl fmt::Display for BadCells {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 8;
        write!(f, "{} cell(s)", self.0.len())?;
        if !self.0.is_empty() {
            let head: Vec<String> = self.0.iter().take(SHOWN).map(|c| c.to_string()).collect();
            write!(f, " [{}", head.join(", "))?;
            if self.0.len() > SHOWN {
                write!(f, ", ...")?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("extraction failed ({reason}) at {cells}")]
    Extraction { reason: String, cells: BadCells },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, actual })
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
