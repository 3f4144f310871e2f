use std::fmt;

use sympath::Error;

pub type Outcome<T> = Result<T, Failure>;

/// Error with the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input. Exit 1.
    Validation(anyhow::Error),
    /// The engines refused or could not finish. Exit 2.
    Engine(anyhow::Error),
    /// `verify` found a violated invariant. Exit 3.
    Verify(usize),
}

impl Failure {
    pub fn validation(msg: impl Into<String>) -> Self {
        Failure::Validation(anyhow::anyhow!(msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Engine(_) => 2,
            Failure::Verify(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "invalid input: {e:#}"),
            Failure::Engine(e) => write!(f, "engine error: {e:#}"),
            Failure::Verify(n) => write!(f, "verification failed: {n} check(s) violated"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } | Error::OracleCap { .. } | Error::ImaginaryResidue { .. } => {
                Failure::Engine(e.into())
            }
            _ => Failure::Validation(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Engine(anyhow::Error::new(e).context("writing output"))
    }
}
