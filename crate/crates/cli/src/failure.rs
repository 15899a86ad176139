use std::fmt;
use std::process::ExitCode;

/// A command failure with the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input values: exit 2.
    Usage(String),
    /// Numerical failure inside the simulation or optimizer: exit 3.
    Numerical(aqem_core::Error),
    /// Anything else, mostly file I/O: exit 1.
    Other(aqem_core::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Other(_) => 1,
        })
    }
}

impl From<aqem_core::Error> for Failure {
    fn from(e: aqem_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e)
        } else {
            Failure::Other(e)
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(e) => write!(f, "numerical failure: {e}"),
            Failure::Other(e) => write!(f, "{e}"),
        }
    }
}
