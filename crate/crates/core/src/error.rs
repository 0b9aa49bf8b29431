use std::path::PathBuf;

/// Errors raised anywhere in the simulator and the analysis routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value has the wrong shape or is out of range.
    #[error("invalid input: {0}")]
    Input(String),

    /// A system, channel or scenario description is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A special function was asked for a value outside the regime it can evaluate.
    #[error("{function}: {reason}")]
    Domain {
        function: &'static str,
        reason: String,
    },

    /// Exhaustive enumeration over `M^J` superimposed codewords would exceed the cap.
    #[error("{what}: {count} entries exceeds the enumeration cap of {cap}; {hint}")]
    TooLarge {
        what: &'static str,
        count: u128,
        cap: u128,
        hint: &'static str,
    },

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            function,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bad configuration or input rather than a
    /// failure while running. The CLI maps these to exit code 1.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Config(_) | Error::Parse { .. } | Error::TooLarge { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
