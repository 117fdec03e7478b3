use thiserror::Error;

/// Errors raised by the lattice, chase and query layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A value does not belong to the lattice of the domain it was used with.
    #[error("domain `{domain}`: {message}")]
    Domain { domain: String, message: String },

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A chase step was requested on a pair where the dependency does not fire.
    #[error("`{md}` is not applicable on ({t1}, {t2})")]
    NotApplicable { md: String, t1: String, t2: String },

    /// The chase ran past its polynomial step bound, which means a matching
    /// function broke one of the semilattice laws.
    #[error("chase exceeded its step bound of {bound} steps")]
    StepBoundExceeded { bound: usize },

    #[error("query error: {0}")]
    Query(String),

    /// Certain/possible answers were requested but enumeration hit its limit.
    #[error("clean-instance enumeration incomplete: more than {limit} instances or too many intermediate states")]
    IncompleteEnumeration { limit: usize },

    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    /// Every problem found while validating a project file.
    #[error("invalid project:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(domain: &str, message: impl Into<String>) -> Self {
        Error::Domain {
            domain: domain.to_string(),
            message: message.into(),
        }
    }
}
