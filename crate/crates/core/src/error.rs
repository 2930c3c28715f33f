use thiserror::Error;

/// Errors produced by the numerical kernels, channel models, fits and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A count or size argument is out of its supported range.
    #[error("invalid argument to {op}: {detail}")]
    Argument { op: &'static str, detail: String },

    /// A numerical procedure failed to converge or produced a non-finite value.
    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    /// Caller-supplied data failed a precondition check.
    #[error("invalid input to {op}: {detail}")]
    Input { op: &'static str, detail: String },

    /// Every restart of a mixture fit degenerated.
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}

pub(crate) fn argument(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Argument {
        op,
        detail: detail.into(),
    }
}

pub(crate) fn numerical(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Numerical {
        op,
        detail: detail.into(),
    }
}

pub(crate) fn input(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Input {
        op,
        detail: detail.into(),
    }
}
