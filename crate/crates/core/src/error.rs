use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shapes, ranges, state).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A computation produced a non-finite value.
    #[error("numeric fault in {stage}: {detail}")]
    Numeric { stage: String, detail: String },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numeric(stage: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            stage: stage.into(),
            detail: detail.into(),
        }
    }
}

/// Early-return a contract violation when `cond` does not hold.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::contract(alloc::format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
