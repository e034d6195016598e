use thiserror::Error;

/// Failure modes shared by every computation in the crate.
///
/// `InvalidInput` marks a violated precondition (bad covector, point on the
/// wrong set, malformed spec). `Numerical` marks a computation that could not
/// reach its tolerance; `diagnostics` carries whatever state helps reproduce it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrushinError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical fault in {context}: {diagnostics}")]
    Numerical {
        context: &'static str,
        diagnostics: String,
    },
}

impl GrushinError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        GrushinError::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(context: &'static str, diagnostics: impl Into<String>) -> Self {
        GrushinError::Numerical {
            context,
            diagnostics: diagnostics.into(),
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, GrushinError::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, GrushinError>;
