use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    /// A bounded search ran out of room. `partial` is the best bound
    /// established before giving up, when the caller has one.
    #[error("budget exceeded in {what} (partial result: {partial:?})")]
    BudgetExceeded { what: String, partial: Option<u64> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, partial: Option<u64>) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            partial,
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
