use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse scenario: {0}")]
    Parse(String),

    /// A scenario invariant does not hold; `field` names the offending entry.
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("no free cell can reach an exit")]
    NoReachableCell,

    #[error("transport produced negative density {value:e} at cell ({i}, {j})")]
    NegativeDensity { i: usize, j: usize, value: f64 },

    #[error("controlled obstacle is not admissible")]
    Inadmissible,

    #[error("search has no admissible obstacle position")]
    NoAdmissiblePosition,
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
