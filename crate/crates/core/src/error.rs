use thiserror::Error;

/// Errors surfaced by construction, parameter validation, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a structural requirement (non-finite entries,
    /// shape mismatch, degenerate geometry).
    #[error("invalid input: {0}")]
    Input(String),

    /// A configuration value is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix handed to an operation breaks that operation's contract
    /// (e.g. an asymmetric matrix passed to the symmetric eigensolver).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iterative solver failed to converge within its iteration budget.
    #[error("solver did not converge after {iterations} iterations: {context}")]
    Convergence { iterations: usize, context: String },

    /// A pipeline stage failed; the stage name tags the underlying error.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
