use thiserror::Error;

/// Input errors: every variant maps to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("{context}: {source}")]
    Engine {
        context: String,
        #[source]
        source: jetcalc_engine::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown corpus `{name}`; available: {available}")]
    UnknownCorpus { name: String, available: String },
}

impl CliError {
    pub fn engine(context: impl Into<String>) -> impl FnOnce(jetcalc_engine::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Engine { context, source }
    }
}
