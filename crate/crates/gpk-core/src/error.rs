use thiserror::Error;

/// Failure classes shared by every module. Each maps onto a CLI exit code.
#[derive(Debug, Error)]
pub enum GpkError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical budget exceeded: {0}")]
    Budget(String),
    #[error("numerical blow-up at t = {last_good_time}: {message}")]
    Blowup { last_good_time: f64, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{stage}` ({context}): {source}")]
    Stage {
        stage: String,
        context: String,
        #[source]
        source: Box<GpkError>,
    },
}

impl GpkError {
    /// Exit code: 2 config, 3 numerical budget, 4 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            GpkError::Config(_) | GpkError::Io { .. } => 2,
            GpkError::Domain(_) => 2,
            GpkError::Budget(_) | GpkError::Blowup { .. } => 3,
            GpkError::Invariant(_) => 4,
            GpkError::Stage { source, .. } => source.exit_code(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        GpkError::Io { path: path.into(), source }
    }

    pub fn in_stage(self, stage: &str, context: impl Into<String>) -> Self {
        GpkError::Stage { stage: stage.to_string(), context: context.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, GpkError>;
