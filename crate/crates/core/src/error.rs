use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no package manifest (Cargo.toml) found under {0}")]
    MissingManifest(PathBuf),

    #[error("malformed manifest {path}: {message}")]
    BadManifest { path: PathBuf, message: String },

    #[error("required tool `{0}` is not available on PATH")]
    ToolchainMissing(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path} contains {count} fuzz_target! invocations; exactly one is required")]
    MultipleTargets { path: PathBuf, count: usize },

    #[error("fuzz target `{target}` takes an unsupported parameter type `{descriptor}`")]
    UnsupportedParam { target: String, descriptor: String },

    #[error("fuzz target `{0}` is already instrumented with a reporter")]
    AlreadyInstrumented(String),

    #[error("fuzz build failed: {0}")]
    FuzzBuildFailed(String),

    #[error("fuzz run of `{target}` failed: {message}")]
    FuzzRunFailed { target: String, message: String },

    #[error("reporter sink {path} is unreadable: {message}")]
    SinkUnreadable { path: PathBuf, message: String },

    #[error("completion cannot be repaired: {0}")]
    Unrepairable(String),

    #[error("evaluation harness for task `{task}` does not build: {message}")]
    HarnessBuildFailed { task: String, message: String },

    #[error("coverage tool `{0}` is not available")]
    CoverageToolMissing(String),

    #[error("malformed coverage report: {0}")]
    CoverageParse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by the environment (missing tools, failing external
    /// builds) rather than by user input.
    pub fn is_environmental(&self) -> bool {
        matches!(
            self,
            Error::ToolchainMissing(_)
                | Error::FuzzBuildFailed(_)
                | Error::CoverageToolMissing(_)
                | Error::HarnessBuildFailed { .. }
        )
    }
}
