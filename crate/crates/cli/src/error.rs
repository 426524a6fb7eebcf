use thiserror::Error;

/// A command failure, split by exit code.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags or configuration (exit 1).
    #[error("{0:#}")]
    Config(anyhow::Error),
    /// Unreadable, malformed or unusable input data, or failed output (exit 2).
    #[error("{0:#}")]
    Data(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    pub fn config(msg: impl std::fmt::Display) -> Self {
        Failure::Config(anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        Failure::Data(anyhow::anyhow!("{msg}"))
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Tags an error with its exit-code class.
pub trait Classify<T> {
    fn or_config(self) -> Outcome<T>;
    fn or_data(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_config(self) -> Outcome<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }

    fn or_data(self) -> Outcome<T> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}
