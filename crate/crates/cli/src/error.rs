use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<entlqc_core::Error> for CliError {
    fn from(e: entlqc_core::Error) -> Self {
        use entlqc_core::Error as E;
        match e {
            E::InvalidInstance(_) | E::InvalidArgument(_) | E::Dimension(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}
