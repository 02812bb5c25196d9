use thiserror::Error;

/// Process exit status for usage and configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for missing or malformed input files.
pub const EXIT_INPUT: i32 = 3;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] flownet_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(flownet_core::Error::Domain(_) | flownet_core::Error::Shape(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}
