//! Config-driven experiment runner for becprobe.

pub mod config;
pub mod experiment;
pub mod load;
pub mod output;
pub mod presets;
pub mod render;
pub mod run;
pub mod validate;

pub use config::ExperimentConfig;

/// Exit code for invalid configs.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for solver or integrator failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] becprobe::Error),
    #[error(transparent)]
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_VALIDATION,
            CliError::Model(e) if e.is_validation() => EXIT_VALIDATION,
            CliError::Model(_) => EXIT_NUMERICAL,
            CliError::Io(_) => 1,
        }
    }
}
