//! Experiment runner for the `kinklap` binary: configuration files, table
//! sweeps, plot bundles and checks against expected values.

pub mod check;
pub mod config;
pub mod experiment;
pub mod plots;

/// Configurations shipped with the binary, by file name.
pub const BUNDLED: [(&str, &str); 3] = [
    ("ball.toml", include_str!("../configs/ball.toml")),
    ("cube.toml", include_str!("../configs/cube.toml")),
    ("expected.toml", include_str!("../configs/expected.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Numeric(#[from] kinklap::Error),
    #[error("report error: {0}")]
    Report(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Report(_) | CliError::Io(_) => exit::CONFIG,
            CliError::Numeric(_) => exit::NUMERIC,
        }
    }
}

pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const BREACH: u8 = 4;
}
