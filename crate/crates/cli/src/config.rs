//! TOML configuration files for single trials and grids.

use echoloop::{Error as SimError, GridSpec, TrialConfig};

use crate::CliError;

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Invalid(format!("{what}: {}", e.to_string().trim_end())))
}

fn invalid(e: SimError) -> CliError {
    CliError::Invalid(e.to_string())
}

/// Parse and validate a single-trial configuration.
pub fn parse_trial_config(text: &str) -> Result<TrialConfig, CliError> {
    let config: TrialConfig = parse(text, "trial config")?;
    config.validate().map_err(invalid)?;
    Ok(config)
}

/// Parse a grid and check its structure. Per-cell parameter domains are
/// checked when the grid runs.
pub fn parse_grid_spec(text: &str) -> Result<GridSpec, CliError> {
    let grid: GridSpec = parse(text, "grid config")?;
    grid.validate().map_err(invalid)?;
    Ok(grid)
}

pub fn to_toml<T: serde::Serialize>(value: &T) -> String {
    toml::to_string(value).expect("configuration types always serialize to TOML")
}
