use std::fs;
use std::path::Path;

use adaptlab_core::{Error as CoreError, SimulationConfig};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// Parses a JSON document into a fully validated [`SimulationConfig`].
pub fn parse_config_str(text: &str) -> Result<SimulationConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: SimulationConfig = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    validate(&config)?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text)
}

pub fn validate(config: &SimulationConfig) -> Result<()> {
    let at = |path: &str| {
        let path = path.to_string();
        move |e: CoreError| CliError::Validation {
            path: path.clone(),
            message: e.to_string(),
        }
    };
    config.population.baseline.validate().map_err(at("population.baseline"))?;
    config.population.effect.validate().map_err(at("population.effect"))?;
    config.validate().map_err(|e| match e {
        CoreError::InvalidConfig { path, reason } => CliError::Validation { path, message: reason },
        CoreError::DegenerateVariance => CliError::Validation {
            path: "estimator".into(),
            message: "asymptotic standard deviation of this estimator is zero for this population".into(),
        },
        other => CliError::Validation {
            path: String::new(),
            message: other.to_string(),
        },
    })
}

/// Canonical JSON form: object keys sorted, no insignificant whitespace.
pub fn canonical_json(config: &SimulationConfig) -> String {
    // serde_json's Value map is ordered by key
    serde_json::to_value(config)
        .expect("config serializes")
        .to_string()
}

/// Hex SHA-256 of [`canonical_json`].
pub fn config_digest(config: &SimulationConfig) -> String {
    hex::encode(Sha256::digest(canonical_json(config).as_bytes()))
}
