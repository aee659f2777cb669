//! JSON scenario documents.
//!
//! Every field is optional; missing fields take the default experiment values
//! (10 types on accuracies 0.20..0.92, c = 5, s = 20, T_com = 10, E_com = 20,
//! T_max = 600, R_max = 10000, N = 100, uniform probabilities). Unknown fields
//! are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::market::ScenarioConfig;

pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let config = if text.trim().is_empty() {
        ScenarioConfig::default()
    } else {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!(
                "line {} column {} at `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?
    };
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Fully resolved document; parses back to the same config.
pub fn config_to_json(config: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(config).expect("config serializes")
}
