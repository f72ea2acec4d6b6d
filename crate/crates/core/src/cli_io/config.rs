use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::{initial_state, InitialCondition, SimConfig, State};
use crate::spectral_basis::Basis;

use super::format::read_trajectory_binary;

/// Parse and validate a TOML configuration. Missing keys take their defaults.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let de = toml::Deserializer::new(text);
    let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        Error::Config {
            key: if key == "." { "<root>".into() } else { key },
            message: e.into_inner().message().trim().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Initial state of path `seed`, loading snapshot files when the config names one.
/// Snapshots taken at another cutoff are truncated or zero-padded onto `basis`.
pub fn resolve_initial(config: &SimConfig, basis: &std::sync::Arc<Basis>, seed: u64) -> Result<State> {
    match &config.initial {
        InitialCondition::Snapshot { path, sample } => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let stored = read_trajectory_binary(&bytes)?;
            let s = stored.samples.get(*sample).ok_or_else(|| Error::Config {
                key: "initial.sample".into(),
                message: format!("{path} holds {} samples, asked for {sample}", stored.samples.len()),
            })?;
            let state = stored.state(s)?;
            Ok(State {
                velocity: state.velocity.embed(basis)?,
                director: state.director.embed(basis)?,
            })
        }
        _ => initial_state(config, basis, seed),
    }
}
