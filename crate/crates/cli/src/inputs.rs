//! Loading the KS set and the experiment config.

use std::fs;
use std::path::Path;

use ks21_core::ks_set::{fingerprint, load_ks_set, KS21_JSON};
use ks21_core::sim::{ExperimentConfig, NoiseModel, PreparedState};
use ks21_core::KsSet;
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::failure::{Failure, Outcome};

pub struct LoadedSet {
    pub set: KsSet,
    pub sha256: String,
    pub source: String,
}

pub fn read_file(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

/// The set at `path`, or the shipped KS21 set when no path is given.
pub fn load_set(path: Option<&Path>) -> Outcome<LoadedSet> {
    let (bytes, source) = match path {
        Some(p) => (read_file(p)?, p.display().to_string()),
        None => (KS21_JSON.as_bytes().to_vec(), "builtin:ks21".to_string()),
    };
    let set =
        load_ks_set(bytes.as_slice()).map_err(|e| Failure::check(format!("{source}: {e}")))?;
    Ok(LoadedSet {
        set,
        sha256: fingerprint(&bytes),
        source,
    })
}

const REQUIRED: [&str; 5] = [
    "pulses_per_run",
    "detection_efficiency",
    "noise_model",
    "rng_seed",
    "prepared_state",
];
const OPTIONAL: [&str; 3] = ["stream", "trials_per_pair", "keep_pulse_log"];

fn field<T: DeserializeOwned>(
    map: &Map<String, Value>,
    key: &str,
    problems: &mut Vec<String>,
) -> Option<T> {
    let value = map.get(key)?;
    match serde_json::from_value(value.clone()) {
        Ok(v) => Some(v),
        Err(e) => {
            problems.push(format!("field `{key}`: {e}"));
            None
        }
    }
}

/// Parses a config file, reporting every schema and range violation at once.
pub fn parse_config(text: &str) -> Outcome<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(Failure::usage("config file is empty"));
    }
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Failure::usage(format!("config is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(Failure::usage("config must be a JSON object"));
    };

    let mut problems = Vec::new();
    for key in map.keys() {
        if !REQUIRED.contains(&key.as_str()) && !OPTIONAL.contains(&key.as_str()) {
            problems.push(format!("unknown field `{key}`"));
        }
    }
    for key in REQUIRED {
        if !map.contains_key(key) {
            problems.push(format!("missing field `{key}`"));
        }
    }
    let defaults = ExperimentConfig::default();
    let pulses = field::<u64>(&map, "pulses_per_run", &mut problems);
    let eta = field::<f64>(&map, "detection_efficiency", &mut problems);
    let noise = field::<NoiseModel>(&map, "noise_model", &mut problems);
    let seed = field::<u64>(&map, "rng_seed", &mut problems);
    let state = field::<PreparedState>(&map, "prepared_state", &mut problems);
    let stream = field::<u64>(&map, "stream", &mut problems);
    let trials = field::<u64>(&map, "trials_per_pair", &mut problems);
    let keep_log = field::<bool>(&map, "keep_pulse_log", &mut problems);

    let config = match (pulses, eta, noise, seed, state) {
        (Some(pulses), Some(eta), Some(noise), Some(seed), Some(state)) => Some(ExperimentConfig {
            pulses_per_run: pulses,
            detection_efficiency: eta,
            noise_model: noise,
            rng_seed: seed,
            prepared_state: state,
            stream: stream.unwrap_or(defaults.stream),
            trials_per_pair: trials.unwrap_or(defaults.trials_per_pair),
            keep_pulse_log: keep_log.unwrap_or(defaults.keep_pulse_log),
        }),
        _ => None,
    };
    if let Some(cfg) = &config {
        problems.extend(cfg.violations());
    }
    match config {
        Some(cfg) if problems.is_empty() => Ok(cfg),
        _ => Err(Failure::usage(format!(
            "invalid configuration:\n  {}",
            problems.join("\n  ")
        ))),
    }
}
