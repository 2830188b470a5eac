use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ks_set::KsSet;
use crate::quantum::{add_white_noise, sigma, DensityMatrix, SlitSpec};
use crate::sim::config::{ExperimentConfig, PreparedState};
use crate::sim::run::{estimate_sigma, run_experiment};

/// A state under test with its own PRNG stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledState {
    pub label: String,
    pub stream: u64,
    pub state: PreparedState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub sigma_hat: f64,
    pub std_error: f64,
    /// Noise-free prediction for the prepared state.
    pub ideal_sigma: f64,
}

/// Every KS state, labelled `KS<id>`, on streams `1..=21`.
pub fn ks_states(set: &KsSet) -> Vec<LabelledState> {
    set.vectors()
        .iter()
        .map(|v| LabelledState {
            label: format!("KS{}", v.id()),
            stream: v.id() as u64,
            state: PreparedState::KsId(v.id()),
        })
        .collect()
}

/// The five extra preparations: uniform superposition, two-slit state,
/// maximally mixed state, `KS9` with 30% white noise and `KS9` itself.
pub fn non_ks_states(set: &KsSet) -> Result<Vec<LabelledState>> {
    let ks9 = set
        .vector(9)
        .map(DensityMatrix::from_ks_vector)
        .ok_or_else(|| crate::Error::InvalidSet("set has no vector 9".into()))?;
    let base = 100;
    Ok(vec![
        LabelledState {
            label: "phi1".into(),
            stream: base + 1,
            state: PreparedState::Slit(SlitSpec {
                t: vec![1.0; 6],
                phi: vec![0.0; 6],
            }),
        },
        LabelledState {
            label: "phi2".into(),
            stream: base + 2,
            state: PreparedState::Slit(SlitSpec {
                t: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
                phi: vec![0.0; 6],
            }),
        },
        LabelledState {
            label: "mixed".into(),
            stream: base + 3,
            state: PreparedState::MaximallyMixed,
        },
        LabelledState {
            label: "KS9_w30".into(),
            stream: base + 4,
            state: PreparedState::Density(add_white_noise(&ks9, 0.3)?),
        },
        LabelledState {
            label: "KS9".into(),
            stream: base + 5,
            state: PreparedState::KsId(9),
        },
    ])
}

/// Runs each state with the base configuration, in parallel.
pub fn run_suite(
    cfg_base: &ExperimentConfig,
    set: &KsSet,
    states: &[LabelledState],
) -> Result<Vec<SuiteRow>> {
    cfg_base.validate()?;
    states
        .par_iter()
        .map(|s| {
            let cfg = ExperimentConfig {
                prepared_state: s.state.clone(),
                stream: s.stream,
                ..cfg_base.clone()
            };
            let rec = run_experiment(&cfg, set)?;
            let est = estimate_sigma(&rec, cfg.detection_efficiency)?;
            Ok(SuiteRow {
                label: s.label.clone(),
                sigma_hat: est.sigma_hat,
                std_error: est.std_error,
                ideal_sigma: sigma(&s.state.resolve(set)?, set)?,
            })
        })
        .collect()
}

/// All 21 KS states followed by the five non-KS preparations.
pub fn state_independence_suite(cfg_base: &ExperimentConfig, set: &KsSet) -> Result<Vec<SuiteRow>> {
    let mut states = ks_states(set);
    states.extend(non_ks_states(set)?);
    run_suite(cfg_base, set, &states)
}
