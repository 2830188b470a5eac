//! What a simulation invocation runs, and running it.

use clap::ValueEnum;
use ks21_core::sim::suite::LabelledState;
use ks21_core::sim::{
    estimate_sigma, ks_states, non_ks_states, run_exclusivity_tests, run_experiment,
    ExclusivityReport, ExperimentConfig, NoiseModel, PreparedState, RunRecord, SigmaEstimate,
};
use ks21_core::KsSet;
use rayon::prelude::*;

use crate::failure::Outcome;

pub const DEFAULT_SEED: u64 = 1;
/// Preparation noise whose wrong-result rate `w/6` matches `ε̄ = 0.0151`.
pub const CALIBRATED_WHITE_NOISE: f64 = 0.0906;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Exclusivity tests only.
    Fig2,
    /// The 21 KS states with calibrated noise.
    Fig3,
    /// Noise-free convergence trace for KS7.
    Fig4,
    /// The five non-KS preparations with calibrated noise.
    Fig5,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
        }
    }
}

pub struct Plan {
    pub name: String,
    pub config: ExperimentConfig,
    pub exclusivity: bool,
    pub states: Vec<LabelledState>,
    /// File stem of the per-state Σ̂ table, when one is written.
    pub table: Option<String>,
    pub trace: bool,
}

impl Plan {
    pub fn preset(preset: Preset, set: &KsSet) -> Outcome<Self> {
        let noisy = ExperimentConfig {
            noise_model: NoiseModel::PreparationWhiteNoise {
                w: CALIBRATED_WHITE_NOISE,
            },
            rng_seed: DEFAULT_SEED,
            ..ExperimentConfig::default()
        };
        let name = preset.name().to_string();
        Ok(match preset {
            Preset::Fig2 => Plan {
                name,
                config: noisy,
                exclusivity: true,
                states: Vec::new(),
                table: None,
                trace: false,
            },
            Preset::Fig3 => Plan {
                config: noisy,
                exclusivity: true,
                states: ks_states(set),
                table: Some(name.clone()),
                trace: false,
                name,
            },
            Preset::Fig4 => Plan {
                config: ExperimentConfig {
                    rng_seed: DEFAULT_SEED,
                    prepared_state: PreparedState::KsId(7),
                    ..ExperimentConfig::default()
                },
                exclusivity: false,
                states: ks_states(set)
                    .into_iter()
                    .filter(|s| s.label == "KS7")
                    .collect(),
                table: None,
                trace: true,
                name,
            },
            Preset::Fig5 => Plan {
                config: noisy,
                exclusivity: true,
                states: non_ks_states(set)?,
                table: Some(name.clone()),
                trace: false,
                name,
            },
        })
    }

    /// A user config: exclusivity tests plus one run of its prepared state.
    pub fn from_config(config: ExperimentConfig) -> Self {
        Plan {
            name: "config".into(),
            states: vec![LabelledState {
                label: "state".into(),
                stream: config.stream,
                state: config.prepared_state.clone(),
            }],
            config,
            exclusivity: true,
            table: Some("sigma".into()),
            trace: true,
        }
    }

    pub fn override_with(&mut self, seed: Option<u64>, pulses: Option<u64>) {
        if let Some(seed) = seed {
            self.config.rng_seed = seed;
        }
        if let Some(pulses) = pulses {
            self.config.pulses_per_run = pulses;
        }
    }
}

pub struct StateRun {
    pub label: String,
    pub record: RunRecord,
    pub estimate: SigmaEstimate,
}

pub struct Execution {
    pub exclusivity: Option<ExclusivityReport>,
    pub runs: Vec<StateRun>,
}

pub fn execute(plan: &Plan, set: &KsSet) -> Outcome<Execution> {
    plan.config.validate()?;
    let exclusivity = if plan.exclusivity {
        Some(run_exclusivity_tests(&plan.config, set)?)
    } else {
        None
    };
    let runs = plan
        .states
        .par_iter()
        .map(|s| {
            let cfg = ExperimentConfig {
                prepared_state: s.state.clone(),
                stream: s.stream,
                ..plan.config.clone()
            };
            let record = run_experiment(&cfg, set)?;
            let estimate = estimate_sigma(&record, cfg.detection_efficiency)?;
            Ok(StateRun {
                label: s.label.clone(),
                record,
                estimate,
            })
        })
        .collect::<ks21_core::Result<Vec<_>>>()?;
    Ok(Execution { exclusivity, runs })
}
