use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ks_set::KsSet;
use crate::quantum::{add_white_noise, slit_state, DensityMatrix, SlitSpec};

pub const DEFAULT_PULSES: u64 = 1_000_000;
pub const DEFAULT_TRIALS_PER_PAIR: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Alice's preparation is mixed with `I/d` at weight `w`.
    PreparationWhiteNoise {
        w: f64,
    },
    /// Each projection is contaminated toward `I/d` at weight `epsilon`.
    ProjectionCrosstalk {
        epsilon: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparedState {
    KsId(u32),
    Slit(SlitSpec),
    Density(DensityMatrix),
    MaximallyMixed,
}

impl PreparedState {
    pub fn resolve(&self, set: &KsSet) -> Result<DensityMatrix> {
        let rho = match self {
            PreparedState::KsId(id) => DensityMatrix::from_ks_vector(
                set.vector(*id)
                    .ok_or_else(|| Error::InvalidConfig(vec![format!("unknown ks_id {id}")]))?,
            ),
            PreparedState::Slit(spec) => slit_state(spec)?,
            PreparedState::Density(rho) => rho.clone(),
            PreparedState::MaximallyMixed => DensityMatrix::maximally_mixed(set.dimension()),
        };
        if rho.dim() != set.dimension() {
            return Err(Error::DimensionMismatch {
                expected: set.dimension(),
                found: rho.dim(),
            });
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pulses_per_run: u64,
    pub detection_efficiency: f64,
    pub noise_model: NoiseModel,
    pub rng_seed: u64,
    pub prepared_state: PreparedState,
    /// Independent PRNG stream for this run; suites give every state its own.
    #[serde(default)]
    pub stream: u64,
    /// Pulses per ordered orthogonal pair in the exclusivity tests.
    #[serde(default = "default_trials")]
    pub trials_per_pair: u64,
    #[serde(default)]
    pub keep_pulse_log: bool,
}

fn default_trials() -> u64 {
    DEFAULT_TRIALS_PER_PAIR
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pulses_per_run: DEFAULT_PULSES,
            detection_efficiency: 1.0,
            noise_model: NoiseModel::None,
            rng_seed: 0,
            prepared_state: PreparedState::MaximallyMixed,
            stream: 0,
            trials_per_pair: DEFAULT_TRIALS_PER_PAIR,
            keep_pulse_log: false,
        }
    }
}

impl ExperimentConfig {
    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.pulses_per_run == 0 {
            out.push("pulses_per_run must be positive".to_string());
        }
        let eta = self.detection_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            out.push(format!(
                "detection_efficiency must lie in (0, 1], got {eta}"
            ));
        }
        match self.noise_model {
            NoiseModel::None => {}
            NoiseModel::PreparationWhiteNoise { w } if !(0.0..=1.0).contains(&w) => {
                out.push(format!("noise_model.w must lie in [0, 1], got {w}"))
            }
            NoiseModel::ProjectionCrosstalk { epsilon } if !(0.0..=1.0).contains(&epsilon) => out
                .push(format!(
                    "noise_model.epsilon must lie in [0, 1], got {epsilon}"
                )),
            _ => {}
        }
        if self.trials_per_pair == 0 {
            out.push("trials_per_pair must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Yes-probability of every projector for a prepared state under the
    /// noise model, before detector efficiency.
    pub fn outcome_probabilities(&self, rho: &DensityMatrix, set: &KsSet) -> Result<Vec<f64>> {
        let d = set.dimension() as f64;
        let rho_eff = match self.noise_model {
            NoiseModel::PreparationWhiteNoise { w } => add_white_noise(rho, w)?,
            _ => rho.clone(),
        };
        set.vectors()
            .iter()
            .map(|v| {
                let p = rho_eff.expectation(&v.to_unit_vector())?;
                let p = match self.noise_model {
                    NoiseModel::ProjectionCrosstalk { epsilon } => {
                        (1.0 - epsilon) * p + epsilon / d
                    }
                    _ => p,
                };
                Ok(p.clamp(0.0, 1.0))
            })
            .collect()
    }
}

/// Purpose of a PRNG stream, kept apart so runs and exclusivity tests with the
/// same seed never share random numbers.
#[derive(Debug, Clone, Copy)]
#[repr(u8)]
pub(crate) enum Domain {
    Run = 0,
    Exclusivity = 1,
}

/// Counter-based stream `(seed, domain, stream, block)`.
pub(crate) fn stream_rng(seed: u64, domain: Domain, stream: u64, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16] = domain as u8;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(block);
    rng
}

/// Logarithmic checkpoint grid: 20 points per decade from 10² up to
/// `pulses`, always ending at `pulses`.
pub fn checkpoint_grid(pulses: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut decade = 2;
    loop {
        let start = 10f64.powi(decade);
        if start > pulses as f64 {
            break;
        }
        for j in 0..20 {
            let p = (start * 10f64.powf(j as f64 / 20.0)).round() as u64;
            if p <= pulses {
                grid.push(p);
            }
        }
        decade += 1;
    }
    grid.push(pulses);
    grid.dedup();
    grid
}
