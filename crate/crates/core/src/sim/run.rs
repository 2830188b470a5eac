//! Pulse-by-pulse simulation of one measurement run.
//!
//! Pulses are processed in fixed-size blocks; block `k` draws from PRNG stream
//! `k` of the run, so the record does not depend on how many threads execute
//! the blocks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ks_set::KsSet;
use crate::quantum::SIGMA_WEIGHT;
use crate::sim::config::{checkpoint_grid, stream_rng, Domain, ExperimentConfig};

/// Pulses per PRNG block.
pub const BLOCK_PULSES: u64 = 1 << 16;

/// Cumulative counts after `pulses_sent` pulses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub pulses_sent: u64,
    pub pulses: Vec<u64>,
    pub detections: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseEvent {
    pub projector: u32,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Vector id of each projector, in set order.
    pub projector_ids: Vec<u32>,
    /// `n_i`: pulses sent to projector `i`.
    pub pulses: Vec<u64>,
    /// `c_i`: detections behind projector `i`.
    pub detections: Vec<u64>,
    pub checkpoints: Vec<Checkpoint>,
    pub log: Option<Vec<PulseEvent>>,
}

impl RunRecord {
    /// Record from aggregate counts only (e.g. lab data), without checkpoints.
    pub fn from_counts(
        projector_ids: Vec<u32>,
        pulses: Vec<u64>,
        detections: Vec<u64>,
    ) -> Result<Self> {
        if pulses.len() != projector_ids.len() || detections.len() != projector_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: projector_ids.len(),
                found: pulses.len().min(detections.len()),
            });
        }
        if let Some(i) = (0..pulses.len()).find(|&i| detections[i] > pulses[i]) {
            return Err(Error::InvalidConfig(vec![format!(
                "projector {}: {} detections exceed {} pulses",
                projector_ids[i], detections[i], pulses[i]
            )]));
        }
        Ok(Self {
            projector_ids,
            pulses,
            detections,
            checkpoints: Vec::new(),
            log: None,
        })
    }

    pub fn total_pulses(&self) -> u64 {
        self.pulses.iter().sum()
    }
}

struct BlockOutcome {
    pulses: Vec<u64>,
    detections: Vec<u64>,
    /// `(global pulse count, cumulative block-local counts)`.
    snapshots: Vec<(u64, Vec<u64>, Vec<u64>)>,
    log: Vec<PulseEvent>,
}

fn simulate_block(
    cfg: &ExperimentConfig,
    detect: &[f64],
    ids: &[u32],
    block: u64,
    grid: &[u64],
) -> BlockOutcome {
    let k = detect.len();
    let start = block * BLOCK_PULSES;
    let end = (start + BLOCK_PULSES).min(cfg.pulses_per_run);
    let mut rng = stream_rng(cfg.rng_seed, Domain::Run, cfg.stream, block);
    let mut pulses = vec![0u64; k];
    let mut detections = vec![0u64; k];
    let mut snapshots = Vec::new();
    let mut log = Vec::new();
    let mut next = grid.partition_point(|&g| g <= start);
    for pulse in start..end {
        let i = rng.random_range(0..k);
        let detected = rng.random::<f64>() < detect[i];
        pulses[i] += 1;
        detections[i] += detected as u64;
        if cfg.keep_pulse_log {
            log.push(PulseEvent {
                projector: ids[i],
                detected,
            });
        }
        if next < grid.len() && grid[next] == pulse + 1 {
            snapshots.push((pulse + 1, pulses.clone(), detections.clone()));
            next += 1;
        }
    }
    BlockOutcome {
        pulses,
        detections,
        snapshots,
        log,
    }
}

/// Runs `pulses_per_run` pulses: uniform projector choice, detection with
/// probability `η·P(Π_i = 1)` under the configured noise.
pub fn run_experiment(cfg: &ExperimentConfig, set: &KsSet) -> Result<RunRecord> {
    cfg.validate()?;
    let rho = cfg.prepared_state.resolve(set)?;
    let detect: Vec<f64> = cfg
        .outcome_probabilities(&rho, set)?
        .into_iter()
        .map(|p| cfg.detection_efficiency * p)
        .collect();
    let ids: Vec<u32> = set.vectors().iter().map(|v| v.id()).collect();
    let grid = checkpoint_grid(cfg.pulses_per_run);
    let blocks = cfg.pulses_per_run.div_ceil(BLOCK_PULSES);

    let outcomes: Vec<BlockOutcome> = (0..blocks)
        .into_par_iter()
        .map(|b| simulate_block(cfg, &detect, &ids, b, &grid))
        .collect();

    let k = ids.len();
    let mut pulses = vec![0u64; k];
    let mut detections = vec![0u64; k];
    let mut checkpoints = Vec::with_capacity(grid.len());
    let mut log = cfg.keep_pulse_log.then(Vec::new);
    for outcome in outcomes {
        for (sent, n, c) in outcome.snapshots {
            checkpoints.push(Checkpoint {
                pulses_sent: sent,
                pulses: pulses.iter().zip(&n).map(|(a, b)| a + b).collect(),
                detections: detections.iter().zip(&c).map(|(a, b)| a + b).collect(),
            });
        }
        pulses
            .iter_mut()
            .zip(&outcome.pulses)
            .for_each(|(a, b)| *a += b);
        detections
            .iter_mut()
            .zip(&outcome.detections)
            .for_each(|(a, b)| *a += b);
        if let Some(log) = log.as_mut() {
            log.extend(outcome.log);
        }
    }
    Ok(RunRecord {
        projector_ids: ids,
        pulses,
        detections,
        checkpoints,
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma_hat: f64,
    pub std_error: f64,
}

/// `Σ̂ = 2 Σ_i c_i / (η n_i)` with Poisson errors (`var c_i ≈ c_i`) added in
/// quadrature.
pub fn estimate_from_counts(
    projector_ids: &[u32],
    pulses: &[u64],
    detections: &[u64],
    efficiency: f64,
) -> Result<SigmaEstimate> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::OutOfRange {
            name: "detection_efficiency",
            value: efficiency,
        });
    }
    let mut sum = 0.0;
    let mut variance = 0.0;
    for ((&id, &n), &c) in projector_ids.iter().zip(pulses).zip(detections) {
        if n == 0 {
            return Err(Error::InsufficientSampling { projector: id });
        }
        let scale = efficiency * n as f64;
        sum += c as f64 / scale;
        variance += c as f64 / (scale * scale);
    }
    Ok(SigmaEstimate {
        sigma_hat: SIGMA_WEIGHT * sum,
        std_error: SIGMA_WEIGHT * variance.sqrt(),
    })
}

pub fn estimate_sigma(rec: &RunRecord, efficiency: f64) -> Result<SigmaEstimate> {
    estimate_from_counts(&rec.projector_ids, &rec.pulses, &rec.detections, efficiency)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub pulses_sent: u64,
    pub sigma_hat: f64,
    pub std_error: f64,
}

/// Running estimate at every checkpoint where all projectors have been
/// sampled at least once.
pub fn convergence_trace(rec: &RunRecord, efficiency: f64) -> Vec<TracePoint> {
    rec.checkpoints
        .iter()
        .filter_map(|cp| {
            estimate_from_counts(&rec.projector_ids, &cp.pulses, &cp.detections, efficiency)
                .ok()
                .map(|e| TracePoint {
                    pulses_sent: cp.pulses_sent,
                    sigma_hat: e.sigma_hat,
                    std_error: e.std_error,
                })
        })
        .collect()
}
