//! Browser bindings for the interactive demo in `www/`.
//!
//! Each export returns a JSON string. The plain functions below the bindings
//! hold the logic so it can be tested natively.

use ks21_core::quantum::{add_white_noise, detection_probability, ks21_bounds, sigma, slit_state};
use ks21_core::sim::{
    convergence_trace, estimate_sigma, run_experiment, ExperimentConfig, NoiseModel, PreparedState,
};
use ks21_core::{KsSet, SlitSpec};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Σ and the 21 yes-probabilities for a six-slit preparation mixed with white
/// noise at weight `w`.
#[wasm_bindgen]
pub fn slit_sigma(t: Vec<f64>, phi: Vec<f64>, w: f64) -> Result<String, JsError> {
    slit_sigma_json(t, phi, w).map_err(|e| JsError::new(&e))
}

/// Running Σ̂ for a simulated run on one KS state.
#[wasm_bindgen]
pub fn convergence(ks_id: u32, pulses: u32, w: f64, seed: u32) -> Result<String, JsError> {
    convergence_json(ks_id, pulses, w, seed).map_err(|e| JsError::new(&e))
}

/// Classical and quantum limits for `steps + 1` values of ε̄ in `[0, max]`.
#[wasm_bindgen]
pub fn bounds_curve(max_epsilon: f64, steps: u32) -> Result<String, JsError> {
    bounds_curve_json(max_epsilon, steps).map_err(|e| JsError::new(&e))
}

pub fn slit_sigma_json(t: Vec<f64>, phi: Vec<f64>, w: f64) -> Result<String, String> {
    let set = KsSet::ks21();
    let rho = slit_state(&SlitSpec { t, phi }).map_err(|e| e.to_string())?;
    let rho = add_white_noise(&rho, w).map_err(|e| e.to_string())?;
    let probabilities = set
        .vectors()
        .iter()
        .map(|v| detection_probability(&rho, v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let value = sigma(&rho, &set).map_err(|e| e.to_string())?;
    Ok(json!({ "sigma": value, "probabilities": probabilities }).to_string())
}

pub fn convergence_json(ks_id: u32, pulses: u32, w: f64, seed: u32) -> Result<String, String> {
    let set = KsSet::ks21();
    let cfg = ExperimentConfig {
        pulses_per_run: pulses as u64,
        noise_model: NoiseModel::PreparationWhiteNoise { w },
        rng_seed: seed as u64,
        prepared_state: PreparedState::KsId(ks_id),
        ..ExperimentConfig::default()
    };
    let rec = run_experiment(&cfg, &set).map_err(|e| e.to_string())?;
    let est = estimate_sigma(&rec, 1.0).map_err(|e| e.to_string())?;
    let trace: Vec<_> = convergence_trace(&rec, 1.0)
        .iter()
        .map(|p| json!([p.pulses_sent, p.sigma_hat, p.std_error]))
        .collect();
    Ok(json!({
        "sigma_hat": est.sigma_hat,
        "std_error": est.std_error,
        "trace": trace,
    })
    .to_string())
}

pub fn bounds_curve_json(max_epsilon: f64, steps: u32) -> Result<String, String> {
    if steps == 0 {
        return Err("steps must be positive".into());
    }
    let rows = (0..=steps)
        .map(|k| {
            let eps = max_epsilon * k as f64 / steps as f64;
            ks21_bounds(eps)
                .map(|b| json!([eps, b.classical_corrected, b.quantum_lower, b.quantum_upper]))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(json!({ "columns": ["epsilon_bar", "classical", "quantum_lower", "quantum_upper"], "rows": rows }).to_string())
}
