//! Monte Carlo reproduction of the certification protocol.
//!
//! Randomness comes from counter-based ChaCha streams keyed by
//! `(seed, purpose, stream, block)`, so every result is a pure function of the
//! configuration regardless of thread count.

pub mod config;
pub mod run;
pub mod suite;

pub use config::{checkpoint_grid, ExperimentConfig, NoiseModel, PreparedState};
pub use exclusivity_tests::{run_exclusivity_tests, ExclusivityReport};
pub use run::{
    convergence_trace, estimate_from_counts, estimate_sigma, run_experiment, RunRecord,
    SigmaEstimate, TracePoint,
};
pub use suite::{ks_states, non_ks_states, run_suite, state_independence_suite, SuiteRow};
