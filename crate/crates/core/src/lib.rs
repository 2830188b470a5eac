//! Exact and numerical tooling for the 21-ray, 7-context Kochen-Specker set in
//! dimension six.
//!
//! The crate is organised bottom-up:
//!
//! * [`eisenstein`] and [`ks_set`]: exact representation and validation of KS sets
//!   over the Eisenstein integers `Z[ω]`.
//! * [`exclusivity`]: the exclusivity graph, its independence number and the
//!   KS-colorability search.
//! * [`theta`]: the weighted Lovász theta SDP with primal/dual certificates.
//! * [`quantum`]: density matrices, slit states, the `Σ` functional and the
//!   error-corrected bounds.
//! * [`sim`]: pulse-by-pulse Monte Carlo of the certification protocol.
//! * [`certify`]: the verdict rule turning estimates and bounds into a report.

pub mod certify;
pub mod eisenstein;
pub mod error;
pub mod exclusivity;
pub mod ks_set;
pub mod quantum;
pub mod sim;
pub mod theta;

pub use eisenstein::EisensteinInt;
pub use error::{Error, Result};
pub use exclusivity::{ColorabilityVerdict, ExclusivityGraph};
pub use ks_set::{Context, KsSet, KsVector, Profile};
pub use quantum::{BoundSet, DensityMatrix, SlitSpec};
pub use theta::SdpResult;

/// Complex scalar used by every floating-point layer of the crate.
pub type Complex64 = num_complex::Complex<f64>;
