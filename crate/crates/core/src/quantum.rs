//! Ideal quantum predictions for the certification protocol.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ks_set::{KsSet, KsVector};
use crate::Complex64;

pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Coefficient of every probability in `Σ = 2 Σ_i P(Π_i = 1)`.
pub const SIGMA_WEIGHT: f64 = 2.0;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity at the crate tolerances.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, expected a nonempty square matrix",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let dim = entries.nrows();
        for i in 0..dim {
            for j in 0..dim {
                let d = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if d > HERMITIAN_TOLERANCE {
                    return Err(Error::InvalidState(format!(
                        "not Hermitian at ({i}, {j}): deviation {d:e}"
                    )));
                }
            }
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace is {trace}")));
        }
        let state = Self { entries };
        let lambda = state.min_eigenvalue();
        if lambda < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!(
                "eigenvalue {lambda:e} is negative"
            )));
        }
        Ok(state)
    }

    /// `|ψ⟩⟨ψ|` for the normalized `ψ`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || !norm.is_finite() || norm <= 0.0 {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let d = psi.len();
        let entries = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Self::new(entries)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let entries = DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { entries }
    }

    pub fn from_ks_vector(v: &KsVector) -> Self {
        Self::pure(&v.to_unit_vector()).expect("KS vectors are nonzero")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let hermitian = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(hermitian)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `⟨ψ|ρ|ψ⟩` for a unit vector `ψ`.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..psi.len() {
            for j in 0..psi.len() {
                acc += psi[i].conj() * self.entries[(i, j)] * psi[j];
            }
        }
        Ok(acc.re)
    }

    /// Convex combination `λ self + (1-λ) other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda,
            });
        }
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let a = Complex64::new(lambda, 0.0);
        let b = Complex64::new(1.0 - lambda, 0.0);
        Ok(Self {
            entries: &self.entries * a + &other.entries * b,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let entries = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| [self.entries[(i, j)].re, self.entries[(i, j)].im])
            .collect();
        DensityJson { dim: d, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DensityJson::deserialize(deserializer)?;
        if raw.entries.len() != raw.dim * raw.dim {
            return Err(D::Error::custom(format!(
                "expected {} entries for dim {}, found {}",
                raw.dim * raw.dim,
                raw.dim,
                raw.entries.len()
            )));
        }
        let m = DMatrix::from_row_iterator(
            raw.dim,
            raw.dim,
            raw.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        DensityMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Transmissivities and phases of the slit mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitSpec {
    pub t: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Pure slit state with amplitudes `√t_l e^{iφ_l}`, normalized by `√(Σ t_l)`.
/// The phase of a closed slit is irrelevant.
pub fn slit_state(spec: &SlitSpec) -> Result<DensityMatrix> {
    if spec.t.len() != spec.phi.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.t.len(),
            found: spec.phi.len(),
        });
    }
    if let Some(&t) = spec.t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::OutOfRange {
            name: "transmissivity",
            value: t,
        });
    }
    if !spec.t.iter().any(|&t| t > 0.0) {
        return Err(Error::InvalidState("all slits are closed".into()));
    }
    let normalization: f64 = spec.t.iter().sum();
    let amplitudes: Vec<Complex64> = spec
        .t
        .iter()
        .zip(&spec.phi)
        .map(|(&t, &phi)| {
            if t == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar((t / normalization).sqrt(), phi)
            }
        })
        .collect();
    DensityMatrix::pure(&amplitudes)
}

/// `⟨v|ρ|v⟩` with `v` normalized, clamped to `[0, 1]` against rounding.
pub fn detection_probability(rho: &DensityMatrix, v: &KsVector) -> Result<f64> {
    Ok(rho.expectation(&v.to_unit_vector())?.clamp(0.0, 1.0))
}

/// `Σ = 2 Σ_i ⟨v_i|ρ|v_i⟩`.
pub fn sigma(rho: &DensityMatrix, set: &KsSet) -> Result<f64> {
    let mut total = 0.0;
    for v in set.vectors() {
        total += rho.expectation(&v.to_unit_vector())?;
    }
    Ok(SIGMA_WEIGHT * total)
}

/// `(1-w)ρ + w I/d`.
pub fn add_white_noise(rho: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRange {
            name: "w",
            value: w,
        });
    }
    rho.mix(&DensityMatrix::maximally_mixed(rho.dim()), 1.0 - w)
}

/// `Σ_i Π_i` over the set's unit vectors.
pub fn projector_sum(set: &KsSet) -> DMatrix<Complex64> {
    let d = set.dimension();
    let mut m = DMatrix::zeros(d, d);
    for u in set.unit_vectors() {
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] += u[i] * u[j].conj();
            }
        }
    }
    m
}

/// Ideal and `ε̄`-corrected limits for `Σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub classical_ideal: f64,
    pub classical_corrected: f64,
    pub quantum_ideal: f64,
    pub quantum_lower: f64,
    pub quantum_upper: f64,
    pub epsilon_bar: f64,
}

/// The ideal bounds hold on a fraction `1-ε̄` of runs; the remaining runs are
/// assigned the worst case, `sigma_max` from above and `0` from below.
pub fn corrected_bounds(
    epsilon_bar: f64,
    classical_ideal: f64,
    quantum_ideal: f64,
    sigma_max: f64,
) -> Result<BoundSet> {
    if !(0.0..=1.0).contains(&epsilon_bar) {
        return Err(Error::OutOfRange {
            name: "epsilon_bar",
            value: epsilon_bar,
        });
    }
    let keep = 1.0 - epsilon_bar;
    Ok(BoundSet {
        classical_ideal,
        classical_corrected: classical_ideal * keep + sigma_max * epsilon_bar,
        quantum_ideal,
        quantum_lower: quantum_ideal * keep,
        quantum_upper: quantum_ideal * keep + sigma_max * epsilon_bar,
        epsilon_bar,
    })
}

/// Bounds for KS21: `2α = 6`, `ϑ = 7`, `Σ ≤ 2·21 = 42`.
pub fn ks21_bounds(epsilon_bar: f64) -> Result<BoundSet> {
    corrected_bounds(epsilon_bar, 6.0, 7.0, 42.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &DensityMatrix, b: &DensityMatrix, tol: f64) -> bool {
        (a.entries() - b.entries()).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn slit_states_of_the_demonstration() {
        let phi1 = slit_state(&SlitSpec {
            t: vec![1.0; 6],
            phi: vec![0.0; 6],
        })
        .unwrap();
        assert!(close(
            &phi1,
            &DensityMatrix::pure(&[c(1.0); 6]).unwrap(),
            1e-15
        ));
        assert!((phi1.entries()[(0, 3)].re - 1.0 / 6.0).abs() < 1e-15);

        let phi2 = slit_state(&SlitSpec {
            t: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            phi: vec![0.0; 6],
        })
        .unwrap();
        assert!((phi2.entries()[(0, 4)].re - 0.5).abs() < 1e-15);
        assert!((phi2.entries()[(0, 0)].re - 0.5).abs() < 1e-15);

        // phases of closed slits are arbitrary
        let ks9 = slit_state(&SlitSpec {
            t: vec![0.0, 1.0, 0.0, 1.0, 1.0, 1.0],
            phi: vec![1.234, 0.0, -3.0, 0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
        })
        .unwrap();
        let expected = DensityMatrix::from_ks_vector(KsSet::ks21().vector(9).unwrap());
        assert!(close(&ks9, &expected, 1e-14));
    }

    #[test]
    fn slit_errors() {
        assert!(slit_state(&SlitSpec {
            t: vec![0.0; 6],
            phi: vec![0.0; 6]
        })
        .is_err());
        assert!(slit_state(&SlitSpec {
            t: vec![1.5; 6],
            phi: vec![0.0; 6]
        })
        .is_err());
        assert!(slit_state(&SlitSpec {
            t: vec![1.0; 6],
            phi: vec![0.0; 5]
        })
        .is_err());
    }

    #[test]
    fn detection_probabilities() {
        let set = KsSet::ks21();
        let ks7 = DensityMatrix::from_ks_vector(set.vector(7).unwrap());
        assert!((detection_probability(&ks7, set.vector(7).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (detection_probability(&ks7, set.vector(9).unwrap()).unwrap() - 0.25).abs() < 1e-15
        );
        let mixed = DensityMatrix::maximally_mixed(6);
        for v in set.vectors() {
            assert!((detection_probability(&mixed, v).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        }
        let small = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            detection_probability(&small, set.vector(1).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sigma_is_seven() {
        let set = KsSet::ks21();
        assert!((sigma(&DensityMatrix::maximally_mixed(6), &set).unwrap() - 7.0).abs() < 1e-12);
        for v in set.vectors() {
            let rho = DensityMatrix::from_ks_vector(v);
            assert!((sigma(&rho, &set).unwrap() - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn white_noise_endpoints() {
        let set = KsSet::ks21();
        let ks9 = DensityMatrix::from_ks_vector(set.vector(9).unwrap());
        assert!(close(&add_white_noise(&ks9, 0.0).unwrap(), &ks9, 1e-15));
        assert!(close(
            &add_white_noise(&ks9, 1.0).unwrap(),
            &DensityMatrix::maximally_mixed(6),
            1e-15
        ));
        let noisy = add_white_noise(&ks9, 0.3).unwrap();
        assert!((noisy.entries()[(1, 1)].re - (0.7 * 0.25 + 0.05)).abs() < 1e-15);
        assert!((sigma(&noisy, &set).unwrap() - 7.0).abs() < 1e-12);
        assert!(add_white_noise(&ks9, 1.2).is_err());
    }

    #[test]
    fn bounds_at_measured_epsilon() {
        let b = ks21_bounds(0.0151).unwrap();
        assert!((b.classical_corrected - 6.5436).abs() < 1e-12);
        assert!((b.classical_corrected - 6.55).abs() < 0.01);
        assert!((b.quantum_lower - 6.8943).abs() < 1e-12);
        assert!((b.quantum_upper - 7.5285).abs() < 1e-12);
        let ideal = ks21_bounds(0.0).unwrap();
        assert_eq!(
            (
                ideal.classical_corrected,
                ideal.quantum_lower,
                ideal.quantum_upper
            ),
            (6.0, 7.0, 7.0)
        );
        assert!(ks21_bounds(-0.1).is_err());
        assert!(ks21_bounds(1.1).is_err());
    }

    #[test]
    fn density_validation() {
        let not_hermitian = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(DensityMatrix::new(not_hermitian).is_err());
        let bad_trace = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(0.6)]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[c(1.2), c(0.0), c(0.0), c(-0.2)]);
        assert!(DensityMatrix::new(negative).is_err());
    }

    #[test]
    fn json_round_trip() {
        let set = KsSet::ks21();
        let rho =
            add_white_noise(&DensityMatrix::from_ks_vector(set.vector(9).unwrap()), 0.3).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert!(close(&rho, &back, 1e-15));
        assert!(serde_json::from_str::<DensityMatrix>(r#"{"dim":2,"entries":[[1,0]]}"#).is_err());
    }
}
