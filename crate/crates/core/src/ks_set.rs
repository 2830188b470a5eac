//! Kochen-Specker sets over `Z[ω]`: vectors, contexts, loading and exact
//! structural validation.
//!
//! A set is a list of rays in `C^d` with integer Eisenstein entries together
//! with a list of contexts. Every context loaded from a file must be a complete
//! orthogonal basis; orthogonality is decided exactly. The `ks21` profile adds
//! the cardinality checks specific to the 21-ray, 7-context set.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eisenstein::EisensteinInt;
use crate::error::{Error, Result};
use crate::Complex64;

/// The shipped KS21 data file.
pub const KS21_JSON: &str = include_str!("../data/ks21.json");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KsVector {
    id: u32,
    entries: Vec<EisensteinInt>,
    squared_norm: i64,
}

impl KsVector {
    pub fn new(id: u32, entries: Vec<EisensteinInt>) -> Result<Self> {
        let mut squared_norm = 0i64;
        for z in &entries {
            squared_norm = squared_norm
                .checked_add(z.checked_norm()?)
                .ok_or(Error::Overflow)?;
        }
        if squared_norm == 0 {
            return Err(Error::ZeroVector(id));
        }
        Ok(Self {
            id,
            entries,
            squared_norm,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn entries(&self) -> &[EisensteinInt] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn squared_norm(&self) -> i64 {
        self.squared_norm
    }

    /// Multiplies every entry by `k` (used to check ray invariance).
    pub fn scaled(&self, k: EisensteinInt) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|z| z.checked_mul(k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.id, entries)
    }

    /// Normalized floating-point copy of the ray.
    pub fn to_unit_vector(&self) -> Vec<Complex64> {
        let scale = 1.0 / (self.squared_norm as f64).sqrt();
        self.entries
            .iter()
            .map(|z| z.to_complex() * scale)
            .collect()
    }
}

/// Exact unnormalized inner product `Σ_l conj(u_l) v_l`.
pub fn inner_product_exact(u: &KsVector, v: &KsVector) -> Result<EisensteinInt> {
    if u.dimension() != v.dimension() {
        return Err(Error::DimensionMismatch {
            expected: u.dimension(),
            found: v.dimension(),
        });
    }
    u.entries
        .iter()
        .zip(&v.entries)
        .try_fold(EisensteinInt::ZERO, |acc, (x, y)| {
            acc.checked_add(x.checked_conj()?.checked_mul(*y)?)
        })
}

pub fn to_unit_vector(v: &KsVector) -> Vec<Complex64> {
    v.to_unit_vector()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context {
    pub member_ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Generic,
    Ks21,
}

#[derive(Debug, Clone)]
pub struct KsSet {
    dimension: usize,
    profile: Profile,
    vectors: Vec<KsVector>,
    contexts: Vec<Context>,
    index: HashMap<u32, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVector {
    id: u32,
    entries: Vec<EisensteinInt>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    dimension: usize,
    #[serde(default)]
    profile: Profile,
    vectors: Vec<RawVector>,
    contexts: Vec<Context>,
}

impl KsSet {
    /// Builds and validates a set. Contexts must be complete orthogonal bases.
    pub fn new(
        dimension: usize,
        vectors: Vec<KsVector>,
        contexts: Vec<Context>,
        profile: Profile,
    ) -> Result<Self> {
        let set = Self::assemble(dimension, vectors, contexts, profile)?;
        set.validate_contexts(true)?;
        if profile == Profile::Ks21 {
            set.validate_ks21()?;
        }
        Ok(set)
    }

    /// The shipped KS21 set.
    pub fn ks21() -> Self {
        Self::from_json_str(KS21_JSON).expect("shipped KS21 file is valid")
    }

    pub fn from_json_str(source: &str) -> Result<Self> {
        let raw: RawSet = serde_json::from_str(source)?;
        let vectors = raw
            .vectors
            .into_iter()
            .map(|v| KsVector::new(v.id, v.entries))
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.dimension, vectors, raw.contexts, raw.profile)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawSet {
            dimension: self.dimension,
            profile: self.profile,
            vectors: self
                .vectors
                .iter()
                .map(|v| RawVector {
                    id: v.id,
                    entries: v.entries.clone(),
                })
                .collect(),
            contexts: self.contexts.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("KS set serializes")
    }

    fn assemble(
        dimension: usize,
        vectors: Vec<KsVector>,
        contexts: Vec<Context>,
        profile: Profile,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        let mut index = HashMap::with_capacity(vectors.len());
        for (pos, v) in vectors.iter().enumerate() {
            if v.id == 0 {
                return Err(Error::InvalidSet("vector ids are 1-based".into()));
            }
            if v.dimension() != dimension {
                return Err(Error::InvalidSet(format!(
                    "vector {} has {} entries, expected {dimension}",
                    v.id,
                    v.dimension()
                )));
            }
            if index.insert(v.id, pos).is_some() {
                return Err(Error::InvalidSet(format!("duplicate vector id {}", v.id)));
            }
        }
        Ok(Self {
            dimension,
            profile,
            vectors,
            contexts,
            index,
        })
    }

    fn validate_contexts(&self, require_complete: bool) -> Result<()> {
        for (k, ctx) in self.contexts.iter().enumerate() {
            let label = k + 1;
            if require_complete && ctx.member_ids.len() != self.dimension {
                return Err(Error::InvalidSet(format!(
                    "context {label} has {} members, expected {}",
                    ctx.member_ids.len(),
                    self.dimension
                )));
            }
            for (i, &a) in ctx.member_ids.iter().enumerate() {
                if !self.index.contains_key(&a) {
                    return Err(Error::InvalidSet(format!(
                        "context {label} references unknown vector {a}"
                    )));
                }
                for &b in &ctx.member_ids[..i] {
                    if a == b {
                        return Err(Error::InvalidSet(format!(
                            "context {label} lists vector {a} twice"
                        )));
                    }
                    let ip = inner_product_exact(self.vector(b).unwrap(), self.vector(a).unwrap())?;
                    if !ip.is_zero() {
                        return Err(Error::InvalidSet(format!(
                            "context {label}: vectors {b} and {a} are not orthogonal (inner product {ip})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_ks21(&self) -> Result<()> {
        if self.dimension != 6 || self.vectors.len() != 21 || self.contexts.len() != 7 {
            return Err(Error::InvalidSet(format!(
                "ks21 profile requires d=6, 21 vectors, 7 contexts; found d={}, {} vectors, {} contexts",
                self.dimension,
                self.vectors.len(),
                self.contexts.len()
            )));
        }
        let occurrences = self.occurrences();
        for v in &self.vectors {
            let count = occurrences.get(&v.id).copied().unwrap_or(0);
            if count != 2 {
                return Err(Error::InvalidSet(format!(
                    "ks21 profile: vector {} appears in {count} contexts, expected 2",
                    v.id
                )));
            }
        }
        Ok(())
    }

    /// Number of contexts each vector id belongs to.
    pub fn occurrences(&self) -> BTreeMap<u32, usize> {
        let mut counts: BTreeMap<u32, usize> = self.vectors.iter().map(|v| (v.id, 0)).collect();
        for id in self.contexts.iter().flat_map(|c| &c.member_ids) {
            *counts.entry(*id).or_default() += 1;
        }
        counts
    }

    /// Removes one vector, trimming the contexts that contained it. The
    /// trimmed contexts are incomplete, so the result has the generic profile.
    pub fn without_vector(&self, id: u32) -> Result<Self> {
        if !self.index.contains_key(&id) {
            return Err(Error::InvalidSet(format!("no vector with id {id}")));
        }
        let vectors = self
            .vectors
            .iter()
            .filter(|v| v.id != id)
            .cloned()
            .collect();
        let contexts = self
            .contexts
            .iter()
            .map(|c| Context {
                member_ids: c.member_ids.iter().copied().filter(|&m| m != id).collect(),
            })
            .collect();
        let set = Self::assemble(self.dimension, vectors, contexts, Profile::Generic)?;
        set.validate_contexts(false)?;
        Ok(set)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn vectors(&self) -> &[KsVector] {
        &self.vectors
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn vector(&self, id: u32) -> Option<&KsVector> {
        self.index.get(&id).map(|&i| &self.vectors[i])
    }

    /// Position of a vector id in [`Self::vectors`].
    pub fn position(&self, id: u32) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn unit_vectors(&self) -> Vec<Vec<Complex64>> {
        self.vectors.iter().map(KsVector::to_unit_vector).collect()
    }
}

/// Reads and validates a KS-set JSON document.
pub fn load_ks_set<R: Read>(mut source: R) -> Result<KsSet> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(e.to_string()))?;
    KsSet::from_json_str(&text)
}

/// Hex SHA-256 of the raw set file, used to tag every emitted artifact.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::EisensteinInt as E;
    use proptest::prelude::*;

    fn ks(id: u32) -> KsVector {
        KsSet::ks21().vector(id).unwrap().clone()
    }

    #[test]
    fn ks7_self_product() {
        assert_eq!(inner_product_exact(&ks(7), &ks(7)).unwrap(), E::ONE);
    }

    #[test]
    fn printed_vectors_match_file() {
        let e = |a, b| E::new(a, b);
        assert_eq!(
            ks(7).entries(),
            &[e(0, 0), e(0, 0), e(0, 0), e(0, 0), e(0, 0), e(1, 0)]
        );
        assert_eq!(
            ks(9).entries(),
            &[e(0, 0), e(1, 0), e(0, 0), e(1, 0), E::OMEGA, E::OMEGA_SQ]
        );
    }

    #[test]
    fn ks7_ks9_overlap() {
        let ip = inner_product_exact(&ks(7), &ks(9)).unwrap();
        assert_eq!(ip, E::new(-1, -1));
        let overlap = ip.checked_norm().unwrap() as f64
            / (ks(7).squared_norm() * ks(9).squared_norm()) as f64;
        assert_eq!(overlap, 0.25);
    }

    #[test]
    fn same_context_pairs_are_orthogonal() {
        let set = KsSet::ks21();
        for ctx in set.contexts() {
            for &a in &ctx.member_ids {
                for &b in &ctx.member_ids {
                    if a != b {
                        let ip =
                            inner_product_exact(set.vector(a).unwrap(), set.vector(b).unwrap())
                                .unwrap();
                        assert!(ip.is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let u = KsVector::new(1, vec![E::ONE; 3]).unwrap();
        let v = KsVector::new(2, vec![E::ONE; 4]).unwrap();
        assert_eq!(
            inner_product_exact(&u, &v),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4
            })
        );
    }

    #[test]
    fn shipped_file_loads() {
        let set = load_ks_set(KS21_JSON.as_bytes()).unwrap();
        assert_eq!(set.dimension(), 6);
        assert_eq!(set.vectors().len(), 21);
        assert_eq!(set.contexts().len(), 7);
        assert_eq!(set.profile(), Profile::Ks21);
        assert!(set.occurrences().values().all(|&c| c == 2));
    }

    #[test]
    fn squared_norm_snapshot() {
        let set = KsSet::ks21();
        let mut norms: Vec<i64> = set.vectors().iter().map(|v| v.squared_norm()).collect();
        norms.sort_unstable();
        let ones = norms.iter().filter(|&&n| n == 1).count();
        let fours = norms.iter().filter(|&&n| n == 4).count();
        assert_eq!((ones, fours), (6, 15));
    }

    #[test]
    fn duplicate_id_in_context_rejected() {
        let text = KS21_JSON.replacen("[2, 3, 4, 5, 6, 7]", "[2, 2, 4, 5, 6, 7]", 1);
        let err = KsSet::from_json_str(&text).unwrap_err();
        assert!(
            err.to_string().contains("context 1 lists vector 2 twice"),
            "{err}"
        );
    }

    #[test]
    fn broken_orthogonality_names_pair() {
        // vector 8 is replaced with something not orthogonal to vector 1
        let text = KS21_JSON.replacen(
            "{ \"id\": 8, \"entries\": [[0, 0], [1, 0], [-1, -1], [-1, -1], [0, 0], [1, 0]] }",
            "{ \"id\": 8, \"entries\": [[0, 0], [1, 0], [1, 0], [-1, -1], [0, 0], [1, 0]] }",
            1,
        );
        assert_ne!(text, KS21_JSON);
        let err = KsSet::from_json_str(&text).unwrap_err();
        assert!(
            err.to_string()
                .contains("vectors 1 and 8 are not orthogonal"),
            "{err}"
        );
    }

    #[test]
    fn parse_error() {
        assert!(matches!(
            KsSet::from_json_str("{ not json"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            KsSet::from_json_str(r#"{"dimension":1,"vectors":[],"contexts":[],"extra":1}"#),
            Err(Error::Parse(_))
        ));
    }

    const EIGHTEEN: &str = include_str!("../tests/data/eighteen_six_contexts.json");

    #[test]
    fn generic_profile_accepts_other_shapes() {
        let set = KsSet::from_json_str(EIGHTEEN).unwrap();
        assert_eq!(set.vectors().len(), 18);
        assert_eq!(set.contexts().len(), 6);
        assert!(set.occurrences().values().all(|&c| c == 2));

        let flagged = EIGHTEEN.replace("\"generic\"", "\"ks21\"");
        let err = KsSet::from_json_str(&flagged).unwrap_err();
        assert!(err.to_string().contains("ks21 profile"), "{err}");
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(
            KsVector::new(3, vec![E::ZERO; 6]),
            Err(Error::ZeroVector(3))
        );
    }

    #[test]
    fn unit_vectors() {
        let u7 = ks(7).to_unit_vector();
        assert_eq!(u7[5], Complex64::new(1.0, 0.0));
        assert!(u7[..5].iter().all(|z| *z == Complex64::new(0.0, 0.0)));

        let u9 = ks(9).to_unit_vector();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let expected = [0.0.into(), 1.0.into(), 0.0.into(), 1.0.into(), w, w * w];
        for (a, b) in u9.iter().zip(expected) {
            assert!((a - b / 2.0).norm() < 1e-15);
        }
        for v in KsSet::ks21().vectors() {
            let norm: f64 = v.to_unit_vector().iter().map(|z| z.norm_sqr()).sum();
            assert!((norm.sqrt() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let set = KsSet::ks21();
        let again = KsSet::from_json_str(&set.to_json_string()).unwrap();
        assert_eq!(again.vectors(), set.vectors());
        assert_eq!(again.contexts(), set.contexts());
    }

    #[test]
    fn without_vector_trims_contexts() {
        let set = KsSet::ks21().without_vector(9).unwrap();
        assert_eq!(set.vectors().len(), 20);
        let sizes: Vec<usize> = set.contexts().iter().map(|c| c.member_ids.len()).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 5).count(), 2);
    }

    fn projector(v: &[Complex64]) -> Vec<Complex64> {
        v.iter()
            .flat_map(|a| v.iter().map(move |b| a * b.conj()))
            .collect()
    }

    proptest! {
        #[test]
        fn scaling_preserves_projector(id in 1u32..=21, a in -20i64..20, b in -20i64..20) {
            prop_assume!(a != 0 || b != 0);
            let v = ks(id);
            let scaled = v.scaled(E::new(a, b)).unwrap();
            let p = projector(&v.to_unit_vector());
            let q = projector(&scaled.to_unit_vector());
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
