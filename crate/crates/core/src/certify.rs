//! Structural checks and the certification verdict.
//!
//! A preparation counts as evidence for the six-dimensional quantum system
//! when its estimate clears the corrected noncontextual bound by three
//! standard errors and sits inside the corrected quantum band (widened by
//! three standard errors).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exclusivity::{build_graph, independence_number, ks_colorability, noncontextual_bound};
use crate::ks_set::{KsSet, Profile};
use crate::quantum::{BoundSet, SIGMA_WEIGHT};
use crate::sim::run::{estimate_from_counts, SigmaEstimate};
use crate::theta::{check_certificates, lovasz_theta, DEFAULT_TOLERANCE};

/// Number of standard errors separating an estimate from a threshold.
pub const SIGMA_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    QuantumD6Confirmed,
    ClassicalCompatible,
    Inconclusive,
}

impl Verdict {
    /// CLI exit status: 0 confirmed, 1 classical, 2 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::QuantumD6Confirmed => 0,
            Verdict::ClassicalCompatible => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::QuantumD6Confirmed => "QUANTUM_D6_CONFIRMED",
            Verdict::ClassicalCompatible => "CLASSICAL_COMPATIBLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateAssessment {
    pub label: String,
    pub sigma_hat: f64,
    pub std_error: f64,
    pub above_classical: bool,
    pub within_quantum_band: bool,
}

impl StateAssessment {
    pub fn new(label: impl Into<String>, est: SigmaEstimate, bounds: &BoundSet) -> Self {
        let margin = SIGMA_MARGIN * est.std_error;
        Self {
            label: label.into(),
            sigma_hat: est.sigma_hat,
            std_error: est.std_error,
            above_classical: est.sigma_hat - margin > bounds.classical_corrected,
            within_quantum_band: est.sigma_hat >= bounds.quantum_lower - margin
                && est.sigma_hat <= bounds.quantum_upper + margin,
        }
    }

    pub fn confirmed(&self) -> bool {
        self.above_classical && self.within_quantum_band
    }
}

/// Aggregate verdict over all tested states, with a reason when not confirmed.
pub fn decide(states: &[StateAssessment]) -> (Verdict, Option<String>) {
    if states.is_empty() {
        return (Verdict::Inconclusive, Some("no states tested".into()));
    }
    if states.iter().all(StateAssessment::confirmed) {
        return (Verdict::QuantumD6Confirmed, None);
    }
    if let Some(s) = states.iter().find(|s| !s.above_classical) {
        return (
            Verdict::ClassicalCompatible,
            Some(format!(
                "state {} gives {:.4} ± {:.4}, not above the noncontextual bound by {SIGMA_MARGIN} standard errors",
                s.label, s.sigma_hat, s.std_error
            )),
        );
    }
    let s = states.iter().find(|s| !s.within_quantum_band).unwrap();
    (
        Verdict::Inconclusive,
        Some(format!(
            "state {} gives {:.4} ± {:.4}, outside the quantum band",
            s.label, s.sigma_hat, s.std_error
        )),
    )
}

/// Counts of one prepared state, as read from lab data or a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub label: String,
    pub projector_ids: Vec<u32>,
    pub pulses: Vec<u64>,
    pub detections: Vec<u64>,
    pub efficiency: f64,
}

/// Verdict from raw count tables. Any unsampled projector makes the whole
/// certification inconclusive.
pub fn certify_counts(
    tables: &[CountTable],
    bounds: &BoundSet,
) -> (Verdict, Option<String>, Vec<StateAssessment>) {
    let mut states = Vec::with_capacity(tables.len());
    for t in tables {
        match estimate_from_counts(&t.projector_ids, &t.pulses, &t.detections, t.efficiency) {
            Ok(est) => states.push(StateAssessment::new(&t.label, est, bounds)),
            Err(Error::InsufficientSampling { projector }) => {
                return (
                    Verdict::Inconclusive,
                    Some(format!(
                        "insufficient statistics: projector {projector} never sampled for state {}",
                        t.label
                    )),
                    states,
                )
            }
            Err(e) => return (Verdict::Inconclusive, Some(e.to_string()), states),
        }
    }
    let (verdict, reason) = decide(&states);
    (verdict, reason, states)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub dimension: usize,
    pub vectors: usize,
    pub contexts: usize,
    /// Every context is an exactly orthogonal basis (enforced at load time).
    pub orthogonal_contexts: bool,
    /// Every vector lies in exactly two contexts.
    pub context_coverage: bool,
    pub uncolorable: bool,
    pub colorability_nodes: u64,
    pub edges: usize,
    pub degrees: Vec<usize>,
}

impl StructuralReport {
    pub fn passes(&self) -> bool {
        self.orthogonal_contexts && self.context_coverage && self.uncolorable
    }
}

pub fn structural_report(set: &KsSet) -> StructuralReport {
    let g = build_graph(set, SIGMA_WEIGHT);
    let verdict = ks_colorability(set, &g);
    StructuralReport {
        dimension: set.dimension(),
        vectors: set.vectors().len(),
        contexts: set.contexts().len(),
        orthogonal_contexts: true,
        context_coverage: set.occurrences().values().all(|&c| c == 2),
        uncolorable: !verdict.satisfiable,
        colorability_nodes: verdict.nodes_explored,
        edges: g.edge_count(),
        degrees: g.degrees(),
    }
}

/// Classical and quantum invariants of the weighted exclusivity graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInvariants {
    pub alpha: usize,
    pub max_independent_set: Vec<u32>,
    pub noncontextual_bound: f64,
    pub theta: f64,
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub theta_gap: f64,
    pub sdp_iterations: usize,
    pub certificates_verified: bool,
}

pub fn graph_invariants(set: &KsSet) -> Result<GraphInvariants> {
    let g = build_graph(set, SIGMA_WEIGHT);
    let mis = independence_number(&g)?;
    let bound = noncontextual_bound(&g)?;
    let theta = lovasz_theta(&g, DEFAULT_TOLERANCE)?;
    let check = check_certificates(&g, &theta);
    Ok(GraphInvariants {
        alpha: mis.size(),
        max_independent_set: mis.vertices.iter().map(|&v| g.labels()[v]).collect(),
        noncontextual_bound: bound,
        theta: theta.value,
        theta_lower: theta.lower,
        theta_upper: theta.upper,
        theta_gap: theta.gap,
        sdp_iterations: theta.iterations,
        certificates_verified: check.passes(DEFAULT_TOLERANCE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub set_fingerprint: String,
    pub profile: Profile,
    pub structure: StructuralReport,
    pub invariants: GraphInvariants,
    pub epsilon_bar: f64,
    pub bounds: BoundSet,
    pub states: Vec<StateAssessment>,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub seed: Option<u64>,
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.structure;
        let inv = &self.invariants;
        let b = &self.bounds;
        writeln!(f, "set sha256        {}", self.set_fingerprint)?;
        writeln!(
            f,
            "structure         {} vectors, {} contexts, d={}, {}",
            s.vectors,
            s.contexts,
            s.dimension,
            if s.uncolorable {
                "KS-uncolorable"
            } else {
                "colorable"
            }
        )?;
        writeln!(
            f,
            "alpha             {} (noncontextual bound {})",
            inv.alpha, inv.noncontextual_bound
        )?;
        writeln!(
            f,
            "theta (w=2)       {:.9} (gap {:.1e})",
            inv.theta, inv.theta_gap
        )?;
        writeln!(f, "epsilon_bar       {:.6}", self.epsilon_bar)?;
        writeln!(
            f,
            "bounds            classical {:.4} / corrected {:.4}; quantum {:.4} in [{:.4}, {:.4}]",
            b.classical_ideal,
            b.classical_corrected,
            b.quantum_ideal,
            b.quantum_lower,
            b.quantum_upper
        )?;
        for st in &self.states {
            writeln!(
                f,
                "  {:<10} {:.4} ± {:.4}  {}",
                st.label,
                st.sigma_hat,
                st.std_error,
                if st.confirmed() { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "verdict           {}", self.verdict)?;
        if let Some(reason) = &self.reason {
            write!(f, " ({reason})")?;
        }
        writeln!(f)
    }
}
