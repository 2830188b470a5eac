//! Weighted Lovász theta by a dense primal-dual interior-point method.
//!
//! Primal: `max <C, X>` over `X ⪰ 0`, `tr X = 1`, `X_ij = 0` on edges, with
//! `C_ij = √(w_i w_j)`. Dual: `min y_0` subject to
//! `Z = y_0 I + Σ_e y_e E_e - C ⪰ 0`, where `E_e = e_i e_jᵀ + e_j e_iᵀ`.
//!
//! The iteration follows the HKM search direction with a Mehrotra
//! predictor-corrector. Independently of the iterates' own objective values,
//! every iterate is turned into a pair of certificates:
//!
//! * lower bound: the primal iterate with its edge entries zeroed, rescaled to
//!   unit trace and mixed with `I/n` until its smallest eigenvalue is
//!   nonnegative. This matrix is exactly feasible.
//! * upper bound: `λ_max(C - Σ_e y_e E_e)`, which makes the dual slack PSD for
//!   any edge multipliers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::exclusivity::ExclusivityGraph;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;
pub const PSD_FLOOR: f64 = -1e-9;
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    /// Required certified gap `upper - lower`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the PSD boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 100,
            step_fraction: 0.95,
        }
    }
}

/// Dual certificate: edge multipliers and the PSD slack they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWitness {
    /// `(i, j, y_ij)` with 0-based vertices, `i < j`.
    pub edge_multipliers: Vec<(usize, usize, f64)>,
    /// `upper·I + Σ y_e E_e - C`.
    pub slack: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpResult {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Unit-trace PSD matrix vanishing on edges; `<C, X> = lower`.
    pub primal_witness: DMatrix<f64>,
    pub dual_witness: DualWitness,
}

fn row_major(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let re = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect::<Vec<_>>();
    let im = vec![0.0; re.len()];
    (re, im)
}

#[derive(serde::Serialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl MatrixJson {
    fn new(m: &DMatrix<f64>) -> Self {
        let (re, im) = row_major(m);
        Self {
            dim: m.nrows(),
            re,
            im,
        }
    }
}

impl Serialize for SdpResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SdpResult", 8)?;
        s.serialize_field("value", &self.value)?;
        s.serialize_field("lower", &self.lower)?;
        s.serialize_field("upper", &self.upper)?;
        s.serialize_field("gap", &self.gap)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("primal_witness", &MatrixJson::new(&self.primal_witness))?;
        s.serialize_field("dual_slack", &MatrixJson::new(&self.dual_witness.slack))?;
        s.serialize_field("edge_multipliers", &self.dual_witness.edge_multipliers)?;
        s.end()
    }
}

/// Constraint structure of the theta SDP: index 0 is the trace, index
/// `k >= 1` is the edge `edges[k - 1]`.
struct ThetaProblem {
    n: usize,
    edges: Vec<(usize, usize)>,
    cost: DMatrix<f64>,
}

impl ThetaProblem {
    fn new(g: &ExclusivityGraph) -> Self {
        let n = g.n();
        let sqrt_w: Vec<f64> = g.weights().iter().map(|w| w.sqrt()).collect();
        Self {
            n,
            edges: g.edges(),
            cost: DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * sqrt_w[j]),
        }
    }

    fn m(&self) -> usize {
        1 + self.edges.len()
    }

    fn rhs(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.m());
        b[0] = 1.0;
        b
    }

    /// `A(Y)_k = <A_k, Y>` for a (not necessarily symmetric) matrix.
    fn apply(&self, y: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        out[0] = y.trace();
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            out[k + 1] = y[(i, j)] + y[(j, i)];
        }
        out
    }

    /// `Σ_k v_k A_k`.
    fn adjoint(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.n, self.n) * v[0];
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            out[(i, j)] += v[k + 1];
            out[(j, i)] += v[k + 1];
        }
        out
    }

    /// `C - Σ_e y_e E_e` (the trace multiplier excluded).
    fn edge_penalized_cost(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.cost.clone();
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            out[(i, j)] -= y[k + 1];
            out[(j, i)] -= y[k + 1];
        }
        out
    }

    /// Schur complement `M_kl = tr(A_k X A_l Z⁻¹)`.
    fn schur(&self, x: &DMatrix<f64>, zinv: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.m();
        let mut schur = DMatrix::zeros(m, m);
        let xz = x * zinv;
        schur[(0, 0)] = xz.trace();
        for (l, &(i, j)) in self.edges.iter().enumerate() {
            // tr(X E_ij Z⁻¹) = (XZ⁻¹)_ji + (XZ⁻¹)_ij
            let v = xz[(j, i)] + xz[(i, j)];
            schur[(0, l + 1)] = v;
            schur[(l + 1, 0)] = v;
        }
        for (k, &(p, q)) in self.edges.iter().enumerate() {
            for (l, &(i, j)) in self.edges.iter().enumerate().skip(k) {
                let v = x[(p, i)] * zinv[(j, q)]
                    + x[(p, j)] * zinv[(i, q)]
                    + x[(q, i)] * zinv[(j, p)]
                    + x[(q, j)] * zinv[(i, p)];
                schur[(k + 1, l + 1)] = v;
                schur[(l + 1, k + 1)] = v;
            }
        }
        schur
    }

    fn primal_certificate(&self, x: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
        let n = self.n;
        let mut xc = (x + x.transpose()) * 0.5;
        for &(i, j) in &self.edges {
            xc[(i, j)] = 0.0;
            xc[(j, i)] = 0.0;
        }
        let trace = xc.trace();
        if trace.is_nan() || trace <= 0.0 {
            return None;
        }
        xc /= trace;
        let lambda_min = min_eigenvalue(&xc);
        if lambda_min < 0.0 {
            let inv_n = 1.0 / n as f64;
            let t = -lambda_min / (inv_n - lambda_min);
            xc = xc * (1.0 - t) + DMatrix::identity(n, n) * (t * inv_n);
        }
        Some((self.cost.dot(&xc), xc))
    }

    fn dual_certificate(&self, y: &DVector<f64>) -> (f64, DualWitness) {
        let penalized = self.edge_penalized_cost(y);
        let upper = max_eigenvalue(&penalized);
        let slack = DMatrix::identity(self.n, self.n) * upper - penalized;
        let edge_multipliers = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| (i, j, y[k + 1]))
            .collect();
        (
            upper,
            DualWitness {
                edge_multipliers,
                slack,
            },
        )
    }
}

fn symmetric_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).min()
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).max()
}

/// Largest `α ≤ 1/fraction` keeping `m + α d` PSD, scaled by `fraction`.
fn step_length(m: &DMatrix<f64>, d: &DMatrix<f64>, fraction: f64) -> Option<f64> {
    let l = m.clone().cholesky()?.l();
    let l_inv = l.try_inverse()?;
    let scaled = &l_inv * d * l_inv.transpose();
    let lambda = min_eigenvalue(&scaled);
    Some(if lambda >= 0.0 {
        1.0
    } else {
        (fraction / -lambda).min(1.0)
    })
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

struct Direction {
    dx: DMatrix<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
}

struct Best {
    lower: f64,
    primal: DMatrix<f64>,
    upper: f64,
    dual: DualWitness,
}

/// Weighted Lovász theta with certified bounds. Fails if the certified gap
/// stays above `tolerance` after the iteration cap.
pub fn lovasz_theta(g: &ExclusivityGraph, tolerance: f64) -> Result<SdpResult> {
    lovasz_theta_with(
        g,
        SdpOptions {
            tolerance,
            ..SdpOptions::default()
        },
    )
}

pub fn lovasz_theta_with(g: &ExclusivityGraph, opts: SdpOptions) -> Result<SdpResult> {
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 {
        return Err(Error::OutOfRange {
            name: "tolerance",
            value: opts.tolerance,
        });
    }
    let n = g.n();
    if n > crate::exclusivity::DEFAULT_VERTEX_LIMIT {
        return Err(Error::GraphTooLarge {
            n,
            limit: crate::exclusivity::DEFAULT_VERTEX_LIMIT,
        });
    }
    if n == 0 {
        return Err(Error::InvalidSet("theta of the empty graph".into()));
    }
    let problem = ThetaProblem::new(g);
    let b = problem.rhs();
    let cost_norm = problem.cost.norm();

    // scaled-identity start: X is primal feasible, Z dominates C
    let mut x = DMatrix::identity(n, n) / n as f64;
    let mut z = DMatrix::identity(n, n) * (1.0 + cost_norm);
    let mut y = DVector::zeros(problem.m());

    let mut best: Option<Best> = None;
    let mut iterations = 0;

    let update_best = |best: &mut Option<Best>, x: &DMatrix<f64>, y: &DVector<f64>| {
        let (upper, dual) = problem.dual_certificate(y);
        let primal = problem.primal_certificate(x);
        match best {
            None => {
                let (lower, primal) = primal.expect("initial iterate has positive trace");
                *best = Some(Best {
                    lower,
                    primal,
                    upper,
                    dual,
                });
            }
            Some(b) => {
                if let Some((lower, primal)) = primal {
                    if lower > b.lower {
                        b.lower = lower;
                        b.primal = primal;
                    }
                }
                if upper < b.upper {
                    b.upper = upper;
                    b.dual = dual;
                }
            }
        }
    };
    update_best(&mut best, &x, &y);

    while iterations < opts.max_iterations {
        let current = best.as_ref().unwrap();
        if current.upper - current.lower <= opts.tolerance {
            break;
        }
        iterations += 1;

        let Some(zinv) = z.clone().cholesky().map(|c| c.inverse()) else {
            break;
        };
        let mu = x.dot(&z) / n as f64;
        let rd = &z + &problem.cost - problem.adjoint(&y);
        let schur = problem.schur(&x, &zinv);
        let Some(schur_chol) = schur.clone().cholesky() else {
            break;
        };
        let x_rd_zinv = problem.apply(&(&x * &rd * &zinv));

        let solve = |target: &DMatrix<f64>| -> Direction {
            let rhs = problem.apply(target) - &b + &x_rd_zinv;
            let dy = schur_chol.solve(&rhs);
            let dz = problem.adjoint(&dy) - &rd;
            let dx = sym(target - &x - &x * &dz * &zinv);
            Direction { dx, dy, dz }
        };

        // predictor
        let affine = solve(&DMatrix::zeros(n, n));
        let (Some(ap), Some(ad)) = (
            step_length(&x, &affine.dx, 1.0),
            step_length(&z, &affine.dz, 1.0),
        ) else {
            break;
        };
        let mu_aff = (&x + &affine.dx * ap).dot(&(&z + &affine.dz * ad)) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let target = (DMatrix::identity(n, n) * (sigma * mu) - &affine.dx * &affine.dz) * &zinv;
        let dir = solve(&target);
        let (Some(ap), Some(ad)) = (
            step_length(&x, &dir.dx, opts.step_fraction),
            step_length(&z, &dir.dz, opts.step_fraction),
        ) else {
            break;
        };
        x += &dir.dx * ap;
        x = sym(x);
        y += &dir.dy * ad;
        z += &dir.dz * ad;
        z = sym(z);

        update_best(&mut best, &x, &y);
    }

    let best = best.unwrap();
    let gap = best.upper - best.lower;
    if gap > opts.tolerance {
        return Err(Error::NotConverged {
            iterations,
            lower: best.lower,
            upper: best.upper,
        });
    }
    Ok(SdpResult {
        value: 0.5 * (best.lower + best.upper),
        lower: best.lower,
        upper: best.upper,
        gap,
        iterations,
        primal_witness: best.primal,
        dual_witness: best.dual,
    })
}

/// Maximum quantum value of `Σ w_i P_i` over the exclusivity graph.
pub fn quantum_bound(g: &ExclusivityGraph) -> Result<f64> {
    Ok(lovasz_theta(g, DEFAULT_TOLERANCE)?.value)
}

/// Re-checks an [`SdpResult`] with fresh arithmetic: PSD-ness of both
/// witnesses, the primal constraints and both objective values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CertificateCheck {
    pub primal_min_eigenvalue: f64,
    pub dual_min_eigenvalue: f64,
    pub trace_residual: f64,
    pub edge_residual: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub slack_residual: f64,
}

impl CertificateCheck {
    pub fn passes(&self, objective_tolerance: f64) -> bool {
        self.primal_min_eigenvalue >= PSD_FLOOR
            && self.dual_min_eigenvalue >= PSD_FLOOR
            && self.trace_residual <= RESIDUAL_TOLERANCE
            && self.edge_residual <= RESIDUAL_TOLERANCE
            && self.slack_residual <= RESIDUAL_TOLERANCE
            && self.primal_objective <= self.dual_objective + objective_tolerance
    }
}

pub fn check_certificates(g: &ExclusivityGraph, result: &SdpResult) -> CertificateCheck {
    let n = g.n();
    let x = &result.primal_witness;
    let sqrt_w: Vec<f64> = g.weights().iter().map(|w| w.sqrt()).collect();
    let mut primal_objective = 0.0;
    for i in 0..n {
        for j in 0..n {
            primal_objective += sqrt_w[i] * sqrt_w[j] * x[(i, j)];
        }
    }
    let edge_residual = g
        .edges()
        .iter()
        .map(|&(i, j)| x[(i, j)].abs().max(x[(j, i)].abs()))
        .fold(0.0, f64::max);

    // rebuild the slack from the multipliers and compare
    let mut rebuilt = DMatrix::identity(n, n) * result.upper;
    for &(i, j, yv) in &result.dual_witness.edge_multipliers {
        rebuilt[(i, j)] += yv;
        rebuilt[(j, i)] += yv;
    }
    for i in 0..n {
        for j in 0..n {
            rebuilt[(i, j)] -= sqrt_w[i] * sqrt_w[j];
        }
    }
    let slack_residual = (&rebuilt - &result.dual_witness.slack).amax();
    CertificateCheck {
        primal_min_eigenvalue: min_eigenvalue(x),
        dual_min_eigenvalue: min_eigenvalue(&rebuilt),
        trace_residual: (x.trace() - 1.0).abs(),
        edge_residual,
        primal_objective,
        dual_objective: result.upper,
        slack_residual,
    }
}
