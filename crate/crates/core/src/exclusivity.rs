//! Exclusivity graphs of KS sets and their classical combinatorics.
//!
//! Vertices are the tests of the set, edges join exactly the orthogonal pairs
//! (intra- and inter-context). The independence number fixes the
//! noncontextual bound; [`ks_colorability`] decides whether a noncontextual
//! `{0,1}` assignment exists at all.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ks_set::{inner_product_exact, KsSet};

/// Default vertex limit for the exact independence-number solver.
pub const DEFAULT_VERTEX_LIMIT: usize = 64;
/// Largest graph the exhaustive oracle accepts.
pub const BRUTEFORCE_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityGraph {
    labels: Vec<u32>,
    adjacency: Vec<Vec<bool>>,
    weights: Vec<f64>,
}

impl ExclusivityGraph {
    /// Graph on `n` vertices labelled `1..=n` with the given undirected edges
    /// (0-based endpoints) and unit weights.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![vec![false; n]; n];
        for &(i, j) in edges {
            if i >= n || j >= n || i == j {
                return Err(Error::InvalidSet(format!(
                    "bad edge ({i}, {j}) for {n} vertices"
                )));
            }
            adjacency[i][j] = true;
            adjacency[j][i] = true;
        }
        Ok(Self {
            labels: (1..=n as u32).collect(),
            adjacency,
            weights: vec![1.0; n],
        })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_edges(n, &edges).unwrap()
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, &[]).unwrap()
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges).unwrap()
    }

    pub fn with_uniform_weight(mut self, w: f64) -> Self {
        self.weights = vec![w; self.n()];
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::OutOfRange {
                name: "weight",
                value: w,
            });
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Vector ids of the vertices, in vertex order.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().filter(|&&a| a).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    /// Edges as 0-based `(i, j)` pairs with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[i][j])
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Copy of the graph without the edge `(i, j)`.
    pub fn without_edge(&self, i: usize, j: usize) -> Self {
        let mut g = self.clone();
        g.adjacency[i][j] = false;
        g.adjacency[j][i] = false;
        g
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(k, &a)| {
            a < self.n()
                && vertices[..k]
                    .iter()
                    .all(|&b| a != b && !self.adjacency[a][b])
        })
    }

    /// Plain-text edge list: one `i j` line per edge, vertex labels, `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let (a, b) = (self.labels[i], self.labels[j]);
            let _ = writeln!(out, "{} {}", a.min(b), a.max(b));
        }
        out
    }

    fn neighbour_sets(&self) -> Vec<VertexSet> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = VertexSet::empty(n);
                (0..n)
                    .filter(|&j| self.adjacency[i][j])
                    .for_each(|j| s.insert(j));
                s
            })
            .collect()
    }
}

/// Exclusivity graph of a validated set: vertex per vector, edge per
/// orthogonal pair, uniform weight.
pub fn build_graph(set: &KsSet, weight_per_vertex: f64) -> ExclusivityGraph {
    let vectors = set.vectors();
    let n = vectors.len();
    let mut adjacency = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let ip = inner_product_exact(&vectors[i], &vectors[j])
                .expect("validated set has consistent dimensions and small entries");
            if ip.is_zero() {
                adjacency[i][j] = true;
                adjacency[j][i] = true;
            }
        }
    }
    ExclusivityGraph {
        labels: vectors.iter().map(|v| v.id()).collect(),
        adjacency,
        weights: vec![weight_per_vertex; n],
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VertexSet {
    words: Vec<u64>,
}

impl VertexSet {
    fn empty(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        (0..n).for_each(|i| s.insert(i));
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn minus(&self, other: &Self) -> Self {
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & !b)
                .collect(),
        }
    }
}

/// Maximum independent set with its size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependentSet {
    /// 0-based vertex indices, ascending.
    pub vertices: Vec<usize>,
    pub weight: f64,
    pub nodes_explored: u64,
}

impl IndependentSet {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

struct BranchAndBound<'g> {
    graph: &'g ExclusivityGraph,
    neighbours: Vec<VertexSet>,
    order: Vec<usize>,
    best: Vec<usize>,
    best_weight: f64,
    nodes: u64,
}

impl BranchAndBound<'_> {
    /// Greedy clique cover of the candidates in branching order; each
    /// independent set meets every clique at most once, so the sum of
    /// per-clique maximum weights bounds what the candidates can still add.
    fn clique_cover_bound(&self, candidates: &VertexSet) -> f64 {
        let mut cliques: Vec<(Vec<usize>, f64)> = Vec::new();
        for &v in self.order.iter().filter(|&&v| candidates.contains(v)) {
            let w = self.graph.weights[v];
            match cliques
                .iter_mut()
                .find(|(members, _)| members.iter().all(|&u| self.neighbours[v].contains(u)))
            {
                Some((members, max)) => {
                    members.push(v);
                    *max = max.max(w);
                }
                None => cliques.push((vec![v], w)),
            }
        }
        cliques.iter().map(|(_, w)| w).sum()
    }

    fn expand(&mut self, current: &mut Vec<usize>, weight: f64, candidates: VertexSet) {
        self.nodes += 1;
        if candidates.is_empty() {
            if weight > self.best_weight {
                self.best_weight = weight;
                self.best = current.clone();
            }
            return;
        }
        if weight + self.clique_cover_bound(&candidates) <= self.best_weight {
            return;
        }
        let v = *self
            .order
            .iter()
            .find(|&&v| candidates.contains(v))
            .expect("candidates non-empty");

        let mut with_v = candidates.minus(&self.neighbours[v]);
        with_v.remove(v);
        current.push(v);
        self.expand(current, weight + self.graph.weights[v], with_v);
        current.pop();

        let mut without_v = candidates;
        without_v.remove(v);
        self.expand(current, weight, without_v);
    }
}

/// Exact maximum-weight independent set by branch and bound. With unit
/// weights this is the independence number.
pub fn maximum_weight_independent_set(
    g: &ExclusivityGraph,
    vertex_limit: usize,
) -> Result<IndependentSet> {
    let n = g.n();
    if n > vertex_limit {
        return Err(Error::GraphTooLarge {
            n,
            limit: vertex_limit,
        });
    }
    // descending degree, ties by lowest label
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), g.labels[v]));

    let mut search = BranchAndBound {
        graph: g,
        neighbours: g.neighbour_sets(),
        order,
        best: Vec::new(),
        best_weight: 0.0,
        nodes: 0,
    };
    search.expand(&mut Vec::new(), 0.0, VertexSet::full(n));
    let mut vertices = search.best;
    vertices.sort_unstable();
    debug_assert!(g.is_independent(&vertices));
    Ok(IndependentSet {
        vertices,
        weight: search.best_weight,
        nodes_explored: search.nodes,
    })
}

/// `α(G)` with a maximum independent set as certificate.
pub fn independence_number(g: &ExclusivityGraph) -> Result<IndependentSet> {
    independence_number_with_limit(g, DEFAULT_VERTEX_LIMIT)
}

pub fn independence_number_with_limit(
    g: &ExclusivityGraph,
    vertex_limit: usize,
) -> Result<IndependentSet> {
    let unit = g.clone().with_uniform_weight(1.0);
    let mut mis = maximum_weight_independent_set(&unit, vertex_limit)?;
    mis.weight = mis.vertices.len() as f64;
    Ok(mis)
}

/// Exhaustive `α(G)`: visits every independent set of the graph.
pub fn independence_number_bruteforce(g: &ExclusivityGraph) -> Result<usize> {
    let n = g.n();
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::GraphTooLarge {
            n,
            limit: BRUTEFORCE_LIMIT,
        });
    }
    let masks: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| g.adjacency[i][j])
                .fold(0u32, |m, j| m | 1 << j)
        })
        .collect();

    fn visit(masks: &[u32], next: usize, blocked: u32, size: usize, best: &mut usize) {
        *best = (*best).max(size);
        for v in next..masks.len() {
            if blocked >> v & 1 == 0 {
                visit(masks, v + 1, blocked | masks[v], size + 1, best);
            }
        }
    }

    let mut best = 0;
    visit(&masks, 0, 0, 0, &mut best);
    Ok(best)
}

/// Weighted independence number: the noncontextual bound of `Σ w_i P_i`.
pub fn noncontextual_bound(g: &ExclusivityGraph) -> Result<f64> {
    Ok(maximum_weight_independent_set(g, DEFAULT_VERTEX_LIMIT)?.weight)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColorabilityVerdict {
    pub satisfiable: bool,
    /// Vector ids assigned the value 1.
    pub witness: Option<Vec<u32>>,
    pub nodes_explored: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Free,
    Zero,
    One,
}

struct Colorer<'a> {
    graph: &'a ExclusivityGraph,
    /// Contexts as vertex positions; `complete` contexts need exactly one 1.
    contexts: Vec<(Vec<usize>, bool)>,
    nodes: u64,
}

impl Colorer<'_> {
    /// Sets `v` and propagates: neighbours of a 1 become 0, a complete context
    /// with a single free member and no 1 forces that member. Returns false on
    /// contradiction.
    fn assign(&self, values: &mut [Value], v: usize, value: Value) -> bool {
        let mut queue = vec![(v, value)];
        while let Some((v, value)) = queue.pop() {
            match values[v] {
                Value::Free => values[v] = value,
                current if current == value => continue,
                _ => return false,
            }
            if value == Value::One {
                for u in 0..self.graph.n() {
                    if self.graph.adjacency[v][u] {
                        queue.push((u, Value::Zero));
                    }
                }
            }
            for (members, complete) in &self.contexts {
                if !members.contains(&v) {
                    continue;
                }
                let ones = members.iter().filter(|&&m| values[m] == Value::One).count();
                let free: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&m| values[m] == Value::Free)
                    .collect();
                if ones > 1 {
                    return false;
                }
                if ones == 1 {
                    queue.extend(free.iter().map(|&m| (m, Value::Zero)));
                } else if *complete {
                    match free.as_slice() {
                        [] => return false,
                        [only] => queue.push((*only, Value::One)),
                        _ => {}
                    }
                }
            }
        }
        true
    }

    fn search(&mut self, values: &mut Vec<Value>) -> bool {
        self.nodes += 1;
        let open = self.contexts.iter().find(|(members, complete)| {
            *complete && !members.iter().any(|&m| values[m] == Value::One)
        });
        let Some((members, _)) = open else {
            return true;
        };
        let choices: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&m| values[m] == Value::Free)
            .collect();
        for v in choices {
            let mut trial = values.clone();
            if self.assign(&mut trial, v, Value::One) && self.search(&mut trial) {
                *values = trial;
                return true;
            }
        }
        false
    }
}

/// Re-checks a colouring independently of the search: no two adjacent ones,
/// exactly one 1 in every complete context and at most one elsewhere.
pub fn verify_coloring(set: &KsSet, g: &ExclusivityGraph, ones: &[u32]) -> bool {
    let positions: Option<Vec<usize>> = ones.iter().map(|&id| set.position(id)).collect();
    let Some(positions) = positions else {
        return false;
    };
    if !g.is_independent(&positions) {
        return false;
    }
    set.contexts().iter().all(|ctx| {
        let count = ctx.member_ids.iter().filter(|id| ones.contains(id)).count();
        if ctx.member_ids.len() == set.dimension() {
            count == 1
        } else {
            count <= 1
        }
    })
}

/// Decides whether a noncontextual `{0,1}` assignment exists.
pub fn ks_colorability(set: &KsSet, g: &ExclusivityGraph) -> ColorabilityVerdict {
    let contexts = set
        .contexts()
        .iter()
        .map(|c| {
            let members = c
                .member_ids
                .iter()
                .map(|&id| set.position(id).expect("validated context"))
                .collect();
            (members, c.member_ids.len() == set.dimension())
        })
        .collect();
    let mut colorer = Colorer {
        graph: g,
        contexts,
        nodes: 0,
    };
    let mut values = vec![Value::Free; g.n()];
    let satisfiable = colorer.search(&mut values);
    let witness = satisfiable.then(|| {
        let ones: Vec<u32> = (0..g.n())
            .filter(|&v| values[v] == Value::One)
            .map(|v| set.vectors()[v].id())
            .collect();
        assert!(
            verify_coloring(set, g, &ones),
            "colouring search returned an invalid witness"
        );
        ones
    });
    ColorabilityVerdict {
        satisfiable,
        witness,
        nodes_explored: colorer.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eisenstein::EisensteinInt;
    use crate::ks_set::{Context, KsVector, Profile};
    use proptest::prelude::*;

    fn basis_vectors(first_id: u32) -> Vec<KsVector> {
        (0..6)
            .map(|k| {
                let mut e = vec![EisensteinInt::ZERO; 6];
                e[k] = EisensteinInt::ONE;
                KsVector::new(first_id + k as u32, e).unwrap()
            })
            .collect()
    }

    fn single_basis() -> KsSet {
        KsSet::new(
            6,
            basis_vectors(1),
            vec![Context {
                member_ids: (1..=6).collect(),
            }],
            Profile::Generic,
        )
        .unwrap()
    }

    /// The standard basis plus the columns of `[[F, F], [F, -F]]`, `F` the
    /// 3-point Fourier matrix over `ω`. Every cross pair overlaps, so the only
    /// edges are inside the two contexts.
    fn two_bases() -> KsSet {
        let w = |k: usize| match k % 3 {
            0 => EisensteinInt::ONE,
            1 => EisensteinInt::OMEGA,
            _ => EisensteinInt::OMEGA_SQ,
        };
        let mut vectors = basis_vectors(1);
        let mut id = 7;
        for s in [1i64, -1] {
            for k in 0..3 {
                let top = (0..3).map(|j| w(j * k));
                let bottom = (0..3).map(|j| EisensteinInt::new(s * w(j * k).a, s * w(j * k).b));
                vectors.push(KsVector::new(id, top.chain(bottom).collect()).unwrap());
                id += 1;
            }
        }
        KsSet::new(
            6,
            vectors,
            vec![
                Context {
                    member_ids: (1..=6).collect(),
                },
                Context {
                    member_ids: (7..=12).collect(),
                },
            ],
            Profile::Generic,
        )
        .unwrap()
    }

    #[test]
    fn single_basis_is_k6() {
        let g = build_graph(&single_basis(), 2.0);
        assert_eq!(g, ExclusivityGraph::complete(6).with_uniform_weight(2.0));
    }

    #[test]
    fn disjoint_bases_give_two_cliques() {
        let set = two_bases();
        let g = build_graph(&set, 1.0);
        assert_eq!(g.edge_count(), 30);
        for i in 0..6 {
            for j in 6..12 {
                assert!(!g.adjacent(i, j));
            }
        }
        assert_eq!(independence_number(&g).unwrap().size(), 2);
        assert_eq!(independence_number_bruteforce(&g).unwrap(), 2);
        let verdict = ks_colorability(&set, &g);
        assert!(verdict.satisfiable);
    }

    #[test]
    fn small_graphs() {
        assert_eq!(
            independence_number(&ExclusivityGraph::complete(6))
                .unwrap()
                .size(),
            1
        );
        assert_eq!(
            independence_number(&ExclusivityGraph::empty(21))
                .unwrap()
                .size(),
            21
        );
        assert_eq!(
            independence_number_bruteforce(&ExclusivityGraph::cycle(5)).unwrap(),
            2
        );
        assert_eq!(
            independence_number(&ExclusivityGraph::cycle(5))
                .unwrap()
                .size(),
            2
        );
    }

    #[test]
    fn limits() {
        assert_eq!(
            independence_number_bruteforce(&ExclusivityGraph::empty(26)),
            Err(Error::GraphTooLarge { n: 26, limit: 25 })
        );
        assert_eq!(
            independence_number(&ExclusivityGraph::empty(65)).map(|m| m.size()),
            Err(Error::GraphTooLarge { n: 65, limit: 64 })
        );
        assert_eq!(
            independence_number_with_limit(&ExclusivityGraph::cycle(100), 128)
                .unwrap()
                .size(),
            50
        );
    }

    #[test]
    fn weighted_bounds() {
        let k6 = ExclusivityGraph::complete(6).with_uniform_weight(2.0);
        assert_eq!(noncontextual_bound(&k6).unwrap(), 2.0);
        let e3 = ExclusivityGraph::empty(3).with_uniform_weight(2.0);
        assert_eq!(noncontextual_bound(&e3).unwrap(), 6.0);
        // path a - b - c with heavy middle
        let p3 = ExclusivityGraph::from_edges(3, &[(0, 1), (1, 2)])
            .unwrap()
            .with_weights(vec![1.0, 5.0, 1.0])
            .unwrap();
        assert_eq!(noncontextual_bound(&p3).unwrap(), 5.0);
    }

    #[test]
    fn single_basis_colorable() {
        let set = single_basis();
        let g = build_graph(&set, 1.0);
        let verdict = ks_colorability(&set, &g);
        assert!(verdict.satisfiable);
        assert_eq!(verdict.witness.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn edge_list_format() {
        let g = ExclusivityGraph::cycle(4);
        assert_eq!(g.to_edge_list(), "1 2\n1 4\n2 3\n3 4\n");
    }

    #[test]
    fn verify_rejects_bad_witness() {
        let set = single_basis();
        let g = build_graph(&set, 1.0);
        assert!(verify_coloring(&set, &g, &[3]));
        assert!(!verify_coloring(&set, &g, &[]));
        assert!(!verify_coloring(&set, &g, &[1, 2]));
        assert!(!verify_coloring(&set, &g, &[99]));
    }

    fn random_graph() -> impl Strategy<Value = ExclusivityGraph> {
        (1usize..=20).prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            (
                Just(n),
                proptest::collection::vec(proptest::bool::weighted(0.35), pairs),
            )
                .prop_map(|(n, bits)| {
                    let all: Vec<_> = (0..n)
                        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                        .collect();
                    let edges: Vec<_> = all
                        .into_iter()
                        .zip(bits)
                        .filter(|(_, b)| *b)
                        .map(|(e, _)| e)
                        .collect();
                    ExclusivityGraph::from_edges(n, &edges).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn branch_and_bound_matches_bruteforce(g in random_graph()) {
            let mis = independence_number(&g).unwrap();
            prop_assert!(g.is_independent(&mis.vertices));
            prop_assert_eq!(mis.size(), independence_number_bruteforce(&g).unwrap());
        }
    }
}
