//! Directed tournaments of pairwise comparisons, loop enumeration, and the
//! bound audits that every realizable loop must pass.
//!
//! An edge `i -> j` means node `j` wins: `Pr[node_i < node_j] > 1/2 + tie_epsilon`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comparison::{classify_strength, PairwiseComparison, StrengthBand, INV_SQRT2_AUC};

/// Tolerance used by every bound audit.
pub const AUDIT_TOL: f64 = 1e-9;
/// Tolerance on `AUC(i,j) + AUC(j,i) = 1` when both orientations are supplied.
pub const COMPLEMENT_TOL: f64 = 1e-9;
/// Sharp upper bound of the cyclic AUC product over any loop.
pub const CYCLIC_PRODUCT_BOUND: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("comparison references unknown node index {0}")]
    UnknownNode(usize),
    #[error("comparison of `{0}` with itself")]
    SelfComparison(String),
    #[error("no comparison supplied for pair `{0}` / `{1}`")]
    MissingPair(String, String),
    #[error("AUC({first},{second}) + AUC({second},{first}) = {sum}, not 1")]
    Complementarity {
        first: String,
        second: String,
        sum: f64,
    },
    #[error("tie epsilon {0} must be finite and in [0, 1/2)")]
    TieEpsilon(f64),
    #[error("loop length {0} is below 3")]
    LoopTooShort(usize),
    #[error("loop {nodes} has min AUC {min_auc} above the bound {bound} for its length")]
    BoundViolation {
        nodes: String,
        min_auc: f64,
        bound: f64,
    },
    #[error("loop {nodes} has cyclic AUC product {product} above 1/4")]
    ProductViolation { nodes: String, product: f64 },
}

/// Complete directed comparison graph over labelled nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentGraph {
    nodes: Vec<String>,
    /// Oriented so that the stored comparison has `auc > 1/2 + tie_epsilon`.
    edges: BTreeMap<(usize, usize), PairwiseComparison>,
    /// Unordered pairs `(i, j)` with `i < j` whose AUC is within `tie_epsilon` of 1/2.
    undecided: BTreeMap<(usize, usize), PairwiseComparison>,
    tie_epsilon: f64,
}

impl TournamentGraph {
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn tie_epsilon(&self) -> f64 {
        self.tie_epsilon
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &PairwiseComparison)> {
        self.edges.iter().map(|(&(i, j), c)| (i, j, c))
    }

    pub fn undecided(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undecided.keys().copied()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&PairwiseComparison> {
        self.edges.get(&(from, to))
    }

    /// Comparison oriented as `Pr[node_i < node_j]`, whatever the edge direction.
    pub fn comparison(&self, i: usize, j: usize) -> Option<PairwiseComparison> {
        if let Some(c) = self.edges.get(&(i, j)) {
            return Some(*c);
        }
        if let Some(c) = self.edges.get(&(j, i)) {
            return Some(c.reversed());
        }
        if i < j {
            self.undecided.get(&(i, j)).copied()
        } else {
            self.undecided
                .get(&(j, i))
                .map(PairwiseComparison::reversed)
        }
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((i, 0)..(i + 1, 0)).map(|(&(_, j), _)| j)
    }
}

/// Builds the tournament from comparisons keyed by `(i, j)` with
/// `auc = Pr[node_i < node_j]`. Each unordered pair must appear in at least one
/// orientation; when both appear they must be complementary.
pub fn build_tournament(
    nodes: Vec<String>,
    comparisons: &BTreeMap<(usize, usize), PairwiseComparison>,
    tie_epsilon: f64,
) -> Result<TournamentGraph, GraphError> {
    if !tie_epsilon.is_finite() || !(0.0..0.5).contains(&tie_epsilon) {
        return Err(GraphError::TieEpsilon(tie_epsilon));
    }
    let mut seen = BTreeSet::new();
    for label in &nodes {
        if !seen.insert(label.as_str()) {
            return Err(GraphError::DuplicateLabel(label.clone()));
        }
    }
    let k = nodes.len();
    let mut canonical: BTreeMap<(usize, usize), PairwiseComparison> = BTreeMap::new();
    for (&(i, j), c) in comparisons {
        if i >= k {
            return Err(GraphError::UnknownNode(i));
        }
        if j >= k {
            return Err(GraphError::UnknownNode(j));
        }
        if i == j {
            return Err(GraphError::SelfComparison(nodes[i].clone()));
        }
        let (key, oriented) = if i < j {
            ((i, j), *c)
        } else {
            ((j, i), c.reversed())
        };
        if let Some(prev) = canonical.get(&key) {
            let sum = prev.auc + (1.0 - oriented.auc);
            if (sum - 1.0).abs() > COMPLEMENT_TOL {
                return Err(GraphError::Complementarity {
                    first: nodes[key.0].clone(),
                    second: nodes[key.1].clone(),
                    sum,
                });
            }
        } else {
            canonical.insert(key, oriented);
        }
    }
    let mut edges = BTreeMap::new();
    let mut undecided = BTreeMap::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let c = canonical
                .get(&(i, j))
                .ok_or_else(|| GraphError::MissingPair(nodes[i].clone(), nodes[j].clone()))?;
            if c.auc > 0.5 + tie_epsilon {
                edges.insert((i, j), *c);
            } else if c.auc < 0.5 - tie_epsilon {
                edges.insert((j, i), c.reversed());
            } else {
                undecided.insert((i, j), *c);
            }
        }
    }
    Ok(TournamentGraph {
        nodes,
        edges,
        undecided,
        tie_epsilon,
    })
}

/// One simple directed loop `nodes[0] -> nodes[1] -> ... -> nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub nodes: Vec<String>,
    pub indices: Vec<usize>,
    /// `edge_aucs[k] = Pr[nodes[k] < nodes[k+1]]`, wrapping at the end.
    pub edge_aucs: Vec<f64>,
    #[serde(with = "crate::serde_util::extended_reals")]
    pub edge_wrs: Vec<f64>,
    /// Position of the smallest edge AUC (first one on ties).
    pub min_edge: usize,
    pub length: usize,
    pub bound_value: f64,
    pub bound_satisfied: bool,
}

impl Cycle {
    pub fn min_auc(&self) -> f64 {
        self.edge_aucs[self.min_edge]
    }

    /// `a < b < c < a` rendering of the loop.
    pub fn path_string(&self, sep: &str) -> String {
        let mut parts: Vec<&str> = self.nodes.iter().map(String::as_str).collect();
        parts.push(&self.nodes[0]);
        parts.join(sep)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub max_length: usize,
    pub cycles: Vec<Cycle>,
}

impl LoopReport {
    pub fn is_transitive(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn audits(&self) -> Vec<CycleAudit> {
        self.cycles.iter().map(audit_cycle).collect()
    }

    /// Fails on the first loop that breaks the length bound or the product bound.
    /// Either breach means the AUCs cannot come from independent variables.
    pub fn verify_realizable(&self) -> Result<(), GraphError> {
        for audit in self.audits() {
            if !audit.bound_satisfied {
                return Err(GraphError::BoundViolation {
                    nodes: audit.path,
                    min_auc: audit.min_auc,
                    bound: audit.bound,
                });
            }
            if !audit.product_satisfied {
                return Err(GraphError::ProductViolation {
                    nodes: audit.path,
                    product: audit.auc_product,
                });
            }
        }
        Ok(())
    }
}

/// All simple directed loops of length `3..=max_length`, each rotated so its
/// smallest label comes first, sorted lexicographically by label sequence.
pub fn enumerate_cycles(
    graph: &TournamentGraph,
    max_length: usize,
) -> Result<LoopReport, GraphError> {
    if max_length < 3 {
        return Err(GraphError::LoopTooShort(max_length));
    }
    let k = graph.nodes.len();
    let mut rank_order: Vec<usize> = (0..k).collect();
    rank_order.sort_by(|&a, &b| graph.nodes[a].cmp(&graph.nodes[b]));
    let mut rank = vec![0usize; k];
    for (r, &i) in rank_order.iter().enumerate() {
        rank[i] = r;
    }

    let mut found: Vec<Vec<usize>> = Vec::new();
    for &start in &rank_order {
        let mut path = vec![start];
        let mut on_path = vec![false; k];
        on_path[start] = true;
        extend_paths(
            graph,
            start,
            &rank,
            max_length,
            &mut path,
            &mut on_path,
            &mut found,
        );
    }

    let mut cycles: Vec<Cycle> = found
        .into_iter()
        .map(|idx| make_cycle(graph, idx))
        .collect();
    cycles.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    Ok(LoopReport { max_length, cycles })
}

fn extend_paths(
    graph: &TournamentGraph,
    start: usize,
    rank: &[usize],
    max_length: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) {
    let last = *path.last().expect("path starts non-empty");
    let next: Vec<usize> = graph.successors(last).collect();
    for j in next {
        if j == start {
            if path.len() >= 3 {
                found.push(path.clone());
            }
        } else if !on_path[j] && rank[j] > rank[start] && path.len() < max_length {
            on_path[j] = true;
            path.push(j);
            extend_paths(graph, start, rank, max_length, path, on_path, found);
            path.pop();
            on_path[j] = false;
        }
    }
}

fn make_cycle(graph: &TournamentGraph, indices: Vec<usize>) -> Cycle {
    let n = indices.len();
    let comparisons: Vec<&PairwiseComparison> = (0..n)
        .map(|k| {
            graph
                .edge(indices[k], indices[(k + 1) % n])
                .expect("cycle edges come from the graph")
        })
        .collect();
    let edge_aucs: Vec<f64> = comparisons.iter().map(|c| c.auc).collect();
    let edge_wrs: Vec<f64> = comparisons.iter().map(|c| c.wr).collect();
    let min_edge = edge_aucs.iter().enumerate().fold(
        0,
        |best, (k, &a)| if a < edge_aucs[best] { k } else { best },
    );
    let bound_value = komisarski_bound(n).expect("enumerated loops have length >= 3");
    let bound_satisfied = edge_aucs[min_edge] <= bound_value + AUDIT_TOL;
    Cycle {
        nodes: indices.iter().map(|&i| graph.nodes[i].clone()).collect(),
        indices,
        edge_aucs,
        edge_wrs,
        min_edge,
        length: n,
        bound_value,
        bound_satisfied,
    }
}

/// Supremum of the smallest AUC over non-transitive loops of length `n`:
/// `1 - 1 / (4 cos^2(pi / (n + 2)))`.
pub fn komisarski_bound(n: usize) -> Result<f64, GraphError> {
    if n < 3 {
        return Err(GraphError::LoopTooShort(n));
    }
    let c = (std::f64::consts::PI / (n as f64 + 2.0)).cos();
    Ok(1.0 - 1.0 / (4.0 * c * c))
}

/// The same bound on the win-ratio scale: `4 cos^2(pi / (n + 2)) - 1`.
pub fn komisarski_wr_bound(n: usize) -> Result<f64, GraphError> {
    if n < 3 {
        return Err(GraphError::LoopTooShort(n));
    }
    let c = (std::f64::consts::PI / (n as f64 + 2.0)).cos();
    Ok(4.0 * c * c - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleAudit {
    pub path: String,
    pub length: usize,
    pub min_auc: f64,
    pub min_edge: usize,
    pub bound: f64,
    pub bound_satisfied: bool,
    pub auc_product: f64,
    pub product_satisfied: bool,
    /// Edge positions whose AUC sits in the weak band.
    pub weak_links: Vec<usize>,
}

pub fn audit_cycle(cycle: &Cycle) -> CycleAudit {
    let min_auc = cycle.min_auc();
    let bound = komisarski_bound(cycle.length).expect("cycle length >= 3");
    let auc_product: f64 = cycle.edge_aucs.iter().product();
    let weak_links = cycle
        .edge_aucs
        .iter()
        .enumerate()
        .filter(|(_, &a)| classify_strength(a).band == StrengthBand::Weak)
        .map(|(k, _)| k)
        .collect();
    CycleAudit {
        path: cycle.path_string(" < "),
        length: cycle.length,
        min_auc,
        min_edge: cycle.min_edge,
        bound,
        bound_satisfied: min_auc <= bound + AUDIT_TOL,
        auc_product,
        product_satisfied: auc_product <= CYCLIC_PRODUCT_BOUND + AUDIT_TOL,
        weak_links,
    }
}

/// Whether two chained AUCs `Pr[x<y] = a`, `Pr[y<z] = b` already rule out a
/// loop with any third variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyFlags {
    pub a: f64,
    pub b: f64,
    pub product: f64,
    /// `a * b >= 1/2`: `Pr[z < x] <= 1/2` for every independent `z`.
    pub transitive_guaranteed: bool,
    /// Both at least `1/sqrt(2)`, the single-threshold shortcut.
    pub both_above_inv_sqrt2: bool,
}

pub fn sufficiency_flags(a: f64, b: f64) -> SufficiencyFlags {
    let product = a * b;
    SufficiencyFlags {
        a,
        b,
        product,
        transitive_guaranteed: product >= 0.5,
        both_above_inv_sqrt2: a >= INV_SQRT2_AUC && b >= INV_SQRT2_AUC,
    }
}

/// Sufficiency check along one two-edge path `from -> via -> to` of a tournament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSufficiency {
    pub path: String,
    pub flags: SufficiencyFlags,
}

/// Flags for every directed two-edge path, in node-index order.
pub fn path_sufficiency(graph: &TournamentGraph) -> Vec<PathSufficiency> {
    let mut out = Vec::new();
    for (i, j, first) in graph.edges() {
        for k in graph.successors(j) {
            if k == i {
                continue;
            }
            let second = graph.edge(j, k).expect("successor edge exists");
            out.push(PathSufficiency {
                path: format!(
                    "{} < {} < {}",
                    graph.nodes[i], graph.nodes[j], graph.nodes[k]
                ),
                flags: sufficiency_flags(first.auc, second.auc),
            });
        }
    }
    out
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn graph_from(names: &[&str], aucs: &[((usize, usize), f64)], eps: f64) -> TournamentGraph {
        let map = aucs
            .iter()
            .map(|&(k, a)| (k, PairwiseComparison::from_auc(a).unwrap()))
            .collect();
        build_tournament(labels(names), &map, eps).unwrap()
    }

    #[test]
    fn example_one_triplet_forms_one_loop() {
        let g = graph_from(
            &["x", "y", "z"],
            &[((0, 1), 0.58), ((1, 2), 0.70), ((2, 0), 0.60)],
            0.0,
        );
        let report = enumerate_cycles(&g, 3).unwrap();
        assert_eq!(report.cycles.len(), 1);
        let c = &report.cycles[0];
        assert_eq!(c.nodes, labels(&["x", "y", "z"]));
        assert_eq!(c.edge_aucs, vec![0.58, 0.70, 0.60]);
        assert_eq!(c.min_edge, 0);
        assert!(c.bound_satisfied);
        let audit = audit_cycle(c);
        assert!(audit.bound_satisfied);
        assert_eq!(audit.weak_links, vec![0, 2]);
        assert!((audit.auc_product - 0.2436).abs() < 1e-12);
    }

    #[test]
    fn equipoise_pair_is_undecided() {
        let g = graph_from(
            &["x", "y", "z"],
            &[((0, 1), 0.58), ((1, 2), 0.70), ((2, 0), 0.50)],
            1e-9,
        );
        assert_eq!(g.undecided().collect::<Vec<_>>(), vec![(0, 2)]);
        assert!(enumerate_cycles(&g, 3).unwrap().is_transitive());
    }

    #[test]
    fn four_node_loop_with_chords() {
        // A<B<C<D<A with chords A<C and B<D.
        let g = graph_from(
            &["A", "B", "C", "D"],
            &[
                ((0, 1), 0.51),
                ((1, 2), 0.51),
                ((2, 3), 0.51),
                ((3, 0), 0.51),
                ((0, 2), 0.505),
                ((1, 3), 0.505),
            ],
            0.0,
        );
        let report = enumerate_cycles(&g, 4).unwrap();
        let paths: Vec<String> = report.cycles.iter().map(|c| c.path_string(">")).collect();
        assert_eq!(paths, vec!["A>B>C>D>A", "A>B>D>A", "A>C>D>A"]);
        let only_triangles = enumerate_cycles(&g, 3).unwrap();
        assert_eq!(only_triangles.cycles.len(), 2);
        report.verify_realizable().unwrap();
    }

    #[test]
    fn acyclic_and_rotation_canonicalisation() {
        let g = graph_from(
            &["d", "c", "b", "a"],
            &[
                ((0, 1), 0.7),
                ((0, 2), 0.7),
                ((0, 3), 0.7),
                ((1, 2), 0.6),
                ((1, 3), 0.6),
                ((2, 3), 0.6),
            ],
            0.0,
        );
        assert!(enumerate_cycles(&g, 4).unwrap().is_transitive());

        // Loop discovered from node "b" but must be reported starting at "a".
        let g = graph_from(
            &["c", "b", "a"],
            &[((1, 2), 0.6), ((2, 0), 0.6), ((0, 1), 0.6)],
            0.0,
        );
        let report = enumerate_cycles(&g, 3).unwrap();
        assert_eq!(report.cycles[0].nodes, labels(&["a", "c", "b"]));
    }

    #[test]
    fn construction_errors() {
        let c = PairwiseComparison::from_auc(0.6).unwrap();
        let map: BTreeMap<_, _> = [((0, 1), c)].into_iter().collect();
        assert!(matches!(
            build_tournament(labels(&["a", "b", "c"]), &map, 0.0),
            Err(GraphError::MissingPair(_, _))
        ));
        assert!(matches!(
            build_tournament(labels(&["a", "a"]), &map, 0.0),
            Err(GraphError::DuplicateLabel(_))
        ));
        let bad: BTreeMap<_, _> = [((0, 1), c), ((1, 0), c)].into_iter().collect();
        assert!(matches!(
            build_tournament(labels(&["a", "b"]), &bad, 0.0),
            Err(GraphError::Complementarity { .. })
        ));
        let ok: BTreeMap<_, _> = [((0, 1), c), ((1, 0), c.reversed())].into_iter().collect();
        assert!(build_tournament(labels(&["a", "b"]), &ok, 0.0).is_ok());
        assert!(build_tournament(labels(&["a", "b"]), &ok, 0.7).is_err());
        let g = build_tournament(labels(&["a", "b"]), &ok, 0.0).unwrap();
        assert!(enumerate_cycles(&g, 2).is_err());
    }

    #[test]
    fn bound_values() {
        assert!((komisarski_bound(3).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((komisarski_bound(4).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((komisarski_bound(1_000_000).unwrap() - 0.75).abs() < 1e-9);
        assert!(komisarski_bound(2).is_err());
        let mut prev = 0.0;
        for n in 3..200 {
            let b = komisarski_bound(n).unwrap();
            assert!(b > prev);
            prev = b;
            let wr = komisarski_wr_bound(n).unwrap();
            assert!((wr - b / (1.0 - b)).abs() < 1e-9);
        }
        assert!((komisarski_wr_bound(3).unwrap() - 1.618_033_988_749_895).abs() < 1e-12);
        assert!((komisarski_wr_bound(4).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sufficiency_examples() {
        let f = sufficiency_flags(0.75, 0.70);
        assert!((f.product - 0.525).abs() < 1e-12);
        assert!(f.transitive_guaranteed);
        assert!(!f.both_above_inv_sqrt2);
        let f = sufficiency_flags(0.707107, 0.707107);
        assert!(f.transitive_guaranteed && f.both_above_inv_sqrt2);
        let f = sufficiency_flags(0.58, 0.70);
        assert!((f.product - 0.406).abs() < 1e-12);
        assert!(!f.transitive_guaranteed);
    }

    #[test]
    fn audit_flags_unrealizable_loop() {
        let g = graph_from(
            &["x", "y", "z"],
            &[((0, 1), 0.9), ((1, 2), 0.9), ((2, 0), 0.9)],
            0.0,
        );
        let report = enumerate_cycles(&g, 3).unwrap();
        assert!(!report.cycles[0].bound_satisfied);
        assert!(matches!(
            report.verify_realizable(),
            Err(GraphError::BoundViolation { .. })
        ));
    }

    #[test]
    fn path_sufficiency_lists_two_step_chains() {
        let g = graph_from(
            &["x", "y", "z"],
            &[((0, 1), 0.75), ((1, 2), 0.70), ((0, 2), 0.8)],
            0.0,
        );
        let notes = path_sufficiency(&g);
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].path, "x < y < z");
        assert!(notes[0].flags.transitive_guaranteed);
    }
}
