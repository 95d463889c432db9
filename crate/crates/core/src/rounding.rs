//! Rounding the voltage vector to a binary cut.
//!
//! Two procedures: a sweep cut over the sorted voltages, and a two-level
//! scheme that clusters the voltages, contracts the confidently-polarized
//! nodes into super-terminals, solves the small remainder exactly, and lifts
//! the result back. Any cut on the coarse graph lifts to a cut of identical
//! value on the original graph.

use std::fmt;

use crate::graph::WeightedGraph;
use crate::irls::VoltageVector;
use crate::maxflow;

#[derive(Debug, Clone, PartialEq)]
pub enum RoundingError {
    /// All voltage components are identical; two-means clustering has no
    /// structure to find.
    DegenerateClustering,
    /// Relative approximation ratio is undefined for a zero optimum.
    ZeroOptimum,
}

impl fmt::Display for RoundingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingError::DegenerateClustering => {
                write!(f, "voltage vector has no spread to cluster")
            }
            RoundingError::ZeroOptimum => write!(f, "optimal cut value is zero"),
        }
    }
}

impl std::error::Error for RoundingError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMethod {
    Sweep,
    TwoLevel,
}

impl fmt::Display for RoundingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoundingMethod::Sweep => write!(f, "sweep"),
            RoundingMethod::TwoLevel => write!(f, "two_level"),
        }
    }
}

/// A rounded cut. The value is recomputed from the labeling by the graph
/// module, never trusted from intermediate bookkeeping.
#[derive(Debug, Clone)]
pub struct CutResult {
    pub source_side: Vec<bool>,
    pub cut_value: f64,
    pub method: RoundingMethod,
    /// |V| / |V_c| when two-level rounding actually coarsened.
    pub size_reduction: Option<f64>,
}

/// Sweep cut: sort nodes by voltage descending (ties by node id), evaluate
/// every prefix that separates s from t incrementally, return the minimum.
pub fn sweep_cut(x: &VoltageVector, graph: &WeightedGraph) -> CutResult {
    let n = graph.node_count();
    let xs = x.values();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        xs[b].partial_cmp(&xs[a])
            .expect("voltages must not be NaN")
            .then(a.cmp(&b))
    });

    let mut in_prefix = vec![false; n];
    let mut current = 0.0f64;
    let mut best: Option<(f64, usize)> = None;
    let mut have_source = false;
    let mut have_sink = false;
    for (k, &u) in order.iter().enumerate().take(n - 1) {
        // adding u flips its incident edges
        for &(v, e) in graph.neighbors(u) {
            let c = graph.edges()[e].capacity;
            if in_prefix[v] {
                current -= c;
            } else {
                current += c;
            }
        }
        in_prefix[u] = true;
        have_source |= u == graph.source();
        have_sink |= u == graph.sink();
        if have_source && !have_sink {
            let better = match best {
                None => true,
                Some((bv, _)) => current < bv,
            };
            if better {
                best = Some((current, k));
            }
        }
    }
    let (_, prefix_len) = best.expect("a separating prefix always exists");
    let mut source_side = vec![false; n];
    for &u in order.iter().take(prefix_len + 1) {
        source_side[u] = true;
    }
    let cut_value = graph
        .cut_value(&source_side)
        .expect("sweep prefix separates s from t");
    CutResult {
        source_side,
        cut_value,
        method: RoundingMethod::Sweep,
        size_reduction: None,
    }
}

/// Coarsening thresholds derived from two-means cluster centers.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdPair {
    pub center0: f64,
    pub center1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    /// Lloyd update rounds until the assignment stopped changing.
    pub rounds: usize,
    /// Margins dropped because the centers were closer than 0.1.
    pub relaxed: bool,
}

/// One-dimensional two-means with centers initialized at 0.1 and 0.9, run to
/// an assignment fixed point (at most 100 rounds). An empty cluster keeps its
/// center. Thresholds are gamma0 = c0 + 0.05 and gamma1 = c1 - 0.05; if that
/// window is empty the margins are dropped.
pub fn cluster_voltages(x: &VoltageVector) -> Result<ThresholdPair, RoundingError> {
    cluster_values(x.values())
}

/// Clustering core over raw values (a feasible voltage vector always has at
/// least the two distinct boundary values, but raw callers may not).
pub fn cluster_values(values: &[f64]) -> Result<ThresholdPair, RoundingError> {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(RoundingError::DegenerateClustering);
    }
    let mut c0 = 0.1f64;
    let mut c1 = 0.9f64;
    let mut assignment: Vec<bool> = Vec::new();
    let mut rounds = 0;
    for _ in 0..100 {
        let next: Vec<bool> = values
            .iter()
            .map(|&v| (v - c1).abs() < (v - c0).abs())
            .collect();
        if next == assignment {
            break;
        }
        assignment = next;
        rounds += 1;
        let (mut sum0, mut n0, mut sum1, mut n1) = (0.0, 0usize, 0.0, 0usize);
        for (&v, &hi) in values.iter().zip(&assignment) {
            if hi {
                sum1 += v;
                n1 += 1;
            } else {
                sum0 += v;
                n0 += 1;
            }
        }
        if n0 > 0 {
            c0 = sum0 / n0 as f64;
        }
        if n1 > 0 {
            c1 = sum1 / n1 as f64;
        }
    }
    let (mut gamma0, mut gamma1) = (c0 + 0.05, c1 - 0.05);
    let mut relaxed = false;
    if gamma0 >= gamma1 {
        gamma0 = c0;
        gamma1 = c1;
        relaxed = true;
    }
    Ok(ThresholdPair {
        center0: c0,
        center1: c1,
        gamma0,
        gamma1,
        rounds,
        relaxed,
    })
}

/// Where each original node went during coarsening.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseAssign {
    /// contracted into the super-source (voltage >= gamma1)
    Source,
    /// contracted into the super-sink (voltage <= gamma0)
    Sink,
    /// kept as coarse node 2 + index
    Middle(usize),
}

/// The coarsened cut problem. Coarse node 0 is the super-source, node 1 the
/// super-sink, middle nodes follow.
#[derive(Debug, Clone)]
pub struct CoarsenedProblem {
    pub graph: WeightedGraph,
    pub assign: Vec<CoarseAssign>,
    pub middle_count: usize,
}

impl CoarsenedProblem {
    /// Lift a labeling of the coarse graph to the original node space.
    pub fn lift(&self, coarse_side: &[bool]) -> Vec<bool> {
        self.assign
            .iter()
            .map(|a| match a {
                CoarseAssign::Source => coarse_side[0],
                CoarseAssign::Sink => coarse_side[1],
                CoarseAssign::Middle(i) => coarse_side[2 + i],
            })
            .collect()
    }
}

/// Contract nodes at or beyond the thresholds into super-terminals. The
/// terminals themselves always join their super-node regardless of solver
/// noise in the voltages. Coarse edge weights are the sums of the original
/// capacities between the merged groups.
pub fn coarsen(
    graph: &WeightedGraph,
    x: &VoltageVector,
    thresholds: &ThresholdPair,
) -> CoarsenedProblem {
    let xs = x.values();
    let mut assign = Vec::with_capacity(graph.node_count());
    let mut middle_count = 0usize;
    for u in 0..graph.node_count() {
        let a = if u == graph.source() {
            CoarseAssign::Source
        } else if u == graph.sink() {
            CoarseAssign::Sink
        } else if xs[u] >= thresholds.gamma1 {
            CoarseAssign::Source
        } else if xs[u] <= thresholds.gamma0 {
            CoarseAssign::Sink
        } else {
            let idx = middle_count;
            middle_count += 1;
            CoarseAssign::Middle(idx)
        };
        assign.push(a);
    }
    let coarse_id = |a: CoarseAssign| -> u64 {
        match a {
            CoarseAssign::Source => 0,
            CoarseAssign::Sink => 1,
            CoarseAssign::Middle(i) => 2 + i as u64,
        }
    };
    let mut coarse_edges = Vec::new();
    for e in graph.edges() {
        let (cu, cv) = (coarse_id(assign[e.u]), coarse_id(assign[e.v]));
        if cu != cv {
            coarse_edges.push((cu, cv, e.capacity));
        }
    }
    let coarse = WeightedGraph::ingest(&coarse_edges, 0, 1)
        .expect("coarsening a connected graph yields a valid coarse instance");
    CoarsenedProblem {
        graph: coarse,
        assign,
        middle_count,
    }
}

/// Two-level rounding: cluster, coarsen, solve the coarse problem exactly,
/// lift. Falls back to sweep cut when the clustering is degenerate or the
/// coarse graph exceeds `size_cap`.
pub fn two_level_round(
    x: &VoltageVector,
    graph: &WeightedGraph,
    size_cap: Option<usize>,
) -> CutResult {
    let thresholds = match cluster_voltages(x) {
        Ok(t) => t,
        Err(_) => {
            log::warn!("degenerate voltage clustering; falling back to sweep cut");
            return sweep_cut(x, graph);
        }
    };
    let coarse = coarsen(graph, x, &thresholds);
    if let Some(cap) = size_cap {
        if coarse.graph.node_count() > cap {
            log::warn!(
                "coarse graph has {} nodes (cap {cap}); falling back to sweep cut",
                coarse.graph.node_count()
            );
            return sweep_cut(x, graph);
        }
    }
    let solved = maxflow::max_flow(&coarse.graph);
    let source_side = coarse.lift(&solved.source_side);
    let cut_value = graph
        .cut_value(&source_side)
        .expect("lifted labeling separates s from t");
    CutResult {
        source_side,
        cut_value,
        method: RoundingMethod::TwoLevel,
        size_reduction: Some(graph.node_count() as f64 / coarse.graph.node_count() as f64),
    }
}

/// delta = (mu - mu*) / mu*.
pub fn relative_approx_ratio(cut_value: f64, optimum: f64) -> Result<f64, RoundingError> {
    if optimum <= 0.0 {
        return Err(RoundingError::ZeroOptimum);
    }
    Ok((cut_value - optimum) / optimum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxflow::brute_force_min_cut;

    fn voltages(graph: &WeightedGraph, values: Vec<f64>) -> VoltageVector {
        VoltageVector::from_values(values, graph).unwrap()
    }

    fn path_graph() -> WeightedGraph {
        WeightedGraph::ingest(&[(0, 1, 2.0), (1, 2, 1.0)], 0, 2).unwrap()
    }

    #[test]
    fn sweep_on_path_picks_cheaper_prefix() {
        let g = path_graph();
        let x = voltages(&g, vec![1.0, 0.9, 0.0]);
        let cut = sweep_cut(&x, &g);
        assert_eq!(cut.cut_value, 1.0);
        assert_eq!(cut.source_side, vec![true, true, false]);
    }

    #[test]
    fn sweep_recovers_binary_optimum() {
        let g = WeightedGraph::ingest(
            &[(0, 1, 1.0), (1, 2, 0.25), (2, 3, 1.0), (0, 2, 0.5)],
            0,
            3,
        )
        .unwrap();
        let opt = brute_force_min_cut(&g).unwrap();
        let x = voltages(
            &g,
            opt.source_side.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        );
        let cut = sweep_cut(&x, &g);
        assert_eq!(cut.cut_value, opt.value);
        assert_eq!(cut.source_side, opt.source_side);
    }

    #[test]
    fn sweep_breaks_voltage_ties_by_node_id() {
        // both middles at 0.5: prefixes are {s}, {s,a}, {s,a,b}
        let g = WeightedGraph::ingest(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 2.0), (0, 3, 0.3)], 0, 3)
            .unwrap();
        let x = voltages(&g, vec![1.0, 0.5, 0.5, 0.0]);
        let cut = sweep_cut(&x, &g);
        // values: {s} -> 1.3, {s,a} -> 1.3, {s,a,b} -> 2.3; first minimum kept
        assert!((cut.cut_value - 1.3).abs() < 1e-12);
        assert_eq!(cut.source_side, vec![true, false, false, false]);
    }

    #[test]
    fn kmeans_on_polarized_votes() {
        let g = WeightedGraph::ingest(
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)],
            0,
            4,
        )
        .unwrap();
        let x = voltages(&g, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let t = cluster_voltages(&x).unwrap();
        assert_eq!(t.center0, 0.0);
        assert_eq!(t.center1, 1.0);
        assert!((t.gamma0 - 0.05).abs() < 1e-15);
        assert!((t.gamma1 - 0.95).abs() < 1e-15);
        assert!(t.rounds <= 2);
    }

    #[test]
    fn kmeans_hand_iteration() {
        // values {0.0, 0.1, 0.8, 0.9}: first assignment splits at 0.5,
        // centers move to (0.05, 0.85) and the assignment is stable.
        let t = cluster_values(&[0.0, 0.1, 0.8, 0.9]).unwrap();
        assert!((t.center0 - 0.05).abs() < 1e-15);
        assert!((t.center1 - 0.85).abs() < 1e-15);
        assert!((t.gamma0 - 0.10).abs() < 1e-15);
        assert!((t.gamma1 - 0.80).abs() < 1e-15);
        assert_eq!(t.rounds, 1);
    }

    #[test]
    fn kmeans_close_centers_drop_margins() {
        // centers land 0.06 apart, so the +-0.05 margins would cross
        let t = cluster_values(&[0.47, 0.47, 0.53, 0.53]).unwrap();
        assert!(t.relaxed);
        assert_eq!(t.gamma0, t.center0);
        assert_eq!(t.gamma1, t.center1);
        assert!(t.gamma0 < t.gamma1);
    }

    #[test]
    fn kmeans_empty_cluster_keeps_its_center() {
        // everything is nearer to 0.1: cluster 1 stays at 0.9
        let t = cluster_values(&[0.0, 0.1, 0.2]).unwrap();
        assert_eq!(t.center1, 0.9);
        assert!((t.center0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn kmeans_rejects_constant_vector() {
        assert_eq!(
            cluster_values(&[0.4, 0.4, 0.4]).unwrap_err(),
            RoundingError::DegenerateClustering
        );
    }

    #[test]
    fn coarsen_fully_polarized_collapses_to_one_edge() {
        let g = path_graph();
        let x = voltages(&g, vec![1.0, 1.0, 0.0]);
        let t = cluster_voltages(&x).unwrap();
        let c = coarsen(&g, &x, &t);
        assert_eq!(c.middle_count, 0);
        assert_eq!(c.graph.node_count(), 2);
        assert_eq!(c.graph.edge_count(), 1);
        assert_eq!(c.graph.edges()[0].capacity, 1.0); // the (a,t) cut edge
    }

    #[test]
    fn coarsen_keeps_middle_nodes_intact() {
        let g = path_graph();
        let x = voltages(&g, vec![1.0, 0.5, 0.0]);
        let t = ThresholdPair {
            center0: 0.0,
            center1: 1.0,
            gamma0: 0.05,
            gamma1: 0.95,
            rounds: 1,
            relaxed: false,
        };
        let c = coarsen(&g, &x, &t);
        assert_eq!(c.middle_count, 1);
        assert_eq!(c.graph.node_count(), 3);
        // isomorphic to the original with the same weights
        assert_eq!(c.graph.edge_count(), 2);
        let total: f64 = c.graph.edges().iter().map(|e| e.capacity).sum();
        assert_eq!(total, 3.0);
    }

    // Independent re-derivation of the four coarse-weight rules by scanning
    // the original edges against an explicit group assignment.
    fn oracle_coarse_weights(
        g: &WeightedGraph,
        assign: &[CoarseAssign],
    ) -> std::collections::BTreeMap<(u64, u64), f64> {
        let id = |a: CoarseAssign| match a {
            CoarseAssign::Source => 0u64,
            CoarseAssign::Sink => 1,
            CoarseAssign::Middle(i) => 2 + i as u64,
        };
        let mut m = std::collections::BTreeMap::new();
        for e in g.edges() {
            let (a, b) = (id(assign[e.u]), id(assign[e.v]));
            if a != b {
                *m.entry((a.min(b), a.max(b))).or_insert(0.0) += e.capacity;
            }
        }
        m
    }

    #[test]
    fn coarse_weights_follow_the_contraction_rules() {
        // 6 nodes: s=0, t=5, S1 = {0,1}, S0 = {4,5}, middle = {2,3}
        let g = WeightedGraph::ingest(
            &[
                (0, 1, 0.9),
                (0, 2, 1.1),
                (1, 2, 0.4),
                (1, 3, 0.6),
                (2, 3, 0.3),
                (2, 4, 0.7),
                (3, 5, 1.2),
                (4, 5, 0.8),
                (1, 4, 0.05),
            ],
            0,
            5,
        )
        .unwrap();
        let x = voltages(&g, vec![1.0, 0.98, 0.6, 0.4, 0.01, 0.0]);
        let t = ThresholdPair {
            center0: 0.0,
            center1: 1.0,
            gamma0: 0.05,
            gamma1: 0.95,
            rounds: 1,
            relaxed: false,
        };
        let c = coarsen(&g, &x, &t);
        let want = oracle_coarse_weights(&g, &c.assign);
        // compare edge by edge
        let mut got = std::collections::BTreeMap::new();
        for e in c.graph.edges() {
            let (a, b) = (
                c.graph.original_id(e.u),
                c.graph.original_id(e.v),
            );
            got.insert((a.min(b), a.max(b)), e.capacity);
        }
        assert_eq!(got.len(), want.len());
        for (k, v) in want {
            assert!((got[&k] - v).abs() < 1e-12, "edge {k:?}");
        }
        // total coarse weight never exceeds total fine weight
        let coarse_total: f64 = c.graph.edges().iter().map(|e| e.capacity).sum();
        assert!(coarse_total <= g.total_capacity() + 1e-12);
    }

    #[test]
    fn lifting_preserves_cut_values_exhaustively() {
        let g = WeightedGraph::ingest(
            &[
                (0, 1, 0.9),
                (0, 2, 1.1),
                (1, 2, 0.4),
                (1, 3, 0.6),
                (2, 3, 0.3),
                (2, 4, 0.7),
                (3, 5, 1.2),
                (4, 5, 0.8),
            ],
            0,
            5,
        )
        .unwrap();
        let x = voltages(&g, vec![1.0, 0.97, 0.55, 0.45, 0.02, 0.0]);
        let t = cluster_voltages(&x).unwrap();
        let c = coarsen(&g, &x, &t);
        let nc = c.graph.node_count();
        assert!(nc <= 12);
        for mask in 0u32..(1 << (nc - 2)) {
            let mut coarse_side = vec![false; nc];
            coarse_side[0] = true;
            for bit in 0..(nc - 2) {
                coarse_side[2 + bit] = mask & (1 << bit) != 0;
            }
            let coarse_value = c.graph.cut_value(&coarse_side).unwrap();
            let lifted = c.lift(&coarse_side);
            let lifted_value = g.cut_value(&lifted).unwrap();
            assert!(
                (coarse_value - lifted_value).abs() <= 1e-12 * coarse_value.max(1.0),
                "mask {mask}: {coarse_value} vs {lifted_value}"
            );
        }
    }

    #[test]
    fn two_level_on_polarized_input_is_optimal() {
        let g = path_graph();
        let x = voltages(&g, vec![1.0, 1.0, 0.0]);
        let cut = two_level_round(&x, &g, None);
        assert_eq!(cut.method, RoundingMethod::TwoLevel);
        assert_eq!(cut.cut_value, 1.0);
        assert_eq!(cut.size_reduction, Some(1.5));
    }

    #[test]
    fn two_level_with_all_middle_noise_solves_exactly() {
        let g = WeightedGraph::ingest(
            &[(0, 1, 0.6), (1, 2, 0.5), (2, 3, 0.9), (1, 3, 0.2), (0, 2, 0.1)],
            0,
            3,
        )
        .unwrap();
        // middles strictly inside (gamma0, gamma1): no contraction happens
        let x = voltages(&g, vec![1.0, 0.5, 0.45, 0.0]);
        let t = ThresholdPair {
            center0: 0.0,
            center1: 1.0,
            gamma0: 0.05,
            gamma1: 0.95,
            rounds: 1,
            relaxed: false,
        };
        let c = coarsen(&g, &x, &t);
        assert_eq!(c.graph.node_count(), g.node_count());
        let cut = two_level_round(&x, &g, None);
        let opt = brute_force_min_cut(&g).unwrap();
        assert!((cut.cut_value - opt.value).abs() <= 1e-12);
    }

    #[test]
    fn two_level_size_cap_falls_back_to_sweep() {
        let g = WeightedGraph::ingest(
            &[(0, 1, 0.6), (1, 2, 0.5), (2, 3, 0.9), (1, 3, 0.2), (0, 2, 0.1)],
            0,
            3,
        )
        .unwrap();
        let x = voltages(&g, vec![1.0, 0.5, 0.45, 0.0]);
        let cut = two_level_round(&x, &g, Some(2));
        assert_eq!(cut.method, RoundingMethod::Sweep);
        assert!(cut.size_reduction.is_none());
    }

    #[test]
    fn approx_ratio_arithmetic() {
        assert_eq!(relative_approx_ratio(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(relative_approx_ratio(1.5, 1.0).unwrap(), 0.5);
        assert_eq!(
            relative_approx_ratio(1.0, 0.0).unwrap_err(),
            RoundingError::ZeroOptimum
        );
    }
}
