//! Exact combinatorial max-flow / min-cut on undirected graphs with
//! floating-point capacities. Backend of the two-level rounding procedure and
//! ground-truth oracle for the whole test suite.
//!
//! Each undirected edge {u, v} of capacity c becomes two opposing arcs of
//! capacity c that are each other's reverse, so residual(u->v) +
//! residual(v->u) = 2c at all times. Augmentation uses Dinic's level graph
//! with a relative bottleneck threshold to shrug off floating-point debris.

use std::collections::VecDeque;
use std::fmt;

use crate::graph::WeightedGraph;

/// Residuals below `SATURATION_REL * max_capacity` count as saturated.
const SATURATION_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum MaxFlowError {
    TooLargeForEnumeration { nodes: usize, limit: usize },
}

impl fmt::Display for MaxFlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFlowError::TooLargeForEnumeration { nodes, limit } => {
                write!(f, "{nodes} nodes exceeds the enumeration limit of {limit}")
            }
        }
    }
}

impl std::error::Error for MaxFlowError {}

#[derive(Debug, Clone, Copy)]
struct Arc {
    to: usize,
    residual: f64,
}

/// Directed residual structure over an undirected graph.
pub struct ResidualNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    threshold: f64,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl ResidualNetwork {
    pub fn new(graph: &WeightedGraph) -> Self {
        let n = graph.node_count();
        let mut arcs = Vec::with_capacity(2 * graph.edge_count());
        let mut adj = vec![Vec::new(); n];
        let mut max_cap = 0.0f64;
        for e in graph.edges() {
            adj[e.u].push(arcs.len());
            arcs.push(Arc {
                to: e.v,
                residual: e.capacity,
            });
            adj[e.v].push(arcs.len());
            arcs.push(Arc {
                to: e.u,
                residual: e.capacity,
            });
            max_cap = max_cap.max(e.capacity);
        }
        ResidualNetwork {
            node_count: n,
            source: graph.source(),
            sink: graph.sink(),
            arcs,
            adj,
            threshold: SATURATION_REL * max_cap,
            level: vec![-1; n],
            cursor: vec![0; n],
        }
    }

    fn bfs_levels(&mut self) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut queue = VecDeque::new();
        self.level[self.source] = 0;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let arc = self.arcs[a];
                if arc.residual > self.threshold && self.level[arc.to] < 0 {
                    self.level[arc.to] = self.level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        self.level[self.sink] >= 0
    }

    /// One augmenting path in the level graph, found iteratively (path
    /// lengths can reach the node count, so no recursion).
    fn augment_once(&mut self, path: &mut Vec<usize>) -> f64 {
        path.clear();
        let mut u = self.source;
        loop {
            if u == self.sink {
                let mut bottleneck = f64::INFINITY;
                for &a in path.iter() {
                    bottleneck = bottleneck.min(self.arcs[a].residual);
                }
                for &a in path.iter() {
                    self.arcs[a].residual -= bottleneck;
                    self.arcs[a ^ 1].residual += bottleneck;
                }
                return bottleneck;
            }
            let mut advanced = false;
            while self.cursor[u] < self.adj[u].len() {
                let a = self.adj[u][self.cursor[u]];
                let Arc { to, residual } = self.arcs[a];
                if residual > self.threshold && self.level[to] == self.level[u] + 1 {
                    path.push(a);
                    u = to;
                    advanced = true;
                    break;
                }
                self.cursor[u] += 1;
            }
            if !advanced {
                // dead end: prune u and back out one arc
                self.level[u] = -1;
                match path.pop() {
                    Some(a) => {
                        u = self.arcs[a ^ 1].to;
                        self.cursor[u] += 1;
                    }
                    None => return 0.0,
                }
            }
        }
    }

    fn run(&mut self) -> f64 {
        let mut total = 0.0;
        let mut path = Vec::new();
        while self.bfs_levels() {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let pushed = self.augment_once(&mut path);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }

    /// Source side of the final residual graph.
    fn reachable_from_source(&self) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        while let Some(u) = stack.pop() {
            for &a in &self.adj[u] {
                let arc = self.arcs[a];
                if arc.residual > self.threshold && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone)]
pub struct MaxFlowResult {
    pub value: f64,
    /// `true` marks the source side of a minimum cut.
    pub source_side: Vec<bool>,
}

/// Exact max-flow on a validated graph. The returned labeling is certified:
/// its cut value must match the flow value to 1e-9 relative, otherwise the
/// internal invariant is violated and this panics.
pub fn max_flow(graph: &WeightedGraph) -> MaxFlowResult {
    let mut net = ResidualNetwork::new(graph);
    let value = net.run();
    let source_side = net.reachable_from_source();
    let cut = graph
        .cut_value(&source_side)
        .expect("residual reachability must separate s from t");
    assert!(
        (cut - value).abs() <= 1e-9 * value.abs().max(1.0),
        "max-flow/min-cut certification failed: flow {value}, cut {cut}"
    );
    MaxFlowResult { value, source_side }
}

/// Exhaustive minimum over all s-t labelings; ties broken by the
/// lexicographically smallest side vector. Only for small oracles.
pub fn brute_force_min_cut(graph: &WeightedGraph) -> Result<MaxFlowResult, MaxFlowError> {
    const LIMIT: usize = 22;
    let n = graph.node_count();
    if n > LIMIT {
        return Err(MaxFlowError::TooLargeForEnumeration {
            nodes: n,
            limit: LIMIT,
        });
    }
    let middle: Vec<usize> = (0..n)
        .filter(|&u| u != graph.source() && u != graph.sink())
        .collect();
    let mut best: Option<(f64, Vec<bool>)> = None;
    for mask in 0u64..(1u64 << middle.len()) {
        let mut side = vec![false; n];
        side[graph.source()] = true;
        for (bit, &u) in middle.iter().enumerate() {
            side[u] = mask & (1 << bit) != 0;
        }
        let value = graph.cut_value(&side).expect("labeling is valid");
        let better = match &best {
            None => true,
            Some((bv, bs)) => value < *bv || (value == *bv && side < *bs),
        };
        if better {
            best = Some((value, side));
        }
    }
    let (value, source_side) = best.expect("at least one labeling exists");
    Ok(MaxFlowResult { value, source_side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn path_graph() -> WeightedGraph {
        WeightedGraph::ingest(&[(0, 1, 2.0), (1, 2, 1.0)], 0, 2).unwrap()
    }

    #[test]
    fn path_flow_is_bottleneck() {
        let g = path_graph();
        let r = max_flow(&g);
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.source_side, vec![true, true, false]);
    }

    #[test]
    fn triangle_flow() {
        let g = WeightedGraph::ingest(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 0.5)], 0, 2).unwrap();
        let r = max_flow(&g);
        assert!((r.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn capacity_scaling_scales_flow() {
        let edges = [(0u64, 1, 0.7), (1, 2, 0.9), (0, 2, 0.2), (1, 3, 0.5), (2, 3, 0.8)];
        let g = WeightedGraph::ingest(&edges, 0, 3).unwrap();
        let scaled: Vec<(u64, u64, f64)> = edges.iter().map(|&(u, v, c)| (u, v, 4.0 * c)).collect();
        let gs = WeightedGraph::ingest(&scaled, 0, 3).unwrap();
        let r = max_flow(&g);
        let rs = max_flow(&gs);
        assert!((rs.value - 4.0 * r.value).abs() < 1e-9);
        assert_eq!(r.source_side, rs.source_side);
    }

    #[test]
    fn residual_pairs_sum_to_twice_capacity() {
        let g = WeightedGraph::ingest(&[(0, 1, 1.5), (1, 2, 2.5), (0, 2, 0.25)], 0, 2).unwrap();
        let mut net = ResidualNetwork::new(&g);
        net.run();
        for (e, edge) in g.edges().iter().enumerate() {
            let fwd = net.arcs[2 * e].residual;
            let bwd = net.arcs[2 * e + 1].residual;
            assert!((fwd + bwd - 2.0 * edge.capacity).abs() < 1e-12);
            assert!(fwd >= -1e-12 * edge.capacity);
            assert!(bwd >= -1e-12 * edge.capacity);
        }
    }

    #[test]
    fn brute_force_small_cases() {
        let g = path_graph();
        let r = brute_force_min_cut(&g).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.source_side, vec![true, true, false]);

        let single = WeightedGraph::ingest(&[(0, 1, 3.0)], 0, 1).unwrap();
        let r = brute_force_min_cut(&single).unwrap();
        assert_eq!(r.value, 3.0);

        // 4-cycle with unit weights: all four s-t labelings cost 2; the
        // lexicographically smallest keeps only s on the source side.
        let cyc =
            WeightedGraph::ingest(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)], 0, 2)
                .unwrap();
        let r = brute_force_min_cut(&cyc).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.source_side, vec![true, false, false, false]);
    }

    #[test]
    fn brute_force_rejects_large_graphs() {
        let edges: Vec<(u64, u64, f64)> = (0..23).map(|i| (i, i + 1, 1.0)).collect();
        let g = WeightedGraph::ingest(&edges, 0, 23).unwrap();
        assert!(matches!(
            brute_force_min_cut(&g).unwrap_err(),
            MaxFlowError::TooLargeForEnumeration { .. }
        ));
    }

    fn random_connected_graph(rng: &mut impl Rng, n: u64) -> WeightedGraph {
        let mut edges = Vec::new();
        for u in 1..n {
            let v = rng.random_range(0..u);
            edges.push((u, v, rng.random_range(0.01..1.0f64)));
        }
        let extra = rng.random_range(0..(n * 2));
        for _ in 0..extra {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                edges.push((u, v, rng.random_range(0.01..1.0f64)));
            }
        }
        let s = rng.random_range(0..n);
        let mut t = rng.random_range(0..n);
        while t == s {
            t = rng.random_range(0..n);
        }
        WeightedGraph::ingest(&edges, s, t).unwrap()
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(3..12u64);
            let g = random_connected_graph(&mut rng, n);
            let fast = max_flow(&g);
            let slow = brute_force_min_cut(&g).unwrap();
            assert!(
                (fast.value - slow.value).abs() <= 1e-9 * slow.value.max(1.0),
                "flow {} vs brute force {}",
                fast.value,
                slow.value
            );
        }
    }

    #[test]
    fn flow_bounded_by_terminal_capacity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.random_range(3..10u64);
            let g = random_connected_graph(&mut rng, n);
            let r = max_flow(&g);
            let s_cap: f64 = g.neighbors(g.source()).iter().map(|&(_, e)| g.edges()[e].capacity).sum();
            let t_cap: f64 = g.neighbors(g.sink()).iter().map(|&(_, e)| g.edges()[e].capacity).sum();
            assert!(r.value <= s_cap.min(t_cap) + 1e-9);
        }
    }
}
