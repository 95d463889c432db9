//! Weighted undirected graph with two terminals, plus the static structural
//! objects every solver stage consumes: the terminal split, the oriented
//! incidence operator, and cut evaluation.

use std::collections::BTreeMap;
use std::fmt;

/// Validation and usage errors for graph construction and cut evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    NonPositiveCapacity { u: u64, v: u64, capacity: f64 },
    DisconnectedGraph,
    SourceEqualsSink,
    EmptyEdgeList,
    InvalidLabeling,
    UnknownTerminal { id: u64 },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::NonPositiveCapacity { u, v, capacity } => {
                write!(f, "edge ({u},{v}) has non-positive capacity {capacity}")
            }
            GraphError::DisconnectedGraph => write!(f, "graph is not connected"),
            GraphError::SourceEqualsSink => write!(f, "source and sink are the same node"),
            GraphError::EmptyEdgeList => write!(f, "edge list is empty"),
            GraphError::InvalidLabeling => {
                write!(f, "labeling places source and sink on the same side")
            }
            GraphError::UnknownTerminal { id } => {
                write!(f, "terminal node {id} does not appear in any edge")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// An undirected edge with merged capacity. Endpoints are internal dense ids
/// with `u < v`; the orientation (u -> v) is fixed at ingest and shared by the
/// incidence operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub capacity: f64,
}

/// Validated undirected graph with positive capacities and terminals s, t.
///
/// Immutable after construction; safe to share across worker threads.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
    original_ids: Vec<u64>,
    // CSR adjacency: for node u, (neighbor, edge index) pairs.
    adj_offsets: Vec<usize>,
    adj_targets: Vec<(usize, usize)>,
}

impl WeightedGraph {
    /// Validate and canonicalize an edge list: remap node ids to `0..n`,
    /// merge parallel edges by capacity summation, drop self-loops (they can
    /// never cross a cut), and check connectivity.
    pub fn ingest(edges: &[(u64, u64, f64)], source: u64, sink: u64) -> Result<Self, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }
        if source == sink {
            return Err(GraphError::SourceEqualsSink);
        }
        for &(u, v, c) in edges {
            if !(c > 0.0) || !c.is_finite() {
                return Err(GraphError::NonPositiveCapacity { u, v, capacity: c });
            }
        }

        let mut ids: Vec<u64> = edges.iter().flat_map(|&(u, v, _)| [u, v]).collect();
        ids.push(source);
        ids.push(sink);
        ids.sort_unstable();
        ids.dedup();
        let index_of: BTreeMap<u64, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut dropped_loops = 0usize;
        for &(u, v, c) in edges {
            let (a, b) = (index_of[&u], index_of[&v]);
            if a == b {
                dropped_loops += 1;
                continue;
            }
            let key = (a.min(b), a.max(b));
            *merged.entry(key).or_insert(0.0) += c;
        }
        if dropped_loops > 0 {
            log::debug!("ingest dropped {dropped_loops} self-loop(s)");
        }
        if merged.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }

        let canonical: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), capacity)| Edge { u, v, capacity })
            .collect();

        let graph = WeightedGraph::from_canonical(
            ids.len(),
            canonical,
            index_of[&source],
            index_of[&sink],
            ids,
        );
        if !graph.is_connected() {
            return Err(GraphError::DisconnectedGraph);
        }
        Ok(graph)
    }

    fn from_canonical(
        node_count: usize,
        edges: Vec<Edge>,
        source: usize,
        sink: usize,
        original_ids: Vec<u64>,
    ) -> Self {
        let mut degree = vec![0usize; node_count];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut adj_offsets = vec![0usize; node_count + 1];
        for u in 0..node_count {
            adj_offsets[u + 1] = adj_offsets[u] + degree[u];
        }
        let mut cursor = adj_offsets.clone();
        let mut adj_targets = vec![(0usize, 0usize); adj_offsets[node_count]];
        for (idx, e) in edges.iter().enumerate() {
            adj_targets[cursor[e.u]] = (e.v, idx);
            cursor[e.u] += 1;
            adj_targets[cursor[e.v]] = (e.u, idx);
            cursor[e.v] += 1;
        }
        WeightedGraph {
            node_count,
            edges,
            source,
            sink,
            original_ids,
            adj_offsets,
            adj_targets,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Neighbors of `u` as (neighbor, edge index) pairs.
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.adj_targets[self.adj_offsets[u]..self.adj_offsets[u + 1]]
    }

    /// The id the node carried in the input file.
    pub fn original_id(&self, u: usize) -> u64 {
        self.original_ids[u]
    }

    /// Total edge capacity. The volume constant of the spectral pencil is
    /// twice this value.
    pub fn total_capacity(&self) -> f64 {
        self.edges.iter().map(|e| e.capacity).sum()
    }

    /// Export the canonical edge list in original ids. `ingest` of this list
    /// reproduces the graph exactly.
    pub fn canonical_edges(&self) -> Vec<(u64, u64, f64)> {
        self.edges
            .iter()
            .map(|e| (self.original_ids[e.u], self.original_ids[e.v], e.capacity))
            .collect()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1usize;
        while let Some(u) = stack.pop() {
            for &(v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == self.node_count
    }

    /// Total capacity of edges crossing the labeling. `side[u] == true` puts
    /// `u` on the source side.
    pub fn cut_value(&self, side: &[bool]) -> Result<f64, GraphError> {
        if side.len() != self.node_count || !side[self.source] || side[self.sink] {
            return Err(GraphError::InvalidLabeling);
        }
        Ok(self
            .edges
            .iter()
            .filter(|e| side[e.u] != side[e.v])
            .map(|e| e.capacity)
            .sum())
    }

    /// Classify every edge as non-terminal, terminal, or the direct s-t edge.
    pub fn split_terminals(&self) -> TerminalSplit {
        let s = self.source;
        let t = self.sink;
        let mut to_nonterminal = vec![None; self.node_count];
        let mut from_nonterminal = Vec::with_capacity(self.node_count.saturating_sub(2));
        for u in 0..self.node_count {
            if u != s && u != t {
                to_nonterminal[u] = Some(from_nonterminal.len());
                from_nonterminal.push(u);
            }
        }
        let mut nonterminal_edges = Vec::new();
        let mut terminal_edges = Vec::new();
        let mut direct_st_capacity = 0.0;
        let mut direct_st_edge = None;
        for (idx, e) in self.edges.iter().enumerate() {
            let u_term = e.u == s || e.u == t;
            let v_term = e.v == s || e.v == t;
            match (u_term, v_term) {
                (false, false) => nonterminal_edges.push(NonTerminalEdge {
                    a: to_nonterminal[e.u].unwrap(),
                    b: to_nonterminal[e.v].unwrap(),
                    capacity: e.capacity,
                    edge: idx,
                }),
                (true, true) => {
                    direct_st_capacity = e.capacity;
                    direct_st_edge = Some(idx);
                }
                _ => {
                    let (node, term) = if u_term { (e.v, e.u) } else { (e.u, e.v) };
                    terminal_edges.push(TerminalEdge {
                        node: to_nonterminal[node].unwrap(),
                        terminal: if term == s { Terminal::Source } else { Terminal::Sink },
                        capacity: e.capacity,
                        edge: idx,
                    });
                }
            }
        }
        TerminalSplit {
            nonterminal_count: from_nonterminal.len(),
            to_nonterminal,
            from_nonterminal,
            nonterminal_edges,
            terminal_edges,
            direct_st_capacity,
            direct_st_edge,
        }
    }

    /// Oriented incidence operator sharing this graph's fixed orientation.
    pub fn incidence(&self) -> IncidenceOperator<'_> {
        IncidenceOperator { graph: self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Source,
    Sink,
}

/// An edge between two non-terminal nodes, in non-terminal indexing.
#[derive(Debug, Clone, Copy)]
pub struct NonTerminalEdge {
    pub a: usize,
    pub b: usize,
    pub capacity: f64,
    /// Index into the parent graph's edge list.
    pub edge: usize,
}

/// An edge from a non-terminal node to one of the terminals.
#[derive(Debug, Clone, Copy)]
pub struct TerminalEdge {
    pub node: usize,
    pub terminal: Terminal,
    pub capacity: f64,
    pub edge: usize,
}

/// Partition of the edge set into the non-terminal subgraph, the terminal
/// edges, and an optional direct s-t edge (which adds a constant to every
/// s-t cut and is kept out of the reduced system).
#[derive(Debug, Clone)]
pub struct TerminalSplit {
    pub nonterminal_count: usize,
    pub to_nonterminal: Vec<Option<usize>>,
    pub from_nonterminal: Vec<usize>,
    pub nonterminal_edges: Vec<NonTerminalEdge>,
    pub terminal_edges: Vec<TerminalEdge>,
    pub direct_st_capacity: f64,
    pub direct_st_edge: Option<usize>,
}

impl TerminalSplit {
    /// Adjacency of the non-terminal graph (non-terminal indexing), weighted
    /// by capacity. Input to the partitioner.
    pub fn nonterminal_adjacency(&self) -> AdjList {
        AdjList::from_edges(
            self.nonterminal_count,
            self.nonterminal_edges
                .iter()
                .map(|e| (e.a, e.b, e.capacity)),
        )
    }

    /// Number of classified edges; equals the parent graph's edge count.
    pub fn classified_edges(&self) -> usize {
        self.nonterminal_edges.len()
            + self.terminal_edges.len()
            + usize::from(self.direct_st_edge.is_some())
    }
}

/// Plain weighted adjacency list used by the partitioner.
#[derive(Debug, Clone)]
pub struct AdjList {
    pub node_count: usize,
    pub offsets: Vec<usize>,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

impl AdjList {
    pub fn from_edges(node_count: usize, edges: impl Iterator<Item = (usize, usize, f64)>) -> Self {
        let edges: Vec<(usize, usize, f64)> = edges.collect();
        let mut degree = vec![0usize; node_count];
        for &(a, b, _) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut offsets = vec![0usize; node_count + 1];
        for u in 0..node_count {
            offsets[u + 1] = offsets[u] + degree[u];
        }
        let mut cursor = offsets.clone();
        let mut neighbors = vec![0usize; offsets[node_count]];
        let mut weights = vec![0.0; offsets[node_count]];
        for &(a, b, w) in &edges {
            neighbors[cursor[a]] = b;
            weights[cursor[a]] = w;
            cursor[a] += 1;
            neighbors[cursor[b]] = a;
            weights[cursor[b]] = w;
            cursor[b] += 1;
        }
        AdjList {
            node_count,
            offsets,
            neighbors,
            weights,
        }
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[u]..self.offsets[u + 1];
        self.neighbors[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }
}

/// Edge-node incidence products for a fixed arbitrary orientation (u -> v
/// with u < v). Row i of B has +1 at u and -1 at v; C is the capacity
/// diagonal.
pub struct IncidenceOperator<'a> {
    graph: &'a WeightedGraph,
}

impl IncidenceOperator<'_> {
    /// Per-edge differences (B x)_i = x_u - x_v.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.graph
            .edges
            .iter()
            .map(|e| x[e.u] - x[e.v])
            .collect()
    }

    /// Capacity-scaled differences (C B x)_i = c_i (x_u - x_v).
    pub fn apply_capacity_scaled(&self, x: &[f64]) -> Vec<f64> {
        self.graph
            .edges
            .iter()
            .map(|e| e.capacity * (x[e.u] - x[e.v]))
            .collect()
    }

    /// Per-node accumulation (B^T z)_u = sum of +z_i over edges leaving u and
    /// -z_i over edges entering u.
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.graph.node_count];
        for (i, e) in self.graph.edges.iter().enumerate() {
            out[e.u] += z[i];
            out[e.v] -= z[i];
        }
        out
    }
}
