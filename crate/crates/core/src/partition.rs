//! K-way node partitioning of the non-terminal graph by multilevel recursive
//! bisection (heavy-edge matching coarsening, greedy growing, boundary
//! refinement), plus the induced block-contiguous reordering.
//!
//! The partition is computed once from the original capacities and reused by
//! every IRLS iteration; large weights tend to stay large under reweighting,
//! so the block structure remains a good preconditioner fit.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::graph::AdjList;
use crate::sparse::{self, SparseError, SparseSymmetricMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionError {
    BlockCountExceedsNodes { blocks: usize, nodes: usize },
    ZeroBlockCount,
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for PartitionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionError::BlockCountExceedsNodes { blocks, nodes } => {
                write!(f, "requested {blocks} blocks for {nodes} nodes")
            }
            PartitionError::ZeroBlockCount => write!(f, "block count must be at least 1"),
            PartitionError::DimensionMismatch { expected, got } => {
                write!(f, "dimension {got}, expected {expected}")
            }
        }
    }
}

impl std::error::Error for PartitionError {}

/// A k-way partition with its block-contiguous node reordering.
#[derive(Debug, Clone)]
pub struct Partition {
    pub block_count: usize,
    /// node -> block id
    pub assignment: Vec<usize>,
    /// old index -> new (block-contiguous) index
    pub perm: Vec<usize>,
    /// new index -> old index
    pub inv_perm: Vec<usize>,
    /// per-block contiguous range in the new index space
    pub block_ranges: Vec<Range<usize>>,
}

impl Partition {
    /// Partition for an empty node set (graphs whose only edge is s-t).
    pub fn empty() -> Self {
        Partition {
            block_count: 1,
            assignment: Vec::new(),
            perm: Vec::new(),
            inv_perm: Vec::new(),
            block_ranges: vec![0..0],
        }
    }

    /// Build the permutation and block ranges for a given assignment (also
    /// the entry point for externally supplied partition files).
    pub fn from_assignment(block_count: usize, assignment: Vec<usize>) -> Self {
        let n = assignment.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&u| (assignment[u], u));
        let mut perm = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }
        let mut counts = vec![0usize; block_count];
        for &b in &assignment {
            counts[b] += 1;
        }
        let mut block_ranges = Vec::with_capacity(block_count);
        let mut start = 0;
        for c in counts {
            block_ranges.push(start..start + c);
            start += c;
        }
        Partition {
            block_count,
            assignment,
            perm,
            inv_perm: order,
            block_ranges,
        }
    }

    /// Largest block node count.
    pub fn max_block_size(&self) -> usize {
        self.block_ranges.iter().map(|r| r.end - r.start).max().unwrap_or(0)
    }

    /// Total weight of edges whose endpoints land in different blocks.
    pub fn edge_cut(&self, adj: &AdjList) -> f64 {
        let mut cut = 0.0;
        for u in 0..adj.node_count {
            for (v, w) in adj.neighbors(u) {
                if u < v && self.assignment[u] != self.assignment[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    /// Symmetric reordering of a system matrix so that diagonal-block
    /// extraction becomes a contiguous-range slice.
    pub fn permute_matrix(
        &self,
        mat: &SparseSymmetricMatrix,
    ) -> Result<SparseSymmetricMatrix, PartitionError> {
        if mat.dim() != self.perm.len() {
            return Err(PartitionError::DimensionMismatch {
                expected: self.perm.len(),
                got: mat.dim(),
            });
        }
        mat.permute(&self.perm).map_err(|e| match e {
            SparseError::DimensionMismatch { expected, got } => {
                PartitionError::DimensionMismatch { expected, got }
            }
            _ => PartitionError::DimensionMismatch {
                expected: self.perm.len(),
                got: mat.dim(),
            },
        })
    }

    /// Reorder a vector into block-contiguous index space.
    pub fn permute_vec(&self, x: &[f64]) -> Result<Vec<f64>, PartitionError> {
        if x.len() != self.perm.len() {
            return Err(PartitionError::DimensionMismatch {
                expected: self.perm.len(),
                got: x.len(),
            });
        }
        Ok(sparse::permute_vec(x, &self.perm))
    }

    /// Recover original ordering from a block-contiguous vector.
    pub fn unpermute_vec(&self, x: &[f64]) -> Result<Vec<f64>, PartitionError> {
        if x.len() != self.perm.len() {
            return Err(PartitionError::DimensionMismatch {
                expected: self.perm.len(),
                got: x.len(),
            });
        }
        Ok(sparse::unpermute_vec(x, &self.perm))
    }
}

/// Partition `adj` into `block_count` blocks, node counts balanced within
/// `balance_tolerance` of the average. Tolerates disconnected inputs
/// (removing the terminals can disconnect the non-terminal graph).
pub fn partition(
    adj: &AdjList,
    block_count: usize,
    balance_tolerance: f64,
    seed: u64,
) -> Result<Partition, PartitionError> {
    let n = adj.node_count;
    if block_count == 0 {
        return Err(PartitionError::ZeroBlockCount);
    }
    if block_count > n {
        return Err(PartitionError::BlockCountExceedsNodes {
            blocks: block_count,
            nodes: n,
        });
    }
    if block_count == 1 {
        return Ok(Partition::from_assignment(1, vec![0; n]));
    }

    let avg = n as f64 / block_count as f64;
    let allowed = (((1.0 + balance_tolerance.max(0.0)) * avg).floor() as usize)
        .max(n.div_ceil(block_count));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let root = SubGraph {
        adj: adj.clone(),
        node_weight: vec![1; n],
        to_parent: (0..n).collect(),
    };
    recurse(&root, block_count, allowed, 0, &mut assignment, &mut rng);
    Ok(Partition::from_assignment(block_count, assignment))
}

struct SubGraph {
    adj: AdjList,
    /// number of original nodes each vertex represents
    node_weight: Vec<usize>,
    /// local index -> original node id
    to_parent: Vec<usize>,
}

fn recurse(
    sub: &SubGraph,
    parts: usize,
    allowed: usize,
    first_block: usize,
    assignment: &mut [usize],
    rng: &mut ChaCha8Rng,
) {
    if parts == 1 {
        for &orig in &sub.to_parent {
            assignment[orig] = first_block;
        }
        return;
    }
    let p_left = parts / 2;
    let p_right = parts - p_left;
    let side = bisect(sub, p_left, p_right, allowed, rng);
    let left = induced(sub, &side, true);
    let right = induced(sub, &side, false);
    recurse(&left, p_left, allowed, first_block, assignment, rng);
    recurse(&right, p_right, allowed, first_block + p_left, assignment, rng);
}

fn induced(sub: &SubGraph, side: &[bool], keep: bool) -> SubGraph {
    let mut local = vec![usize::MAX; sub.adj.node_count];
    let mut to_parent = Vec::new();
    let mut node_weight = Vec::new();
    for u in 0..sub.adj.node_count {
        if side[u] == keep {
            local[u] = to_parent.len();
            to_parent.push(sub.to_parent[u]);
            node_weight.push(sub.node_weight[u]);
        }
    }
    let mut edges = Vec::new();
    for u in 0..sub.adj.node_count {
        if side[u] != keep {
            continue;
        }
        for (v, w) in sub.adj.neighbors(u) {
            if u < v && side[v] == keep {
                edges.push((local[u], local[v], w));
            }
        }
    }
    SubGraph {
        adj: AdjList::from_edges(to_parent.len(), edges.into_iter()),
        node_weight,
        to_parent,
    }
}

/// Weight window for the left side of a bisection into (p_left, p_right)
/// parts under the global per-block allowance.
fn side_window(total: usize, p_left: usize, p_right: usize, allowed: usize) -> (usize, usize) {
    let lo = p_left.max(total.saturating_sub(p_right * allowed));
    let hi = (p_left * allowed).min(total - p_right);
    (lo, hi.max(lo))
}

fn bisect(
    sub: &SubGraph,
    p_left: usize,
    p_right: usize,
    allowed: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<bool> {
    let total: usize = sub.node_weight.iter().sum();
    let (lo, hi) = side_window(total, p_left, p_right, allowed);
    let target = ((total as f64 * p_left as f64 / (p_left + p_right) as f64).round() as usize)
        .clamp(lo, hi);

    // Coarsening levels. levels[k].0 holds the coarse graph of level k,
    // levels[k].1 maps level-(k-1) nodes (or input nodes for k = 0) to it.
    let coarsen_stop = 48.max(2 * (p_left + p_right));
    let max_node_weight = (total / (4 * (p_left + p_right))).max(1);
    let mut levels: Vec<(SubGraph, Vec<usize>)> = Vec::new();
    {
        let mut current_adj = sub.adj.clone();
        let mut current_w = sub.node_weight.clone();
        while current_adj.node_count > coarsen_stop {
            let (coarse_adj, coarse_w, map) =
                coarsen_once(&current_adj, &current_w, max_node_weight, rng);
            if coarse_adj.node_count as f64 > 0.95 * current_adj.node_count as f64 {
                break;
            }
            levels.push((
                SubGraph {
                    adj: coarse_adj.clone(),
                    node_weight: coarse_w.clone(),
                    to_parent: Vec::new(),
                },
                map,
            ));
            current_adj = coarse_adj;
            current_w = coarse_w;
        }
    }

    // Initial bisection on the coarsest level.
    let (coarsest_adj, coarsest_w) = match levels.last() {
        Some((g, _)) => (&g.adj, &g.node_weight),
        None => (&sub.adj, &sub.node_weight),
    };
    let mut side = grow_region(coarsest_adj, coarsest_w, target);
    refine(coarsest_adj, coarsest_w, &mut side, lo, hi, 10);

    // Project back through the levels, refining at each.
    for k in (0..levels.len()).rev() {
        let map = &levels[k].1;
        let (fine_adj, fine_w) = if k == 0 {
            (&sub.adj, &sub.node_weight)
        } else {
            (&levels[k - 1].0.adj, &levels[k - 1].0.node_weight)
        };
        let mut fine_side = vec![false; fine_adj.node_count];
        for u in 0..fine_adj.node_count {
            fine_side[u] = side[map[u]];
        }
        side = fine_side;
        refine(fine_adj, fine_w, &mut side, lo, hi, 8);
    }
    rebalance(&sub.adj, &sub.node_weight, &mut side, lo, hi);
    side
}

/// One round of heavy-edge matching. Returns the coarse graph, coarse node
/// weights, and the fine-to-coarse map.
fn coarsen_once(
    adj: &AdjList,
    node_weight: &[usize],
    max_node_weight: usize,
    rng: &mut ChaCha8Rng,
) -> (AdjList, Vec<usize>, Vec<usize>) {
    let n = adj.node_count;
    let mut visit: Vec<usize> = (0..n).collect();
    visit.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &visit {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (v, w) in adj.neighbors(u) {
            if v != u
                && mate[v] == usize::MAX
                && node_weight[u] + node_weight[v] <= max_node_weight
            {
                let better = match best {
                    None => true,
                    Some((bw, bv)) => w > bw || (w == bw && v < bv),
                };
                if better {
                    best = Some((w, v));
                }
            }
        }
        match best {
            Some((_, v)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut coarse_w = Vec::new();
    for u in 0..n {
        if map[u] != usize::MAX {
            continue;
        }
        let m = mate[u];
        let id = coarse_w.len();
        map[u] = id;
        if m != u {
            map[m] = id;
            coarse_w.push(node_weight[u] + node_weight[m]);
        } else {
            coarse_w.push(node_weight[u]);
        }
    }
    // Merge parallel coarse edges.
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for u in 0..n {
        for (v, w) in adj.neighbors(u) {
            let (cu, cv) = (map[u], map[v]);
            if cu < cv {
                *merged.entry((cu, cv)).or_insert(0.0) += w;
            }
        }
    }
    let coarse_adj = AdjList::from_edges(
        coarse_w.len(),
        merged.into_iter().map(|((a, b), w)| (a, b, w)),
    );
    (coarse_adj, coarse_w, map)
}

/// Greedy graph growing from a pseudo-peripheral start until the region
/// reaches the target weight. Disconnected remainders are absorbed by
/// restarting at the smallest unassigned node.
fn grow_region(adj: &AdjList, node_weight: &[usize], target: usize) -> Vec<bool> {
    let n = adj.node_count;
    let mut side = vec![false; n];
    if n == 0 {
        return side;
    }
    let start = pseudo_peripheral(adj);
    let mut weight = 0usize;
    let mut in_region = vec![false; n];
    // connection[u]: edge weight from u into the region
    let mut connection = vec![0.0f64; n];
    let mut frontier: Vec<usize> = Vec::new();
    let mut current = start;
    loop {
        in_region[current] = true;
        side[current] = true;
        weight += node_weight[current];
        if weight >= target {
            break;
        }
        for (v, w) in adj.neighbors(current) {
            if !in_region[v] {
                if connection[v] == 0.0 {
                    frontier.push(v);
                }
                connection[v] += w;
            }
        }
        frontier.retain(|&v| !in_region[v]);
        let next = frontier
            .iter()
            .copied()
            .max_by(|&a, &b| {
                connection[a]
                    .partial_cmp(&connection[b])
                    .unwrap()
                    .then(b.cmp(&a))
            });
        current = match next {
            Some(v) => v,
            None => match (0..n).find(|&v| !in_region[v]) {
                Some(v) => v,
                None => break,
            },
        };
    }
    side
}

fn pseudo_peripheral(adj: &AdjList) -> usize {
    let far = |start: usize| -> usize {
        let n = adj.node_count;
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[start] = 0;
        queue.push_back(start);
        let mut last = start;
        while let Some(u) = queue.pop_front() {
            for (v, _) in adj.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                    if dist[v] > dist[last] || (dist[v] == dist[last] && v < last) {
                        last = v;
                    }
                }
            }
        }
        last
    };
    far(far(0))
}

/// Greedy boundary refinement: move strictly cut-improving nodes while the
/// left weight stays inside [lo, hi]. Each node moves at most once per pass.
fn refine(
    adj: &AdjList,
    node_weight: &[usize],
    side: &mut [bool],
    lo: usize,
    hi: usize,
    max_passes: usize,
) {
    let n = adj.node_count;
    let mut left_weight: usize = (0..n).filter(|&u| side[u]).map(|u| node_weight[u]).sum();
    for _ in 0..max_passes {
        let mut moved_any = false;
        let mut locked = vec![false; n];
        loop {
            // gain of moving u to the other side
            let mut best: Option<(f64, usize)> = None;
            for u in 0..n {
                if locked[u] {
                    continue;
                }
                let w = node_weight[u];
                let feasible = if side[u] {
                    left_weight >= lo + w
                } else {
                    left_weight + w <= hi
                };
                if !feasible {
                    continue;
                }
                let mut external = 0.0;
                let mut internal = 0.0;
                for (v, ew) in adj.neighbors(u) {
                    if side[v] == side[u] {
                        internal += ew;
                    } else {
                        external += ew;
                    }
                }
                let gain = external - internal;
                if gain > 0.0 {
                    let better = match best {
                        None => true,
                        Some((bg, bu)) => gain > bg || (gain == bg && u < bu),
                    };
                    if better {
                        best = Some((gain, u));
                    }
                }
            }
            match best {
                Some((_, u)) => {
                    if side[u] {
                        left_weight -= node_weight[u];
                    } else {
                        left_weight += node_weight[u];
                    }
                    side[u] = !side[u];
                    locked[u] = true;
                    moved_any = true;
                }
                None => break,
            }
        }
        if !moved_any {
            break;
        }
    }
}

/// Force the left weight into [lo, hi] by moving least-damaging nodes.
fn rebalance(adj: &AdjList, node_weight: &[usize], side: &mut [bool], lo: usize, hi: usize) {
    let n = adj.node_count;
    let mut left_weight: usize = (0..n).filter(|&u| side[u]).map(|u| node_weight[u]).sum();
    loop {
        let (from_left, need) = if left_weight > hi {
            (true, left_weight - hi)
        } else if left_weight < lo {
            (false, lo - left_weight)
        } else {
            break;
        };
        // Pick the movable node with the best (gain, fit) that does not
        // overshoot the other bound.
        let mut best: Option<(f64, usize)> = None;
        for u in 0..n {
            if side[u] != from_left {
                continue;
            }
            let w = node_weight[u];
            let overshoot_ok = if from_left {
                left_weight - w >= lo
            } else {
                left_weight + w <= hi
            };
            if !overshoot_ok && w > need {
                continue;
            }
            let mut external = 0.0;
            let mut internal = 0.0;
            for (v, ew) in adj.neighbors(u) {
                if side[v] == side[u] {
                    internal += ew;
                } else {
                    external += ew;
                }
            }
            let gain = external - internal;
            let better = match best {
                None => true,
                Some((bg, bu)) => gain > bg || (gain == bg && u < bu),
            };
            if better {
                best = Some((gain, u));
            }
        }
        match best {
            Some((_, u)) => {
                if from_left {
                    left_weight -= node_weight[u];
                } else {
                    left_weight += node_weight[u];
                }
                side[u] = !side[u];
            }
            None => break,
        }
    }
}
