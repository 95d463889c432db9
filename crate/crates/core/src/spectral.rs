//! The two finite generalized eigenvalues of the pencil (L, D), where D puts
//! weight C = 2 * total edge weight on the terminals and zero elsewhere, and
//! the Cheeger-type sandwich phi^2 / 2 <= lambda_2 <= 2 phi relating the
//! second eigenvalue to the min-cut expansion phi.
//!
//! lambda_2 is computed by its constrained least-squares characterization:
//! one reduced-Laplacian solve with boundary values +1 / -1, then a Rayleigh
//! quotient. No eigensolver is involved; the rank-2 pencil makes this exact.

use crate::graph::WeightedGraph;
use crate::irls::{IrlsError, ReducedSystem, ReweightState};
use crate::maxflow;
use crate::par::WorkerPool;
use crate::partition::{partition, Partition};
use crate::sparse::{factor_blocks, pcg_solve, BlockStrategy, PcgNorm};

#[derive(Debug, Clone)]
pub struct SpectralConfig {
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    pub block_count: usize,
    pub block_strategy: BlockStrategy,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            pcg_tol: 1e-12,
            pcg_max_iter: 2000,
            block_count: 1,
            block_strategy: BlockStrategy::ExactLu,
        }
    }
}

/// The finite spectrum of the pencil. lambda_1 is always zero (the all-ones
/// vector); lambda_2 carries the cut information.
#[derive(Debug, Clone, Copy)]
pub struct SpectralReport {
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Solve min (1/2C) x^T L x subject to x_s = 1, x_t = -1 and return the
/// optimal value, which equals lambda_2 of the pencil.
pub fn lambda2(
    graph: &WeightedGraph,
    config: &SpectralConfig,
    pool: &WorkerPool,
) -> Result<SpectralReport, IrlsError> {
    let split = graph.split_terminals();
    let part = if split.nonterminal_count == 0 {
        Partition::empty()
    } else {
        let blocks = config.block_count.clamp(1, split.nonterminal_count);
        partition(&split.nonterminal_adjacency(), blocks, 0.05, 0)?
    };
    let mut sys = ReducedSystem::new(graph, &split, &part)?;
    let rw = ReweightState::unit(graph);
    sys.assemble(graph, &rw, 1.0, -1.0, pool);
    let precond = factor_blocks(
        sys.matrix(),
        &part.block_ranges,
        config.block_strategy,
        pool,
    )?;
    let (v, _) = pcg_solve(
        sys.matrix(),
        sys.rhs(),
        &precond,
        None,
        config.pcg_tol,
        config.pcg_max_iter,
        PcgNorm::Preconditioned,
        pool,
    )?;

    // Embed g with g_s = 1, g_t = -1 and evaluate the Rayleigh numerator
    // over all edges of the original graph.
    let mut g = vec![0.0; graph.node_count()];
    g[graph.source()] = 1.0;
    g[graph.sink()] = -1.0;
    for (i, &node) in split.from_nonterminal.iter().enumerate() {
        g[node] = v[part.perm[i]];
    }
    let energy: f64 = graph
        .edges()
        .iter()
        .map(|e| {
            let d = g[e.u] - g[e.v];
            e.capacity * d * d
        })
        .sum();
    let volume = 2.0 * graph.total_capacity();
    Ok(SpectralReport {
        lambda1: 0.0,
        lambda2: energy / (2.0 * volume),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CheegerReport {
    pub lambda2: f64,
    /// min-cut value divided by C (every s-t cut has volume exactly C on its
    /// smaller side).
    pub phi: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Compute both sides of the sandwich with exact phi from the combinatorial
/// solver; `holds` allows 1e-6 relative slack.
pub fn cheeger_check(
    graph: &WeightedGraph,
    config: &SpectralConfig,
    pool: &WorkerPool,
) -> Result<CheegerReport, IrlsError> {
    let spec = lambda2(graph, config, pool)?;
    let volume = 2.0 * graph.total_capacity();
    let min_cut = maxflow::max_flow(graph).value;
    let phi = min_cut / volume;
    let lower = phi * phi / 2.0;
    let upper = 2.0 * phi;
    const SLACK: f64 = 1e-6;
    let holds =
        lower <= spec.lambda2 * (1.0 + SLACK) && spec.lambda2 <= upper * (1.0 + SLACK);
    Ok(CheegerReport {
        lambda2: spec.lambda2,
        phi,
        lower,
        upper,
        holds,
    })
}
