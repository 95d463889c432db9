//! The IRLS outer loop: alternate edge reweighting with reduced-Laplacian
//! solves until the voltage vector polarizes.
//!
//! Iteration l computes per-edge weights w_i = sqrt(c_i^2 (x_u - x_v)^2 +
//! eps^2) from the previous voltages, then solves the weighted least-squares
//! problem with boundary values x_s = 1, x_t = 0 as the reduced system
//! L~ v = b with edge conductances c_i^2 / w_i. The sparsity pattern of L~ is
//! fixed by the non-terminal graph, so assembly rewrites values in place and
//! the preconditioner refreshes numerics only.

use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::time::Instant;

use crate::graph::{Terminal, TerminalSplit, WeightedGraph};
use crate::par::{self, WorkerPool};
use crate::partition::{Partition, PartitionError};
use crate::sparse::{
    factor_blocks, pcg_solve, BlockStrategy, PcgNorm, SparseError, SparseSymmetricMatrix,
};

/// Early-exit threshold on the max-norm change of the voltage vector.
const EARLY_EXIT_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum IrlsError {
    Sparse(SparseError),
    Partition(PartitionError),
}

impl fmt::Display for IrlsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IrlsError::Sparse(e) => write!(f, "solver error: {e}"),
            IrlsError::Partition(e) => write!(f, "partition error: {e}"),
        }
    }
}

impl std::error::Error for IrlsError {}

impl From<SparseError> for IrlsError {
    fn from(e: SparseError) -> Self {
        IrlsError::Sparse(e)
    }
}

impl From<PartitionError> for IrlsError {
    fn from(e: PartitionError) -> Self {
        IrlsError::Partition(e)
    }
}

#[derive(Debug, Clone)]
pub struct IrlsConfig {
    /// Smoothing parameter guarding the reweighting against zero gradients.
    pub epsilon: f64,
    /// Number of IRLS iterations T (the initialization solve is extra).
    pub iterations: usize,
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    /// Residual norm for the PCG stopping test.
    pub pcg_norm: PcgNorm,
    pub block_strategy: BlockStrategy,
    /// Start each PCG from the previous solution instead of zero.
    pub warm_start: bool,
    /// Stop before T when the voltage vector stops moving.
    pub early_exit: bool,
    /// Keep a copy of the voltage vector at every iteration (for
    /// polarization exports).
    pub record_voltages: bool,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        IrlsConfig {
            epsilon: 1e-6,
            iterations: 50,
            pcg_tol: 1e-3,
            pcg_max_iter: 50,
            pcg_norm: PcgNorm::default(),
            block_strategy: BlockStrategy::ExactLu,
            warm_start: true,
            early_exit: true,
            record_voltages: false,
        }
    }
}

/// Node potentials with the terminals pinned to x_s = 1, x_t = 0.
#[derive(Debug, Clone)]
pub struct VoltageVector {
    values: Vec<f64>,
}

impl VoltageVector {
    /// Wrap raw per-node values, checking the boundary pins.
    pub fn from_values(values: Vec<f64>, graph: &WeightedGraph) -> Option<Self> {
        if values.len() != graph.node_count()
            || values[graph.source()] != 1.0
            || values[graph.sink()] != 0.0
        {
            return None;
        }
        Some(VoltageVector { values })
    }

    /// Embed a solved non-terminal vector (in block-permuted order) into the
    /// full node space.
    fn embed(
        v_permuted: &[f64],
        split: &TerminalSplit,
        partition: &Partition,
        graph: &WeightedGraph,
    ) -> Self {
        let mut values = vec![0.0; graph.node_count()];
        values[graph.source()] = 1.0;
        for (i, &node) in split.from_nonterminal.iter().enumerate() {
            values[node] = v_permuted[partition.perm[i]];
        }
        VoltageVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest excursion outside the [0, 1] box.
    pub fn box_excess(&self) -> f64 {
        let mut excess = 0.0f64;
        for &x in &self.values {
            excess = excess.max(-x).max(x - 1.0);
        }
        excess.max(0.0)
    }

    /// Fraction of components within `margin` of 0 or 1.
    pub fn polarized_fraction(&self, margin: f64) -> f64 {
        let hits = self
            .values
            .iter()
            .filter(|&&x| x.abs() <= margin || (1.0 - x).abs() <= margin)
            .count();
        hits as f64 / self.values.len() as f64
    }
}

/// Per-edge IRLS weights; every weight is at least epsilon.
#[derive(Debug, Clone)]
pub struct ReweightState {
    pub weights: Vec<f64>,
    pub epsilon: f64,
}

impl ReweightState {
    /// The initialization state W = C (weights equal capacities), which makes
    /// the first solve a plain electrical flow on the original graph.
    pub fn unit(graph: &WeightedGraph) -> Self {
        ReweightState {
            weights: graph.edges().iter().map(|e| e.capacity).collect(),
            epsilon: 0.0,
        }
    }

    /// Conductance of edge `e`: c_e^2 / w_e.
    pub fn conductance(&self, graph: &WeightedGraph, e: usize) -> f64 {
        let c = graph.edges()[e].capacity;
        c * c / self.weights[e]
    }
}

/// Compute the reweighting vector w_i = sqrt(c_i^2 (x_u - x_v)^2 + eps^2).
pub fn reweight(x: &VoltageVector, graph: &WeightedGraph, epsilon: f64) -> ReweightState {
    let xs = x.values();
    let weights = graph
        .edges()
        .iter()
        .map(|e| {
            let g = e.capacity * (xs[e.u] - xs[e.v]);
            (g * g + epsilon * epsilon).sqrt()
        })
        .collect();
    ReweightState { weights, epsilon }
}

/// Smoothed objective S_eps(x) = sum_i sqrt((c_i (x_u - x_v))^2 + eps^2).
pub fn smoothed_objective(x: &VoltageVector, graph: &WeightedGraph, epsilon: f64) -> f64 {
    reweight(x, graph, epsilon).weights.iter().sum()
}

/// Joint objective H(x, w) = 1/2 sum_i ((c_i^2 (x_u-x_v)^2 + eps^2) / w_i +
/// w_i). Equals S_eps(x) exactly when w is the reweighting of x.
pub fn joint_objective(x: &VoltageVector, graph: &WeightedGraph, rw: &ReweightState) -> f64 {
    let xs = x.values();
    let eps2 = rw.epsilon * rw.epsilon;
    graph
        .edges()
        .iter()
        .zip(&rw.weights)
        .map(|(e, &w)| {
            let g = e.capacity * (xs[e.u] - xs[e.v]);
            0.5 * ((g * g + eps2) / w + w)
        })
        .sum()
}

/// Flow value x^T L x of the electrical flow induced by the current
/// conductances, computed in energy form.
pub fn flow_value(x: &VoltageVector, graph: &WeightedGraph, rw: &ReweightState) -> f64 {
    let xs = x.values();
    graph
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let d = xs[edge.u] - xs[edge.v];
            rw.conductance(graph, e) * d * d
        })
        .sum()
}

/// Conservation diagnostics of the edge flow z = C W^-1 C B x.
#[derive(Debug, Clone)]
pub struct FlowDiagnostics {
    /// max over non-terminal nodes of |net incident flow|
    pub max_conservation_residual: f64,
    pub flow_inf_norm: f64,
    /// x^T L x in energy form
    pub energy: f64,
    /// net flow out of the source
    pub source_outflow: f64,
}

pub fn electrical_flow_diagnostics(
    x: &VoltageVector,
    graph: &WeightedGraph,
    rw: &ReweightState,
) -> FlowDiagnostics {
    let xs = x.values();
    let mut net = vec![0.0f64; graph.node_count()];
    let mut flow_inf: f64 = 0.0;
    let mut energy = 0.0;
    for (e, edge) in graph.edges().iter().enumerate() {
        let d = xs[edge.u] - xs[edge.v];
        let z = rw.conductance(graph, e) * d;
        net[edge.u] += z;
        net[edge.v] -= z;
        flow_inf = flow_inf.max(z.abs());
        energy += z * d;
    }
    let mut max_res: f64 = 0.0;
    for u in 0..graph.node_count() {
        if u != graph.source() && u != graph.sink() {
            max_res = max_res.max(net[u].abs());
        }
    }
    FlowDiagnostics {
        max_conservation_residual: max_res,
        flow_inf_norm: flow_inf,
        energy,
        source_outflow: net[graph.source()],
    }
}

/// The reduced Laplacian system in block-permuted order with a frozen
/// pattern. Assembly rewrites values and the right-hand side in place.
pub struct ReducedSystem {
    matrix: SparseSymmetricMatrix,
    rhs: Vec<f64>,
    /// nnz slot of the diagonal per row
    diag_pos: Vec<usize>,
    /// graph edge id per off-diagonal nnz slot (diag slots are usize::MAX)
    slot_edge: Vec<usize>,
    /// per row: graph edge id of the terminal edge to s / to t, if any
    term_source: Vec<Option<usize>>,
    term_sink: Vec<Option<usize>>,
    /// per-edge conductance scratch
    cond: Vec<f64>,
    row_chunks: Vec<Range<usize>>,
    edge_chunks: Vec<Range<usize>>,
}

impl ReducedSystem {
    pub fn new(
        graph: &WeightedGraph,
        split: &TerminalSplit,
        partition: &Partition,
    ) -> Result<Self, IrlsError> {
        let n = split.nonterminal_count;
        if partition.perm.len() != n {
            return Err(IrlsError::Partition(PartitionError::DimensionMismatch {
                expected: n,
                got: partition.perm.len(),
            }));
        }
        // Collect per-row (permuted) off-diagonal slots.
        let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for nt in &split.nonterminal_edges {
            let (pa, pb) = (partition.perm[nt.a], partition.perm[nt.b]);
            rows[pa].push((pb, nt.edge));
            rows[pb].push((pa, nt.edge));
        }
        let mut term_source = vec![None; n];
        let mut term_sink = vec![None; n];
        for te in &split.terminal_edges {
            let row = partition.perm[te.node];
            match te.terminal {
                Terminal::Source => term_source[row] = Some(te.edge),
                Terminal::Sink => term_sink[row] = Some(te.edge),
            }
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut slot_edge = Vec::new();
        let mut diag_pos = Vec::with_capacity(n);
        row_offsets.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut placed_diag = false;
            for &(j, e) in row.iter() {
                if !placed_diag && j > i {
                    diag_pos.push(col_indices.len());
                    col_indices.push(i);
                    slot_edge.push(usize::MAX);
                    placed_diag = true;
                }
                col_indices.push(j);
                slot_edge.push(e);
            }
            if !placed_diag {
                diag_pos.push(col_indices.len());
                col_indices.push(i);
                slot_edge.push(usize::MAX);
            }
            row_offsets.push(col_indices.len());
        }
        let values = vec![0.0; col_indices.len()];
        let matrix = SparseSymmetricMatrix::from_csr(n, row_offsets, col_indices, values)?;
        let row_chunks = par::chunk_ranges(&partition.block_ranges);
        let edge_chunks = par::chunk_len(graph.edge_count());
        Ok(ReducedSystem {
            matrix,
            rhs: vec![0.0; n],
            diag_pos,
            slot_edge,
            term_source,
            term_sink,
            cond: vec![0.0; graph.edge_count()],
            row_chunks,
            edge_chunks,
        })
    }

    pub fn matrix(&self) -> &SparseSymmetricMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Refresh values from the reweight state. `f_s`, `f_t` are the boundary
    /// potentials (1, 0 for the min-cut system; 1, -1 for the spectral one).
    pub fn assemble(
        &mut self,
        graph: &WeightedGraph,
        rw: &ReweightState,
        f_s: f64,
        f_t: f64,
        pool: &WorkerPool,
    ) {
        let edges = graph.edges();
        let weights = &rw.weights;
        par::for_each_chunk_mut(pool, &self.edge_chunks, &mut self.cond, |range, out| {
            for (k, e) in range.into_iter().enumerate() {
                let c = edges[e].capacity;
                out[k] = c * c / weights[e];
            }
        });

        let cond = &self.cond;
        let diag_pos = &self.diag_pos;
        let slot_edge = &self.slot_edge;
        let term_source = &self.term_source;
        let term_sink = &self.term_sink;
        let row_chunks = &self.row_chunks;
        {
            let (offsets, _, values) = self.matrix.pattern_and_values_mut();
            let nnz_spans: Vec<Range<usize>> = row_chunks
                .iter()
                .map(|r| offsets[r.start]..offsets[r.end])
                .collect();
            let parts = par::split_disjoint(values, &nnz_spans);
            let pairs: Vec<(usize, &mut [f64])> = parts.into_iter().enumerate().collect();
            par::run_pairs(pool, pairs, |chunk_idx, vals| {
                let rows = row_chunks[chunk_idx].clone();
                let base = offsets[rows.start];
                for i in rows {
                    let mut acc = 0.0;
                    for p in offsets[i]..offsets[i + 1] {
                        if p != diag_pos[i] {
                            let g = cond[slot_edge[p]];
                            vals[p - base] = -g;
                            acc += g;
                        }
                    }
                    let gs = term_source[i].map_or(0.0, |e| cond[e]);
                    let gt = term_sink[i].map_or(0.0, |e| cond[e]);
                    vals[diag_pos[i] - base] = acc + gs + gt;
                }
            });
        }
        par::for_each_chunk_mut(pool, &self.row_chunks, &mut self.rhs, |range, out| {
            for (k, i) in range.into_iter().enumerate() {
                let gs = term_source[i].map_or(0.0, |e| cond[e]);
                let gt = term_sink[i].map_or(0.0, |e| cond[e]);
                out[k] = f_s * gs + f_t * gt;
            }
        });
    }
}

/// Convenience wrapper producing a freshly assembled reduced system for the
/// given weights (boundary 1, 0).
pub fn assemble_reduced_system(
    graph: &WeightedGraph,
    rw: &ReweightState,
    partition: &Partition,
) -> Result<(SparseSymmetricMatrix, Vec<f64>), IrlsError> {
    let split = graph.split_terminals();
    let mut sys = ReducedSystem::new(graph, &split, partition)?;
    sys.assemble(graph, rw, 1.0, 0.0, &WorkerPool::serial());
    Ok((sys.matrix.clone(), sys.rhs.clone()))
}

/// One row of the convergence trace.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    pub s_eps: f64,
    pub flow_value: f64,
    pub pcg_iterations: usize,
    pub pcg_residual: f64,
    pub wall_ms: f64,
    pub max_box_excess: f64,
    pub polarized_fraction: f64,
}

#[derive(Debug, Clone, Default)]
pub struct IrlsTrace {
    pub records: Vec<IterationRecord>,
    pub block_ranges: Vec<Range<usize>>,
    pub voltage_snapshots: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
    pub early_exited: bool,
}

impl IrlsTrace {
    pub fn total_pcg_iterations(&self) -> usize {
        self.records.iter().map(|r| r.pcg_iterations).sum()
    }

    /// CSV export. Wall-clock times are inherently run-dependent, so callers
    /// comparing traces across runs disable `include_timing`.
    pub fn write_csv<W: Write>(&self, mut w: W, include_timing: bool) -> std::io::Result<()> {
        if include_timing {
            writeln!(w, "iteration,S_eps,flow_value,pcg_iters,pcg_residual,wall_ms")?;
        } else {
            writeln!(w, "iteration,S_eps,flow_value,pcg_iters,pcg_residual")?;
        }
        for r in &self.records {
            if include_timing {
                writeln!(
                    w,
                    "{},{},{},{},{},{:.3}",
                    r.iteration, r.s_eps, r.flow_value, r.pcg_iterations, r.pcg_residual, r.wall_ms
                )?;
            } else {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.iteration, r.s_eps, r.flow_value, r.pcg_iterations, r.pcg_residual
                )?;
            }
        }
        Ok(())
    }
}

/// Run the full IRLS loop: the W = C initialization solve followed by up to
/// `config.iterations` reweight/solve alternations.
pub fn irls_run(
    graph: &WeightedGraph,
    partition: &Partition,
    config: &IrlsConfig,
    pool: &WorkerPool,
) -> Result<(VoltageVector, IrlsTrace), IrlsError> {
    let split = graph.split_terminals();
    let mut sys = ReducedSystem::new(graph, &split, partition)?;
    let mut trace = IrlsTrace {
        block_ranges: partition.block_ranges.clone(),
        voltage_snapshots: config.record_voltages.then(Vec::new),
        ..Default::default()
    };

    let t0 = Instant::now();
    let rw0 = ReweightState::unit(graph);
    sys.assemble(graph, &rw0, 1.0, 0.0, pool);
    let mut precond = factor_blocks(
        &sys.matrix,
        &partition.block_ranges,
        config.block_strategy,
        pool,
    )?;
    let (mut v, report) = pcg_solve(
        &sys.matrix,
        &sys.rhs,
        &precond,
        None,
        config.pcg_tol,
        config.pcg_max_iter,
        config.pcg_norm,
        pool,
    )?;
    let mut x = VoltageVector::embed(&v, &split, partition, graph);
    record_iteration(
        &mut trace,
        0,
        &x,
        graph,
        &rw0,
        config,
        report.iterations,
        report.final_relative_residual,
        t0.elapsed().as_secs_f64() * 1e3,
    );

    for l in 1..=config.iterations {
        let t = Instant::now();
        let rw = reweight(&x, graph, config.epsilon);
        sys.assemble(graph, &rw, 1.0, 0.0, pool);
        precond.refresh_values(&sys.matrix, pool)?;
        let x0 = config.warm_start.then_some(v.as_slice());
        let (v_new, report) = pcg_solve(
            &sys.matrix,
            &sys.rhs,
            &precond,
            x0,
            config.pcg_tol,
            config.pcg_max_iter,
            config.pcg_norm,
            pool,
        )?;
        let x_new = VoltageVector::embed(&v_new, &split, partition, graph);
        let diff = x
            .values()
            .iter()
            .zip(x_new.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        v = v_new;
        x = x_new;
        record_iteration(
            &mut trace,
            l,
            &x,
            graph,
            &rw,
            config,
            report.iterations,
            report.final_relative_residual,
            t.elapsed().as_secs_f64() * 1e3,
        );
        if config.early_exit && diff < EARLY_EXIT_TOL {
            trace.early_exited = true;
            break;
        }
    }
    Ok((x, trace))
}

#[allow(clippy::too_many_arguments)]
fn record_iteration(
    trace: &mut IrlsTrace,
    iteration: usize,
    x: &VoltageVector,
    graph: &WeightedGraph,
    rw: &ReweightState,
    config: &IrlsConfig,
    pcg_iterations: usize,
    pcg_residual: f64,
    wall_ms: f64,
) {
    let excess = x.box_excess();
    let tol_box = 10.0 * config.pcg_tol;
    if excess > tol_box {
        let msg = format!(
            "iteration {iteration}: voltage outside [0,1] by {excess:.3e} (> {tol_box:.1e}); \
             PCG tolerance may be too loose"
        );
        log::warn!("{msg}");
        trace.warnings.push(msg);
    }
    trace.records.push(IterationRecord {
        iteration,
        s_eps: smoothed_objective(x, graph, config.epsilon),
        flow_value: flow_value(x, graph, rw),
        pcg_iterations,
        pcg_residual,
        wall_ms,
        max_box_excess: excess,
        polarized_fraction: x.polarized_fraction(0.05),
    });
    if let Some(snaps) = trace.voltage_snapshots.as_mut() {
        snaps.push(x.values().to_vec());
    }
}
