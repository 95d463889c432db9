//! End-to-end orchestration: partition the non-terminal graph, run the IRLS
//! loop, round the voltages, optionally compare against the exact solver.

use std::fmt;
use std::time::Instant;

use crate::formats::FormatError;
use crate::gen::GenError;
use crate::graph::{GraphError, WeightedGraph};
use crate::irls::{irls_run, IrlsConfig, IrlsError, IrlsTrace, VoltageVector};
use crate::maxflow;
use crate::par::WorkerPool;
use crate::partition::{partition, Partition, PartitionError};
use crate::rounding::{sweep_cut, two_level_round, CutResult};
use crate::sparse::{BlockStrategy, PcgNorm};

#[derive(Debug)]
pub enum PipelineError {
    Graph(GraphError),
    Format(FormatError),
    Gen(GenError),
    Partition(PartitionError),
    Solver(IrlsError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Graph(e) => write!(f, "graph: {e}"),
            PipelineError::Format(e) => write!(f, "input: {e}"),
            PipelineError::Gen(e) => write!(f, "generator: {e}"),
            PipelineError::Partition(e) => write!(f, "partition: {e}"),
            PipelineError::Solver(e) => write!(f, "solver: {e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<GraphError> for PipelineError {
    fn from(e: GraphError) -> Self {
        PipelineError::Graph(e)
    }
}
impl From<FormatError> for PipelineError {
    fn from(e: FormatError) -> Self {
        PipelineError::Format(e)
    }
}
impl From<GenError> for PipelineError {
    fn from(e: GenError) -> Self {
        PipelineError::Gen(e)
    }
}
impl From<PartitionError> for PipelineError {
    fn from(e: PartitionError) -> Self {
        PipelineError::Partition(e)
    }
}
impl From<IrlsError> for PipelineError {
    fn from(e: IrlsError) -> Self {
        PipelineError::Solver(e)
    }
}

impl PipelineError {
    /// True for errors caused by the input rather than the solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            PipelineError::Graph(_) | PipelineError::Format(_) | PipelineError::Gen(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMode {
    Sweep,
    TwoLevel,
    Both,
}

impl RoundingMode {
    pub fn wants_sweep(self) -> bool {
        matches!(self, RoundingMode::Sweep | RoundingMode::Both)
    }

    pub fn wants_two_level(self) -> bool {
        matches!(self, RoundingMode::TwoLevel | RoundingMode::Both)
    }
}

/// Full solver configuration with the defaults used throughout: smoothing
/// 1e-6, 50 IRLS iterations, PCG tolerance 1e-3 with 50 iterations max, warm
/// starts on.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub iterations: usize,
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    pub pcg_norm: PcgNorm,
    pub block_count: usize,
    pub block_strategy: BlockStrategy,
    pub warm_start: bool,
    pub early_exit: bool,
    pub rounding: RoundingMode,
    /// 0 means use all available cores.
    pub worker_count: usize,
    pub rng_seed: u64,
    pub balance_tolerance: f64,
    /// Fall back to sweep cut when the coarse graph is larger than this.
    pub coarse_size_cap: Option<usize>,
    pub record_voltages: bool,
    /// Run the exact solver on the full instance to report approximation
    /// ratios.
    pub compute_oracle: bool,
    /// Use a precomputed block assignment instead of the built-in
    /// partitioner.
    pub external_partition: Option<Vec<usize>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-6,
            iterations: 50,
            pcg_tol: 1e-3,
            pcg_max_iter: 50,
            pcg_norm: PcgNorm::default(),
            block_count: 4,
            block_strategy: BlockStrategy::ExactLu,
            warm_start: true,
            early_exit: true,
            rounding: RoundingMode::Both,
            worker_count: 0,
            rng_seed: 0,
            balance_tolerance: 0.05,
            coarse_size_cap: None,
            record_voltages: false,
            compute_oracle: false,
            external_partition: None,
        }
    }
}

impl SolverConfig {
    pub fn irls_config(&self) -> IrlsConfig {
        IrlsConfig {
            epsilon: self.epsilon,
            iterations: self.iterations,
            pcg_tol: self.pcg_tol,
            pcg_max_iter: self.pcg_max_iter,
            pcg_norm: self.pcg_norm,
            block_strategy: self.block_strategy,
            warm_start: self.warm_start,
            early_exit: self.early_exit,
            record_voltages: self.record_voltages,
        }
    }
}

/// Wall-clock milliseconds per phase, mirroring the report layout
/// partition | IRLS | sweep | two-level.
#[derive(Debug, Clone, Default)]
pub struct PhaseTimings {
    pub partition_ms: f64,
    pub irls_ms: f64,
    pub sweep_ms: f64,
    pub two_level_ms: f64,
    pub oracle_ms: f64,
    pub total_ms: f64,
}

impl PhaseTimings {
    pub fn phase_sum(&self) -> f64 {
        self.partition_ms + self.irls_ms + self.sweep_ms + self.two_level_ms + self.oracle_ms
    }
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub voltages: VoltageVector,
    pub trace: IrlsTrace,
    pub partition: Partition,
    pub sweep: Option<CutResult>,
    pub two_level: Option<CutResult>,
    /// Exact optimum when `compute_oracle` was set.
    pub optimum: Option<f64>,
    pub timings: PhaseTimings,
}

impl SolveOutcome {
    /// The cut the run reports as its answer: the better of the computed
    /// roundings.
    pub fn best_cut(&self) -> Option<&CutResult> {
        match (&self.sweep, &self.two_level) {
            (Some(s), Some(t)) => Some(if t.cut_value <= s.cut_value { t } else { s }),
            (Some(s), None) => Some(s),
            (None, Some(t)) => Some(t),
            (None, None) => None,
        }
    }
}

/// Run the whole pipeline on a validated graph.
pub fn solve_graph(
    graph: &WeightedGraph,
    config: &SolverConfig,
) -> Result<SolveOutcome, PipelineError> {
    let total_start = Instant::now();
    let pool = WorkerPool::new(config.worker_count);
    let split = graph.split_terminals();

    let t = Instant::now();
    let part = match &config.external_partition {
        Some(assignment) => {
            if assignment.len() != split.nonterminal_count {
                return Err(PipelineError::Partition(PartitionError::DimensionMismatch {
                    expected: split.nonterminal_count,
                    got: assignment.len(),
                }));
            }
            let blocks = assignment.iter().max().map_or(1, |&b| b + 1);
            Partition::from_assignment(blocks, assignment.clone())
        }
        None => {
            if split.nonterminal_count == 0 {
                Partition::empty()
            } else {
                // the requested block count cannot exceed the node count
                let blocks = config.block_count.clamp(1, split.nonterminal_count);
                if blocks != config.block_count {
                    log::debug!(
                        "clamping block count {} to {blocks} for {} non-terminal nodes",
                        config.block_count,
                        split.nonterminal_count
                    );
                }
                partition(
                    &split.nonterminal_adjacency(),
                    blocks,
                    config.balance_tolerance,
                    config.rng_seed,
                )?
            }
        }
    };
    let partition_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let (voltages, trace) = irls_run(graph, &part, &config.irls_config(), &pool)?;
    let irls_ms = t.elapsed().as_secs_f64() * 1e3;

    let mut sweep = None;
    let mut sweep_ms = 0.0;
    if config.rounding.wants_sweep() {
        let t = Instant::now();
        sweep = Some(sweep_cut(&voltages, graph));
        sweep_ms = t.elapsed().as_secs_f64() * 1e3;
    }
    let mut two_level = None;
    let mut two_level_ms = 0.0;
    if config.rounding.wants_two_level() {
        let t = Instant::now();
        two_level = Some(two_level_round(&voltages, graph, config.coarse_size_cap));
        two_level_ms = t.elapsed().as_secs_f64() * 1e3;
    }

    let mut optimum = None;
    let mut oracle_ms = 0.0;
    if config.compute_oracle {
        let t = Instant::now();
        optimum = Some(maxflow::max_flow(graph).value);
        oracle_ms = t.elapsed().as_secs_f64() * 1e3;
    }

    Ok(SolveOutcome {
        voltages,
        trace,
        partition: part,
        sweep,
        two_level,
        optimum,
        timings: PhaseTimings {
            partition_ms,
            irls_ms,
            sweep_ms,
            two_level_ms,
            oracle_ms,
            total_ms: total_start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn path_fixture_end_to_end() {
        let g = gen::path(3).unwrap();
        let cfg = SolverConfig {
            worker_count: 1,
            compute_oracle: true,
            ..Default::default()
        };
        let out = solve_graph(&g, &cfg).unwrap();
        let sweep = out.sweep.as_ref().unwrap();
        let two = out.two_level.as_ref().unwrap();
        assert_eq!(two.cut_value, 1.0);
        assert!(sweep.cut_value >= two.cut_value);
        assert_eq!(out.optimum, Some(1.0));
    }

    #[test]
    fn zero_iterations_is_spectral_baseline() {
        let g = gen::path(3).unwrap();
        let cfg = SolverConfig {
            iterations: 0,
            rounding: RoundingMode::Sweep,
            worker_count: 1,
            ..Default::default()
        };
        let out = solve_graph(&g, &cfg).unwrap();
        assert_eq!(out.trace.records.len(), 1);
        assert_eq!(out.sweep.as_ref().unwrap().cut_value, 1.0);
        assert!(out.two_level.is_none());
    }

    #[test]
    fn identical_runs_and_worker_counts_agree() {
        let g = gen::grid2d(8, 8, 1.0, gen::TerminalMode::default(), 3).unwrap();
        let base = SolverConfig {
            iterations: 10,
            worker_count: 1,
            ..Default::default()
        };
        let mut with_workers = base.clone();
        with_workers.worker_count = 4;
        let a = solve_graph(&g, &base).unwrap();
        let b = solve_graph(&g, &with_workers).unwrap();
        assert_eq!(
            a.best_cut().unwrap().source_side,
            b.best_cut().unwrap().source_side
        );
        for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
            assert_eq!(ra.s_eps.to_bits(), rb.s_eps.to_bits());
            assert_eq!(ra.flow_value.to_bits(), rb.flow_value.to_bits());
            assert_eq!(ra.pcg_iterations, rb.pcg_iterations);
        }
    }

    #[test]
    fn external_partition_is_honored() {
        let g = gen::grid2d(4, 4, 1.0, gen::TerminalMode::default(), 3).unwrap();
        let assignment: Vec<usize> = (0..16).map(|i| usize::from(i >= 8)).collect();
        let cfg = SolverConfig {
            external_partition: Some(assignment.clone()),
            worker_count: 1,
            iterations: 5,
            ..Default::default()
        };
        let out = solve_graph(&g, &cfg).unwrap();
        assert_eq!(out.partition.assignment, assignment);
        assert_eq!(out.partition.block_count, 2);
    }

    #[test]
    fn block_ranges_stable_across_iterations() {
        let g = gen::grid2d(6, 6, 1.0, gen::TerminalMode::default(), 11).unwrap();
        let cfg = SolverConfig {
            iterations: 7,
            worker_count: 1,
            ..Default::default()
        };
        let out = solve_graph(&g, &cfg).unwrap();
        // the trace carries the ranges the preconditioner used; they are the
        // partition's ranges, unchanged across the whole run
        assert_eq!(out.trace.block_ranges, out.partition.block_ranges);
    }
}
