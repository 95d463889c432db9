//! Cross-module solver behavior on the shipped fixtures: warm-start savings,
//! rounding dominance, and oracle bounds.

use stcut::gen;
use stcut::graph::WeightedGraph;
use stcut::irls::{irls_run, IrlsConfig};
use stcut::maxflow::max_flow;
use stcut::par::WorkerPool;
use stcut::partition::{partition, Partition};
use stcut::pipeline::{solve_graph, RoundingMode, SolverConfig};
use stcut::rounding::sweep_cut;

fn partition_for(graph: &WeightedGraph, blocks: usize) -> Partition {
    let split = graph.split_terminals();
    if split.nonterminal_count == 0 {
        Partition::empty()
    } else {
        partition(
            &split.nonterminal_adjacency(),
            blocks.clamp(1, split.nonterminal_count),
            0.05,
            0,
        )
        .unwrap()
    }
}

#[test]
fn warm_starts_never_cost_iterations_on_fixtures() {
    let pool = WorkerPool::serial();
    for (name, g) in gen::fixture_suite() {
        let mut cfg = IrlsConfig {
            iterations: 30,
            pcg_tol: 1e-6,
            pcg_max_iter: 500,
            early_exit: false,
            ..Default::default()
        };
        let part = partition_for(&g, 4);
        cfg.warm_start = true;
        let (_, warm) = irls_run(&g, &part, &cfg, &pool).unwrap();
        cfg.warm_start = false;
        let (_, cold) = irls_run(&g, &part, &cfg, &pool).unwrap();
        assert!(
            warm.total_pcg_iterations() <= cold.total_pcg_iterations(),
            "{name}: warm {} > cold {}",
            warm.total_pcg_iterations(),
            cold.total_pcg_iterations()
        );
    }
}

#[test]
fn two_level_never_loses_to_sweep_on_fixtures() {
    for (name, g) in gen::fixture_suite() {
        let cfg = SolverConfig {
            rounding: RoundingMode::Both,
            worker_count: 1,
            ..Default::default()
        };
        let out = solve_graph(&g, &cfg).unwrap();
        let sweep = out.sweep.as_ref().unwrap().cut_value;
        let two = out.two_level.as_ref().unwrap().cut_value;
        assert!(
            two <= sweep + 1e-9 * sweep.max(1.0),
            "{name}: two_level {two} > sweep {sweep}"
        );
    }
}

#[test]
fn sweep_upper_bounds_the_optimum() {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for _ in 0..30 {
        let n = rng.random_range(4..40u64);
        let mut edges = Vec::new();
        for u in 1..n {
            let v = rng.random_range(0..u);
            edges.push((u, v, rng.random_range(0.05..1.0f64)));
        }
        for _ in 0..n {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                edges.push((u, v, rng.random_range(0.05..1.0f64)));
            }
        }
        let g = WeightedGraph::ingest(&edges, 0, n - 1).unwrap();
        let cfg = IrlsConfig {
            iterations: 15,
            pcg_tol: 1e-8,
            pcg_max_iter: 500,
            ..Default::default()
        };
        let (x, _) = irls_run(&g, &partition_for(&g, 2), &cfg, &WorkerPool::serial()).unwrap();
        let cut = sweep_cut(&x, &g);
        let opt = max_flow(&g).value;
        assert!(
            cut.cut_value >= opt - 1e-9 * opt.max(1.0),
            "sweep {} below the optimum {opt}",
            cut.cut_value
        );
    }
}

#[test]
fn trace_csv_layout_is_stable() {
    let g = gen::path(3).unwrap();
    let cfg = SolverConfig {
        iterations: 2,
        early_exit: false,
        worker_count: 1,
        ..Default::default()
    };
    let out = solve_graph(&g, &cfg).unwrap();
    let mut buf = Vec::new();
    out.trace.write_csv(&mut buf, true).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,S_eps,flow_value,pcg_iters,pcg_residual,wall_ms"
    );
    assert_eq!(lines.count(), 3); // initialization plus two iterations
}
