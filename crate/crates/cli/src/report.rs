//! Solve artifacts: cut labelings, JSON report, trace CSV, voltage matrix.

use std::io::Write;
use std::path::Path;

use stcut::graph::WeightedGraph;
use stcut::pipeline::{SolveOutcome, SolverConfig};
use stcut::rounding::CutResult;
use stcut::{formats, rounding};

use crate::CliError;

fn cut_json(cut: &CutResult, optimum: Option<f64>) -> serde_json::Value {
    let delta = optimum.and_then(|opt| rounding::relative_approx_ratio(cut.cut_value, opt).ok());
    serde_json::json!({
        "cut_value": cut.cut_value,
        "method": cut.method.to_string(),
        "size_reduction": cut.size_reduction,
        "delta_if_oracle_available": delta,
    })
}

/// Write cut files, report.json, trace.csv (and voltages.csv when recorded).
pub fn write_solve_outputs(
    input: &Path,
    graph: &WeightedGraph,
    cfg: &SolverConfig,
    outcome: &SolveOutcome,
    out_dir: &Path,
) -> Result<(), CliError> {
    for (name, cut) in [
        ("cut_sweep.txt", &outcome.sweep),
        ("cut_two_level.txt", &outcome.two_level),
    ] {
        if let Some(cut) = cut {
            // re-validate before anything leaves the process
            let check = graph
                .cut_value(&cut.source_side)
                .expect("emitted labeling must separate the terminals");
            assert!(
                (check - cut.cut_value).abs() <= 1e-9 * check.max(1.0),
                "cut value drifted from its labeling"
            );
            let mut f = std::fs::File::create(out_dir.join(name))?;
            formats::write_cut(graph, &cut.source_side, &mut f)?;
        }
    }

    let mut trace_file = std::fs::File::create(out_dir.join("trace.csv"))?;
    outcome.trace.write_csv(&mut trace_file, true)?;

    if let Some(snapshots) = &outcome.trace.voltage_snapshots {
        let mut f = std::fs::File::create(out_dir.join("voltages.csv"))?;
        write_voltage_matrix(snapshots, &mut f)?;
    }

    let timings = &outcome.timings;
    let report = serde_json::json!({
        "input": input.display().to_string(),
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "config": {
            "epsilon": cfg.epsilon,
            "iterations": cfg.iterations,
            "pcg_tol": cfg.pcg_tol,
            "pcg_max_iter": cfg.pcg_max_iter,
            "blocks": cfg.block_count,
            "strategy": cfg.block_strategy.to_string(),
            "warm_start": cfg.warm_start,
            "early_exit": cfg.early_exit,
            "workers": cfg.worker_count,
            "seed": cfg.rng_seed,
        },
        "phases_ms": {
            "partition": timings.partition_ms,
            "irls": timings.irls_ms,
            "sweep": timings.sweep_ms,
            "two_level": timings.two_level_ms,
            "oracle": timings.oracle_ms,
            "total": timings.total_ms,
        },
        "cuts": {
            "sweep": outcome.sweep.as_ref().map(|c| cut_json(c, outcome.optimum)),
            "two_level": outcome.two_level.as_ref().map(|c| cut_json(c, outcome.optimum)),
        },
        "best": outcome.best_cut().map(|c| cut_json(c, outcome.optimum)),
        "optimum": outcome.optimum,
        "irls_iterations_run": outcome.trace.records.len().saturating_sub(1),
        "total_pcg_iterations": outcome.trace.total_pcg_iterations(),
        "early_exited": outcome.trace.early_exited,
        "partition_blocks": outcome.partition.block_count,
        "warnings": outcome.trace.warnings,
    });
    let mut f = std::fs::File::create(out_dir.join("report.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&report).unwrap())?;
    Ok(())
}

/// One row per IRLS iteration, each row the sorted voltage vector (the
/// polarization heatmap data).
pub fn write_voltage_matrix<W: Write>(
    snapshots: &[Vec<f64>],
    w: &mut W,
) -> std::io::Result<()> {
    for snap in snapshots {
        let mut sorted = snap.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let row: Vec<String> = sorted.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
