//! Benchmark harness: run a configuration grid over instances, one CSV row
//! per run, with optional sorted-voltage matrix exports for polarization
//! plots. Failures are recorded in the row's error column and the batch
//! continues.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use stcut::formats;
use stcut::gen;
use stcut::graph::WeightedGraph;
use stcut::pipeline::{solve_graph, SolveOutcome, SolverConfig};
use stcut::rounding;

use crate::config::ConfigArgs;
use crate::CliError;

#[derive(Args)]
pub struct BenchArgs {
    /// Instance file; may be given multiple times.
    #[arg(long = "instance")]
    pub instances: Vec<PathBuf>,
    /// Also include the built-in fixture suite.
    #[arg(long)]
    pub fixtures: bool,
    /// Output CSV path.
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// Comma-separated worker counts; one run per value [default: 1].
    #[arg(long, default_value = "1")]
    pub workers_list: String,
    /// Run both warm-start and cold-start variants of every configuration.
    #[arg(long)]
    pub warm_and_cold: bool,
    /// Directory for per-run sorted-voltage matrices (one row per IRLS
    /// iteration).
    #[arg(long)]
    pub voltages_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

const HEADER: &str = "instance,nodes,edges,workers,warm_start,strategy,blocks,iterations,\
pcg_tol,pcg_max_iter,partition_ms,irls_ms,sweep_ms,two_level_ms,oracle_ms,total_ms,\
sweep_cut,two_level_cut,best_cut,optimum,sweep_delta,two_level_delta,size_reduction,\
total_pcg_iters,irls_iters_run,early_exited,error";

pub fn run(args: &BenchArgs) -> Result<(), CliError> {
    let mut instances: Vec<(String, WeightedGraph)> = Vec::new();
    for path in &args.instances {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        instances.push((name, formats::read_graph(path)?));
    }
    if args.fixtures {
        for (name, graph) in gen::fixture_suite() {
            instances.push((name.to_string(), graph));
        }
    }
    if instances.is_empty() {
        return Err(CliError::Input(
            "no instances given (use --instance or --fixtures)".into(),
        ));
    }

    let worker_counts: Vec<usize> = args
        .workers_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad worker count '{s}'")))
        })
        .collect::<Result<_, _>>()?;

    let base_cfg = args.config.build()?;
    let warm_variants: Vec<bool> = if args.warm_and_cold {
        vec![true, false]
    } else {
        vec![base_cfg.warm_start]
    };

    if let Some(dir) = &args.voltages_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::fs::File::create(&args.out)?;
    writeln!(out, "{HEADER}")?;

    for (name, graph) in &instances {
        for &workers in &worker_counts {
            for &warm in &warm_variants {
                let mut cfg = base_cfg.clone();
                cfg.worker_count = workers;
                cfg.warm_start = warm;
                cfg.record_voltages |= args.voltages_dir.is_some();
                let run_result = std::panic::catch_unwind(|| solve_graph(graph, &cfg));
                let row = match run_result {
                    Ok(Ok(outcome)) => {
                        if let Some(dir) = &args.voltages_dir {
                            if let Some(snaps) = &outcome.trace.voltage_snapshots {
                                let file = dir.join(format!(
                                    "{name}_w{workers}_{}.csv",
                                    if warm { "warm" } else { "cold" }
                                ));
                                let mut f = std::fs::File::create(file)?;
                                crate::report::write_voltage_matrix(snaps, &mut f)?;
                            }
                        }
                        println!(
                            "{name}: workers={workers} warm={warm} best={:?} pcg_iters={}",
                            outcome.best_cut().map(|c| c.cut_value),
                            outcome.trace.total_pcg_iterations()
                        );
                        format_row(name, graph, &cfg, Some(&outcome), None)
                    }
                    Ok(Err(e)) => {
                        eprintln!("{name}: workers={workers} warm={warm} failed: {e}");
                        format_row(name, graph, &cfg, None, Some(e.to_string()))
                    }
                    Err(_) => {
                        eprintln!("{name}: workers={workers} warm={warm} panicked");
                        format_row(name, graph, &cfg, None, Some("internal invariant violation".into()))
                    }
                };
                writeln!(out, "{row}")?;
            }
        }
    }
    println!("bench results written to {}", args.out.display());
    Ok(())
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn format_row(
    name: &str,
    graph: &WeightedGraph,
    cfg: &SolverConfig,
    outcome: Option<&SolveOutcome>,
    error: Option<String>,
) -> String {
    let mut fields: Vec<String> = vec![
        name.to_string(),
        graph.node_count().to_string(),
        graph.edge_count().to_string(),
        cfg.worker_count.to_string(),
        cfg.warm_start.to_string(),
        cfg.block_strategy.to_string(),
        cfg.block_count.to_string(),
        cfg.iterations.to_string(),
        cfg.pcg_tol.to_string(),
        cfg.pcg_max_iter.to_string(),
    ];
    match outcome {
        Some(o) => {
            let t = &o.timings;
            let delta = |cut: Option<&rounding::CutResult>| -> Option<f64> {
                match (cut, o.optimum) {
                    (Some(c), Some(opt)) => {
                        rounding::relative_approx_ratio(c.cut_value, opt).ok()
                    }
                    _ => None,
                }
            };
            fields.extend([
                format!("{:.3}", t.partition_ms),
                format!("{:.3}", t.irls_ms),
                format!("{:.3}", t.sweep_ms),
                format!("{:.3}", t.two_level_ms),
                format!("{:.3}", t.oracle_ms),
                format!("{:.3}", t.total_ms),
                opt(o.sweep.as_ref().map(|c| c.cut_value)),
                opt(o.two_level.as_ref().map(|c| c.cut_value)),
                opt(o.best_cut().map(|c| c.cut_value)),
                opt(o.optimum),
                opt(delta(o.sweep.as_ref())),
                opt(delta(o.two_level.as_ref())),
                opt(o.two_level.as_ref().and_then(|c| c.size_reduction)),
                o.trace.total_pcg_iterations().to_string(),
                o.trace.records.len().saturating_sub(1).to_string(),
                o.trace.early_exited.to_string(),
                String::new(),
            ]);
        }
        None => {
            fields.extend(std::iter::repeat_n(String::new(), 16));
            fields.push(error.unwrap_or_default().replace(',', ";"));
        }
    }
    fields.join(",")
}
