//! Command-line driver: solve instances end to end, run the exact oracle,
//! compute spectral diagnostics, generate instances, and batch benchmarks.

mod bench;
mod config;
mod report;

use std::fmt;
use std::io::BufReader;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use stcut::formats;
use stcut::gen;
use stcut::maxflow;
use stcut::par::WorkerPool;
use stcut::pipeline::{solve_graph, PipelineError};
use stcut::spectral::{cheeger_check, SpectralConfig};

use config::ConfigArgs;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, unparsable, or invalid input (exit code 2).
    Input(String),
    /// The solver failed on valid input (exit code 3).
    Solver(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Solver(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

impl From<formats::FormatError> for CliError {
    fn from(e: formats::FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<gen::GenError> for CliError {
    fn from(e: gen::GenError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("io error: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "stcut",
    about = "Parallel undirected s-t min-cut solver (IRLS over Laplacian systems)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance: partition, IRLS iterations, rounding, reports.
    Solve {
        /// Instance file (DIMACS max-flow or triple list; format sniffed).
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for cut files, report.json, and trace.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also export the computed partition (one block id per line).
        #[arg(long)]
        export_partition: Option<PathBuf>,
    },
    /// Exact max-flow / min-cut solve (the combinatorial reference).
    Oracle {
        input: PathBuf,
        /// Write the optimal cut labeling here.
        #[arg(long)]
        cut_out: Option<PathBuf>,
    },
    /// Spectral diagnostics: lambda_2 of the terminal pencil and the
    /// Cheeger-type bounds around the min-cut expansion.
    Spectral {
        input: PathBuf,
        /// Relative PCG tolerance for the eigenvalue solve [default: 1e-12].
        #[arg(long)]
        pcg_tol: Option<f64>,
        /// Skip the exact min-cut (phi) computation on large instances.
        #[arg(long)]
        skip_phi: bool,
    },
    /// Generate a deterministic instance file.
    Gen {
        /// Instance family: path | grid2d | grid3d | rgg (random geometric).
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Node count for path/rgg kinds.
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long)]
        depth: Option<usize>,
        /// Base edge weight before the uniform [0,1) perturbation.
        #[arg(long, default_value_t = 1.0)]
        base: f64,
        /// Terminal attachment: bisection | corner.
        #[arg(long, default_value = "bisection")]
        terminal_mode: String,
        /// Strength of bisection terminals (fraction of weighted degree) or
        /// capacity of corner terminals.
        #[arg(long, default_value_t = 0.25)]
        terminal_strength: f64,
        /// Output format: dimacs | triples.
        #[arg(long, default_value = "dimacs")]
        format: String,
    },
    /// Run a grid of solver configurations over instances, one CSV row per
    /// run; failures are recorded per row.
    Bench(bench::BenchArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| run(cli.command));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            4
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve {
            input,
            config,
            out_dir,
            export_partition,
        } => cmd_solve(&input, &config, &out_dir, export_partition.as_deref()),
        Command::Oracle { input, cut_out } => cmd_oracle(&input, cut_out.as_deref()),
        Command::Spectral {
            input,
            pcg_tol,
            skip_phi,
        } => cmd_spectral(&input, pcg_tol, skip_phi),
        Command::Gen {
            kind,
            out,
            seed,
            nodes,
            rows,
            cols,
            depth,
            base,
            terminal_mode,
            terminal_strength,
            format,
        } => cmd_gen(
            &kind,
            &out,
            seed,
            nodes,
            rows,
            cols,
            depth,
            base,
            &terminal_mode,
            terminal_strength,
            &format,
        ),
        Command::Bench(args) => bench::run(&args),
    }
}

fn cmd_solve(
    input: &std::path::Path,
    args: &ConfigArgs,
    out_dir: &std::path::Path,
    export_partition: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let graph = formats::read_graph(input)?;
    let mut cfg = args.build()?;
    if let Some(pfile) = &args.partition_file {
        let reader = BufReader::new(std::fs::File::open(pfile)?);
        cfg.external_partition = Some(formats::read_partition(reader)?);
    }
    let outcome = solve_graph(&graph, &cfg)?;

    std::fs::create_dir_all(out_dir)?;
    report::write_solve_outputs(input, &graph, &cfg, &outcome, out_dir)?;
    if let Some(path) = export_partition {
        let mut f = std::fs::File::create(path)?;
        formats::write_partition(&outcome.partition, &mut f)?;
    }

    let best = outcome
        .best_cut()
        .ok_or_else(|| CliError::Solver("no rounding was requested".into()))?;
    println!(
        "cut value {} via {} (reports in {})",
        best.cut_value,
        best.method,
        out_dir.display()
    );
    Ok(())
}

fn cmd_oracle(input: &std::path::Path, cut_out: Option<&std::path::Path>) -> Result<(), CliError> {
    let graph = formats::read_graph(input)?;
    let result = maxflow::max_flow(&graph);
    let recheck = graph
        .cut_value(&result.source_side)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    if let Some(path) = cut_out {
        let mut f = std::fs::File::create(path)?;
        formats::write_cut(&graph, &result.source_side, &mut f)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "max_flow": result.value,
            "cut_value": recheck,
            "nodes": graph.node_count(),
            "edges": graph.edge_count(),
        })
    );
    Ok(())
}

fn cmd_spectral(
    input: &std::path::Path,
    pcg_tol: Option<f64>,
    skip_phi: bool,
) -> Result<(), CliError> {
    let graph = formats::read_graph(input)?;
    let mut cfg = SpectralConfig::default();
    if let Some(tol) = pcg_tol {
        cfg.pcg_tol = tol;
    }
    let pool = WorkerPool::serial();
    if skip_phi {
        let r = stcut::spectral::lambda2(&graph, &cfg, &pool)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        println!("{}", serde_json::json!({ "lambda2": r.lambda2 }));
    } else {
        let r = cheeger_check(&graph, &cfg, &pool).map_err(|e| CliError::Solver(e.to_string()))?;
        println!(
            "{}",
            serde_json::json!({
                "lambda2": r.lambda2,
                "phi": r.phi,
                "lower": r.lower,
                "upper": r.upper,
                "holds": r.holds,
            })
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    kind: &str,
    out: &std::path::Path,
    seed: u64,
    nodes: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    depth: Option<usize>,
    base: f64,
    terminal_mode: &str,
    terminal_strength: f64,
    format: &str,
) -> Result<(), CliError> {
    let mode = match terminal_mode {
        "bisection" => gen::TerminalMode::Bisection {
            strength: terminal_strength,
        },
        "corner" => gen::TerminalMode::Corner {
            capacity: terminal_strength,
        },
        other => {
            return Err(CliError::Input(format!(
                "unknown terminal mode '{other}' (expected bisection|corner)"
            )))
        }
    };
    let graph = match kind {
        "path" => gen::path(nodes.unwrap_or(3))?,
        "grid2d" => gen::grid2d(
            rows.unwrap_or(16),
            cols.unwrap_or(16),
            base,
            mode,
            seed,
        )?,
        "grid3d" | "grid3d_26conn" => gen::grid3d_26conn(
            rows.unwrap_or(8),
            cols.unwrap_or(8),
            depth.unwrap_or(8),
            base,
            mode,
            seed,
        )?,
        "rgg" | "random_geometric" => {
            gen::random_geometric(nodes.unwrap_or(200), terminal_strength, seed)?
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown instance kind '{other}' (expected path|grid2d|grid3d|rgg)"
            )))
        }
    };
    let mut f = std::fs::File::create(out)?;
    match format {
        "dimacs" => formats::write_dimacs(&graph, &mut f)?,
        "triples" => formats::write_triples(&graph, &mut f)?,
        other => {
            return Err(CliError::Input(format!(
                "unknown output format '{other}' (expected dimacs|triples)"
            )))
        }
    }
    println!(
        "wrote {} ({} nodes, {} edges)",
        out.display(),
        graph.node_count(),
        graph.edge_count()
    );
    Ok(())
}
