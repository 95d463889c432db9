//! Solver configuration assembly: built-in defaults, then a flat key=value
//! config file, then explicit CLI flags, in increasing precedence.

use std::path::PathBuf;

use clap::Args;

use stcut::pipeline::{RoundingMode, SolverConfig};
use stcut::sparse::{BlockStrategy, PcgNorm};

use crate::CliError;

#[derive(Args, Clone, Default)]
pub struct ConfigArgs {
    /// Flat key=value config file; CLI flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Smoothing parameter epsilon [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// IRLS iteration count T [default: 50].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// PCG relative residual tolerance [default: 1e-3].
    #[arg(long)]
    pub pcg_tol: Option<f64>,
    /// PCG iteration cap per solve [default: 50].
    #[arg(long)]
    pub pcg_max_iter: Option<usize>,
    /// PCG stopping norm: preconditioned | raw [default: preconditioned].
    #[arg(long)]
    pub pcg_norm: Option<String>,
    /// Preconditioner block count p [default: 4].
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Block solve strategy: exact_lu | ilu0 [default: exact_lu].
    #[arg(long)]
    pub strategy: Option<String>,
    /// Warm-start PCG from the previous solution [default: true].
    #[arg(long)]
    pub warm_start: Option<bool>,
    /// Stop early when voltages stop moving [default: true].
    #[arg(long)]
    pub early_exit: Option<bool>,
    /// Rounding procedure: sweep | two_level | both [default: both].
    #[arg(long)]
    pub rounding: Option<String>,
    /// Worker thread count; 0 uses all cores [default: 0].
    #[arg(long)]
    pub workers: Option<usize>,
    /// RNG seed for the partitioner and generators [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Partition balance tolerance [default: 0.05].
    #[arg(long)]
    pub balance_tol: Option<f64>,
    /// Coarse-graph size cap for two-level rounding (sweep fallback beyond).
    #[arg(long)]
    pub coarse_cap: Option<usize>,
    /// Also run the exact solver and report approximation ratios.
    #[arg(long)]
    pub oracle: bool,
    /// Keep per-iteration voltage snapshots (enables polarization export).
    #[arg(long)]
    pub record_voltages: bool,
    /// Use a precomputed partition file (one block id per line).
    #[arg(long)]
    pub partition_file: Option<PathBuf>,
}

pub fn parse_norm(s: &str) -> Result<PcgNorm, CliError> {
    match s {
        "preconditioned" | "pre" => Ok(PcgNorm::Preconditioned),
        "raw" | "unpreconditioned" => Ok(PcgNorm::Unpreconditioned),
        other => Err(CliError::Input(format!(
            "unknown pcg norm '{other}' (expected preconditioned|raw)"
        ))),
    }
}

pub fn parse_strategy(s: &str) -> Result<BlockStrategy, CliError> {
    match s {
        "exact_lu" | "exact-lu" | "lu" => Ok(BlockStrategy::ExactLu),
        "ilu0" | "ilu" => Ok(BlockStrategy::Ilu0),
        other => Err(CliError::Input(format!(
            "unknown block strategy '{other}' (expected exact_lu|ilu0)"
        ))),
    }
}

pub fn parse_rounding(s: &str) -> Result<RoundingMode, CliError> {
    match s {
        "sweep" => Ok(RoundingMode::Sweep),
        "two_level" | "two-level" => Ok(RoundingMode::TwoLevel),
        "both" => Ok(RoundingMode::Both),
        other => Err(CliError::Input(format!(
            "unknown rounding mode '{other}' (expected sweep|two_level|both)"
        ))),
    }
}

fn parse_bool(s: &str) -> Result<bool, CliError> {
    match s {
        "true" | "1" | "on" | "yes" => Ok(true),
        "false" | "0" | "off" | "no" => Ok(false),
        other => Err(CliError::Input(format!("bad boolean value '{other}'"))),
    }
}

impl ConfigArgs {
    pub fn build(&self) -> Result<SolverConfig, CliError> {
        let mut cfg = SolverConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut cfg, path)?;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.pcg_tol {
            cfg.pcg_tol = v;
        }
        if let Some(v) = self.pcg_max_iter {
            cfg.pcg_max_iter = v;
        }
        if let Some(s) = &self.pcg_norm {
            cfg.pcg_norm = parse_norm(s)?;
        }
        if let Some(v) = self.blocks {
            cfg.block_count = v;
        }
        if let Some(s) = &self.strategy {
            cfg.block_strategy = parse_strategy(s)?;
        }
        if let Some(v) = self.warm_start {
            cfg.warm_start = v;
        }
        if let Some(v) = self.early_exit {
            cfg.early_exit = v;
        }
        if let Some(s) = &self.rounding {
            cfg.rounding = parse_rounding(s)?;
        }
        if let Some(v) = self.workers {
            cfg.worker_count = v;
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = self.balance_tol {
            cfg.balance_tolerance = v;
        }
        if let Some(v) = self.coarse_cap {
            cfg.coarse_size_cap = Some(v);
        }
        cfg.compute_oracle |= self.oracle;
        cfg.record_voltages |= self.record_voltages;
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn validate(cfg: &SolverConfig) -> Result<(), CliError> {
    if !(cfg.epsilon > 0.0) {
        return Err(CliError::Input("epsilon must be positive".into()));
    }
    if !(cfg.pcg_tol > 0.0) {
        return Err(CliError::Input("pcg_tol must be positive".into()));
    }
    if cfg.block_count == 0 {
        return Err(CliError::Input("blocks must be at least 1".into()));
    }
    if !(cfg.balance_tolerance >= 0.0) {
        return Err(CliError::Input("balance_tol must be non-negative".into()));
    }
    Ok(())
}

fn apply_config_file(cfg: &mut SolverConfig, path: &std::path::Path) -> Result<(), CliError> {
    let content = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    for (idx, raw) in content.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!(
                "config line {} is not key=value: '{raw}'",
                idx + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| CliError::Input(format!("config line {}: bad {what}", idx + 1));
        match key {
            "epsilon" => cfg.epsilon = value.parse().map_err(|_| bad("epsilon"))?,
            "iterations" => cfg.iterations = value.parse().map_err(|_| bad("iterations"))?,
            "pcg_tol" => cfg.pcg_tol = value.parse().map_err(|_| bad("pcg_tol"))?,
            "pcg_max_iter" => {
                cfg.pcg_max_iter = value.parse().map_err(|_| bad("pcg_max_iter"))?
            }
            "pcg_norm" => cfg.pcg_norm = parse_norm(value)?,
            "blocks" => cfg.block_count = value.parse().map_err(|_| bad("blocks"))?,
            "strategy" => cfg.block_strategy = parse_strategy(value)?,
            "warm_start" => cfg.warm_start = parse_bool(value)?,
            "early_exit" => cfg.early_exit = parse_bool(value)?,
            "rounding" => cfg.rounding = parse_rounding(value)?,
            "workers" => cfg.worker_count = value.parse().map_err(|_| bad("workers"))?,
            "seed" => cfg.rng_seed = value.parse().map_err(|_| bad("seed"))?,
            "balance_tol" => {
                cfg.balance_tolerance = value.parse().map_err(|_| bad("balance_tol"))?
            }
            "coarse_cap" => {
                cfg.coarse_size_cap = Some(value.parse().map_err(|_| bad("coarse_cap"))?)
            }
            "oracle" => cfg.compute_oracle = parse_bool(value)?,
            "record_voltages" => cfg.record_voltages = parse_bool(value)?,
            other => {
                return Err(CliError::Input(format!(
                    "config line {}: unknown key '{other}'",
                    idx + 1
                )))
            }
        }
    }
    Ok(())
}
