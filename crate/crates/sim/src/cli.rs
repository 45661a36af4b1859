//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::run::{run, ModeReport};

#[derive(Debug, Parser)]
#[command(name = "nestlat", version, about = "Nested lattice code experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive and sampled checks of the code-ensemble lemmas.
    Verify(Flags),
    /// Gelfand-Pinsker rate sweep.
    Gp(Flags),
    /// Wyner-Ziv rate sweep.
    Wz(Flags),
    /// Typicality exponent estimation.
    Exponent(Flags),
    /// Quantization refinement and clipping sweeps.
    Quantize(Flags),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Flags {
    /// Key-value configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Trials per point (samples per block length for `exponent`).
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
}

impl Command {
    fn parts(&self) -> (Mode, &Flags) {
        match self {
            Command::Verify(f) => (Mode::Verify, f),
            Command::Gp(f) => (Mode::Gp, f),
            Command::Wz(f) => (Mode::Wz, f),
            Command::Exponent(f) => (Mode::Exponent, f),
            Command::Quantize(f) => (Mode::Quantize, f),
        }
    }
}

/// The configuration a command line asks for: the file (or the mode's
/// defaults) with the flags applied on top.
pub fn resolve(mode: Mode, flags: &Flags) -> Result<ExperimentConfig, String> {
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::parse(&text, mode).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentConfig::defaults(mode),
    };
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = flags.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &flags.out {
        cfg.out = out.clone();
    }
    if let Some(workers) = flags.workers {
        cfg.workers = Some(workers);
    }
    cfg.validate().map_err(|e: ConfigError| e.to_string())?;
    Ok(cfg)
}

fn summary(report: &ModeReport) -> String {
    match report {
        ModeReport::Verify(reports) => {
            let failed = reports.iter().filter(|r| !r.verdict.passed()).count();
            format!("{} lemma checks, {failed} failed", reports.len())
        }
        ModeReport::Sweep(s) => s
            .rows
            .iter()
            .map(|r| {
                format!(
                    "n={} k={} l={} encoder_failure={:.4} error={:.4} mean={:.4}",
                    r.n,
                    r.k,
                    r.l,
                    r.encoder_failure_rate(),
                    r.error_rate(),
                    r.metric_mean
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
        ModeReport::Exponent { divergence, tables } => {
            let mut lines = vec![format!("divergence {divergence:.6} bits")];
            for (eps, rows) in tables {
                let cells: Vec<String> = rows.iter().map(|r| format!("n={} {:.4}", r.n, r.exponent)).collect();
                lines.push(format!("eps={eps}: {}", cells.join("  ")));
            }
            lines.join("\n")
        }
        ModeReport::Quantize { reference_mi, refinement, clipping } => {
            let mut lines = vec![format!("reference I = {reference_mi:.6} bits")];
            lines.extend(refinement.iter().map(|s| format!("step {} p={} I={:.6}", s.step, s.p, s.mi_bits)));
            lines.extend(clipping.iter().map(|(l, i)| format!("clip {l} I={i:.6}")));
            lines.join("\n")
        }
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn execute(cli: &Cli) -> i32 {
    let (mode, flags) = cli.command.parts();
    let cfg = match resolve(mode, flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", summary(&outcome.report));
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for f in &outcome.failures {
                eprintln!("verification failure: {f}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
