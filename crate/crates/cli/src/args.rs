use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "holonomy-lab", version, about = "Holonomies, geometric phases and isoholonomic bounds of sampled state curves")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Number of time samples (commands that build curves).
    #[arg(long = "n", global = true, value_parser = parse_samples)]
    pub samples: Option<usize>,
    /// Eigenvalue clustering tolerance.
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = parse_positive)]
    pub gap_tol: f64,
    /// Snapping tolerance for holonomy eigenphases near 0 and 2π.
    #[arg(long, global = true, default_value_t = 1e-7, value_parser = parse_positive)]
    pub phase_tol: f64,
    /// Output file (a directory for `synthesize`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Holonomy, lengths and isoholonomic inequalities of closed curves.
    Check(CheckArgs),
    /// Evolve a state under a Hamiltonian schedule and report the speed limit.
    Evolve(EvolveArgs),
    /// Horizontal lift of a curve.
    Lift(LiftArgs),
    /// Build and verify a closed evolution that saturates the isoholonomic bound.
    Synthesize(SynthesizeArgs),
    /// Analytic versus numeric values for the driven qubit.
    QubitDemo(QubitDemoArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Curve files.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Initial amplitude (defaults to the canonical amplitude of the first sample).
    #[arg(long)]
    pub amplitude: Option<PathBuf>,
    /// Spectral bound α, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Worker threads for several curve files.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Initial state file.
    #[arg(long)]
    pub state: PathBuf,
    /// Hamiltonian schedule file.
    #[arg(long)]
    pub hamiltonian: PathBuf,
    /// Where to write the speed-limit report (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    /// Curve file.
    pub curve: PathBuf,
    /// Initial amplitude (defaults to the canonical amplitude of the first sample).
    #[arg(long)]
    pub amplitude: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Base state file.
    #[arg(long)]
    pub state: PathBuf,
    /// Target holonomy file (r x r); a random target from `--seed` when omitted.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Period.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub tau: f64,
    /// Ambient dimension (at least twice the rank).
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct QubitDemoArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub n3: f64,
    #[arg(long, default_value_t = 2.0 * std::f64::consts::PI, value_parser = parse_positive)]
    pub omega: f64,
    #[arg(long, default_value_t = 0.7)]
    pub p0: f64,
    /// Emit the table as CSV instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not a positive number"))
    }
}

fn parse_samples(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 2 {
        Ok(v)
    } else {
        Err("at least 2 samples are required".into())
    }
}
