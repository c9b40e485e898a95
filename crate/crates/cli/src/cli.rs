use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{EngineKind, Format, Sector};

#[derive(Debug, Parser)]
#[command(name = "sparse-syk", version, about = "Traversable-wormhole teleportation in sparse SYK models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Peak signal across sparsities at fixed coupling.
    SweepSparsity(CommonArgs),
    /// Peak signal across coupling strengths.
    SweepMu(CommonArgs),
    /// Peak signal under dephasing, plus the critical rate per sparsity.
    NoiseGrid(CommonArgs),
    /// Entanglement and thermality of the prepared TFD states.
    TfdDiagnostics(CommonArgs),
    /// Mean adjacent gap ratio per sparsity.
    LevelSpacing(CommonArgs),
    /// Signal from Lanczos time evolution, without the dense doubled matrix.
    KrylovSignal(CommonArgs),
    /// CNOT counts per Trotter step.
    GateEstimate(CommonArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SweepSparsity,
    SweepMu,
    NoiseGrid,
    TfdDiagnostics,
    LevelSpacing,
    KrylovSignal,
    GateEstimate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepSparsity => "sweep-sparsity",
            Command::SweepMu => "sweep-mu",
            Command::NoiseGrid => "noise-grid",
            Command::TfdDiagnostics => "tfd-diagnostics",
            Command::LevelSpacing => "level-spacing",
            Command::KrylovSignal => "krylov-signal",
            Command::GateEstimate => "gate-estimate",
        }
    }
}

impl Sub {
    pub fn split(&self) -> (Command, &CommonArgs) {
        match self {
            Sub::SweepSparsity(a) => (Command::SweepSparsity, a),
            Sub::SweepMu(a) => (Command::SweepMu, a),
            Sub::NoiseGrid(a) => (Command::NoiseGrid, a),
            Sub::TfdDiagnostics(a) => (Command::TfdDiagnostics, a),
            Sub::LevelSpacing(a) => (Command::LevelSpacing, a),
            Sub::KrylovSignal(a) => (Command::KrylovSignal, a),
            Sub::GateEstimate(a) => (Command::GateEstimate, a),
        }
    }
}

/// Every flag is optional so that a config file can supply it instead.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// Majoranas per side (even, at least 4).
    #[arg(long)]
    pub n_majorana: Option<usize>,
    /// Inverse temperature of the TFD.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Coupling strength between the two sides; repeatable.
    #[arg(long)]
    pub mu: Vec<f64>,
    /// Fraction of couplings kept; repeatable.
    #[arg(long)]
    pub sparsity: Vec<f64>,
    /// Dephasing rate; repeatable.
    #[arg(long)]
    pub gamma: Vec<f64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    /// Realization r uses seed `seed_base + r`.
    #[arg(long)]
    pub seed_base: Option<u64>,
    #[arg(long)]
    pub time_max: Option<f64>,
    #[arg(long)]
    pub time_points: Option<usize>,
    #[arg(long)]
    pub krylov_dim: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineKind>,
    /// Sites averaged by the Krylov engine, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sites: Option<Vec<usize>>,
    /// Levels used by level-spacing.
    #[arg(long, value_enum)]
    pub sector: Option<Sector>,
    /// Output directory.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads.
    #[arg(long, short)]
    pub jobs: Option<usize>,
    /// TOML file with any of the above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write every signal trace under traces/.
    #[arg(long)]
    pub emit_traces: bool,
    /// Write whitespace-delimited tables for plotting.
    #[arg(long)]
    pub emit_plot_data: bool,
}
