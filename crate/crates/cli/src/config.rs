//! Run configuration: per-command defaults, an optional TOML file, then
//! command-line flags, in increasing precedence.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use syk_wormhole::ensemble::{Engine, GridSpec, SweepSpec};
use syk_wormhole::krylov::{even_sites, DEFAULT_KRYLOV_DIM};

use crate::cli::{Command, CommonArgs};

pub const NINE_SPARSITIES: [f64; 9] = [1.0, 0.5, 0.3, 0.2, 0.1, 0.07, 0.05, 0.03, 0.02];
pub const MU_SWEEP: [f64; 8] = [0.02, 0.05, 0.08, 0.10, 0.15, 0.20, 0.30, 0.50];
pub const NOISE_RATES: [f64; 6] = [0.0, 0.001, 0.003, 0.01, 0.03, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Exact,
    Krylov,
    Lindblad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    Even,
    Odd,
    Full,
}

/// Fully resolved configuration; what gets written next to the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub n_majorana: usize,
    pub beta: f64,
    pub mus: Vec<f64>,
    pub sparsities: Vec<f64>,
    pub gammas: Vec<f64>,
    pub realizations: usize,
    pub seed_base: u64,
    pub time_max: f64,
    pub time_points: usize,
    pub krylov_dim: usize,
    pub engine: EngineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<usize>>,
    pub sector: Sector,
    pub output: PathBuf,
    pub format: Format,
    pub jobs: usize,
    pub emit_traces: bool,
    pub emit_plot_data: bool,
}

/// Same fields, all optional: the shape of a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub command: Option<String>,
    pub n_majorana: Option<usize>,
    pub beta: Option<f64>,
    pub mus: Option<Vec<f64>>,
    pub sparsities: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed_base: Option<u64>,
    pub time_max: Option<f64>,
    pub time_points: Option<usize>,
    pub krylov_dim: Option<usize>,
    pub engine: Option<EngineKind>,
    pub sites: Option<Vec<usize>>,
    pub sector: Option<Sector>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub emit_traces: Option<bool>,
    pub emit_plot_data: Option<bool>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Fields set in `other` win.
    fn overlay(self, other: PartialConfig) -> PartialConfig {
        macro_rules! pick {
            ($($f:ident),*) => { PartialConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            command, n_majorana, beta, mus, sparsities, gammas, realizations, seed_base, time_max, time_points,
            krylov_dim, engine, sites, sector, output, format, jobs, emit_traces, emit_plot_data
        )
    }
}

fn flags(args: &CommonArgs) -> PartialConfig {
    let non_empty = |v: &Vec<f64>| (!v.is_empty()).then(|| v.clone());
    PartialConfig {
        command: None,
        n_majorana: args.n_majorana,
        beta: args.beta,
        mus: non_empty(&args.mu),
        sparsities: non_empty(&args.sparsity),
        gammas: non_empty(&args.gamma),
        realizations: args.realizations,
        seed_base: args.seed_base,
        time_max: args.time_max,
        time_points: args.time_points,
        krylov_dim: args.krylov_dim,
        engine: args.engine,
        sites: args.sites.clone(),
        sector: args.sector,
        output: args.output.clone(),
        format: args.format,
        jobs: args.jobs,
        emit_traces: args.emit_traces.then_some(true),
        emit_plot_data: args.emit_plot_data.then_some(true),
    }
}

fn available_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Per-command defaults at the fiducial point `N = 10, β = 8, μ = 0.1`.
fn defaults(command: Command) -> RunConfig {
    let base = RunConfig {
        command: command.name().to_string(),
        n_majorana: 10,
        beta: 8.0,
        mus: vec![0.1],
        sparsities: vec![1.0],
        gammas: vec![0.0],
        realizations: 50,
        seed_base: 0,
        time_max: 30.0,
        time_points: 120,
        krylov_dim: DEFAULT_KRYLOV_DIM,
        engine: EngineKind::Exact,
        sites: None,
        sector: Sector::Even,
        output: PathBuf::from("results"),
        format: Format::Both,
        jobs: available_jobs(),
        emit_traces: false,
        emit_plot_data: false,
    };
    match command {
        Command::SweepSparsity => RunConfig { sparsities: NINE_SPARSITIES.to_vec(), ..base },
        Command::SweepMu => RunConfig { sparsities: vec![1.0, 0.1, 0.05], mus: MU_SWEEP.to_vec(), ..base },
        Command::NoiseGrid => RunConfig {
            n_majorana: 8,
            sparsities: vec![1.0, 0.3, 0.1, 0.05],
            gammas: NOISE_RATES.to_vec(),
            realizations: 30,
            time_points: 80,
            engine: EngineKind::Lindblad,
            ..base
        },
        Command::TfdDiagnostics => {
            RunConfig { sparsities: vec![1.0, 0.5, 0.3, 0.1, 0.05, 0.02], realizations: 30, ..base }
        }
        Command::LevelSpacing => RunConfig { sparsities: NINE_SPARSITIES.to_vec(), ..base },
        Command::KrylovSignal => RunConfig { engine: EngineKind::Krylov, realizations: 1, ..base },
        Command::GateEstimate => RunConfig { sparsities: NINE_SPARSITIES.to_vec(), ..base },
    }
}

impl RunConfig {
    /// Defaults, then `file`, then `args`.
    pub fn resolve(command: Command, file: Option<PartialConfig>, args: &CommonArgs) -> Result<Self, String> {
        let layered = file.unwrap_or_default().overlay(flags(args));
        let d = defaults(command);
        let mut cfg = RunConfig {
            command: d.command,
            n_majorana: layered.n_majorana.unwrap_or(d.n_majorana),
            beta: layered.beta.unwrap_or(d.beta),
            mus: layered.mus.unwrap_or(d.mus),
            sparsities: layered.sparsities.unwrap_or(d.sparsities),
            gammas: layered.gammas.unwrap_or(d.gammas),
            realizations: layered.realizations.unwrap_or(d.realizations),
            seed_base: layered.seed_base.unwrap_or(d.seed_base),
            time_max: layered.time_max.unwrap_or(d.time_max),
            time_points: layered.time_points.unwrap_or(d.time_points),
            krylov_dim: layered.krylov_dim.unwrap_or(d.krylov_dim),
            engine: layered.engine.unwrap_or(d.engine),
            sites: layered.sites.or(d.sites),
            sector: layered.sector.unwrap_or(d.sector),
            output: layered.output.unwrap_or(d.output),
            format: layered.format.unwrap_or(d.format),
            jobs: layered.jobs.unwrap_or(d.jobs),
            emit_traces: layered.emit_traces.unwrap_or(d.emit_traces),
            emit_plot_data: layered.emit_plot_data.unwrap_or(d.emit_plot_data),
        };
        match command {
            Command::NoiseGrid => cfg.engine = EngineKind::Lindblad,
            Command::KrylovSignal => cfg.engine = EngineKind::Krylov,
            _ => {}
        }
        if cfg.engine == EngineKind::Krylov && cfg.sites.is_none() && cfg.n_majorana > 10 {
            cfg.sites = Some(even_sites(cfg.n_majorana));
        }
        if cfg.jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        Ok(cfg)
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        let engine = match self.engine {
            EngineKind::Exact => Engine::Exact,
            EngineKind::Krylov => Engine::Krylov { krylov_dim: self.krylov_dim, sites: self.sites.clone() },
            EngineKind::Lindblad => Engine::Lindblad,
        };
        SweepSpec {
            n_majorana: self.n_majorana,
            beta: self.beta,
            sparsities: self.sparsities.clone(),
            mus: self.mus.clone(),
            gammas: self.gammas.clone(),
            realizations: self.realizations,
            seed_base: self.seed_base,
            grid: GridSpec { t_max: self.time_max, points: self.time_points },
            engine,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    #[cfg(test)]
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// SHA-256 of the serialized configuration, in hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One-line provenance header, without a comment marker.
    pub fn manifest(&self) -> String {
        format!(
            "syk-wormhole {} command {} config-sha256 {} seed-base {}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.hash(),
            self.seed_base
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_preserves_everything() {
        let mut cfg = defaults(Command::NoiseGrid);
        cfg.sites = Some(vec![0, 2, 4]);
        cfg.jobs = 3;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = PartialConfig::from_toml("beta = 4.0\nrealizations = 7\nmus = [0.2, 0.3]\n").unwrap();
        let args = CommonArgs { realizations: Some(9), ..Default::default() };
        let cfg = RunConfig::resolve(Command::SweepSparsity, Some(file), &args).unwrap();
        assert_eq!(cfg.beta, 4.0);
        assert_eq!(cfg.realizations, 9);
        assert_eq!(cfg.mus, vec![0.2, 0.3]);
        assert_eq!(cfg.sparsities, NINE_SPARSITIES.to_vec());
        assert_eq!(cfg.n_majorana, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PartialConfig::from_toml("betta = 1.0").is_err());
    }

    #[test]
    fn command_forces_engine() {
        let args = CommonArgs { engine: Some(EngineKind::Exact), ..Default::default() };
        let cfg = RunConfig::resolve(Command::NoiseGrid, None, &args).unwrap();
        assert_eq!(cfg.engine, EngineKind::Lindblad);
    }

    #[test]
    fn hash_tracks_content() {
        let a = defaults(Command::SweepMu);
        let b = RunConfig { seed_base: 1, ..a.clone() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
