mod cli;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use syk_wormhole::ensemble::{self, GroupBy, Observable, SweepOutcome, SweepSpec};
use syk_wormhole::spectral::{self, LevelSelection, ParitySector, SymmetryClass};
use syk_wormhole::syk;
use syk_wormhole::tfd::{self, Provenance, TfdDiagnostics};

use cli::{Cli, Command};
use config::{PartialConfig, RunConfig, Sector};
use output::{cell, OutputDir};

/// A failure with a stable machine-readable rendering on stderr.
#[derive(Debug)]
struct Failure {
    usage: bool,
    kind: &'static str,
    key: String,
    message: String,
}

impl Failure {
    fn usage(kind: &'static str, key: impl Into<String>, message: impl ToString) -> Self {
        Self { usage: true, kind, key: key.into(), message: message.to_string() }
    }

    fn compute(kind: &'static str, key: impl Into<String>, message: impl ToString) -> Self {
        Self { usage: false, kind, key: key.into(), message: message.to_string() }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::compute("io", "output", e)
}

fn report(level: &str, kind: &str, key: &str, message: &str) {
    eprintln!("{level} kind={kind} key={key:?} message={message:?}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            report("error", "usage", "arguments", &first);
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report("error", f.kind, &f.key, &f.message);
            ExitCode::from(if f.usage { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (command, args) = cli.command.split();
    let file = match &args.config {
        Some(path) => Some(PartialConfig::load(path).map_err(|e| Failure::usage("config", path.display().to_string(), e))?),
        None => None,
    };
    let cfg = RunConfig::resolve(command, file, args).map_err(|e| Failure::usage("config", "flags", e))?;

    match command {
        Command::GateEstimate => {
            // validate before creating any output
            let rows = gate_rows(&cfg)?;
            let mut out = OutputDir::create(&cfg).map_err(io)?;
            out.config(&cfg).map_err(io)?;
            write_gates(&mut out, &cfg, &rows)?;
            finish(&out);
            Ok(())
        }
        Command::LevelSpacing => {
            let spec = checked_spec(&cfg)?;
            let mut out = OutputDir::create(&cfg).map_err(io)?;
            out.config(&cfg).map_err(io)?;
            level_spacing(&mut out, &cfg, &spec)?;
            finish(&out);
            Ok(())
        }
        Command::TfdDiagnostics => {
            let spec = checked_spec(&cfg)?;
            let mut out = OutputDir::create(&cfg).map_err(io)?;
            out.config(&cfg).map_err(io)?;
            tfd_diagnostics(&mut out, &cfg, &spec)?;
            finish(&out);
            Ok(())
        }
        _ => {
            let spec = checked_spec(&cfg)?;
            let mut out = OutputDir::create(&cfg).map_err(io)?;
            out.config(&cfg).map_err(io)?;
            sweep(&mut out, &cfg, &spec, command)?;
            finish(&out);
            Ok(())
        }
    }
}

fn finish(out: &OutputDir) {
    println!("wrote {} files to {}", out.written().len(), out.root().display());
}

fn checked_spec(cfg: &RunConfig) -> Result<SweepSpec, Failure> {
    let spec = cfg.sweep_spec();
    spec.validate().map_err(|e| Failure::usage("invalid-spec", "config", e))?;
    Ok(spec)
}

fn run_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::compute("thread-pool", "jobs", e))?;
    Ok(pool.install(f))
}

fn seeds(spec: &SweepSpec) -> impl Iterator<Item = u64> + '_ {
    (0..spec.realizations as u64).map(move |r| spec.seed_base + r)
}

fn sweep(out: &mut OutputDir, cfg: &RunConfig, spec: &SweepSpec, command: Command) -> Result<(), Failure> {
    let outcome = if cfg.emit_traces {
        ensemble::run_sweep_with_traces(spec, cfg.jobs)
    } else {
        ensemble::run_sweep(spec, cfg.jobs)
    }
    .map_err(|e| Failure::compute("sweep", "spec", e))?;
    for f in &outcome.failures {
        report("warning", "realization-failed", &f.key.to_string(), &f.error);
    }
    if outcome.records.is_empty() {
        return Err(Failure::compute("all-failed", "sweep", format!("{} realizations failed", outcome.failures.len())));
    }
    let summary = ensemble::summarize(spec, &outcome).map_err(|e| Failure::compute("summary", "sweep", e))?;

    if cfg.format.csv() {
        out.csv("records.csv", &ensemble::records_csv(&outcome.records)).map_err(io)?;
    }
    if cfg.format.json() {
        out.json("records.json", &outcome.records).map_err(io)?;
    }
    out.json("summary.json", &summary).map_err(io)?;
    for (key, trace) in &outcome.traces {
        let name = format!("traces/p{}_mu{}_gamma{}_seed{}.csv", key.p, key.mu, key.gamma, key.seed);
        out.csv(&name, &trace.to_csv()).map_err(io)?;
    }

    if command == Command::NoiseGrid {
        let mut noise = String::from("p,mu,gamma,seed,peak_height,peak_time\n");
        for r in &outcome.records {
            noise.push_str(&format!("{},{},{},{},{},{}\n", r.p, r.mu, r.gamma, r.seed, r.peak_height, r.peak_time));
        }
        out.csv("noise.csv", &noise).map_err(io)?;
        let mut gs = String::from("p,mu,gamma_star\n");
        for g in &summary.analysis.gamma_star {
            gs.push_str(&format!("{},{},{}\n", g.p, g.mu, g.gamma_star.map(|x| x.to_string()).unwrap_or_default()));
        }
        out.csv("gamma_star.csv", &gs).map_err(io)?;
        for g in &summary.analysis.gamma_star {
            match g.gamma_star {
                Some(x) => println!("p={} mu={} gamma*={x:.4}", g.p, g.mu),
                None => println!("p={} mu={} gamma* not reached", g.p, g.mu),
            }
        }
    }

    for g in &summary.groups {
        println!(
            "p={} mu={} gamma={} peak={:.4} sem={} n={}",
            g.p,
            g.mu,
            g.gamma,
            g.mean,
            g.sem.map_or("-".into(), |s| format!("{s:.4}")),
            g.count
        );
    }
    if let Some(z) = summary.analysis.max_z {
        println!("max pairwise z = {z:.3}");
    }

    if cfg.emit_plot_data {
        sweep_plot_data(out, command, &summary, &outcome)?;
    }
    Ok(())
}

fn sweep_plot_data(
    out: &mut OutputDir,
    command: Command,
    summary: &ensemble::Summary,
    outcome: &SweepOutcome,
) -> Result<(), Failure> {
    if summary.groups.is_empty() {
        report("warning", "empty-summary", "plot-data", "no groups to plot");
        return Ok(());
    }
    let group_rows: Vec<Vec<String>> = summary
        .groups
        .iter()
        .map(|g| {
            vec![
                g.p.to_string(),
                g.mu.to_string(),
                g.gamma.to_string(),
                g.mean.to_string(),
                cell(g.sem),
                cell(g.std),
                g.count.to_string(),
            ]
        })
        .collect();
    let columns = ["p", "mu", "gamma", "mean_peak", "sem", "std", "count"];
    let name = match command {
        Command::SweepMu => "peak_vs_mu.dat",
        Command::NoiseGrid => "peak_vs_gamma.dat",
        _ => "signal_vs_sparsity.dat",
    };
    out.dat(name, &columns, &group_rows).map_err(io)?;

    if let Ok(r) = ensemble::aggregate(&outcome.records, GroupBy::Sparsity, Observable::MeanR) {
        let rows: Vec<Vec<String>> =
            r.iter().map(|a| vec![a.p.to_string(), a.mean.to_string(), cell(a.sem), a.count.to_string()]).collect();
        out.dat("r_vs_sparsity.dat", &["p", "mean_r", "sem", "count"], &rows).map_err(io)?;
    }

    let raw: Vec<Vec<String>> = outcome
        .records
        .iter()
        .map(|r| {
            vec![
                r.p.to_string(),
                r.mu.to_string(),
                r.gamma.to_string(),
                r.seed.to_string(),
                r.peak_height.to_string(),
                r.peak_time.to_string(),
            ]
        })
        .collect();
    out.dat("peaks_raw.dat", &["p", "mu", "gamma", "seed", "peak_height", "peak_time"], &raw).map_err(io)
}

#[derive(Serialize)]
struct SpacingRow {
    p: f64,
    seed: u64,
    mean_r: f64,
    n_ratios: usize,
    degenerate_pairs: usize,
}

#[derive(Serialize)]
struct SpacingGroup {
    p: f64,
    mean_r: f64,
    sem: Option<f64>,
    count: usize,
    class: String,
}

fn level_spacing(out: &mut OutputDir, cfg: &RunConfig, spec: &SweepSpec) -> Result<(), Failure> {
    let selection = match cfg.sector {
        Sector::Even => LevelSelection::Sector(ParitySector::Even),
        Sector::Odd => LevelSelection::Sector(ParitySector::Odd),
        Sector::Full => LevelSelection::FullSpectrum,
    };
    // mixing parity sectors hides level repulsion, so only label a single sector
    let declared = match cfg.sector {
        Sector::Full => None,
        _ => Some(SymmetryClass::for_syk(cfg.n_majorana)),
    };
    let keys: Vec<(f64, u64)> = spec.sparsities.iter().flat_map(|&p| seeds(spec).map(move |s| (p, s))).collect();
    let n = cfg.n_majorana;
    let results: Vec<Result<SpacingRow, Failure>> = run_pool(cfg.jobs, || {
        keys.par_iter()
            .map(|&(p, seed)| {
                let key = format!("p={p} seed={seed}");
                let c = syk::sample_couplings(n, p, seed).map_err(|e| Failure::compute("couplings", &key, e))?;
                let h = syk::build_single_side(&c).map_err(|e| Failure::compute("hamiltonian", &key, e))?;
                let g = spectral::level_spacing(&h, selection).map_err(|e| Failure::compute("spectrum", &key, e))?;
                Ok(SpacingRow { p, seed, mean_r: g.mean, n_ratios: g.n_ratios, degenerate_pairs: g.degenerate_pairs })
            })
            .collect()
    })?;
    let rows: Vec<SpacingRow> = results.into_iter().collect::<Result<_, _>>()?;

    let mut groups = Vec::new();
    for &p in &spec.sparsities {
        let vals: Vec<f64> = rows.iter().filter(|r| r.p == p).map(|r| r.mean_r).collect();
        let (mean, _, sem) = ensemble::describe(&vals).map_err(|e| Failure::compute("statistics", format!("p={p}"), e))?;
        let class = spectral::classify(mean, declared).map_err(|e| Failure::compute("classify", format!("p={p}"), e))?;
        println!("p={p} <r>={mean:.4} class={class}");
        groups.push(SpacingGroup { p, mean_r: mean, sem, count: vals.len(), class: class.to_string() });
    }
    for r in rows.iter().filter(|r| r.degenerate_pairs > 0) {
        report("warning", "degenerate-levels", &format!("p={} seed={}", r.p, r.seed), "exact zero spacings counted as r=1");
    }

    if cfg.format.csv() {
        let mut s = String::from("p,seed,mean_r,n_ratios,degenerate_pairs\n");
        for r in &rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.p, r.seed, r.mean_r, r.n_ratios, r.degenerate_pairs));
        }
        out.csv("level_spacing.csv", &s).map_err(io)?;
    }
    if cfg.format.json() {
        out.json("level_spacing.json", &rows).map_err(io)?;
    }
    out.json("summary.json", &groups).map_err(io)?;
    if cfg.emit_plot_data {
        let dat: Vec<Vec<String>> = groups
            .iter()
            .map(|g| vec![g.p.to_string(), g.mean_r.to_string(), cell(g.sem), g.count.to_string()])
            .collect();
        out.dat("r_vs_sparsity.dat", &["p", "mean_r", "sem", "count"], &dat).map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TfdGroup {
    p: f64,
    mean_s_over_smax: f64,
    mean_overlap_with_dense: Option<f64>,
    max_thermal_err: f64,
    count: usize,
}

fn tfd_diagnostics(out: &mut OutputDir, cfg: &RunConfig, spec: &SweepSpec) -> Result<(), Failure> {
    let n = cfg.n_majorana;
    let beta = cfg.beta;
    let prepare = |p: f64, seed: u64| -> Result<_, Failure> {
        let key = format!("p={p} seed={seed}");
        let c = syk::sample_couplings(n, p, seed).map_err(|e| Failure::compute("couplings", &key, e))?;
        let h = syk::build_single_side(&c).map_err(|e| Failure::compute("hamiltonian", &key, e))?;
        let spectrum = spectral::diagonalize(&h).map_err(|e| Failure::compute("spectrum", &key, e))?;
        let state = tfd::build_tfd(&spectrum, beta, Provenance { n_majorana: n, sparsity: p, seed })
            .map_err(|e| Failure::compute("tfd", &key, e))?;
        Ok((state, h))
    };
    let seed_list: Vec<u64> = seeds(spec).collect();
    let sparsities = spec.sparsities.clone();
    let results: Vec<Result<Vec<TfdDiagnostics>, Failure>> = run_pool(cfg.jobs, || {
        seed_list
            .par_iter()
            .map(|&seed| {
                // the all-to-all state with the same seed is the reference
                let (dense, _) = prepare(1.0, seed)?;
                sparsities
                    .iter()
                    .map(|&p| {
                        let (state, h) = prepare(p, seed)?;
                        tfd::diagnostics(&state, &h, Some(&dense))
                            .map_err(|e| Failure::compute("diagnostics", format!("p={p} seed={seed}"), e))
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut rows: Vec<TfdDiagnostics> = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| a.p.total_cmp(&b.p).reverse().then(a.seed.cmp(&b.seed)));

    let mut groups = Vec::new();
    for &p in &spec.sparsities {
        let g: Vec<&TfdDiagnostics> = rows.iter().filter(|r| r.p == p).collect();
        let count = g.len() as f64;
        let overlaps: Vec<f64> = g.iter().filter_map(|r| r.overlap_with_dense).collect();
        let group = TfdGroup {
            p,
            mean_s_over_smax: g.iter().map(|r| r.s_over_smax).sum::<f64>() / count,
            mean_overlap_with_dense: (!overlaps.is_empty())
                .then(|| overlaps.iter().sum::<f64>() / overlaps.len() as f64),
            max_thermal_err: g.iter().map(|r| r.thermal_err).fold(0.0, f64::max),
            count: g.len(),
        };
        println!(
            "p={p} S/Smax={:.4} overlap={} thermal_err={:.2e}",
            group.mean_s_over_smax,
            group.mean_overlap_with_dense.map_or("-".into(), |x| format!("{x:.4}")),
            group.max_thermal_err
        );
        groups.push(group);
    }

    if cfg.format.csv() {
        let mut s = String::from("p,seed,s_ent,s_over_smax,thermal_err,overlap_with_dense\n");
        for r in &rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.p,
                r.seed,
                r.s_ent,
                r.s_over_smax,
                r.thermal_err,
                r.overlap_with_dense.map(|x| x.to_string()).unwrap_or_default()
            ));
        }
        out.csv("tfd_diagnostics.csv", &s).map_err(io)?;
    }
    if cfg.format.json() {
        out.json("tfd_diagnostics.json", &rows).map_err(io)?;
    }
    out.json("summary.json", &groups).map_err(io)?;
    if cfg.emit_plot_data {
        let dat: Vec<Vec<String>> = groups
            .iter()
            .map(|g| {
                vec![g.p.to_string(), g.mean_s_over_smax.to_string(), cell(g.mean_overlap_with_dense), g.count.to_string()]
            })
            .collect();
        out.dat("entropy_vs_sparsity.dat", &["p", "s_over_smax", "overlap_with_dense", "count"], &dat).map_err(io)?;
    }
    Ok(())
}

fn gate_rows(cfg: &RunConfig) -> Result<Vec<ensemble::GateEstimate>, Failure> {
    cfg.sparsities
        .iter()
        .map(|&p| ensemble::gate_estimate(cfg.n_majorana, p).map_err(|e| Failure::usage("invalid-spec", format!("p={p}"), e)))
        .collect()
}

fn write_gates(out: &mut OutputDir, cfg: &RunConfig, rows: &[ensemble::GateEstimate]) -> Result<(), Failure> {
    for g in rows {
        println!("p={} terms={} cnots={} reduction={:.1}x", g.sparsity, g.terms, g.cnots, g.reduction);
    }
    if cfg.format.csv() {
        let mut s = String::from("n_majorana,sparsity,expected_terms,terms,cnots,dense_cnots,reduction\n");
        for g in rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                g.n_majorana, g.sparsity, g.expected_terms, g.terms, g.cnots, g.dense_cnots, g.reduction
            ));
        }
        out.csv("gate_estimates.csv", &s).map_err(io)?;
    }
    if cfg.format.json() {
        out.json("gate_estimates.json", &rows).map_err(io)?;
    }
    if cfg.emit_plot_data {
        let dat: Vec<Vec<String>> =
            rows.iter().map(|g| vec![g.sparsity.to_string(), g.cnots.to_string(), g.reduction.to_string()]).collect();
        out.dat("cnots_vs_sparsity.dat", &["p", "cnots", "reduction"], &dat).map_err(io)?;
    }
    Ok(())
}
