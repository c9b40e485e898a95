//! Disorder-ensemble sweeps over `(p, μ, γ, seed)` and the statistics built
//! on top of them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{self, MatrixFreeHamiltonian};
use crate::lindblad::{self, NoiseConfig};
use crate::spectral::{self, LevelSelection, ParitySector};
use crate::syk::{self, BuildMode};
use crate::tfd::{self, Provenance};
use crate::transmission::{self, SignalTrace, TimeGrid};

/// Two-qubit gates charged per retained four-Majorana term in one Trotter
/// step; fixes the dense `N = 10` circuit at 1260 CNOTs.
pub const CNOTS_PER_TERM: u64 = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Engine {
    Exact,
    Krylov { krylov_dim: usize, sites: Option<Vec<usize>> },
    Lindblad,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::linspace(self.t_max, self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_majorana: usize,
    pub beta: f64,
    pub sparsities: Vec<f64>,
    pub mus: Vec<f64>,
    /// Ignored (treated as `[0]`) unless the engine is Lindblad.
    pub gammas: Vec<f64>,
    pub realizations: usize,
    pub seed_base: u64,
    pub grid: GridSpec,
    pub engine: Engine,
}

impl SweepSpec {
    /// Checks every precondition before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.n_majorana < 4 || self.n_majorana % 2 != 0 {
            return Err(Error::InvalidMajoranaCount(self.n_majorana));
        }
        if self.sparsities.is_empty() {
            return Err(Error::Empty("sparsities"));
        }
        if self.mus.is_empty() {
            return Err(Error::Empty("mus"));
        }
        if self.realizations == 0 {
            return Err(Error::Empty("realizations"));
        }
        if let Some(&p) = self.sparsities.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::InvalidSparsity(p));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::NegativeBeta(self.beta));
        }
        if self.mus.iter().any(|m| !m.is_finite()) {
            return Err(Error::Invalid("coupling strengths must be finite".into()));
        }
        self.grid.build()?;
        match &self.engine {
            Engine::Exact if self.n_majorana > syk::MAX_DENSE_DOUBLED_N => {
                return Err(Error::DenseTooLarge(self.n_majorana))
            }
            Engine::Lindblad => {
                if self.n_majorana > lindblad::MAX_LINDBLAD_QUBITS {
                    return Err(Error::DenseTooLarge(self.n_majorana));
                }
                if self.gammas.is_empty() {
                    return Err(Error::Empty("gammas"));
                }
                for &g in &self.gammas {
                    NoiseConfig::new(g)?;
                }
            }
            Engine::Krylov { krylov_dim, sites } => {
                let d = 1usize << self.n_majorana;
                if *krylov_dim < 2 || *krylov_dim > d {
                    return Err(Error::KrylovDimension { m: *krylov_dim, dim: d });
                }
                if let Some(s) = sites {
                    if s.is_empty() {
                        return Err(Error::Empty("sites"));
                    }
                    if let Some(&j) = s.iter().find(|&&j| j >= self.n_majorana) {
                        return Err(Error::MajoranaIndex { index: j, n_qubits: self.n_majorana });
                    }
                }
            }
            Engine::Exact => {}
        }
        Ok(())
    }

    /// The γ values actually swept: `[0]` for unitary engines.
    pub fn effective_gammas(&self) -> Vec<f64> {
        match self.engine {
            Engine::Lindblad => self.gammas.clone(),
            _ => vec![0.0],
        }
    }

    /// Every `(p, μ, γ, seed)` tuple, in canonical order.
    pub fn keys(&self) -> Vec<RecordKey> {
        let gammas = self.effective_gammas();
        let mut keys = Vec::new();
        for &p in &self.sparsities {
            for &mu in &self.mus {
                for &gamma in &gammas {
                    for r in 0..self.realizations as u64 {
                        keys.push(RecordKey { p, mu, gamma, seed: self.seed_base + r });
                    }
                }
            }
        }
        keys.sort_by(RecordKey::cmp);
        keys.dedup_by(|a, b| a.cmp(b).is_eq());
        keys
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordKey {
    pub p: f64,
    pub mu: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl RecordKey {
    /// Total order by `(p, μ, γ, seed)`.
    pub fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.p
            .total_cmp(&other.p)
            .then(self.mu.total_cmp(&other.mu))
            .then(self.gamma.total_cmp(&other.gamma))
            .then(self.seed.cmp(&other.seed))
    }
}

impl std::fmt::Display for RecordKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p={} mu={} gamma={} seed={}", self.p, self.mu, self.gamma, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub p: f64,
    pub mu: f64,
    pub gamma: f64,
    pub seed: u64,
    pub peak_height: f64,
    pub peak_time: f64,
    pub fwhm: Option<f64>,
    pub mean_r: Option<f64>,
    pub s_ent: Option<f64>,
}

impl EnsembleRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey { p: self.p, mu: self.mu, gamma: self.gamma, seed: self.seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedRealization {
    pub key: RecordKey,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<EnsembleRecord>,
    pub failures: Vec<FailedRealization>,
    /// Only filled by [`run_sweep_with_traces`].
    pub traces: Vec<(RecordKey, SignalTrace)>,
}

/// Runs one realization: couplings, single-side spectrum, TFD, then the
/// engine's signal.
pub fn run_realization(spec: &SweepSpec, key: RecordKey) -> Result<EnsembleRecord> {
    realize(spec, key).map(|(r, _)| r)
}

/// As [`run_realization`], also returning the sampled signal.
pub fn realize(spec: &SweepSpec, key: RecordKey) -> Result<(EnsembleRecord, SignalTrace)> {
    let n = spec.n_majorana;
    let c = syk::sample_couplings(n, key.p, key.seed)?;
    let mode = match spec.engine {
        Engine::Krylov { .. } => BuildMode::MatrixFree,
        _ => BuildMode::Dense,
    };
    let sys = syk::build_doubled(&c, key.mu, mode)?;
    let single = spectral::diagonalize(sys.h_single())?;
    let mean_r = spectral::level_spacing(sys.h_single(), LevelSelection::Sector(ParitySector::Even))
        .ok()
        .map(|g| g.mean);
    let prov = Provenance { n_majorana: n, sparsity: key.p, seed: key.seed };
    let state = tfd::build_tfd(&single, spec.beta, prov)?;
    let s_ent = tfd::entanglement_entropy(&state)?;
    let grid = spec.grid.build()?;
    let trace = match &spec.engine {
        Engine::Exact => transmission::signal_exact(&sys, &state, &grid)?,
        Engine::Krylov { krylov_dim, sites } => {
            let sites = sites.clone().unwrap_or_else(|| (0..n).collect());
            let h = MatrixFreeHamiltonian::from_system(&sys);
            krylov::signal_krylov(&h, &state, &sites, &grid, *krylov_dim)?.trace
        }
        Engine::Lindblad => lindblad::noisy_signal(&sys, &state, NoiseConfig::new(key.gamma)?, &grid)?,
    };
    let record = EnsembleRecord {
        p: key.p,
        mu: key.mu,
        gamma: key.gamma,
        seed: key.seed,
        peak_height: trace.peak_height,
        peak_time: trace.peak_time,
        fwhm: trace.fwhm,
        mean_r,
        s_ent: Some(s_ent),
    };
    Ok((record, trace))
}

/// Runs every tuple on a pool of `jobs` threads. Output is sorted by key,
/// so it does not depend on completion order.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepOutcome> {
    sweep(spec, jobs, false)
}

/// As [`run_sweep`], keeping every signal trace.
pub fn run_sweep_with_traces(spec: &SweepSpec, jobs: usize) -> Result<SweepOutcome> {
    sweep(spec, jobs, true)
}

fn sweep(spec: &SweepSpec, jobs: usize, keep_traces: bool) -> Result<SweepOutcome> {
    spec.validate()?;
    let keys = spec.keys();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let results: Vec<(RecordKey, Result<(EnsembleRecord, SignalTrace)>)> =
        pool.install(|| keys.par_iter().map(|&k| (k, realize(spec, k))).collect());
    let mut out = SweepOutcome::default();
    for (key, r) in results {
        match r {
            Ok((rec, trace)) => {
                out.records.push(rec);
                if keep_traces {
                    out.traces.push((key, trace));
                }
            }
            Err(e) => out.failures.push(FailedRealization { key, error: e.to_string() }),
        }
    }
    out.records.sort_by(|a, b| a.key().cmp(&b.key()));
    out.traces.sort_by(|a, b| a.0.cmp(&b.0));
    out.failures.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PeakHeight,
    PeakTime,
    Fwhm,
    MeanR,
    SEnt,
}

impl Observable {
    pub fn of(self, r: &EnsembleRecord) -> Option<f64> {
        match self {
            Observable::PeakHeight => Some(r.peak_height),
            Observable::PeakTime => Some(r.peak_time),
            Observable::Fwhm => r.fwhm,
            Observable::MeanR => r.mean_r,
            Observable::SEnt => r.s_ent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupBy {
    /// `(p, μ, γ)`.
    Parameters,
    Sparsity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub p: f64,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub mean: f64,
    /// `None` for a single sample.
    pub std: Option<f64>,
    pub sem: Option<f64>,
    pub count: usize,
}

/// Mean, sample standard deviation and standard error of `values`.
pub fn describe(values: &[f64]) -> Result<(f64, Option<f64>, Option<f64>)> {
    if values.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, None, None));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok((mean, Some(std), Some(std / n.sqrt())))
}

/// Groups records, skipping those where `observable` was not measured.
pub fn aggregate(records: &[EnsembleRecord], group_by: GroupBy, observable: Observable) -> Result<Vec<AggregateStats>> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    type Key = (u64, u64, u64);
    let fkey = |x: f64| x.to_bits() ^ (1 << 63);
    let mut groups: BTreeMap<Key, (RecordKey, Vec<(u64, f64)>)> = BTreeMap::new();
    for r in records {
        let Some(v) = observable.of(r) else { continue };
        let k = match group_by {
            GroupBy::Parameters => (fkey(r.p), fkey(r.mu), fkey(r.gamma)),
            GroupBy::Sparsity => (fkey(r.p), 0, 0),
        };
        groups.entry(k).or_insert_with(|| (r.key(), Vec::new())).1.push((r.seed, v));
    }
    let mut out: Vec<AggregateStats> = groups
        .into_values()
        .map(|(k, mut vals)| {
            // sum in seed order regardless of arrival order
            vals.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let v: Vec<f64> = vals.into_iter().map(|x| x.1).collect();
            let (mean, std, sem) = describe(&v)?;
            let (mu, gamma) = match group_by {
                GroupBy::Parameters => (Some(k.mu), Some(k.gamma)),
                GroupBy::Sparsity => (None, None),
            };
            Ok(AggregateStats { p: k.p, mu, gamma, mean, std, sem, count: v.len() })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| {
        a.p.total_cmp(&b.p)
            .then(a.mu.unwrap_or(0.0).total_cmp(&b.mu.unwrap_or(0.0)))
            .then(a.gamma.unwrap_or(0.0).total_cmp(&b.gamma.unwrap_or(0.0)))
    });
    Ok(out)
}

/// `|m_a - m_b| / √(sem_a² + sem_b²)`.
pub fn z_score(a: &AggregateStats, b: &AggregateStats) -> Result<f64> {
    let (Some(sa), Some(sb)) = (a.sem, b.sem) else {
        return Err(Error::Undefined("standard error of a single-sample group"));
    };
    z_from(a.mean, sa, b.mean, sb)
}

pub fn z_from(mean_a: f64, sem_a: f64, mean_b: f64, sem_b: f64) -> Result<f64> {
    let denom = (sem_a * sem_a + sem_b * sem_b).sqrt();
    let diff = (mean_a - mean_b).abs();
    if denom == 0.0 {
        return if diff == 0.0 { Ok(0.0) } else { Err(Error::Undefined("z-score with zero standard errors")) };
    }
    Ok(diff / denom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseZ {
    pub a: usize,
    pub b: usize,
    pub z: f64,
}

/// Every pairwise z-score between groups with a defined standard error.
pub fn pairwise_z(stats: &[AggregateStats]) -> Vec<PairwiseZ> {
    let mut out = Vec::new();
    for i in 0..stats.len() {
        for j in i + 1..stats.len() {
            if let Ok(z) = z_score(&stats[i], &stats[j]) {
                out.push(PairwiseZ { a: i, b: j, z });
            }
        }
    }
    out
}

pub fn max_pairwise_z(stats: &[AggregateStats]) -> Option<f64> {
    pairwise_z(stats).into_iter().map(|p| p.z).reduce(f64::max)
}

/// Least-squares slope of `ln σ` against `ln p`.
pub fn powerlaw_fit(sparsities: &[f64], stds: &[f64]) -> Result<f64> {
    if sparsities.len() != stds.len() {
        return Err(Error::DimensionMismatch { expected: sparsities.len(), found: stds.len() });
    }
    if stds.len() < 3 {
        return Err(Error::TooFewLevels(stds.len()));
    }
    if let Some(&bad) = sparsities.iter().chain(stds).find(|&&v| !(v > 0.0)) {
        return Err(Error::Invalid(format!("power-law fit needs positive inputs, got {bad}")));
    }
    let x: Vec<f64> = sparsities.iter().map(|p| p.ln()).collect();
    let y: Vec<f64> = stds.iter().map(|s| s.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("power-law fit needs at least two distinct sparsities".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// `σ₂ / σ₁` of a mean-peak matrix (rows: μ, columns: γ).
pub fn factorization_residual(matrix: &[Vec<f64>]) -> Result<f64> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, |r| r.len());
    if rows < 2 || cols < 2 {
        return Err(Error::Invalid(format!("factorization needs at least a 2x2 matrix, got {rows}x{cols}")));
    }
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::Invalid("ragged peak matrix".into()));
    }
    let m = faer::Mat::<f64>::from_fn(rows, cols, |i, j| matrix[i][j]);
    let sv = m.singular_values().map_err(|_| Error::EigenFailure)?;
    let s1 = sv[0];
    if s1 == 0.0 {
        return Err(Error::Undefined("factorization residual of a zero matrix"));
    }
    Ok(sv[1] / s1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateEstimate {
    pub n_majorana: usize,
    pub sparsity: f64,
    /// `p · C(N, 4)` before rounding.
    pub expected_terms: f64,
    pub terms: u64,
    pub cnots: u64,
    pub dense_cnots: u64,
    pub reduction: f64,
}

/// Per-Trotter-step CNOT count for the retained terms. The retained count
/// is rounded to the nearest integer and kept at least one.
pub fn gate_estimate(n_majorana: usize, sparsity: f64) -> Result<GateEstimate> {
    if n_majorana < 4 || n_majorana % 2 != 0 {
        return Err(Error::InvalidMajoranaCount(n_majorana));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::InvalidSparsity(sparsity));
    }
    let total = syk::binomial(n_majorana, 4);
    let expected_terms = sparsity * total as f64;
    let terms = (expected_terms.round() as u64).max(1);
    let cnots = terms * CNOTS_PER_TERM;
    let dense_cnots = total * CNOTS_PER_TERM;
    Ok(GateEstimate {
        n_majorana,
        sparsity,
        expected_terms,
        terms,
        cnots,
        dense_cnots,
        reduction: dense_cnots as f64 / cnots as f64,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RECORDS_HEADER: &str = "p,mu,gamma,seed,peak_height,peak_time,fwhm,mean_r,s_ent";

/// Records CSV; unmeasured observables are empty fields.
pub fn records_csv(records: &[EnsembleRecord]) -> String {
    let mut s = String::from(RECORDS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.p,
            r.mu,
            r.gamma,
            r.seed,
            r.peak_height,
            r.peak_time,
            opt(r.fwhm),
            opt(r.mean_r),
            opt(r.s_ent)
        ));
    }
    s
}

/// Parses [`records_csv`] output; lines starting with `#` are skipped.
pub fn parse_records_csv(text: &str) -> Result<Vec<EnsembleRecord>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == RECORDS_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected records header {other:?}"))),
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
    let optnum = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!("expected 9 fields: {l}")));
            }
            Ok(EnsembleRecord {
                p: num(f[0])?,
                mu: num(f[1])?,
                gamma: num(f[2])?,
                seed: f[3].parse().map_err(|e| Error::Parse(format!("{:?}: {e}", f[3])))?,
                peak_height: num(f[4])?,
                peak_time: num(f[5])?,
                fwhm: optnum(f[6])?,
                mean_r: optnum(f[7])?,
                s_ent: optnum(f[8])?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub p: f64,
    pub mu: f64,
    pub gamma: f64,
    pub mean: f64,
    pub sem: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    /// Slope of peak-height std against `p`, over all μ and γ pooled per `p`.
    pub powerlaw_exponent: Option<f64>,
    pub factorization_residual: Option<f64>,
    pub z_scores: Vec<PairwiseZ>,
    pub max_z: Option<f64>,
    pub gate_estimates: Vec<GateEstimate>,
    /// Critical dephasing rate per sparsity and μ (Lindblad sweeps only).
    pub gamma_star: Vec<GammaStar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStar {
    pub p: f64,
    pub mu: f64,
    pub gamma_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_majorana: usize,
    pub groups: Vec<GroupSummary>,
    pub failures: Vec<FailedRealization>,
    pub analysis: Analysis,
}

/// Peak-height statistics per `(p, μ, γ)` plus every derived analysis
/// that the data support.
pub fn summarize(spec: &SweepSpec, outcome: &SweepOutcome) -> Result<Summary> {
    let groups: Vec<GroupSummary> = if outcome.records.is_empty() {
        Vec::new()
    } else {
        aggregate(&outcome.records, GroupBy::Parameters, Observable::PeakHeight)?
            .into_iter()
            .map(|a| GroupSummary {
                p: a.p,
                mu: a.mu.unwrap_or(0.0),
                gamma: a.gamma.unwrap_or(0.0),
                mean: a.mean,
                sem: a.sem,
                std: a.std,
                count: a.count,
            })
            .collect()
    };
    let as_stats: Vec<AggregateStats> = groups
        .iter()
        .map(|g| AggregateStats {
            p: g.p,
            mu: Some(g.mu),
            gamma: Some(g.gamma),
            mean: g.mean,
            std: g.std,
            sem: g.sem,
            count: g.count,
        })
        .collect();

    let by_p = if outcome.records.is_empty() {
        Vec::new()
    } else {
        aggregate(&outcome.records, GroupBy::Sparsity, Observable::PeakHeight)?
    };
    let with_std: Vec<(f64, f64)> = by_p.iter().filter_map(|a| a.std.filter(|s| *s > 0.0).map(|s| (a.p, s))).collect();
    let powerlaw_exponent = if with_std.len() >= 3 {
        let (ps, ss): (Vec<f64>, Vec<f64>) = with_std.into_iter().unzip();
        powerlaw_fit(&ps, &ss).ok()
    } else {
        None
    };

    // z-scores compare sparsities at equal (μ, γ)
    let mut z_scores = Vec::new();
    for i in 0..as_stats.len() {
        for j in i + 1..as_stats.len() {
            let (a, b) = (&as_stats[i], &as_stats[j]);
            if a.mu == b.mu && a.gamma == b.gamma {
                if let Ok(z) = z_score(a, b) {
                    z_scores.push(PairwiseZ { a: i, b: j, z });
                }
            }
        }
    }
    let max_z = z_scores.iter().map(|p| p.z).reduce(f64::max);

    let gammas = spec.effective_gammas();
    let factorization_residual = if spec.mus.len() >= 2 && gammas.len() >= 2 && spec.sparsities.len() == 1 {
        let lookup = |mu: f64, g: f64| groups.iter().find(|x| x.mu == mu && x.gamma == g).map(|x| x.mean);
        let matrix: Option<Vec<Vec<f64>>> =
            spec.mus.iter().map(|&mu| gammas.iter().map(|&g| lookup(mu, g)).collect()).collect();
        matrix.and_then(|m| factorization_residual(&m).ok())
    } else {
        None
    };

    let mut gamma_star = Vec::new();
    if matches!(spec.engine, Engine::Lindblad) && gammas.first() == Some(&0.0) {
        for &p in &spec.sparsities {
            for &mu in &spec.mus {
                let curve: Option<Vec<(f64, f64)>> = gammas
                    .iter()
                    .map(|&g| groups.iter().find(|x| x.p == p && x.mu == mu && x.gamma == g).map(|x| (g, x.mean)))
                    .collect();
                if let Some(c) = curve {
                    let mut c = c;
                    c.sort_by(|a, b| a.0.total_cmp(&b.0));
                    gamma_star.push(GammaStar { p, mu, gamma_star: lindblad::critical_gamma(&c).ok().flatten() });
                }
            }
        }
    }

    let gate_estimates = spec
        .sparsities
        .iter()
        .filter_map(|&p| gate_estimate(spec.n_majorana, p).ok())
        .collect();

    Ok(Summary {
        n_majorana: spec.n_majorana,
        groups,
        failures: outcome.failures.clone(),
        analysis: Analysis { powerlaw_exponent, factorization_residual, z_scores, max_z, gate_estimates, gamma_star },
    })
}
