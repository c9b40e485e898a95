//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; the process fails if any criterion fails.
//!
//! The slow criteria (noise threshold, N=20 reproduction) are skipped unless
//! the binary receives `--include-ignored` or `--ignored`:
//!
//! ```text
//! cargo test --release -p syk-wormhole --test acceptance -- --include-ignored
//! ```
//!
//! Bare numeric arguments restrict the run to those criteria.

use std::time::Instant;

use faer::Mat;
use syk_wormhole::ensemble::{factorization_residual, gate_estimate, powerlaw_fit, z_from};
use syk_wormhole::krylov::{even_sites, signal_krylov, MatrixFreeHamiltonian};
use syk_wormhole::linalg::{self, max_abs};
use syk_wormhole::lindblad::{self, evolve_noisy, noisy_signal, DensityMatrix, NoiseConfig};
use syk_wormhole::pauli::{jw_majorana, PauliString, Phase};
use syk_wormhole::spectral::{self, LevelSelection, ParitySector};
use syk_wormhole::syk::{build_doubled, sample_couplings, BuildMode, DoubledSystem};
use syk_wormhole::tfd::{self, build_tfd, Provenance, TfdState};
use syk_wormhole::transmission::{signal_exact, SignalTrace, TimeGrid};
use syk_wormhole::C64;

const BETA: f64 = 8.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn realization(n: usize, p: f64, seed: u64, mu: f64, mode: BuildMode) -> (DoubledSystem, TfdState) {
    let c = sample_couplings(n, p, seed).expect("couplings");
    let sys = build_doubled(&c, mu, mode).expect("doubled system");
    let spec = spectral::diagonalize(sys.h_single()).expect("single-side spectrum");
    let state = build_tfd(&spec, BETA, Provenance { n_majorana: n, sparsity: p, seed }).expect("tfd");
    (sys, state)
}

fn exact_trace(n: usize, p: f64, seed: u64, mu: f64, grid: &TimeGrid) -> SignalTrace {
    let (sys, state) = realization(n, p, seed, mu, BuildMode::Dense);
    signal_exact(&sys, &state, grid).expect("signal")
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn peak_stats(n: usize, p: f64, mu: f64, seeds: u64, grid: &TimeGrid) -> (f64, f64) {
    let traces: Vec<SignalTrace> = (0..seeds).map(|s| exact_trace(n, p, s, mu, grid)).collect();
    let h: Vec<f64> = traces.iter().map(|t| t.peak_height).collect();
    let t: Vec<f64> = traces.iter().map(|t| t.peak_time).collect();
    (mean(&h), mean(&t))
}

fn n10_grid() -> TimeGrid {
    TimeGrid::linspace(30.0, 120).unwrap()
}

fn anticommutator_exact(ops: &[PauliString]) -> bool {
    ops.iter().enumerate().all(|(i, a)| {
        ops.iter().enumerate().all(|(j, b)| {
            let ab = a.multiply(b).unwrap();
            let ba = b.multiply(a).unwrap();
            if i == j {
                ab.is_identity() && ab.phase() == Phase::ONE
            } else {
                ab.x_mask() == ba.x_mask() && ab.z_mask() == ba.z_mask() && ab.phase() * Phase::MINUS_ONE == ba.phase()
            }
        })
    })
}

/// `max |{a, b} - 2δ I|` over all pairs, with dense products.
fn anticommutator_dense(ops: &[PauliString], use_gemm: bool) -> f64 {
    let dense: Vec<Mat<C64>> = ops.iter().map(|o| o.to_dense().unwrap()).collect();
    let d = dense[0].nrows();
    let mut worst = 0.0f64;
    for i in 0..ops.len() {
        for j in i..ops.len() {
            let (ab, ba) = if use_gemm {
                (linalg::mul(dense[i].as_ref(), dense[j].as_ref()), linalg::mul(dense[j].as_ref(), dense[i].as_ref()))
            } else {
                (ops[i].left_mul(&dense[j]), ops[j].left_mul(&dense[i]))
            };
            let target = if i == j { 2.0 } else { 0.0 };
            let id = Mat::<C64>::from_fn(d, d, |r, c| if r == c { C64::new(target, 0.0) } else { C64::new(0.0, 0.0) });
            worst = worst.max(max_abs((ab + ba - id).as_ref()));
        }
    }
    worst
}

fn c1_algebra() -> Outcome {
    let mut symbolic = true;
    let mut worst = 0.0f64;
    for n in [4usize, 8, 10] {
        let single: Vec<PauliString> = (0..n).map(|j| jw_majorana(j, n / 2).unwrap()).collect();
        let doubled: Vec<PauliString> = (0..2 * n).map(|j| jw_majorana(j, n).unwrap()).collect();
        symbolic &= anticommutator_exact(&single) && anticommutator_exact(&doubled);
        worst = worst.max(anticommutator_dense(&single, true));
        worst = worst.max(anticommutator_dense(&doubled, n <= 8));
    }
    outcome(symbolic && worst <= 1e-14, format!("symbolic exact: {symbolic}, dense max deviation {worst:e}"))
}

fn mean_r(p: f64, realizations: u64) -> f64 {
    let v: Vec<f64> = (0..realizations)
        .map(|s| {
            let h = syk_wormhole::syk::build_single_side(&sample_couplings(10, p, s).unwrap()).unwrap();
            spectral::level_spacing(&h, LevelSelection::Sector(ParitySector::Even)).unwrap().mean
        })
        .collect();
    mean(&v)
}

fn c2_chaos_dense() -> Outcome {
    let r = mean_r(1.0, 20);
    outcome((r - 0.589).abs() <= 0.03, format!("<r> = {r:.4} (target 0.589 +- 0.03)"))
}

fn c3_chaos_sparse() -> Outcome {
    let r = mean_r(0.02, 20);
    outcome(r < 0.386 && (r - 0.256).abs() <= 0.08, format!("<r> = {r:.4} (target < 0.386 and 0.256 +- 0.08)"))
}

fn c4_dense_peak() -> Outcome {
    let (h, t) = peak_stats(10, 1.0, 0.1, 10, &n10_grid());
    outcome((h - 0.924).abs() <= 0.01 && (6.5..=8.0).contains(&t), format!("mean peak {h:.4} (0.924 +- 0.01), mean t* {t:.3} (in [6.5, 8])"))
}

fn c5_decoupling() -> Outcome {
    let grid = n10_grid();
    let (dense, _) = peak_stats(10, 1.0, 0.1, 10, &grid);
    let (sparse, _) = peak_stats(10, 0.05, 0.1, 10, &grid);
    let ratio = sparse / dense;
    outcome((0.97..=1.03).contains(&ratio), format!("p=0.05 / p=1 mean-peak ratio {ratio:.4} ({sparse:.4} / {dense:.4}, in [0.97, 1.03])"))
}

fn c6_mu_control() -> Outcome {
    let grid = n10_grid();
    let (weak, _) = peak_stats(10, 1.0, 0.02, 10, &grid);
    let (strong, _) = peak_stats(10, 1.0, 0.5, 10, &grid);
    outcome(
        (weak - 0.44).abs() <= 0.05 && (strong - 0.995).abs() <= 0.005,
        format!("mu=0.02 peak {weak:.4} (0.44 +- 0.05), mu=0.5 peak {strong:.4} (0.995 +- 0.005)"),
    )
}

fn c7_thermality() -> Outcome {
    let mut worst_err = 0.0f64;
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [1.0, 0.1, 0.02] {
        let mut s = Vec::new();
        for seed in 0..10 {
            let (sys, state) = realization(10, p, seed, 0.1, BuildMode::MatrixFree);
            worst_err = worst_err.max(tfd::thermal_fidelity_error(&state, sys.h_single(), BETA).unwrap());
            s.push(tfd::entanglement_entropy(&state).unwrap());
        }
        let m = mean(&s);
        pass &= (m - 3.40).abs() <= 0.05;
        detail.push(format!("S(p={p}) = {m:.4}"));
    }
    pass &= worst_err <= 1e-10;
    outcome(pass, format!("max thermal error {worst_err:e} (<= 1e-10), {} (3.40 +- 0.05)", detail.join(", ")))
}

fn c8_krylov() -> Outcome {
    let grid = n10_grid();
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let (sys, state) = realization(10, 1.0, seed, 0.1, BuildMode::Dense);
        let exact = signal_exact(&sys, &state, &grid).unwrap();
        let h = MatrixFreeHamiltonian::from_system(&sys);
        let sites: Vec<usize> = (0..10).collect();
        let kry = signal_krylov(&h, &state, &sites, &grid, 60).unwrap();
        worst = worst.max(kry.trace.max_deviation(&exact).unwrap());
    }
    outcome(worst <= 1e-6, format!("max |C_krylov - C_exact| = {worst:e} over 3 seeds (<= 1e-6)"))
}

fn c9_lindblad() -> Outcome {
    let grid = TimeGrid::linspace(30.0, 120).unwrap();
    let (sys, state) = realization(6, 1.0, 0, 0.1, BuildMode::Dense);
    let noisy = noisy_signal(&sys, &state, NoiseConfig::new(0.0).unwrap(), &grid).unwrap();
    let exact = signal_exact(&sys, &state, &grid).unwrap();
    let dev = noisy.max_deviation(&exact).unwrap();

    let gamma = 0.2;
    let h = Mat::<C64>::zeros(2, 2);
    let rho0 = DensityMatrix::new(Mat::from_fn(2, 2, |_, _| C64::new(0.5, 0.0))).unwrap();
    let decay_grid = TimeGrid::linspace(10.0, 41).unwrap();
    let snaps = evolve_noisy(&h, &rho0, NoiseConfig::new(gamma).unwrap(), &decay_grid).unwrap();
    let decay_err = snaps
        .iter()
        .zip(decay_grid.times())
        .map(|(s, &t)| (s.matrix()[(0, 1)] - C64::new(0.5 * (-2.0 * gamma * t).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    outcome(dev <= 1e-5 && decay_err <= 1e-8, format!("gamma=0 deviation {dev:e} (<= 1e-5), dephasing decay error {decay_err:e} (<= 1e-8)"))
}

fn c10_noise_threshold() -> Outcome {
    let grid = TimeGrid::linspace(30.0, 80).unwrap();
    let gammas = [0.0, 0.01, 0.03, 0.05, 0.07, 0.1];
    let mut sums = vec![0.0; gammas.len()];
    for seed in 0..5 {
        let (sys, state) = realization(8, 1.0, seed, 0.1, BuildMode::Dense);
        for (s, &g) in sums.iter_mut().zip(&gammas) {
            *s += noisy_signal(&sys, &state, NoiseConfig::new(g).unwrap(), &grid).unwrap().peak_height / 5.0;
        }
    }
    let curve: Vec<(f64, f64)> = gammas.iter().copied().zip(sums.iter().copied()).collect();
    let star = lindblad::critical_gamma(&curve).unwrap();
    let peaks: Vec<String> = sums.iter().map(|s| format!("{s:.4}")).collect();
    match star {
        Some(g) => outcome((0.045..=0.065).contains(&g), format!("gamma* = {g:.4} (in [0.045, 0.065]); peaks {}", peaks.join(" "))),
        None => outcome(false, format!("no half-height crossing; peaks {}", peaks.join(" "))),
    }
}

fn c11_analysis() -> Outcome {
    let ps = [0.02, 0.03, 0.05, 0.08, 0.1, 0.2, 0.3, 0.5, 1.0];
    let stds: Vec<f64> = ps.iter().map(|p: &f64| 0.0061 * p.powf(-0.5)).collect();
    let slope = powerlaw_fit(&ps, &stds).unwrap();
    let u = [0.9, 0.7, 0.4];
    let v = [1.0, 0.8, 0.5, 0.3];
    let rank1: Vec<Vec<f64>> = u.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
    let resid = factorization_residual(&rank1).unwrap();
    let z = z_from(0.9239, 0.0009, 0.9151, 0.0087).unwrap();
    outcome(
        (slope + 0.5).abs() <= 1e-12 && resid <= 1e-12 && (z - 1.01).abs() <= 0.02,
        format!("slope {slope} (-0.5 +- 1e-12), rank-1 residual {resid:e}, z = {z:.4} (1.01 +- 0.02)"),
    )
}

fn c12_gates() -> Outcome {
    let dense = gate_estimate(10, 1.0).unwrap();
    let sparse = gate_estimate(10, 0.02).unwrap();
    outcome(
        dense.cnots.abs_diff(1260) <= 1 && (50.0..=55.0).contains(&sparse.reduction),
        format!("dense {} CNOTs, p=0.02 {} CNOTs, reduction {:.1}x", dense.cnots, sparse.cnots, sparse.reduction),
    )
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn c13_n20() -> Outcome {
    let n = 20;
    let m = 60;
    let (sys, state) = realization(n, 1.0, 0, 0.1, BuildMode::MatrixFree);
    let h = MatrixFreeHamiltonian::from_system(&sys);
    let grid = TimeGrid::linspace(30.0, 60).unwrap();
    let sig = signal_krylov(&h, &state, &even_sites(n), &grid, m).unwrap();
    let d = 1u64 << n;
    // two Krylov bases plus a handful of working vectors
    let bound = (2 * m as u64 + 16) * d * 16 + (256 << 20);
    let rss = peak_rss_bytes();
    let mem_ok = rss.is_none_or(|r| r <= bound);
    outcome(
        (0.89..=0.92).contains(&sig.trace.peak_height) && mem_ok,
        format!(
            "peak {:.4} at t={:.2} (in [0.89, 0.92]), residual {:e}, peak RSS {} MiB (bound {} MiB)",
            sig.trace.peak_height,
            sig.trace.peak_time,
            sig.max_residual,
            rss.map_or("?".to_string(), |r| (r >> 20).to_string()),
            bound >> 20
        ),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome, bool);

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let slow = args.iter().any(|a| a == "--include-ignored" || a == "--ignored");
    let list_only = args.iter().any(|a| a == "--list");
    // bare numbers select criteria by id
    let only: Vec<u32> = args.iter().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 13] = [
        (1, "Majorana algebra exactness", c1_algebra, false),
        (2, "chaos calibration, dense <r>", c2_chaos_dense, false),
        (3, "chaos transition, sparse <r>", c3_chaos_sparse, false),
        (4, "dense transmission peak", c4_dense_peak, false),
        (5, "signal-chaos decoupling", c5_decoupling, false),
        (6, "coupling-strength control", c6_mu_control, false),
        (7, "TFD thermality", c7_thermality, false),
        (8, "Krylov oracle equivalence", c8_krylov, false),
        (9, "Lindblad consistency", c9_lindblad, false),
        (10, "noise threshold", c10_noise_threshold, true),
        (11, "analysis unit checks", c11_analysis, false),
        (12, "gate estimator", c12_gates, false),
        (13, "N=20 reproduction (optional)", c13_n20, true),
    ];
    if list_only {
        for (id, name, _, _) in &criteria {
            println!("criterion_{id:02}_{}: test", name.replace([' ', ',', '<', '>', '=', '(', ')', '-'], "_"));
        }
        return;
    }
    let mut failed = 0;
    for (id, name, run, is_slow) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        if is_slow && !slow {
            println!("SKIP criterion {id:>2}: {name} (slow; pass --include-ignored to run)");
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(o) => {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                println!("{tag} criterion {id:>2}: {name}: {} [{secs:.1}s]", o.detail);
                if !o.pass {
                    failed += 1;
                }
            }
            Err(_) => {
                println!("FAIL criterion {id:>2}: {name}: panicked [{secs:.1}s]");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all run criteria passed");
}
