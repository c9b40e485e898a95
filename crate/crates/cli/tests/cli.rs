use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-syk")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

#[test]
fn gate_estimate_reproduces_dense_and_sparse_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = run(&["gate-estimate", "--sparsity", "1", "--sparsity", "0.02", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = data_lines(&out.join("gate_estimates.csv"));
    assert_eq!(lines[1], "10,1,210,210,1260,1260,1");
    assert_eq!(lines[2], "10,0.02,4.2,4,24,1260,52.5");
}

#[test]
fn sweep_writes_manifested_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = run(&[
        "sweep-sparsity",
        "--n-majorana",
        "6",
        "--realizations",
        "2",
        "--sparsity",
        "1",
        "--sparsity",
        "0.5",
        "--time-points",
        "20",
        "--emit-traces",
        "--emit-plot-data",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cfg = fs::read_to_string(out.join("run_config.toml")).unwrap();
    let manifest = cfg.lines().next().unwrap();
    assert!(manifest.starts_with("# syk-wormhole "));
    assert!(manifest.contains("config-sha256 "));
    assert!(manifest.ends_with("seed-base 0"));
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().next().unwrap(), manifest);
    let parsed = syk_wormhole::ensemble::parse_records_csv(&records).unwrap();
    assert_eq!(parsed.len(), 4);
    assert!(parsed.iter().all(|r| r.peak_height > 0.0 && r.peak_height <= 1.0 + 1e-9));

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["manifest"]["seed_base"], 0);
    assert_eq!(summary["data"]["groups"].as_array().unwrap().len(), 2);

    assert_eq!(fs::read_dir(out.join("traces")).unwrap().count(), 4);
    for f in ["signal_vs_sparsity.dat", "r_vs_sparsity.dat", "peaks_raw.dat"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(data_lines(&out.join("peaks_raw.dat")).len(), 4);
}

#[test]
fn rerun_from_written_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = run(&[
        "sweep-mu",
        "--n-majorana",
        "6",
        "--realizations",
        "2",
        "--sparsity",
        "0.5",
        "--mu",
        "0.05",
        "--mu",
        "0.2",
        "--time-points",
        "20",
        "--format",
        "csv",
        "-o",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = a.join("run_config.toml");
    let o = run(&["sweep-mu", "--config", cfg.to_str().unwrap(), "-o", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!b.join("records.json").exists());
    assert_eq!(data_lines(&a.join("records.csv")), data_lines(&b.join("records.csv")));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "n_majorana = 6\nsparsities = [1.0]\nrealizations = 5\nformat = \"csv\"\n").unwrap();
    let out = dir.path().join("o");
    let o = run(&["level-spacing", "--config", cfg.to_str().unwrap(), "--realizations", "2", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&out.join("level_spacing.csv")).len(), 3);
    let written = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(written.contains("realizations = 2"));
    assert!(written.contains("n_majorana = 6"));
}

#[test]
fn noise_grid_reports_critical_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    let o = run(&[
        "noise-grid",
        "--n-majorana",
        "4",
        "--realizations",
        "1",
        "--sparsity",
        "1",
        "--gamma",
        "0",
        "--gamma",
        "0.1",
        "--gamma",
        "1",
        "--time-points",
        "20",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&out.join("noise.csv")).len(), 4);
    let gs = data_lines(&out.join("gamma_star.csv"));
    assert_eq!(gs[0], "p,mu,gamma_star");
    assert_eq!(gs.len(), 2);
}

#[test]
fn tfd_diagnostics_reference_overlaps_itself() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = run(&[
        "tfd-diagnostics",
        "--n-majorana",
        "8",
        "--realizations",
        "2",
        "--sparsity",
        "1",
        "--sparsity",
        "0.3",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_lines(&out.join("tfd_diagnostics.csv"));
    assert_eq!(rows.len(), 5);
    for r in rows.iter().skip(1).filter(|r| r.starts_with("1,")) {
        let overlap: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((overlap - 1.0).abs() < 1e-10);
    }
}

#[test]
fn krylov_signal_runs_matrix_free() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = run(&["krylov-signal", "--n-majorana", "8", "--time-points", "15", "--krylov-dim", "20", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(cfg.contains("engine = \"krylov\""));
}

#[test]
fn invalid_values_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = run(&["sweep-sparsity", "--sparsity", "1.5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.lines().any(|l| l.starts_with("error kind=invalid-spec key=")), "{err}");
    assert!(!out.exists());

    let o = run(&["sweep-sparsity", "--not-a-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error kind=usage"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "betta = 3\n").unwrap();
    let o = run(&["sweep-sparsity", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error kind=config"));

    let o = run(&["noise-grid", "--n-majorana", "10", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_compute_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = run(&["gate-estimate", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error kind=io"));
}
