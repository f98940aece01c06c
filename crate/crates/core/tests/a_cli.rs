//! Drives the `ldpgof` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ldpgof(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldpgof"))
        .args(args)
        .current_dir(dir)
        .env("LDPGOF_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn audit_reports_all_channels_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = ldpgof(
        &["audit", "--alpha", "0.5", "--mechanism", "ni", "--out", "audit.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    for channel in ["tail bits", "kernel Laplace", "bin Laplace", "clipped bits"] {
        assert!(stdout.contains(channel), "missing {channel}: {stdout}");
    }
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("audit.json")).unwrap()).unwrap();
    assert_eq!(v["all_within_bound"], true);
    let bound = 0.5f64.exp();
    for key in ["tail_bits", "kernel_laplace", "bin_laplace", "clipped_bits"] {
        assert!(v[key].as_f64().unwrap() <= bound + 1e-12);
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["test", "--alpha", "1.5"][..],
        &["test", "--alpha", "0"],
        &["test", "--gamma", "1"],
        &["risk", "--null", "lognormal"],
        &["test", "--bulk", "interval:2,1"],
        &["test", "--null", "normal", "--bulk", "full"],
        &["radius", "--signs", "checkerboard"],
        &["frobnicate"],
    ] {
        let o = ldpgof(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ldpgof(&["test", "--alpha", "1.5"], dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0,1]"));
}

#[test]
fn failed_rate_fit_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // Three grid points cannot support a fit.
    let o = ldpgof(&["rates", "--grid", "3", "--reps", "100", "--out", "r.csv"], dir.path());
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,alpha,n_alpha2,rho_hat,censored");
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn test_subcommand_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "test",
        "--mechanism",
        "interactive",
        "--seed",
        "9",
        "--trial",
        "4",
        "--delta-frac",
        "0.5",
    ];
    let a = ldpgof(&[&args[..], &["--out", "a.json"]].concat(), dir.path());
    let b = ldpgof(&[&args[..], &["--out", "b.json"]].concat(), dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["mechanism"], "interactive");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# risk run\nmechanism = interactive\nn = 300\nreps = 100\nalpha = 0.9\nseed = 3\n",
    )
    .unwrap();
    let o = ldpgof(
        &["risk", "--config", "run.cfg", "--alpha", "0.4", "--out", "risk.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(dir.path().join("risk.csv")).unwrap();
    let headers = rd.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>().join(","),
        "mechanism,null,n,alpha,gamma,delta,l1_distance,type1,type1_lo,type1_hi,type2,type2_lo,type2_hi,reps,seed"
    );
    let row = rd.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "interactive");
    assert_eq!(&row[2], "300");
    assert_eq!(&row[3], "0.4");
    assert_eq!(&row[13], "100");
    assert_eq!(&row[14], "3");
    // No alternative: type-II columns are empty.
    assert_eq!(&row[10], "");
}

#[test]
fn moments_json_passes_under_null() {
    let dir = tempfile::tempdir().unwrap();
    let o = ldpgof(
        &[
            "moments",
            "--null",
            "uniform:0,1",
            "--mechanism",
            "interactive",
            "--reps",
            "1000",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["all_pass"] == true));
}

#[test]
fn radius_is_labelled_and_censored_at_small_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = ldpgof(
        &["radius", "--n", "200", "--reps", "100", "--out", "rad.json"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("rad.json")).unwrap()).unwrap();
    assert_eq!(v["label"], "mechanism-specific separation estimate");
    assert_eq!(v["status"], "censored");
    assert!(String::from_utf8_lossy(&o.stdout).contains("mechanism-specific separation estimate"));
}

#[test]
fn privatize_writes_readable_batches() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.txt"), "0.1\n0.5\n\n0.9\n1.5\n").unwrap();
    let o = ldpgof(
        &[
            "privatize",
            "--channel",
            "tail",
            "--input",
            "x.txt",
            "--alpha",
            "0.5",
            "--out",
            "tail.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let params = ldpgof::PrivacyParams::new(0.5).unwrap();
    let batch =
        ldpgof::PrivatizedBatch::read_csv(fs::File::open(dir.path().join("tail.csv")).unwrap(), params).unwrap();
    assert_eq!(batch.rows(), 4);
    assert!(batch.values().iter().all(|v| (v.abs() - params.c_alpha).abs() == 0.0));

    let o = ldpgof(
        &[
            "privatize",
            "--channel",
            "kernel",
            "--n",
            "50",
            "--format",
            "binary",
            "--out",
            "k.bin",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let batch = ldpgof::PrivatizedBatch::read_binary(fs::File::open(dir.path().join("k.bin")).unwrap()).unwrap();
    assert_eq!(batch.kind(), ldpgof::BatchKind::KernelMatrix);
    assert_eq!(batch.rows(), 50);
}
