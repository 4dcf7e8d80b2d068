use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dealer(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dealer"));
    cmd.args(args).env_remove("DEALER_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = dealer(args, &[]);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SHORT: [&str; 6] = ["--set", "t_end=40", "--set", "runs=2", "--set", "dt=1e-3"];

fn run_in(sub: &str, dir: &Path, extra: &[&str]) {
    let d = dir.to_str().unwrap();
    let mut args = vec![sub, "--out", d];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn every_subcommand_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, Vec<&str>); 6] = [
        ("simulate", SHORT.to_vec()),
        ("lattice", vec![]),
        ("ml-solve", vec!["--set", "u2=1", "--set", "dr=0.02"]),
        ("analytic", vec!["--set", "u2=1"]),
        ("compare", [&SHORT[..], &["--set", "t_end=2000"]].concat()),
        ("sweep-n", [&SHORT[..], &["--n-list", "2,5"]].concat()),
    ];
    for (sub, extra) in &cases {
        let a = tmp.path().join(format!("{sub}-a"));
        let b = tmp.path().join(format!("{sub}-b"));
        let extra = extra.clone();
        // compare may legitimately miss its tolerance on a short run; only the bytes matter here.
        for dir in [&a, &b] {
            let d = dir.to_str().unwrap();
            let mut args = vec![*sub, "--out", d];
            args.extend_from_slice(&extra);
            let out = dealer(&args, &[]);
            assert!(
                matches!(out.status.code(), Some(0) | Some(3)),
                "{sub}: {out:?}"
            );
        }
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        assert!(!fa.is_empty(), "{sub} wrote no CSV");
        assert_eq!(fa, fb, "{sub} output differs between identical runs");
        assert_eq!(
            fs::read(a.join("manifest.json")).unwrap(),
            fs::read(b.join("manifest.json")).unwrap()
        );
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let dir = tmp.path().join(threads);
        let d = dir.to_str().unwrap();
        let mut args = vec!["simulate", "--out", d];
        args.extend_from_slice(&SHORT);
        let out = dealer(&args, &[("DEALER_THREADS", threads)]);
        assert!(out.status.success());
        outs.push(csv_files(&dir));
    }
    assert_eq!(outs[0], outs[1]);
    let out = dealer(
        &["analytic", "--out", tmp.path().to_str().unwrap()],
        &[("DEALER_THREADS", "zero")],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn manifest_fed_back_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# short run\nN=3\nu2=0.5\nt_end=30\nseed=17\nruns=2\n",
    )
    .unwrap();
    let first = tmp.path().join("first");
    run_in("simulate", &first, &["--config", cfg.to_str().unwrap()]);
    let second = tmp.path().join("second");
    let m = first.join("manifest.json");
    run_in("simulate", &second, &["--config", m.to_str().unwrap()]);
    assert_eq!(csv_files(&first), csv_files(&second));
    assert_eq!(manifest(&first), manifest(&second));
    assert_eq!(manifest(&first)["config"]["N"], 3);

    // sweep-n leaves dt unset so each N keeps its own default on replay.
    let sweep = tmp.path().join("sweep");
    run_in("sweep-n", &sweep, &["--set", "t_end=5", "--n-list", "2,8"]);
    let m = manifest(&sweep);
    assert!(m["config"].get("dt").is_none());
    assert_eq!(m["dt_per_n"], serde_json::json!([1e-4, 5e-5]));
    let replay = tmp.path().join("replay");
    let path = sweep.join("manifest.json");
    run_in(
        "sweep-n",
        &replay,
        &["--config", path.to_str().unwrap(), "--n-list", "2,8"],
    );
    assert_eq!(csv_files(&sweep), csv_files(&replay));
}

#[test]
fn manifest_echoes_config_and_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.cfg");
    fs::write(&cfg, "L=1\nsigma2=2").unwrap();
    let out = tmp.path().join("a");
    run_in("analytic", &out, &["--config", cfg.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(m["predictions"]["mean_transaction_interval"], 0.25);
    assert_eq!(m["config"]["L"], 1.0);
    assert_eq!(m["config"]["dt"], 1e-4);
    assert_eq!(m["subcommand"], "analytic");
    let listed: Vec<&str> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for f in &listed {
        assert!(out.join(f).exists(), "{f} listed but missing");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().to_str().unwrap();
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "Lx=1\n").unwrap();
    let out = dealer(
        &["simulate", "--out", d, "--config", bad.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key Lx at line 1"));

    let out = dealer(&["compare", "--out", d, "--set", "dt=0.5"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));

    assert_eq!(dealer(&["simulate"], &[]).status.code(), Some(1));
    assert_eq!(
        dealer(&["frobnicate", "--out", d], &[]).status.code(),
        Some(1)
    );
    assert_eq!(
        dealer(&["lattice", "--out", d, "--set", "u2=1"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        dealer(&["ml-solve", "--out", d, "--set", "N=3"], &[])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(dealer(&["--help"], &[]).status.code(), Some(0));

    // A short noisy run misses the comparison tolerance.
    let out = dealer(
        &[
            "compare", "--out", d, "--set", "t_end=5", "--set", "dt=1e-3", "--set", "t_init=0",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(tmp.path().join("compare_l1.csv").exists());
}

#[test]
fn compare_writes_one_column_per_method() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let args = ["--set", "t_end=400", "--set", "dt=1e-3"];
    let _ = dealer(
        &[
            "compare",
            "--out",
            out.to_str().unwrap(),
            args[0],
            args[1],
            args[2],
            args[3],
        ],
        &[],
    );
    let text = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "r,simulation,ml,lattice,analytic"
    );
    assert_eq!(text.lines().count(), 601);
    let l1 = fs::read_to_string(out.join("compare_l1.csv")).unwrap();
    assert_eq!(l1.lines().count(), 7);
    // ml, lattice and the tent agree to rounding at matched spacing.
    let ml_lattice = l1.lines().find(|l| l.starts_with("ml,lattice")).unwrap();
    let value: f64 = ml_lattice.split(',').nth(2).unwrap().parse().unwrap();
    assert!(value < 1e-8);
}
