//! Exit codes and the end-to-end pipeline through the binary.

use std::path::Path;
use std::process::Command;

const SMOKE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.toml");

fn corrdiff(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_corrdiff"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exited normally"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(corrdiff(&[]).0, 1);
    assert_eq!(corrdiff(&["no-such-command"]).0, 1);
    assert_eq!(corrdiff(&["rng-bench", "--seconds", "-1"]).0, 1);
    // a pipeline command without a config
    assert_eq!(corrdiff(&["gen-data"]).0, 1);
    assert_eq!(
        corrdiff(&["--config", "/nonexistent/run.toml", "gen-data"]).0,
        1
    );
}

#[test]
fn help_exits_0() {
    let (code, stdout, _) = corrdiff(&["--help"]);
    assert_eq!(code, 0);
    for sub in [
        "gen-data",
        "train",
        "sample",
        "eval",
        "oracle-check",
        "rng-bench",
    ] {
        assert!(stdout.contains(sub), "help lists {sub}");
    }
}

#[test]
fn oracle_check_passes_and_negative_control_exits_3() {
    let (code, stdout, _) = corrdiff(&["oracle-check", "--trials", "20000"]);
    assert_eq!(code, 0, "{stdout}");
    let (code, _, _) = corrdiff(&["oracle-check", "--trials", "2000", "--permute-order"]);
    assert_eq!(code, 3);
    assert_eq!(
        corrdiff(&["oracle-check", "--beta", "0", "--trials", "20000"]).0,
        0
    );
}

#[test]
fn rng_bench_reports_throughput() {
    let (code, stdout, _) = corrdiff(&["rng-bench", "--seconds", "0.05"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("lfsr32"));
}

fn run_pipeline(out: &Path) {
    let o = out.to_str().unwrap();
    for cmd in [
        vec!["gen-data"],
        vec!["train", "--mode", "correlated"],
        vec!["sample", "--mode", "correlated", "--count", "8"],
        vec!["eval", "--mode", "correlated"],
    ] {
        let mut args = vec!["--config", SMOKE, "--out", o];
        args.extend(cmd.iter().copied());
        let (code, stdout, stderr) = corrdiff(&args);
        assert_eq!(code, 0, "{cmd:?}\n{stdout}\n{stderr}");
    }
}

#[test]
fn pipeline_runs_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(a.path());
    run_pipeline(b.path());
    for name in [
        "dataset.bin",
        "reference.bin",
        "checkpoint-correlated.bin",
        "loss-correlated.csv",
        "generated-correlated.bin",
        "eval-correlated.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
    let summary = std::fs::read_to_string(a.path().join("eval-correlated.txt")).unwrap();
    assert!(summary.contains("energy_tv"));
}

#[test]
fn sample_without_checkpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = corrdiff(&[
        "--config",
        SMOKE,
        "--out",
        dir.path().to_str().unwrap(),
        "sample",
    ]);
    assert_ne!(code, 0);
}
