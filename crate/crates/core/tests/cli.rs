use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvote"))
        .args(args)
        .env("DVOTE_LOG", "error")
        .output()
        .unwrap()
}

fn synth(dir: &Path) -> String {
    let tasks = dir.join("tasks.jsonl").display().to_string();
    let out = dvote(&[
        "synth", "--vocab", "24", "--length", "16", "--count", "12", "--seed", "3", "--out", &tasks,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    tasks
}

#[test]
fn synth_run_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = synth(dir.path());
    assert_eq!(fs::read_to_string(&tasks).unwrap().lines().count(), 12);

    let out_dir = dir.path().join("run").display().to_string();
    let out = dvote(&[
        "run",
        "--tasks",
        &tasks,
        "--method",
        "baseline,majority,dvoting",
        "--denoiser",
        "perturbed",
        "--eps",
        "0.3",
        "--max-samples",
        "5",
        "--seed",
        "1",
        "--jobs",
        "2",
        "--out",
        &out_dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("label,method,"));
    assert_eq!(stdout.lines().count(), 4);
    for f in [
        "results.jsonl",
        "summary.json",
        "summary.csv",
        "plotdata/nupr.csv",
        "plotdata/consistency_histogram.csv",
    ] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("run/results.jsonl"))
            .unwrap()
            .lines()
            .count(),
        36
    );

    let sweep_dir = dir.path().join("sweep").display().to_string();
    let out = dvote(&[
        "sweep",
        "--tasks",
        &tasks,
        "--axis",
        "alpha",
        "--values",
        "0,0.3,inf",
        "--out",
        &sweep_dir,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("dvoting[alpha=inf]"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = synth(dir.path());
    let out = dir.path().join("o").display().to_string();

    // Configuration errors.
    assert_eq!(
        dvote(&["run", "--tasks", &tasks, "--alpha", "-1", "--out", &out])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        dvote(&["run", "--tasks", &tasks, "--method", "beam", "--out", &out])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(dvote(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        dvote(&["sweep", "--tasks", &tasks, "--axis", "n", "--values", "0", "--out", &out])
            .status
            .code(),
        Some(1)
    );

    // Task file errors.
    let missing = dir.path().join("missing.jsonl").display().to_string();
    assert_eq!(
        dvote(&["run", "--tasks", &missing, "--out", &out])
            .status
            .code(),
        Some(2)
    );
    let dup = dir.path().join("dup.jsonl");
    let line = fs::read_to_string(&tasks)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    fs::write(&dup, format!("{line}\n{line}\n")).unwrap();
    let o = dvote(&["run", "--tasks", dup.to_str().unwrap(), "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    // Denoiser errors.
    let o = dvote(&[
        "serve-check",
        "--url",
        "http://127.0.0.1:9",
        "--vocab",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = dvote(&[
        "run",
        "--tasks",
        &tasks,
        "--denoiser",
        "remote",
        "--url",
        "http://127.0.0.1:9",
        "--vocab",
        "24",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3));

    assert_eq!(dvote(&["--help"]).status.code(), Some(0));
}
