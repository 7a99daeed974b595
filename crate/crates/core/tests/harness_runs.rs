use std::collections::BTreeMap;
use std::fs;

use dvote::config::GenerationConfig;
use dvote::engine::{AnswerType, StopReason};
use dvote::harness::{
    emit_report, link_reports, run_method, sweep, synth_tasks, DenoiserChoice, Method,
    MethodReport, NoiseKind, PromptSpec, QuestionResult, RunPlan, SuiteSpec, SweepAxis, TaskRecord,
};
use dvote::Error;

fn suite(count: usize, seed: u64, answer_mass: f64, smoothing: f64) -> Vec<TaskRecord> {
    synth_tasks(&SuiteSpec {
        vocab: 24,
        gen_len: 32,
        count,
        seed,
        answer_mass,
        smoothing,
    })
    .unwrap()
}

fn plan(method: Method, denoiser: DenoiserChoice) -> RunPlan {
    let mut cfg = GenerationConfig::for_length(32);
    cfg.seed = 11;
    RunPlan::new(method, cfg, denoiser)
}

fn decoy(eps: f64) -> DenoiserChoice {
    DenoiserChoice::Perturbed {
        eps,
        noise: NoiseKind::Decoy,
    }
}

#[test]
fn deterministic_oracle_methods() {
    let tasks = suite(10, 1, 1.0, 0.0);
    let base = run_method(&tasks, &plan(Method::Baseline, DenoiserChoice::Oracle)).unwrap();
    assert_eq!(base.accuracy, 1.0);
    // One token per call over 32 positions.
    assert_eq!(base.mean_steps, 32.0);
    assert_eq!(base.mean_samples, 1.0);

    let maj = run_method(&tasks, &plan(Method::Majority, DenoiserChoice::Oracle)).unwrap();
    assert_eq!(maj.mean_steps, 5.0 * 16.0);
    assert_eq!(maj.accuracy, 1.0);

    let dv = run_method(&tasks, &plan(Method::Dvoting, DenoiserChoice::Oracle)).unwrap();
    assert!(dv.mean_steps <= maj.mean_steps);
    assert_eq!(dv.accuracy, 1.0);
    assert!(dv
        .results
        .iter()
        .all(|r| r.stop_reason == StopReason::AnswerConverged && r.samples_used == 2));
}

#[test]
fn dvoting_beats_baseline_cheaper_than_majority() {
    for seed in 0..5 {
        let tasks = suite(600, 100 + seed, 1.0, 0.0);
        let mut reports: Vec<MethodReport> = [Method::Baseline, Method::Majority, Method::Dvoting]
            .into_iter()
            .map(|m| run_method(&tasks, &plan(m, decoy(0.3))).unwrap())
            .collect();
        link_reports(&mut reports);
        let (base, maj, dv) = (&reports[0], &reports[1], &reports[2]);
        assert!(
            dv.accuracy >= base.accuracy - 0.01,
            "seed {seed}: {} vs {}",
            dv.accuracy,
            base.accuracy
        );
        assert!(dv.mean_steps < maj.mean_steps);
        assert!(base.bpc.is_none());
        let expect =
            (100.0 * dv.accuracy - 100.0 * base.accuracy) / (dv.mean_steps / base.mean_steps);
        assert!((dv.bpc.unwrap() - expect).abs() < 1e-9);
        assert!((dv.speedup_vs["majority"] - maj.mean_steps / dv.mean_steps).abs() < 1e-12);
    }
}

#[test]
fn sweeps() {
    let tasks = suite(120, 2, 0.5, 0.01);
    let noisy = DenoiserChoice::Perturbed {
        eps: 0.3,
        noise: NoiseKind::Uniform,
    };
    let base = plan(Method::Dvoting, noisy);

    let by_n = sweep(&tasks, &base, SweepAxis::N, &["1".into(), "5".into()]).unwrap();
    assert_eq!(by_n.len(), 2);
    let mut single = base.clone();
    single.cfg.max_samples = 1;
    let direct = run_method(&tasks, &single).unwrap();
    assert_eq!(by_n[0].results.len(), direct.results.len());
    for (a, b) in by_n[0].results.iter().zip(&direct.results) {
        assert_eq!(
            (&a.final_answer, a.steps, a.samples_used),
            (&b.final_answer, b.steps, b.samples_used)
        );
    }
    assert_eq!(by_n[0].accuracy, direct.accuracy);

    let by_alpha = sweep(&tasks, &base, SweepAxis::Alpha, &["0".into(), "inf".into()]).unwrap();
    assert!(by_alpha[0].mean_steps >= by_alpha[1].mean_steps);
    assert_eq!(by_alpha[1].label, "dvoting[alpha=inf]");

    let by_block = sweep(
        &tasks,
        &base,
        SweepAxis::BlockSize,
        &["4".into(), "64".into()],
    )
    .unwrap();
    assert_eq!(
        by_block.iter().map(|r| r.questions).collect::<Vec<_>>(),
        vec![120, 120]
    );
    // Paired runs on 120 questions: sampling noise is about ±0.045 per report.
    assert!((by_block[0].accuracy - by_block[1].accuracy).abs() < 0.15);

    assert!(matches!(
        sweep(&tasks, &base, SweepAxis::N, &["0".into()]),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        sweep(&tasks, &base, SweepAxis::N, &[]),
        Err(Error::Domain(_))
    ));
}

#[test]
fn unusable_tasks_are_skipped_then_fatal() {
    let mut tasks = suite(4, 3, 1.0, 0.0);
    tasks.push(TaskRecord {
        id: "literal".into(),
        prompt: PromptSpec::Literal(vec![1, 2]),
        gold: "3".into(),
        answer_type: AnswerType::Numeric,
        extractor: None,
        line: 5,
    });
    let r = run_method(&tasks, &plan(Method::Baseline, DenoiserChoice::Oracle)).unwrap();
    assert_eq!((r.questions, r.skipped), (4, 1));
    let r = run_method(&tasks[4..], &plan(Method::Baseline, DenoiserChoice::Oracle));
    assert!(matches!(r, Err(Error::Run(_))));
    assert!(run_method(&[], &plan(Method::Baseline, DenoiserChoice::Oracle)).is_err());
}

fn fake_report(answers: &[&str]) -> MethodReport {
    let tasks = suite(1, 9, 1.0, 0.0);
    let mut r = run_method(&tasks, &plan(Method::Majority, DenoiserChoice::Oracle)).unwrap();
    r.results = vec![QuestionResult {
        id: "h".into(),
        method: "majority".into(),
        final_answer: "a".into(),
        correct: true,
        samples_used: answers.len(),
        steps: 10,
        stop_reason: StopReason::BudgetExhausted,
        per_sample_answers: answers.iter().map(|s| s.to_string()).collect(),
        modal_votes: 3,
        nupr: vec![1.0, 0.5, 0.25, 0.0, 0.0],
    }];
    r
}

#[test]
fn report_files() {
    let dir = tempfile::tempdir().unwrap();
    let report = fake_report(&["a", "a", "b", "a", "c"]);
    let files = emit_report(std::slice::from_ref(&report), dir.path()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.strip_prefix(dir.path()).unwrap().display().to_string())
        .collect();
    assert_eq!(
        names,
        [
            "results.jsonl",
            "summary.json",
            "summary.csv",
            "plotdata/consistency_histogram.csv",
            "plotdata/nupr.csv"
        ]
    );

    let hist = fs::read_to_string(dir.path().join("plotdata/consistency_histogram.csv")).unwrap();
    assert!(hist.contains("majority,5,3,3/5,1\n"), "{hist}");
    assert!(hist.contains("majority,5,1,1/5,0\n"));

    let line = fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "correct",
            "final_answer",
            "id",
            "method",
            "per_sample_answers",
            "samples_used",
            "steps",
            "stop_reason"
        ]
    );
    assert_eq!(v["stop_reason"], "budget_exhausted");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let acc = summary["reports"][0]["accuracy"].as_f64().unwrap();
    let csv_acc: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(acc, csv_acc);
    assert_eq!(acc, report.accuracy);

    let nupr = fs::read_to_string(dir.path().join("plotdata/nupr.csv")).unwrap();
    assert!(nupr.contains("majority,2,0.5,1\n"), "{nupr}");
}

#[test]
fn reports_are_byte_stable() {
    let tasks = suite(30, 4, 0.5, 0.01);
    let noisy = DenoiserChoice::Perturbed {
        eps: 0.2,
        noise: NoiseKind::Uniform,
    };
    let read_all = |jobs: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut p = plan(Method::Dvoting, noisy.clone());
        p.jobs = jobs;
        let report = run_method(&tasks, &p).unwrap();
        emit_report(&[report], dir.path())
            .unwrap()
            .into_iter()
            .map(|f| (f.file_name().unwrap().to_owned(), fs::read(&f).unwrap()))
            .collect::<BTreeMap<_, _>>()
    };
    assert_eq!(read_all(1), read_all(4));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let report = fake_report(&["a"]);
    let err = emit_report(&[report], &blocker.join("out")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 2);
}
