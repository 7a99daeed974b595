//! Baseline, majority voting and dVoting over a synthetic suite, with report files.
//!
//! `cargo run --release --example benchmark_suite -- [OUT_DIR]`

use std::path::PathBuf;

use dvote::harness::{
    emit_report, link_reports, run_method, synth_tasks, DenoiserChoice, Method, NoiseKind, RunPlan,
    SuiteSpec,
};
use dvote::prelude::*;

fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dvote-bench"));
    let tasks = synth_tasks(&SuiteSpec::new(24, 32, 500, 1))?;
    let noise = DenoiserChoice::Perturbed {
        eps: 0.3,
        noise: NoiseKind::Decoy,
    };
    let mut reports = Vec::new();
    for method in [Method::Baseline, Method::Majority, Method::Dvoting] {
        let plan = RunPlan::new(method, GenerationConfig::for_length(32), noise.clone());
        reports.push(run_method(&tasks, &plan)?);
    }
    link_reports(&mut reports);
    println!(
        "{:<10} {:>8} {:>10} {:>8} {:>8}",
        "method", "accuracy", "mean steps", "samples", "bpc"
    );
    for r in &reports {
        let bpc = r
            .bpc
            .map(|b| format!("{b:.3}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>8.4} {:>10.2} {:>8.2} {:>8}",
            r.label, r.accuracy, r.mean_steps, r.mean_samples, bpc
        );
    }
    for path in emit_report(&reports, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
