//! Sampling-budget, block-size and threshold sweeps on a noisy synthetic suite.

use dvote::harness::{
    sweep, synth_tasks, DenoiserChoice, Method, NoiseKind, RunPlan, SuiteSpec, SweepAxis,
};
use dvote::prelude::*;

fn main() -> Result<()> {
    let suite = SuiteSpec {
        answer_mass: 0.5,
        smoothing: 0.01,
        ..SuiteSpec::new(24, 32, 400, 8)
    };
    let tasks = synth_tasks(&suite)?;
    let noise = DenoiserChoice::Perturbed {
        eps: 0.3,
        noise: NoiseKind::Uniform,
    };
    let base = RunPlan::new(Method::Dvoting, GenerationConfig::for_length(32), noise);
    let axes: [(SweepAxis, &[&str]); 3] = [
        (SweepAxis::N, &["1", "3", "5", "9", "13"]),
        (SweepAxis::BlockSize, &["2", "4", "8", "32"]),
        (SweepAxis::Alpha, &["0", "0.1", "0.3", "0.6", "inf"]),
    ];
    for (axis, values) in axes {
        let values: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        for r in sweep(&tasks, &base, axis, &values)? {
            println!(
                "{:<22} accuracy {:.4}  mean steps {:>7.2}  mean samples {:.2}",
                r.label, r.accuracy, r.mean_steps, r.mean_samples
            );
        }
    }
    Ok(())
}
