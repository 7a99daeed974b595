//! One question through the remask-and-vote loop, next to plain majority voting.

use dvote::harness::{decoy_weight, SyntheticParams};
use dvote::prelude::*;

fn main() -> Result<()> {
    let task = SyntheticParams {
        vocab: 24,
        gen_len: 32,
        gold: 7,
        decoy: 2,
        answer_mass: 1.0,
        smoothing: 0.0,
        seed: 42,
    };
    let cfg = GenerationConfig::for_length(32);
    // The decoy answer appears in 30% of samples.
    let w = decoy_weight(0.3, cfg.temperature);
    let denoiser = PerturbedDenoiser::with_noise(
        MarkovOracle::new(task.chain()?)?,
        MarkovOracle::new(task.decoy_chain()?)?,
        w,
    )?;
    let schedule = make_schedule(cfg.gen_len, cfg.block_size);
    let extractor = task.extractor();

    for seed in 0..6 {
        let cfg = GenerationConfig {
            seed,
            ..cfg.clone()
        };
        let run = dvoting_run(
            &task.prompt(),
            &cfg,
            &ConsistencyParams::default(),
            &denoiser,
            &schedule,
            &extractor,
        )?;
        let answers: Vec<&str> = run.per_sample_answers.iter().map(|a| a.display()).collect();
        let remasked: Vec<usize> = run
            .m_history
            .iter()
            .map(|m| m.iter().filter(|x| **x).count())
            .collect();
        println!(
            "seed {seed}: answers {answers:?} -> {} after {} steps ({}), remasked per round {remasked:?}",
            run.final_answer.display(),
            run.steps.forwards(),
            run.stop_reason.as_str()
        );
    }

    let majority = vote_run(
        &task.prompt(),
        &cfg,
        CommitRule::half_steps(),
        &denoiser,
        &schedule,
        &extractor,
    )?;
    println!(
        "majority of {}: {} after {} steps",
        majority.samples_used,
        majority.final_answer.display(),
        majority.steps.forwards()
    );
    Ok(())
}
