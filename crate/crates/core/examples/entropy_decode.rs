//! Entropy-threshold parallel decoding: step counts across thresholds.

use dvote::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let spec = MarkovSpec::new(
        vec![0.9, 0.05, 0.05],
        vec![
            vec![0.02, 0.96, 0.02],
            vec![0.02, 0.02, 0.96],
            vec![0.6, 0.2, 0.2],
        ],
    )?;
    let oracle = MarkovOracle::new(spec)?;
    let gen_len = 24;
    let seq = MaskedSequence::fully_masked(oracle.spec().vocab(), vec![0], gen_len)?;
    let schedule = make_schedule(gen_len, 8);
    println!("{} blocks of {}", schedule.len(), schedule.block_size());

    for alpha in [0.0, 0.1, 0.3, 0.7, f64::INFINITY] {
        let mut cfg = GenerationConfig::for_length(gen_len);
        cfg.block_size = 8;
        cfg.alpha = alpha;
        let mut ledger = StepLedger::new();
        let out = decode_sequence(
            &seq,
            &schedule,
            &cfg,
            &oracle,
            &mut ChaCha8Rng::seed_from_u64(1),
            &mut ledger,
        )?;
        let mut per_step = vec![0; out.steps as usize];
        for c in &out.commits {
            per_step[c.step_index as usize] += 1;
        }
        println!(
            "alpha={alpha:<4} steps={:>2} commits/step={per_step:?}",
            out.steps
        );
    }

    let mut cfg = GenerationConfig::for_length(gen_len);
    cfg.block_size = 8;
    for (name, rule) in [
        ("full", CommitRule::full_steps()),
        ("half", CommitRule::half_steps()),
    ] {
        let mut ledger = StepLedger::new();
        let out = decode_with_rule(
            &seq,
            &schedule,
            rule,
            &cfg,
            &oracle,
            &mut ChaCha8Rng::seed_from_u64(1),
            &mut ledger,
        )?;
        println!("{name} steps: {}", out.steps);
    }
    Ok(())
}
