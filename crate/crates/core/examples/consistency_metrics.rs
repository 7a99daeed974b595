//! Cross-sample agreement: NUPR@k, vote share, the remask mask and stop checks.

use dvote::consistency::{check_answer_stop, check_token_stop, modal_answer};
use dvote::prelude::*;

fn main() -> Result<()> {
    let samples = vec![
        vec![4, 4, 7, 1, 9, 2],
        vec![4, 4, 7, 3, 9, 2],
        vec![4, 5, 7, 1, 8, 2],
        vec![3, 4, 6, 3, 9, 5],
        vec![4, 5, 6, 0, 0, 5],
    ];
    let answers = ["12", "15", "12", "30", "15"].map(Answer::parsed).to_vec();
    let set = SampleSet::from_parts(samples, answers)?;

    for k in 1..=set.len() {
        println!("NUPR@{k} = {:.3}", nupr_at_k(&set, k)?);
    }
    println!(
        "vote share of the modal answer: {}",
        voting_consistency_level(set.answers())?
    );
    println!("modal answer: {:?}", modal_answer(set.answers()));

    let params = ConsistencyParams::default();
    let mask = compute_remask_mask(&set, &params);
    let row: String = mask
        .remask
        .iter()
        .map(|&m| if m { 'M' } else { '.' })
        .collect();
    println!(
        "remask pattern {row} (M = regenerate), kept tokens {:?}",
        mask.tokens
    );
    println!("answer stop: {}", check_answer_stop(set.answers(), &params));
    println!("token stop: {}", check_token_stop(&set, &params));

    let strict = ConsistencyParams {
        tau_frac: 1.0,
        ..params
    };
    println!(
        "remask count with unanimous retention: {}",
        compute_remask_mask(&set, &strict).remask_count()
    );
    Ok(())
}
