//! Exact conditionals of a Markov chain given a partially observed sequence.

use dvote::prelude::*;

fn main() -> Result<()> {
    // 0 -> 1 -> 2 -> 0 with a little slack.
    let spec = MarkovSpec::new(
        vec![1.0 / 3.0; 3],
        vec![
            vec![0.1, 0.8, 0.1],
            vec![0.1, 0.1, 0.8],
            vec![0.8, 0.1, 0.1],
        ],
    )?;
    let vocab = spec.vocab();
    let seq = MaskedSequence::from_slots(vocab, vec![0], vec![None, None, Some(0), None])?;

    let dists = exact_conditionals(&spec, &seq)?;
    for (p, d) in dists.iter() {
        println!(
            "position {p}: {:?}",
            d.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>()
        );
    }

    // Same numbers by enumerating all 27 completions.
    let masked = seq.masked_positions();
    let mut marg = vec![vec![0.0; 3]; 4];
    let mut z = 0.0;
    for code in 0..27u32 {
        let mut gen: Vec<TokenId> = seq.gen().iter().map(|s| s.unwrap_or(0)).collect();
        for (k, &p) in masked.iter().enumerate() {
            gen[p] = (code / 3u32.pow(k as u32)) % 3;
        }
        let mut full = seq.prompt().to_vec();
        full.extend(&gen);
        let w = spec.sequence_probability(&full);
        z += w;
        for &p in &masked {
            marg[p][gen[p] as usize] += w;
        }
    }
    let worst = masked
        .iter()
        .flat_map(|&p| (0..3).map(move |a| (p, a)))
        .map(|(p, a)| (marg[p][a] / z - dists.get(p).unwrap()[a]).abs())
        .fold(0.0, f64::max);
    println!("max difference from enumeration: {worst:.1e}");

    // The oracle wraps the same computation behind the denoiser interface.
    let oracle = MarkovOracle::new(spec)?;
    let cold = oracle.predict(&seq, &masked, 0.5)?;
    println!("position 0 at T=0.5: {:?}", cold.get(0).unwrap());
    Ok(())
}
