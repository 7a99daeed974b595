//! Forward masking at a few intensities, then refilling the masks.

use dvote::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn render(seq: &MaskedSequence) -> String {
    seq.gen()
        .iter()
        .map(|s| match s {
            Some(t) => t.to_string(),
            None => "_".into(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<()> {
    let vocab = VocabSpec::new(10)?;
    let x0 = MaskedSequence::committed(vocab, vec![], (0..16).map(|i| i % 10).collect())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let xt = mask_sequence(&x0, t, &mut rng)?;
        println!("t={t:<4} masked {:>2}/16  {}", xt.mask_count(), render(&xt));
    }

    let mut xt = mask_sequence(&x0, 0.5, &mut rng)?;
    for p in xt.masked_positions() {
        xt.commit(p, x0.gen()[p].unwrap())?;
    }
    assert_eq!(xt, x0);
    println!("refilled sequence equals the original");
    println!("mask id on the wire: {}", vocab.mask_id());
    Ok(())
}
