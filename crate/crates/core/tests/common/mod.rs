//! Brute-force references shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use dvote::denoiser::MarkovSpec;
use dvote::engine::Answer;
use dvote::sequence::{MaskedSequence, TokenId};
use rand::Rng;

/// Random row-stochastic chain over `v` tokens; `sparse` zeroes some entries.
pub fn random_spec<R: Rng>(rng: &mut R, v: usize, sparse: bool) -> MarkovSpec {
    let row = |rng: &mut R| {
        let mut r: Vec<f64> = (0..v)
            .map(|_| {
                if sparse && rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.05..1.0)
                }
            })
            .collect();
        if r.iter().all(|&x| x == 0.0) {
            r[rng.random_range(0..v)] = 1.0;
        }
        let z: f64 = r.iter().sum();
        r.into_iter().map(|x| x / z).collect::<Vec<f64>>()
    };
    let initial = row(rng);
    let transition = (0..v).map(|_| row(rng)).collect();
    MarkovSpec::new(initial, transition).unwrap()
}

/// Marginals of every masked gen slot by enumerating all completions.
/// `None` when the evidence has zero probability.
pub fn brute_conditionals(
    spec: &MarkovSpec,
    seq: &MaskedSequence,
) -> Option<BTreeMap<usize, Vec<f64>>> {
    let v = spec.vocab_size();
    let masked = seq.masked_positions();
    let mut marg: BTreeMap<usize, Vec<f64>> = masked.iter().map(|&p| (p, vec![0.0; v])).collect();
    let mut z = 0.0;
    let total = v.pow(masked.len() as u32);
    let mut gen: Vec<TokenId> = seq.gen().iter().map(|s| s.unwrap_or(0)).collect();
    for code in 0..total {
        let mut c = code;
        for &p in &masked {
            gen[p] = (c % v) as TokenId;
            c /= v;
        }
        let mut full = seq.prompt().to_vec();
        full.extend(&gen);
        let w = spec.sequence_probability(&full);
        z += w;
        for &p in &masked {
            marg.get_mut(&p).unwrap()[gen[p] as usize] += w;
        }
    }
    if z <= 0.0 {
        return None;
    }
    for d in marg.values_mut() {
        d.iter_mut().for_each(|x| *x /= z);
    }
    Some(marg)
}

/// NUPR@k by direct counting.
pub fn brute_nupr(samples: &[Vec<TokenId>], k: usize) -> f64 {
    let l = samples[0].len();
    let mut hit = 0;
    for i in 0..l {
        let mut counts: HashMap<TokenId, usize> = HashMap::new();
        for s in samples {
            *counts.entry(s[i]).or_default() += 1;
        }
        if counts.values().any(|&c| c >= k) {
            hit += 1;
        }
    }
    hit as f64 / l as f64
}

/// Modal vote share, unparseable answers pooled into one value.
pub fn brute_consistency(answers: &[Answer]) -> f64 {
    let mut counts: HashMap<Option<&str>, usize> = HashMap::new();
    for a in answers {
        let key = a.parseable.then_some(a.value.as_str());
        *counts.entry(key).or_default() += 1;
    }
    *counts.values().max().unwrap() as f64 / answers.len() as f64
}

/// Exact P(Binomial(n, p) > n/2).
pub fn binomial_majority(n: u64, p: f64) -> f64 {
    let choose = |n: u64, k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (n / 2 + 1..=n)
        .map(|j| choose(n, j) * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32))
        .sum()
}
