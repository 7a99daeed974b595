//! Synthetic question family backed by an exactly solvable chain.
//!
//! Token layout for a vocabulary of `V` tokens:
//!
//! ```text
//! 0..=9   answer digits
//! 10      separator
//! 11      pad (absorbing)
//! 12      start (the prompt)
//! 13..V   path tokens
//! ```
//!
//! The chain walks a seeded path of distinct tokens, emits the separator,
//! draws the answer digit from the separator's row, then pads to the end.
//! The gold answer is the modal digit of that row.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::MarkovSpec;
use crate::engine::{AnswerType, ExtractorSpec, Rendering};
use crate::error::{Error, Result};
use crate::seeding::question_seed;
use crate::sequence::TokenId;

use super::tasks::{PromptSpec, TaskRecord};

pub const DIGITS: u32 = 10;
pub const SEP: TokenId = 10;
pub const PAD: TokenId = 11;
pub const START: TokenId = 12;
pub const FIRST_PATH: TokenId = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub vocab: u32,
    pub gen_len: usize,
    pub gold: u32,
    /// The single competing digit used by decoy noise.
    pub decoy: u32,
    /// Probability of the gold digit after the separator; the remainder is
    /// spread over the other digits with seeded weights.
    #[serde(default = "one")]
    pub answer_mass: f64,
    /// Uniform mass mixed into every row of the chain.
    #[serde(default)]
    pub smoothing: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        if self.vocab <= FIRST_PATH {
            return Err(Error::config(format!(
                "synthetic vocabulary must exceed {FIRST_PATH}, got {}",
                self.vocab
            )));
        }
        if self.gen_len < 2 {
            return Err(Error::config("synthetic gen_len must be >= 2"));
        }
        if self.gold >= DIGITS || self.decoy >= DIGITS || self.gold == self.decoy {
            return Err(Error::config("gold and decoy must be distinct digits"));
        }
        // Other digits get at most (1 - m)/5 each, so m > 1/6 keeps gold modal.
        if !(self.answer_mass > 1.0 / 6.0 && self.answer_mass <= 1.0) {
            return Err(Error::config(format!(
                "answer_mass must be in (1/6, 1], got {}",
                self.answer_mass
            )));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(Error::config(format!(
                "smoothing must be in [0, 1), got {}",
                self.smoothing
            )));
        }
        Ok(())
    }

    pub fn path_len(&self) -> usize {
        ((self.vocab - FIRST_PATH) as usize).min(self.gen_len - 2)
    }

    pub fn prompt(&self) -> Vec<TokenId> {
        vec![START]
    }

    pub fn extractor(&self) -> ExtractorSpec {
        ExtractorSpec {
            separator: SEP,
            terminator: Some(PAD),
            rendering: Rendering::Digits,
            answer_type: AnswerType::Numeric,
        }
    }

    pub fn gold_answer(&self) -> String {
        self.gold.to_string()
    }

    fn path(&self) -> Vec<TokenId> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pool: Vec<TokenId> = (FIRST_PATH..self.vocab).collect();
        pool.shuffle(&mut rng);
        pool.truncate(self.path_len());
        pool
    }

    fn answer_row(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x005e_ed0f_d161);
        let mut row = vec![0.0; DIGITS as usize];
        let others: Vec<u32> = (0..DIGITS).filter(|&d| d != self.gold).collect();
        let weights: Vec<f64> = others.iter().map(|_| rng.random_range(0.5..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (d, w) in others.iter().zip(&weights) {
            row[*d as usize] = (1.0 - self.answer_mass) * w / total;
        }
        row[self.gold as usize] = self.answer_mass;
        row
    }

    fn build(&self, answer_row: &[f64]) -> Result<MarkovSpec> {
        self.validate()?;
        let v = self.vocab as usize;
        let mut t = vec![vec![0.0; v]; v];
        let path = self.path();
        let mut prev = START;
        for &p in &path {
            t[prev as usize][p as usize] = 1.0;
            prev = p;
        }
        t[prev as usize][SEP as usize] = 1.0;
        t[SEP as usize][..DIGITS as usize].copy_from_slice(answer_row);
        for row in t.iter_mut() {
            if row.iter().sum::<f64>() == 0.0 {
                row[PAD as usize] = 1.0;
            }
        }
        let mut initial = vec![0.0; v];
        initial[START as usize] = 1.0;
        let spec = MarkovSpec::new(initial, t)?;
        Ok(if self.smoothing > 0.0 {
            spec.smoothed(self.smoothing)
        } else {
            spec
        })
    }

    /// The question's ground-truth chain.
    pub fn chain(&self) -> Result<MarkovSpec> {
        self.build(&self.answer_row())
    }

    /// The same chain with the separator forced onto the decoy digit.
    pub fn decoy_chain(&self) -> Result<MarkovSpec> {
        let mut row = vec![0.0; DIGITS as usize];
        row[self.decoy as usize] = 1.0;
        self.build(&row)
    }

    /// The generation the chain's mode produces.
    pub fn reference_generation(&self, gen_len: usize) -> Vec<TokenId> {
        let mut out = self.path();
        out.push(SEP);
        out.push(self.gold);
        out.resize(gen_len.max(out.len()), PAD);
        out.truncate(gen_len);
        out
    }
}

/// Suite-level knobs for [`synth_tasks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub vocab: u32,
    pub gen_len: usize,
    pub count: usize,
    pub seed: u64,
    pub answer_mass: f64,
    pub smoothing: f64,
}

impl SuiteSpec {
    pub fn new(vocab: u32, gen_len: usize, count: usize, seed: u64) -> Self {
        Self {
            vocab,
            gen_len,
            count,
            seed,
            answer_mass: 1.0,
            smoothing: 0.0,
        }
    }
}

/// Emit `count` seeded synthetic questions.
pub fn synth_tasks(spec: &SuiteSpec) -> Result<Vec<TaskRecord>> {
    let width = spec.count.max(1).to_string().len().max(4);
    (0..spec.count)
        .map(|i| {
            let id = format!("q{i:0width$}");
            let mut rng = ChaCha8Rng::seed_from_u64(question_seed(spec.seed, &id));
            let gold = rng.random_range(0..DIGITS);
            let decoy = (gold + rng.random_range(1..DIGITS)) % DIGITS;
            let params = SyntheticParams {
                vocab: spec.vocab,
                gen_len: spec.gen_len,
                gold,
                decoy,
                answer_mass: spec.answer_mass,
                smoothing: spec.smoothing,
                seed: rng.random(),
            };
            params.validate()?;
            Ok(TaskRecord {
                id,
                gold: params.gold_answer(),
                answer_type: AnswerType::Numeric,
                prompt: PromptSpec::Synthetic { synthetic: params },
                extractor: None,
                line: 0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::extract_answer;

    fn params() -> SyntheticParams {
        SyntheticParams {
            vocab: 20,
            gen_len: 12,
            gold: 4,
            decoy: 7,
            answer_mass: 0.6,
            smoothing: 0.0,
            seed: 11,
        }
    }

    #[test]
    fn chain_is_stochastic_with_expected_layout() {
        let p = params();
        let c = p.chain().unwrap();
        c.validate().unwrap();
        assert_eq!(p.path_len(), 7);
        let reference = p.reference_generation(12);
        assert_eq!(reference.len(), 12);
        assert_eq!(reference[7], SEP);
        assert_eq!(reference[8], 4);
        assert!(reference[9..].iter().all(|&t| t == PAD));
        assert_eq!(extract_answer(&reference, &p.extractor()).value, "4");
        let mut full = p.prompt();
        full.extend(&reference);
        assert!(c.sequence_probability(&full) > 0.5);
    }

    #[test]
    fn gold_is_modal_after_separator() {
        let p = params();
        let c = p.chain().unwrap();
        let row = &c.transition[SEP as usize];
        let best = (0..10).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        assert_eq!(best, 4);
        assert!((row[..10].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoy_chain_only_changes_the_answer() {
        let p = params();
        let (c, d) = (p.chain().unwrap(), p.decoy_chain().unwrap());
        for a in 0..20 {
            if a != SEP as usize {
                assert_eq!(c.transition[a], d.transition[a]);
            }
        }
        assert_eq!(d.transition[SEP as usize][7], 1.0);
    }

    #[test]
    fn suite_is_seeded_and_valid() {
        let spec = SuiteSpec::new(24, 32, 50, 3);
        let a = synth_tasks(&spec).unwrap();
        let b = synth_tasks(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        let ids: std::collections::HashSet<_> = a.iter().map(|t| &t.id).collect();
        assert_eq!(ids.len(), 50);
        let golds: std::collections::HashSet<_> = a.iter().map(|t| t.gold.clone()).collect();
        assert!(golds.len() > 3);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params();
        p.decoy = p.gold;
        assert!(p.chain().is_err());
        let mut p = params();
        p.vocab = 13;
        assert!(p.validate().is_err());
        let mut p = params();
        p.answer_mass = 0.1;
        assert!(p.validate().is_err());
    }
}
