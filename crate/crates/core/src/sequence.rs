//! Vocabularies, masked sequences and the forward masking process.
//!
//! Tokens are dense ids in `[0, V)`. The mask symbol is the id `V` itself, so it
//! can be carried over the wire without colliding with an ordinary token, but it
//! never appears inside a [`MaskedSequence`]: masked slots are `None`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VocabSpec {
    size: u32,
}

impl VocabSpec {
    pub fn new(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(Error::config(format!(
                "vocabulary size must be >= 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn mask_id(&self) -> TokenId {
        self.size
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token < self.size
    }
}

/// A prompt followed by `L` generation slots, each either committed or masked.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskedSequence {
    vocab: VocabSpec,
    prompt: Vec<TokenId>,
    gen: Vec<Option<TokenId>>,
}

impl MaskedSequence {
    /// A sequence whose whole generation region is masked.
    pub fn fully_masked(vocab: VocabSpec, prompt: Vec<TokenId>, gen_len: usize) -> Result<Self> {
        Self::from_slots(vocab, prompt, vec![None; gen_len])
    }

    /// A fully committed sequence.
    pub fn committed(vocab: VocabSpec, prompt: Vec<TokenId>, gen: Vec<TokenId>) -> Result<Self> {
        Self::from_slots(vocab, prompt, gen.into_iter().map(Some).collect())
    }

    pub fn from_slots(
        vocab: VocabSpec,
        prompt: Vec<TokenId>,
        gen: Vec<Option<TokenId>>,
    ) -> Result<Self> {
        if gen.is_empty() {
            return Err(Error::config("generation length must be >= 1"));
        }
        if let Some(t) = prompt.iter().find(|t| !vocab.contains(**t)) {
            return Err(Error::domain(format!(
                "prompt token {t} outside vocabulary"
            )));
        }
        if let Some(t) = gen.iter().flatten().find(|t| !vocab.contains(**t)) {
            return Err(Error::domain(format!(
                "generation token {t} outside vocabulary"
            )));
        }
        Ok(Self { vocab, prompt, gen })
    }

    pub fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.prompt
    }

    pub fn gen(&self) -> &[Option<TokenId>] {
        &self.gen
    }

    pub fn gen_len(&self) -> usize {
        self.gen.len()
    }

    /// Gen slot `i` as seen from the full (prompt + gen) sequence.
    pub fn absolute(&self, i: usize) -> usize {
        self.prompt.len() + i
    }

    /// Slot at absolute index over prompt ++ gen.
    pub fn slot(&self, abs: usize) -> Option<TokenId> {
        if abs < self.prompt.len() {
            Some(self.prompt[abs])
        } else {
            self.gen[abs - self.prompt.len()]
        }
    }

    pub fn total_len(&self) -> usize {
        self.prompt.len() + self.gen.len()
    }

    pub fn is_masked(&self, i: usize) -> bool {
        self.gen[i].is_none()
    }

    pub fn masked_positions(&self) -> Vec<usize> {
        self.masked_in(0..self.gen.len())
    }

    pub fn masked_in(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        range.filter(|&i| self.gen[i].is_none()).collect()
    }

    pub fn mask_count(&self) -> usize {
        self.gen.iter().filter(|s| s.is_none()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.gen.iter().all(Option::is_some)
    }

    /// Commit a token into a masked slot. Committed slots are never overwritten.
    pub fn commit(&mut self, i: usize, token: TokenId) -> Result<()> {
        if !self.vocab.contains(token) {
            return Err(Error::domain(format!("token {token} outside vocabulary")));
        }
        match self.gen.get(i) {
            None => Err(Error::domain(format!(
                "position {i} beyond generation length"
            ))),
            Some(Some(_)) => Err(Error::domain(format!("position {i} already committed"))),
            Some(None) => {
                self.gen[i] = Some(token);
                Ok(())
            }
        }
    }

    pub fn remask(&mut self, i: usize) {
        self.gen[i] = None;
    }

    /// Committed generation tokens, or `None` while any slot is still masked.
    pub fn tokens(&self) -> Option<Vec<TokenId>> {
        self.gen.iter().copied().collect()
    }

    /// Prompt ++ gen with masks rendered as `mask_id`.
    pub fn wire_tokens(&self) -> Vec<TokenId> {
        let mask = self.vocab.mask_id();
        self.prompt
            .iter()
            .copied()
            .chain(self.gen.iter().map(|s| s.unwrap_or(mask)))
            .collect()
    }
}

/// Independently mask each generation position with probability `t`.
pub fn mask_sequence<R: Rng + ?Sized>(
    x0: &MaskedSequence,
    t: f64,
    rng: &mut R,
) -> Result<MaskedSequence> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!(
            "masking intensity {t} outside [0, 1]"
        )));
    }
    if !x0.is_complete() {
        return Err(Error::domain(
            "mask_sequence expects a fully committed sequence",
        ));
    }
    let mut out = x0.clone();
    for i in 0..out.gen.len() {
        // Always draw so the stream position does not depend on t.
        let u: f64 = rng.random();
        if u < t {
            out.gen[i] = None;
        }
    }
    Ok(out)
}
