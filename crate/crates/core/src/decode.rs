//! Entropy-threshold parallel decoding over a semi-autoregressive block schedule.
//!
//! Blocks are filled left to right. Inside a block every denoiser call scores
//! the block's remaining masks, and every position whose (temperature-adjusted)
//! entropy is strictly below `alpha` is committed at once. When nothing clears
//! the threshold the single lowest-entropy position is committed so each call
//! makes progress.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::GenerationConfig;
use crate::denoiser::{top_p_filter, Denoiser, DistributionSet};
use crate::error::{Error, Result};
use crate::ledger::StepLedger;
use crate::schedule::BlockSchedule;
use crate::sequence::{MaskedSequence, TokenId};

/// `-Σ p ln p` in nats, with `0 · ln 0 = 0`.
pub fn shannon_entropy(dist: &[f64]) -> f64 {
    let h: f64 = dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Positions with entropy strictly below `alpha`, or the lowest-entropy
/// position (lowest index on ties) when that set would be empty.
pub fn select_commit_set(dists: &DistributionSet, alpha: f64) -> Vec<usize> {
    let scored: Vec<(usize, f64)> = dists.iter().map(|(p, d)| (p, shannon_entropy(d))).collect();
    let chosen: Vec<usize> = scored
        .iter()
        .filter(|(_, h)| *h < alpha)
        .map(|(p, _)| *p)
        .collect();
    if !chosen.is_empty() || scored.is_empty() {
        return chosen;
    }
    lowest_entropy(&scored, 1)
}

fn lowest_entropy(scored: &[(usize, f64)], k: usize) -> Vec<usize> {
    let mut order = scored.to_vec();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut picked: Vec<usize> = order.into_iter().take(k).map(|(p, _)| p).collect();
    picked.sort_unstable();
    picked
}

/// How many positions a denoiser call is allowed to commit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum CommitRule {
    /// Everything below the entropy threshold, with forced progress.
    EntropyThreshold { alpha: f64 },
    /// Exactly the `per_step` lowest-entropy positions (1 = N steps, 2 = N/2).
    LowestEntropy { per_step: usize },
}

impl CommitRule {
    pub fn full_steps() -> Self {
        CommitRule::LowestEntropy { per_step: 1 }
    }

    pub fn half_steps() -> Self {
        CommitRule::LowestEntropy { per_step: 2 }
    }

    pub fn select(&self, dists: &DistributionSet) -> Vec<usize> {
        match *self {
            CommitRule::EntropyThreshold { alpha } => select_commit_set(dists, alpha),
            CommitRule::LowestEntropy { per_step } => {
                let scored: Vec<(usize, f64)> =
                    dists.iter().map(|(p, d)| (p, shannon_entropy(d))).collect();
                lowest_entropy(&scored, per_step.max(1))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitDecision {
    pub position: usize,
    pub token: TokenId,
    pub entropy: f64,
    /// Index of the denoiser call (within this decode) that produced the token.
    pub step_index: u64,
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub sequence: MaskedSequence,
    pub commits: Vec<CommitDecision>,
    pub steps: u64,
}

/// Fill every mask in `seq` with the entropy-threshold rule at `cfg.alpha`.
pub fn decode_sequence<D, R>(
    seq: &MaskedSequence,
    schedule: &BlockSchedule,
    cfg: &GenerationConfig,
    denoiser: &D,
    rng: &mut R,
    ledger: &mut StepLedger,
) -> Result<DecodeOutcome>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    decode_with_rule(
        seq,
        schedule,
        CommitRule::EntropyThreshold { alpha: cfg.alpha },
        cfg,
        denoiser,
        rng,
        ledger,
    )
}

pub fn decode_with_rule<D, R>(
    seq: &MaskedSequence,
    schedule: &BlockSchedule,
    rule: CommitRule,
    cfg: &GenerationConfig,
    denoiser: &D,
    rng: &mut R,
    ledger: &mut StepLedger,
) -> Result<DecodeOutcome>
where
    D: Denoiser + ?Sized,
    R: Rng + ?Sized,
{
    if schedule.gen_len() != seq.gen_len() {
        return Err(Error::config(format!(
            "schedule covers {} positions but the sequence has {}",
            schedule.gen_len(),
            seq.gen_len()
        )));
    }
    let vocab = denoiser.vocab();
    if vocab != seq.vocab() {
        return Err(Error::config("denoiser and sequence vocabularies differ"));
    }
    let mut seq = seq.clone();
    let mut commits = Vec::new();
    let mut steps = 0u64;

    for block in schedule.blocks() {
        loop {
            let masked = seq.masked_in(block.clone());
            if masked.is_empty() {
                break;
            }
            ledger.charge();
            let step_index = steps;
            steps += 1;
            let mut dists = denoiser.predict(&seq, &masked, cfg.temperature)?;
            dists.validate(vocab, &masked)?;
            if let Some(p) = cfg.top_p {
                dists = dists.map_values(|d| top_p_filter(d, p));
            }
            for pos in rule.select(&dists) {
                let dist = dists.get(pos).expect("selected from dists");
                let token = sample_token(dist, cfg.temperature, rng)?;
                seq.commit(pos, token)?;
                commits.push(CommitDecision {
                    position: pos,
                    token,
                    entropy: shannon_entropy(dist),
                    step_index,
                });
            }
        }
    }
    debug_assert!(seq.is_complete());
    Ok(DecodeOutcome {
        sequence: seq,
        commits,
        steps,
    })
}

/// Categorical draw, or argmax (lowest id on ties) at `T = 0`.
pub fn sample_token<R: Rng + ?Sized>(
    dist: &[f64],
    temperature: f64,
    rng: &mut R,
) -> Result<TokenId> {
    if temperature == 0.0 {
        return Ok(crate::denoiser::argmax(dist));
    }
    let w = WeightedIndex::new(dist)
        .map_err(|e| Error::Protocol(format!("unsampleable distribution: {e}")))?;
    Ok(w.sample(rng) as TokenId)
}
