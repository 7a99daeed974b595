//! The remask-and-vote loop.
//!
//! For each of up to `n` samples: look at the samples collected so far, stop
//! if their answers (or their tokens) have converged, otherwise retain the
//! positions they agree on, remask the rest and decode. The final answer is a
//! majority vote over every collected sample.

mod answer;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use answer::{
    canonicalize, extract_answer, majority_vote, Answer, AnswerType, ExtractorSpec, Rendering,
};

use crate::config::GenerationConfig;
use crate::consistency::{check_answer_stop, compute_remask_mask, ConsistencyParams, SampleSet};
use crate::decode::{decode_with_rule, CommitRule};
use crate::denoiser::Denoiser;
use crate::error::{Error, Result};
use crate::ledger::StepLedger;
use crate::schedule::BlockSchedule;
use crate::seeding::sample_seed;
use crate::sequence::{MaskedSequence, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AnswerConverged,
    TokenConverged,
    BudgetExhausted,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::AnswerConverged => "answer_converged",
            StopReason::TokenConverged => "token_converged",
            StopReason::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_answer: Answer,
    pub samples_used: usize,
    /// Samples abandoned because the denoiser failed; their steps stay charged.
    pub failed_samples: usize,
    pub steps: StepLedger,
    pub per_sample_answers: Vec<Answer>,
    pub samples: Vec<Vec<TokenId>>,
    pub stop_reason: StopReason,
    /// Remask mask computed before each sample after the first (`true` = remask).
    pub m_history: Vec<Vec<bool>>,
}

impl RunResult {
    pub fn sample_set(&self) -> SampleSet {
        SampleSet::from_parts(self.samples.clone(), self.per_sample_answers.clone())
            .expect("samples and answers are collected together")
    }
}

/// Whether a decode failure should drop the sample (true) or abort the run.
fn is_sample_failure(e: &Error) -> bool {
    matches!(e, Error::Transport(_) | Error::Protocol(_))
}

/// Consistency-guided remask sampling with early stopping, then a vote.
pub fn dvoting_run<D: Denoiser + ?Sized>(
    prompt: &[TokenId],
    cfg: &GenerationConfig,
    cparams: &ConsistencyParams,
    denoiser: &D,
    schedule: &BlockSchedule,
    extractor: &ExtractorSpec,
) -> Result<RunResult> {
    cfg.validate()?;
    cparams.validate()?;
    let vocab = denoiser.vocab();
    let rule = CommitRule::EntropyThreshold { alpha: cfg.alpha };
    let mut set = SampleSet::new();
    let mut ledger = StepLedger::new();
    let mut m_history = Vec::new();
    let mut failed = 0;
    let mut stop_reason = StopReason::BudgetExhausted;

    for i in 0..cfg.max_samples {
        let mut seq = MaskedSequence::fully_masked(vocab, prompt.to_vec(), cfg.gen_len)?;
        if !set.is_empty() {
            let mask = compute_remask_mask(&set, cparams);
            m_history.push(mask.remask.clone());
            if check_answer_stop(set.answers(), cparams) {
                stop_reason = StopReason::AnswerConverged;
                break;
            }
            if set.len() >= 2 && mask.all_retained() {
                stop_reason = StopReason::TokenConverged;
                break;
            }
            for (pos, (&remask, &token)) in mask.remask.iter().zip(&mask.tokens).enumerate() {
                if !remask {
                    seq.commit(pos, token)?;
                }
            }
        }

        ledger.begin_sample();
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, i));
        match decode_with_rule(&seq, schedule, rule, cfg, denoiser, &mut rng, &mut ledger) {
            Ok(out) => {
                let tokens = out.sequence.tokens().expect("decode fills every mask");
                let answer = extract_answer(&tokens, extractor);
                set.push(tokens, answer)?;
            }
            Err(e) if is_sample_failure(&e) => {
                warn!("sample {i} dropped: {e}");
                failed += 1;
            }
            Err(e) => return Err(e),
        }
    }
    finish(set, ledger, failed, stop_reason, m_history)
}

/// `n` independent decodes under `rule`, then a vote. No early stopping.
///
/// With `max_samples = 1` and [`CommitRule::full_steps`] this is the
/// single-decode baseline; with [`CommitRule::half_steps`] it is plain
/// majority voting.
pub fn vote_run<D: Denoiser + ?Sized>(
    prompt: &[TokenId],
    cfg: &GenerationConfig,
    rule: CommitRule,
    denoiser: &D,
    schedule: &BlockSchedule,
    extractor: &ExtractorSpec,
) -> Result<RunResult> {
    cfg.validate()?;
    let vocab = denoiser.vocab();
    let mut set = SampleSet::new();
    let mut ledger = StepLedger::new();
    let mut failed = 0;
    for i in 0..cfg.max_samples {
        let seq = MaskedSequence::fully_masked(vocab, prompt.to_vec(), cfg.gen_len)?;
        ledger.begin_sample();
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(cfg.seed, i));
        match decode_with_rule(&seq, schedule, rule, cfg, denoiser, &mut rng, &mut ledger) {
            Ok(out) => {
                let tokens = out.sequence.tokens().expect("decode fills every mask");
                let answer = extract_answer(&tokens, extractor);
                set.push(tokens, answer)?;
            }
            Err(e) if is_sample_failure(&e) => {
                warn!("sample {i} dropped: {e}");
                failed += 1;
            }
            Err(e) => return Err(e),
        }
    }
    finish(set, ledger, failed, StopReason::BudgetExhausted, Vec::new())
}

fn finish(
    set: SampleSet,
    steps: StepLedger,
    failed_samples: usize,
    stop_reason: StopReason,
    m_history: Vec<Vec<bool>>,
) -> Result<RunResult> {
    if set.is_empty() {
        return Err(Error::Run(format!("all {failed_samples} samples failed")));
    }
    let final_answer = majority_vote(set.answers())?;
    Ok(RunResult {
        final_answer,
        samples_used: set.len(),
        failed_samples,
        steps,
        per_sample_answers: set.answers().to_vec(),
        samples: set.samples().to_vec(),
        stop_reason,
        m_history,
    })
}
