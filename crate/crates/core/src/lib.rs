//! Consistency-guided remask voting for masked diffusion language models,
//! with an exact Markov-chain oracle and a benchmark harness.
//!
//! A run decodes up to `n` samples. Before each one, positions where the
//! earlier samples agree are kept and the rest are remasked, and sampling
//! stops as soon as the extracted answers converge. Cost is counted in
//! denoiser forward calls.
//!
//! ```
//! use dvote::prelude::*;
//!
//! let spec = MarkovSpec::new(vec![0.5, 0.5], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
//! let oracle = MarkovOracle::new(spec).unwrap();
//! let mut cfg = GenerationConfig::for_length(8);
//! cfg.temperature = 0.0;
//! let schedule = make_schedule(cfg.gen_len, cfg.block_size);
//! let extractor = ExtractorSpec::new(1).with_rendering(Rendering::Ids);
//! let run = dvoting_run(&[0], &cfg, &ConsistencyParams::default(), &oracle, &schedule, &extractor).unwrap();
//! assert_eq!(run.samples_used, 2);
//! ```

pub mod config;
pub mod consistency;
pub mod decode;
pub mod denoiser;
pub mod engine;
pub mod error;
pub mod harness;
pub mod ledger;
pub mod schedule;
pub mod seeding;
pub mod sequence;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::config::GenerationConfig;
    pub use crate::consistency::{
        compute_remask_mask, nupr_at_k, token_agreement, voting_consistency_level,
        ConsistencyParams, SampleSet,
    };
    pub use crate::decode::{decode_sequence, decode_with_rule, CommitRule, DecodeOutcome};
    pub use crate::denoiser::{
        exact_conditionals, Denoiser, DistributionSet, MarkovOracle, MarkovSpec, PerturbedDenoiser,
        RemoteDenoiser, UniformDenoiser,
    };
    pub use crate::engine::{
        dvoting_run, extract_answer, majority_vote, vote_run, Answer, AnswerType, ExtractorSpec,
        Rendering, RunResult, StopReason,
    };
    pub use crate::error::{Error, Result};
    pub use crate::ledger::StepLedger;
    pub use crate::schedule::{make_schedule, BlockSchedule};
    pub use crate::sequence::{mask_sequence, MaskedSequence, TokenId, VocabSpec};
}
