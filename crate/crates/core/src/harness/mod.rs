//! Benchmark harness: task files, method runners, sweeps and reports.

mod report;
mod synth;
mod tasks;

use std::collections::BTreeMap;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, round_sig};
pub use synth::{synth_tasks, SuiteSpec, SyntheticParams, DIGITS, FIRST_PATH, PAD, SEP, START};
pub use tasks::{ingest_tasks, write_tasks, PromptSpec, TaskRecord};

use crate::config::{parse_f64_or_inf, GenerationConfig};
use crate::consistency::{modal_answer, nupr_at_k, ConsistencyParams};
use crate::decode::CommitRule;
use crate::denoiser::{Denoiser, MarkovOracle, PerturbedDenoiser, RemoteDenoiser, UniformDenoiser};
use crate::engine::{canonicalize, dvoting_run, vote_run, RunResult, StopReason};
use crate::error::{Error, Result};
use crate::schedule::make_schedule;
use crate::seeding::question_seed;
use crate::sequence::VocabSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Baseline,
    Majority,
    Dvoting,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Majority => "majority",
            Method::Dvoting => "dvoting",
        }
    }

    /// The commit rule each method decodes with.
    pub fn rule(&self, cfg: &GenerationConfig) -> CommitRule {
        match self {
            Method::Baseline => CommitRule::full_steps(),
            Method::Majority => CommitRule::half_steps(),
            Method::Dvoting => CommitRule::EntropyThreshold { alpha: cfg.alpha },
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "majority" => Ok(Method::Majority),
            "dvoting" => Ok(Method::Dvoting),
            other => Err(Error::config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Mix in `1/V` everywhere.
    Uniform,
    /// Mix in the task's decoy chain, weighted so that a sampled answer is
    /// the decoy with probability exactly `eps` at the run temperature.
    Decoy,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NoiseKind::Uniform),
            "decoy" => Ok(NoiseKind::Decoy),
            other => Err(Error::config(format!("unknown noise kind {other:?}"))),
        }
    }
}

/// Which denoiser each question is scored with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DenoiserChoice {
    /// The task's own chain, exactly.
    Oracle,
    Perturbed {
        eps: f64,
        noise: NoiseKind,
    },
    Uniform {
        vocab: u32,
    },
    Remote {
        url: String,
        vocab: u32,
    },
}

/// Mixing weight giving a post-temperature answer error of `eps` between
/// two one-hot answer rows.
pub fn decoy_weight(eps: f64, temperature: f64) -> f64 {
    if temperature == 0.0 || eps == 0.0 || eps == 1.0 {
        return eps;
    }
    let a = eps.powf(temperature);
    let b = (1.0 - eps).powf(temperature);
    a / (a + b)
}

impl DenoiserChoice {
    pub fn build(&self, task: &TaskRecord, temperature: f64) -> Result<Box<dyn Denoiser>> {
        let synthetic = || match &task.prompt {
            PromptSpec::Synthetic { synthetic } => Ok(synthetic),
            PromptSpec::Literal(_) => Err(Error::config(format!(
                "task {}: the oracle denoisers need a synthetic prompt",
                task.id
            ))),
        };
        Ok(match self {
            DenoiserChoice::Oracle => Box::new(MarkovOracle::new(synthetic()?.chain()?)?),
            DenoiserChoice::Perturbed { eps, noise } => {
                let params = synthetic()?;
                let oracle = MarkovOracle::new(params.chain()?)?;
                match noise {
                    NoiseKind::Uniform => Box::new(PerturbedDenoiser::uniform(oracle, *eps)?),
                    NoiseKind::Decoy => {
                        let decoy = MarkovOracle::new(params.decoy_chain()?)?;
                        Box::new(PerturbedDenoiser::with_noise(
                            oracle,
                            decoy,
                            decoy_weight(*eps, temperature),
                        )?)
                    }
                }
            }
            DenoiserChoice::Uniform { vocab } => {
                Box::new(UniformDenoiser::new(VocabSpec::new(*vocab)?))
            }
            DenoiserChoice::Remote { url, vocab } => {
                Box::new(RemoteDenoiser::new(url, VocabSpec::new(*vocab)?))
            }
        })
    }
}

/// Everything needed to run one method over a task set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub method: Method,
    /// Report label; defaults to the method name.
    pub label: Option<String>,
    pub cfg: GenerationConfig,
    pub cparams: ConsistencyParams,
    pub denoiser: DenoiserChoice,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl RunPlan {
    pub fn new(method: Method, cfg: GenerationConfig, denoiser: DenoiserChoice) -> Self {
        Self {
            method,
            label: None,
            cfg,
            cparams: ConsistencyParams::default(),
            denoiser,
            jobs: 0,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.method.as_str().to_string())
    }

    /// The configuration actually decoded with (baseline pins one sample).
    pub fn effective_cfg(&self) -> GenerationConfig {
        let mut cfg = self.cfg.clone();
        if self.method == Method::Baseline {
            cfg.max_samples = 1;
        }
        cfg
    }
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    pub method: String,
    pub final_answer: String,
    pub correct: bool,
    pub samples_used: usize,
    pub steps: u64,
    pub stop_reason: StopReason,
    pub per_sample_answers: Vec<String>,
    /// Votes for the modal answer.
    #[serde(skip)]
    pub modal_votes: usize,
    /// `nupr[k - 1]` is NUPR@k over this question's samples.
    #[serde(skip)]
    pub nupr: Vec<f64>,
}

impl QuestionResult {
    fn new(task: &TaskRecord, label: &str, run: &RunResult) -> Result<Self> {
        let ty = task.answer_type;
        let correct = run.final_answer.parseable
            && canonicalize(&run.final_answer.value, ty) == canonicalize(&task.gold, ty);
        let set = run.sample_set();
        let nupr = (1..=set.len())
            .map(|k| nupr_at_k(&set, k))
            .collect::<Result<Vec<_>>>()?;
        let modal_votes = modal_answer(set.answers()).map(|(_, c)| c).unwrap_or(0);
        Ok(Self {
            id: task.id.clone(),
            method: label.to_string(),
            final_answer: run.final_answer.display().to_string(),
            correct,
            samples_used: run.samples_used,
            steps: run.steps.forwards(),
            stop_reason: run.stop_reason,
            per_sample_answers: run
                .per_sample_answers
                .iter()
                .map(|a| a.display().to_string())
                .collect(),
            modal_votes,
            nupr,
        })
    }
}

/// What a report was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSnapshot {
    pub generation: GenerationConfig,
    pub rule: CommitRule,
    pub consistency: Option<ConsistencyParams>,
    pub denoiser: DenoiserChoice,
    pub notes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub label: String,
    pub accuracy: f64,
    pub mean_steps: f64,
    pub mean_samples: f64,
    /// Against the baseline report of the same batch, in accuracy points.
    pub bpc: Option<f64>,
    /// `other.mean_steps / self.mean_steps` for every other report.
    pub speedup_vs: BTreeMap<String, f64>,
    pub questions: usize,
    pub skipped: usize,
    pub config: RunSnapshot,
    #[serde(skip)]
    pub results: Vec<QuestionResult>,
}

/// Benefits per cost: accuracy gain divided by the step-count ratio.
pub fn bpc(acc_new: f64, acc_base: f64, steps_new: f64, steps_base: f64) -> Result<f64> {
    if !(steps_new > 0.0 && steps_base > 0.0) {
        return Err(Error::domain(format!(
            "step counts must be positive, got {steps_new} and {steps_base}"
        )));
    }
    Ok((acc_new - acc_base) / (steps_new / steps_base))
}

fn notes() -> BTreeMap<String, String> {
    [
        ("step_unit", "denoiser forward calls"),
        ("mean_steps", "per-question mean of total forward calls"),
        ("entropy", "nats, after the temperature transform"),
        ("seeding", "question seed = global seed xor fnv1a(task id)"),
        (
            "retention",
            "modal count >= max(min_agree, ceil(tau_frac*K)); answer span when share > tau_ans",
        ),
        ("sampling", "categorical after temperature; top-p optional"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

fn run_question(task: &TaskRecord, plan: &RunPlan, label: &str) -> Result<QuestionResult> {
    let mut cfg = plan.effective_cfg();
    cfg.seed = question_seed(plan.cfg.seed, &task.id);
    let denoiser = plan.denoiser.build(task, cfg.temperature)?;
    let extractor = task.extractor()?;
    let schedule = make_schedule(cfg.gen_len, cfg.block_size);
    let prompt = task.prompt_tokens();
    let run = match plan.method {
        Method::Dvoting => dvoting_run(
            &prompt,
            &cfg,
            &plan.cparams,
            &denoiser,
            &schedule,
            &extractor,
        )?,
        m => vote_run(
            &prompt,
            &cfg,
            m.rule(&cfg),
            &denoiser,
            &schedule,
            &extractor,
        )?,
    };
    QuestionResult::new(task, label, &run)
}

/// Run one method over every task and aggregate.
pub fn run_method(tasks: &[TaskRecord], plan: &RunPlan) -> Result<MethodReport> {
    if tasks.is_empty() {
        return Err(Error::config("no tasks to run"));
    }
    let cfg = plan.effective_cfg();
    cfg.validate()?;
    if plan.method == Method::Dvoting {
        plan.cparams.validate()?;
    }
    let label = plan.label();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<QuestionResult>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| run_question(t, plan, &label))
            .collect()
    });

    let mut results = Vec::with_capacity(tasks.len());
    let mut first_err = None;
    for (task, outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                warn!(
                    "{label}: skipping task {} (line {}): {e}",
                    task.id, task.line
                );
                first_err.get_or_insert(e);
            }
        }
    }
    let skipped = tasks.len() - results.len();
    if results.is_empty() {
        let e = first_err.expect("every task failed");
        return Err(Error::Run(format!(
            "{label}: all {skipped} tasks failed; first error: {e}"
        )));
    }
    results.sort_by(|a, b| a.id.cmp(&b.id));

    let q = results.len() as f64;
    let accuracy = results.iter().filter(|r| r.correct).count() as f64 / q;
    let mean_steps = results.iter().map(|r| r.steps as f64).sum::<f64>() / q;
    let mean_samples = results.iter().map(|r| r.samples_used as f64).sum::<f64>() / q;
    info!("{label}: accuracy {accuracy:.4}, mean steps {mean_steps:.2}, {skipped} skipped");

    Ok(MethodReport {
        method: plan.method,
        label,
        accuracy,
        mean_steps,
        mean_samples,
        bpc: None,
        speedup_vs: BTreeMap::new(),
        questions: results.len(),
        skipped,
        config: RunSnapshot {
            rule: plan.method.rule(&cfg),
            generation: cfg,
            consistency: (plan.method == Method::Dvoting).then(|| plan.cparams.clone()),
            denoiser: plan.denoiser.clone(),
            notes: notes(),
        },
        results,
    })
}

/// Fill in cross-report fields: BPC against the first baseline, and speedups.
pub fn link_reports(reports: &mut [MethodReport]) {
    let base = reports
        .iter()
        .find(|r| r.method == Method::Baseline)
        .map(|r| (r.accuracy, r.mean_steps));
    let steps: Vec<(String, f64)> = reports
        .iter()
        .map(|r| (r.label.clone(), r.mean_steps))
        .collect();
    for r in reports.iter_mut() {
        r.bpc = match base {
            Some((acc, st)) if r.method != Method::Baseline => {
                bpc(100.0 * r.accuracy, 100.0 * acc, r.mean_steps, st).ok()
            }
            _ => None,
        };
        r.speedup_vs = steps
            .iter()
            .filter(|(l, _)| *l != r.label)
            .map(|(l, s)| (l.clone(), s / r.mean_steps))
            .collect();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    N,
    BlockSize,
    Alpha,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepAxis::N),
            "block" | "block_size" | "block-size" => Ok(SweepAxis::BlockSize),
            "alpha" => Ok(SweepAxis::Alpha),
            other => Err(Error::config(format!("unknown sweep axis {other:?}"))),
        }
    }
}

impl SweepAxis {
    fn name(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::BlockSize => "block",
            SweepAxis::Alpha => "alpha",
        }
    }

    /// Apply one textual sweep value to a configuration.
    pub fn apply(&self, cfg: &mut GenerationConfig, value: &str) -> Result<()> {
        let bad =
            |why: &str| Error::domain(format!("invalid {} value {value:?}: {why}", self.name()));
        match self {
            SweepAxis::N | SweepAxis::BlockSize => {
                let v: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| bad("not a positive integer"))?;
                if v == 0 {
                    return Err(bad("must be >= 1"));
                }
                if *self == SweepAxis::N {
                    cfg.max_samples = v;
                } else {
                    cfg.block_size = v;
                }
            }
            SweepAxis::Alpha => {
                let v = parse_f64_or_inf(value.trim()).map_err(|_| bad("not a number"))?;
                if v.is_nan() || v < 0.0 {
                    return Err(bad("must be >= 0"));
                }
                cfg.alpha = v;
            }
        }
        Ok(())
    }
}

/// One dVoting report per value, all sharing the base seed.
pub fn sweep(
    tasks: &[TaskRecord],
    base: &RunPlan,
    axis: SweepAxis,
    values: &[String],
) -> Result<Vec<MethodReport>> {
    if values.is_empty() {
        return Err(Error::domain("sweep needs at least one value"));
    }
    let plans = values
        .iter()
        .map(|v| {
            let mut plan = base.clone();
            plan.method = Method::Dvoting;
            axis.apply(&mut plan.cfg, v)?;
            plan.label = Some(format!("dvoting[{}={}]", axis.name(), v.trim()));
            Ok(plan)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut reports = plans
        .iter()
        .map(|p| run_method(tasks, p))
        .collect::<Result<Vec<_>>>()?;
    link_reports(&mut reports);
    Ok(reports)
}
