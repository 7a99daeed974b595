use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dvote::config::{parse_f64_or_inf, parse_usize_or_inf, GenerationConfig};
use dvote::consistency::ConsistencyParams;
use dvote::denoiser::serve_check;
use dvote::harness::{
    emit_report, ingest_tasks, link_reports, run_method, sweep, synth_tasks, write_tasks,
    DenoiserChoice, Method, NoiseKind, PromptSpec, RunPlan, SuiteSpec, SweepAxis, TaskRecord,
};
use dvote::sequence::VocabSpec;
use dvote::{Error, Result};

#[derive(Parser)]
#[command(
    name = "dvote",
    version,
    about = "Remask voting for masked diffusion LMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more methods over a task file and write a report.
    Run {
        #[command(flatten)]
        common: RunArgs,
        /// Comma-separated list of baseline, majority, dvoting.
        #[arg(long, value_delimiter = ',', default_value = "dvoting")]
        method: Vec<String>,
    },
    /// Run dVoting once per value of one configuration axis.
    Sweep {
        #[command(flatten)]
        common: RunArgs,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Write a synthetic task file.
    Synth {
        #[arg(long)]
        vocab: u32,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        answer_mass: f64,
        #[arg(long, default_value_t = 0.0)]
        smoothing: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Probe a remote denoiser for wire-protocol conformance.
    ServeCheck {
        #[arg(long)]
        url: String,
        /// Vocabulary size; the mask id on the wire is this value.
        #[arg(long)]
        vocab: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DenoiserKind {
    Oracle,
    Perturbed,
    Uniform,
    Remote,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the synthetic tasks' length, else 128.
    #[arg(long)]
    gen_len: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    /// Entropy threshold in nats, or "inf".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    top_p: Option<f64>,
    #[arg(long)]
    max_samples: Option<usize>,
    #[arg(long)]
    tau_frac: Option<f64>,
    /// Minimum agreeing samples to retain a position, or "inf".
    #[arg(long)]
    min_agree: Option<String>,
    /// Votes needed for answer-stop, or "inf" to disable early stopping.
    #[arg(long)]
    stop_count: Option<String>,
    #[arg(long)]
    tau_ans: Option<f64>,
    /// Answer-stop without requiring a strict majority.
    #[arg(long)]
    no_majority: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concurrent questions; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = DenoiserKind::Oracle)]
    denoiser: DenoiserKind,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long, default_value = "decoy")]
    noise: String,
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    vocab: Option<u32>,
}

impl RunArgs {
    fn plan(&self, tasks: &[TaskRecord]) -> Result<RunPlan> {
        let gen_len = self.gen_len.unwrap_or_else(|| {
            tasks
                .iter()
                .find_map(|t| match &t.prompt {
                    PromptSpec::Synthetic { synthetic } => Some(synthetic.gen_len),
                    PromptSpec::Literal(_) => None,
                })
                .unwrap_or(128)
        });
        let mut cfg = GenerationConfig::for_length(gen_len);
        if let Some(b) = self.block_size {
            cfg.block_size = b;
        }
        if let Some(a) = &self.alpha {
            cfg.alpha = parse_f64_or_inf(a)?;
        }
        if let Some(t) = self.temperature {
            cfg.temperature = t;
        }
        cfg.top_p = self.top_p;
        if let Some(n) = self.max_samples {
            cfg.max_samples = n;
        }
        cfg.seed = self.seed;

        let mut cparams = ConsistencyParams::default();
        if let Some(x) = self.tau_frac {
            cparams.tau_frac = x;
        }
        if let Some(m) = &self.min_agree {
            cparams.min_agree = parse_usize_or_inf(m)?;
        }
        if let Some(c) = &self.stop_count {
            cparams.stop_count = parse_usize_or_inf(c)?;
        }
        if let Some(x) = self.tau_ans {
            cparams.tau_ans = x;
        }
        cparams.require_majority = !self.no_majority;

        let vocab = || {
            self.vocab
                .ok_or_else(|| Error::config("--vocab is required for this denoiser"))
        };
        let denoiser = match self.denoiser {
            DenoiserKind::Oracle => DenoiserChoice::Oracle,
            DenoiserKind::Perturbed => DenoiserChoice::Perturbed {
                eps: self.eps,
                noise: self.noise.parse::<NoiseKind>()?,
            },
            DenoiserKind::Uniform => DenoiserChoice::Uniform { vocab: vocab()? },
            DenoiserKind::Remote => DenoiserChoice::Remote {
                url: self
                    .url
                    .clone()
                    .ok_or_else(|| Error::config("--url is required for a remote denoiser"))?,
                vocab: vocab()?,
            },
        };
        let mut plan = RunPlan::new(Method::Dvoting, cfg, denoiser);
        plan.cparams = cparams;
        plan.jobs = self.jobs;
        Ok(plan)
    }
}

fn load(path: &Path) -> Result<Vec<TaskRecord>> {
    let tasks = ingest_tasks(path)?;
    if tasks.is_empty() {
        return Err(Error::config(format!("{} holds no tasks", path.display())));
    }
    Ok(tasks)
}

fn print_summary(out: &std::path::Path) -> Result<()> {
    let path = out.join("summary.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    print!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, method } => {
            let tasks = load(&common.tasks)?;
            let base = common.plan(&tasks)?;
            let mut reports = Vec::new();
            for m in &method {
                let mut plan = base.clone();
                plan.method = m.trim().parse()?;
                reports.push(run_method(&tasks, &plan)?);
            }
            link_reports(&mut reports);
            emit_report(&reports, &common.out)?;
            print_summary(&common.out)
        }
        Command::Sweep {
            common,
            axis,
            values,
        } => {
            let tasks = load(&common.tasks)?;
            let plan = common.plan(&tasks)?;
            let reports = sweep(&tasks, &plan, axis.parse::<SweepAxis>()?, &values)?;
            emit_report(&reports, &common.out)?;
            print_summary(&common.out)
        }
        Command::Synth {
            vocab,
            length,
            count,
            seed,
            answer_mass,
            smoothing,
            out,
        } => {
            let spec = SuiteSpec {
                vocab,
                gen_len: length,
                count,
                seed,
                answer_mass,
                smoothing,
            };
            write_tasks(&out, &synth_tasks(&spec)?)?;
            println!("wrote {count} tasks to {}", out.display());
            Ok(())
        }
        Command::ServeCheck { url, vocab } => {
            let vocab = VocabSpec::new(vocab)?;
            let report = serve_check(&url, vocab)?;
            println!(
                "ok: {} answered {} probes over a vocabulary of {}",
                report.endpoint, report.probes, report.vocab_size
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DVOTE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
