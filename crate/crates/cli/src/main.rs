use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fimforge_core::pipeline::{io::read_jsonl, Pipeline, PipelineConfig, StageOutcome, STAGES};
use fimforge_core::preference::{validate_pairs, PreferencePair};
use fimforge_core::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "fimforge", version, about = "Build FIM training data and preference pairs from source repositories")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    /// Worker threads for endpoint calls.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Rerun stages even when their manifests are current.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scan repositories, apply file rules, resolve imports.
    Ingest,
    /// Draw FIM samples from the ingested files.
    Synthesize,
    /// Attach similar-code and dependency context to samples.
    Context,
    /// Score samples with the scorer endpoint and trim by perplexity.
    Filter,
    /// Build rejection-sampled and repetition-suppression preference pairs.
    Pairs,
    /// Rank samples by identifier count and keep the most complex fraction.
    Curriculum,
    /// Score a completion model on a benchmark JSONL.
    Eval {
        #[arg(long)]
        benchmark: Option<PathBuf>,
    },
    /// Summarise the run directory as Markdown.
    Report,
    /// Run several stages in order.
    Run {
        /// Comma-separated stage list; defaults to every stage, skipping eval without a benchmark.
        #[arg(long, value_delimiter = ',')]
        stages: Vec<String>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
    },
    /// Check a pairs JSONL file against the pair invariants.
    ValidatePairs { file: PathBuf },
}

fn load_config(global: &Global) -> Result<PipelineConfig, Error> {
    match &global.config {
        Some(path) => PipelineConfig::load(path),
        None => {
            let default = Path::new("fimforge.toml");
            if default.exists() {
                PipelineConfig::load(default)
            } else {
                Ok(PipelineConfig::default())
            }
        }
    }
}

fn pipeline(global: &Global) -> Result<Pipeline, Error> {
    let config = load_config(global)?;
    let mut p = Pipeline::new(config)?.with_force(global.force);
    if let Some(dir) = &global.run_dir {
        p = p.with_run_dir(dir.clone());
    }
    if let Some(seed) = global.seed {
        p = p.with_seed(seed);
    }
    if let Some(jobs) = global.jobs {
        p = p.with_jobs(jobs);
    }
    Ok(p)
}

fn print(outcome: &StageOutcome) {
    println!("{}", serde_json::to_string(outcome).unwrap_or_default());
}

fn execute(cli: Cli) -> Result<(), Error> {
    let stage = match &cli.command {
        Command::ValidatePairs { file } => {
            let pairs: Vec<PreferencePair> = read_jsonl(file)?;
            let violations = validate_pairs(&pairs);
            println!("{}", json!({ "pairs": pairs.len(), "violations": violations }));
            return match violations.len() {
                0 => Ok(()),
                n => Err(Error::InvalidInput(format!("{n} of {} pairs violate their invariant", pairs.len()))),
            };
        }
        Command::Run { stages, benchmark } => {
            let p = pipeline(&cli.global)?;
            let stages: Vec<String> = if stages.is_empty() {
                let with_eval = benchmark.is_some() || p.config().eval.benchmark.is_some();
                STAGES.iter().filter(|s| with_eval || **s != "eval").map(|s| s.to_string()).collect()
            } else {
                stages.clone()
            };
            let _lock = p.lock()?;
            for stage in &stages {
                print(&p.run_stage(stage, benchmark.as_deref())?);
            }
            return Ok(());
        }
        Command::Ingest => "ingest",
        Command::Synthesize => "synthesize",
        Command::Context => "context",
        Command::Filter => "filter",
        Command::Pairs => "pairs",
        Command::Curriculum => "curriculum",
        Command::Eval { .. } => "eval",
        Command::Report => "report",
    };
    let benchmark = match &cli.command {
        Command::Eval { benchmark } => benchmark.as_deref(),
        _ => None,
    };
    let p = pipeline(&cli.global)?;
    let _lock = p.lock()?;
    print(&p.run_stage(stage, benchmark)?);
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MissingStageInput(_) => 2,
        Error::Locked(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", json!({ "error": err.kind(), "message": err.to_string() }));
            ExitCode::from(exit_code(&err))
        }
    }
}
