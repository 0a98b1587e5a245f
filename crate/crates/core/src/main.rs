use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use policylens::pipeline::{run_all, run_stage, write_synthetic, BackendKind, PipelineError, RunConfig, Stage};
use policylens::synth::SynthConfig;

/// Privacy-policy corpus pipeline.
#[derive(Debug, Parser)]
#[command(name = "policylens", version)]
struct Cli {
    /// TOML run configuration; `${VAR}` is replaced from the environment.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Significance level for the FDR correction.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Target power for the minimum detectable effect.
    #[arg(long, global = true)]
    power: Option<f64>,
    /// Maximum parallel requests or threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Annotation set the analysis stages read.
    #[arg(long, global = true)]
    analysis_backend: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read corpus files into the normalized document store.
    Ingest {
        /// Corpus JSON-lines file; repeat for several waves.
        #[arg(long)]
        corpus: Vec<PathBuf>,
    },
    /// Label every document with one backend.
    Annotate {
        #[arg(long, value_parser = ["baseline", "remote"])]
        backend: Option<String>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Precision, recall and F1 against ground truth.
    Validate {
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Krippendorff's alpha over a multi-coder file.
    Agreement {
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Group assignment, summary and law-mention tables.
    Cohort {
        #[arg(long)]
        terms: Option<PathBuf>,
    },
    /// Obligation tests between waves.
    Stats,
    /// Generator detection and tables.
    Generators {
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
    /// Embedding projection and generator cohesion.
    Cluster {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        perplexity: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Combine stage outputs into report.md.
    Report,
    /// Every stage enabled in the configuration, in order.
    Run,
    /// Write a seeded synthetic corpus with ground truth.
    Synth {
        #[arg(long, default_value_t = 500)]
        websites: usize,
        /// Destination of the corpus JSON lines.
        #[arg(long)]
        corpus_out: PathBuf,
        /// Destination of the ground-truth CSV.
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
}

fn configure(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(v) = &o.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = o.power {
        cfg.power = v;
    }
    if let Some(v) = o.workers {
        cfg.workers = v;
    }
    if let Some(v) = &o.analysis_backend {
        cfg.analysis_backend = Some(v.clone());
    }
    match &cli.command {
        Command::Ingest { corpus } if !corpus.is_empty() => cfg.corpus = corpus.clone(),
        Command::Annotate { backend, endpoint, model, cache_dir } => {
            if let Some(b) = backend {
                cfg.backend = b.parse::<BackendKind>()?;
            }
            if let Some(v) = endpoint {
                cfg.remote.endpoint = v.clone();
            }
            if let Some(v) = model {
                cfg.remote.model = v.clone();
            }
            if let Some(v) = cache_dir {
                cfg.remote.cache_dir = Some(v.clone());
            }
        }
        Command::Validate { truth: Some(t) } => cfg.truth = Some(t.clone()),
        Command::Agreement { human: Some(h) } => cfg.human = Some(h.clone()),
        Command::Cohort { terms: Some(t) } => cfg.terms = Some(t.clone()),
        Command::Generators { dictionary: Some(d) } => cfg.generators = Some(d.clone()),
        Command::Cluster { embeddings, perplexity, iterations } => {
            if let Some(v) = embeddings {
                cfg.embeddings = Some(v.clone());
            }
            if let Some(v) = perplexity {
                cfg.tsne.perplexity = *v;
            }
            if let Some(v) = iterations {
                cfg.tsne.iterations = *v;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = configure(cli)?;
    let stage = match &cli.command {
        Command::Ingest { .. } => Stage::Ingest,
        Command::Annotate { .. } => Stage::Annotate,
        Command::Validate { .. } => Stage::Validate,
        Command::Agreement { .. } => Stage::Agreement,
        Command::Cohort { .. } => Stage::Cohort,
        Command::Stats => Stage::Stats,
        Command::Generators { .. } => Stage::Generators,
        Command::Cluster { .. } => Stage::Cluster,
        Command::Report => Stage::Report,
        Command::Run => return run_all(&cfg),
        Command::Synth { websites, corpus_out, truth_out } => {
            let n = write_synthetic(
                &SynthConfig { seed: cfg.seed, websites: *websites },
                corpus_out,
                truth_out.as_deref(),
            )?;
            log::info!("wrote {n} documents to {}", corpus_out.display());
            return Ok(());
        }
    };
    run_stage(stage, &cfg).map(|_| ())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
