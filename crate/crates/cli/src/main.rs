//! `sgp`: validate, render and score SVG responses, train the toy policy,
//! run the compositional benchmark, and analyze or curate corpora.

mod commands;
mod embedders;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "sgp", version, about = "Verifiable-reward tooling for SVG program generation")]
struct Cli {
    /// Worker threads for per-record parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the format gate over JSONL responses.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 384)]
        size: u32,
    },
    /// Rasterize one SVG file to PNG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 384)]
        size: u32,
        /// Output height when different from --size.
        #[arg(long)]
        height: Option<u32>,
    },
    /// Compute fused rewards for JSONL samples.
    Score {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        embed: EmbedArgs,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long, default_value_t = 384)]
        size: u32,
    },
    /// Train the tabular toy policy with GRPO.
    TrainToy(TrainArgs),
    /// Compositional benchmark: generate prompts, judge, report.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Code statistics and best-of-N analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Filter and mix caption/SVG corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Args)]
pub struct EmbedArgs {
    /// Scoring service base URL (falls back to SGP_SERVICE_URL).
    #[arg(long, conflicts_with = "mock_embedder")]
    pub service_url: Option<String>,
    /// Use the built-in reference embedders instead of a service.
    #[arg(long)]
    pub mock_embedder: bool,
    #[arg(long, default_value = "siglip-base-patch16-384")]
    pub text_model: String,
    #[arg(long, default_value = "dinov2-base")]
    pub image_model: String,
    #[command(flatten)]
    pub client: ClientArgs,
}

#[derive(Args)]
pub struct ClientArgs {
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Inputs per embedding request.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Concurrent embedding requests.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

#[derive(Args)]
pub struct WeightArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda_text: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_image: f64,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 17)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub lr: f64,
    #[arg(long, default_value_t = 8)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3)]
    pub max_len: usize,
    #[arg(long, default_value_t = 32)]
    pub render_size: u32,
    #[arg(long, default_value_t = 0.20)]
    pub clip_low: f64,
    #[arg(long, default_value_t = 0.28)]
    pub clip_high: f64,
    /// Per-iteration trace, one JSON record per line.
    #[arg(long)]
    pub trace: PathBuf,
    /// Binary snapshot of the final policy.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    #[command(flatten)]
    pub embed: EmbedArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate benchmark prompts.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 400)]
        per_subcategory: usize,
        #[arg(long, default_value_t = 100)]
        numeracy_per_count: usize,
    },
    /// Judge responses through the scoring service.
    Judge {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        service_url: Option<String>,
        #[arg(long, default_value_t = 384)]
        size: u32,
        #[command(flatten)]
        client: ClientArgs,
    },
    /// Aggregate verdicts into the benchmark table.
    Report {
        #[arg(long)]
        prompts: PathBuf,
        #[arg(long)]
        verdicts: PathBuf,
        /// TSV output path; the formatted table goes to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "model")]
        model: String,
        #[arg(long, value_enum, default_value_t = GrandWeights::PromptCount)]
        grand_weights: GrandWeights,
    },
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GrandWeights {
    /// Group averages weighted by prompt count.
    PromptCount,
    Equal,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Code-structure statistics per training step.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG chart of element count and code length per step.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Best-of-N curves and baseline-gap fits.
    Bon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Samples per prompt used by the estimator.
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        n_values: Vec<usize>,
        /// Model whose curve is subtracted from every other curve.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Drop records whose captions or SVGs involve text.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write dropped records with their reasons.
        #[arg(long)]
        dropped: Option<PathBuf>,
        /// `default` or a file with one keyword per line.
        #[arg(long, default_value = "default")]
        keywords: String,
    },
    /// Sample a weighted mixture of sources.
    Mix {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Marks failures of the scoring service so they map to exit code 2.
#[derive(Debug)]
pub struct ServiceFailure(pub String);

impl std::fmt::Display for ServiceFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ServiceFailure {}

pub fn service_err(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow::Error::new(ServiceFailure(e.to_string()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global()?;
    }
    let jobs = cli.jobs.unwrap_or_else(rayon::current_num_threads);
    match cli.command {
        Command::Validate { input, out, size } => commands::validate(&input, &out, size),
        Command::Render { input, out, size, height } => commands::render(&input, &out, size, height.unwrap_or(size)),
        Command::Score { input, out, embed, weights, size } => commands::score(&input, &out, &embed, &weights, size),
        Command::TrainToy(args) => commands::train_toy(&args),
        Command::Bench(BenchCommand::Gen { seed, out, per_subcategory, numeracy_per_count }) => {
            commands::bench_gen(seed, &out, per_subcategory, numeracy_per_count)
        }
        Command::Bench(BenchCommand::Judge { prompts, samples, out, service_url, size, client }) => {
            commands::bench_judge(&prompts, &samples, &out, service_url, size, &client, jobs)
        }
        Command::Bench(BenchCommand::Report { prompts, verdicts, out, model, grand_weights }) => {
            commands::bench_report(&prompts, &verdicts, out.as_deref(), &model, grand_weights)
        }
        Command::Analyze(AnalyzeCommand::Stats { input, out, plot }) => commands::analyze_stats(&input, &out, plot.as_deref()),
        Command::Analyze(AnalyzeCommand::Bon { input, out, k, n_values, baseline, plot }) => {
            commands::analyze_bon(&input, &out, k, &n_values, baseline.as_deref(), plot.as_deref())
        }
        Command::Corpus(CorpusCommand::Filter { input, out, dropped, keywords }) => {
            commands::corpus_filter(&input, &out, dropped.as_deref(), &keywords)
        }
        Command::Corpus(CorpusCommand::Mix { inputs, weights, target, seed, out }) => {
            commands::corpus_mix(&inputs, &weights, target, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SGP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ServiceFailure>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
