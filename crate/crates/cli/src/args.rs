use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sessionize::similarity::TextFields;

#[derive(Debug, Parser)]
#[command(name = "sessionize", version, about = "Assign conference papers to sessions")]
pub struct Cli {
    /// Base random seed
    #[arg(long, global = true, env = "SESSIONIZE_SEED")]
    pub seed: Option<u64>,

    /// Print machine-readable JSON; human output moves to stderr
    #[arg(long, global = true)]
    pub json: bool,

    /// Write the main output here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// TOML file supplying defaults for unset flags
    #[arg(long, global = true, env = "SESSIONIZE_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster papers by TFIDF k-means or by asking a language model
    Cluster(ClusterArgs),
    /// Find a similarity-maximizing schedule with branch-and-bound
    Solve(SolveArgs),
    /// Ask a language model for a complete schedule and audit it
    LlmSchedule(LlmScheduleArgs),
    /// Score a candidate schedule against a reference
    Evaluate(EvaluateArgs),
    /// Validate input files and report what was loaded
    IngestCheck(IngestCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Tfidf,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fields {
    Title,
    TitleAbstract,
}

impl From<Fields> for TextFields {
    fn from(f: Fields) -> Self {
        match f {
            Fields::Title => TextFields::Title,
            Fields::TitleAbstract => TextFields::TitleAbstract,
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Papers CSV (id,title,abstract,duration)
    #[arg(long, value_name = "CSV")]
    pub papers: PathBuf,

    /// Sessions CSV (id,title,length)
    #[arg(long, value_name = "CSV")]
    pub sessions: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct LlmArgs {
    /// Directory of recorded responses keyed by prompt hash
    #[arg(long, env = "SESSIONIZE_REPLAY_DIR", value_name = "DIR")]
    pub replay_dir: Option<PathBuf>,

    /// Chat-completions endpoint URL
    #[arg(long, env = "SESSIONIZE_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,

    /// Environment variable holding the bearer token
    #[arg(long, env = "SESSIONIZE_API_KEY_ENV", value_name = "NAME")]
    pub api_key_env: Option<String>,

    #[arg(long, env = "SESSIONIZE_MODEL")]
    pub model: Option<String>,

    #[arg(long, env = "SESSIONIZE_TEMPERATURE")]
    pub temperature: Option<f64>,

    /// Total attempts per request
    #[arg(long, env = "SESSIONIZE_MAX_RETRIES")]
    pub max_retries: Option<u32>,

    /// Request timeout in seconds
    #[arg(long, env = "SESSIONIZE_TIMEOUT")]
    pub timeout: Option<f64>,

    /// JSON-lines log of every exchange
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Papers CSV (id,title,abstract,duration)
    #[arg(long, value_name = "CSV")]
    pub papers: PathBuf,

    #[arg(long, value_enum, default_value = "tfidf")]
    pub method: Method,

    #[arg(long, value_enum, default_value = "title")]
    pub fields: Fields,

    #[arg(long, default_value_t = 5)]
    pub k: usize,

    #[arg(long, default_value_t = 5)]
    pub trials: usize,

    /// Reference labeling CSV (paper_id,cluster) to score against
    #[arg(long, value_name = "CSV")]
    pub reference: Option<PathBuf>,

    /// Write one labeling CSV per trial into this directory
    #[arg(long, value_name = "DIR")]
    pub labels_dir: Option<PathBuf>,

    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("similarity-source").required(true).args(["labeling", "similarity"])))]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    /// Labeling CSV; papers sharing a cluster have similarity 1
    #[arg(long, value_name = "CSV")]
    pub labeling: Option<PathBuf>,

    /// Pairwise similarity CSV (paper_a,paper_b,similarity)
    #[arg(long, value_name = "CSV")]
    pub similarity: Option<PathBuf>,

    /// Stop searching after this many seconds
    #[arg(long, env = "SESSIONIZE_TIME_BUDGET", value_name = "SECONDS")]
    pub time_budget: Option<f64>,

    /// Enumerate every assignment instead (small instances only)
    #[arg(long)]
    pub oracle: bool,

    /// Write the schedule in wire format here
    #[arg(long, value_name = "PATH")]
    pub schedule_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LlmScheduleArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    /// Reference schedule (wire format), required with --papers-per-session
    #[arg(long, value_name = "PATH")]
    pub reference_schedule: Option<PathBuf>,

    /// Keep only the first N papers of each reference session
    #[arg(long, value_name = "N", requires = "reference_schedule")]
    pub papers_per_session: Option<usize>,

    /// Write the resolved schedule in wire format here
    #[arg(long, value_name = "PATH")]
    pub schedule_out: Option<PathBuf>,

    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,

    /// Reference schedule (wire format)
    #[arg(long, value_name = "PATH")]
    pub reference: PathBuf,

    /// Candidate schedule (wire format)
    #[arg(long, value_name = "PATH")]
    pub candidate: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestCheckArgs {
    #[arg(long, value_name = "CSV")]
    pub papers: PathBuf,

    #[arg(long, value_name = "CSV")]
    pub sessions: Option<PathBuf>,

    #[arg(long, value_name = "CSV")]
    pub labeling: Option<PathBuf>,

    #[arg(long, value_name = "CSV", requires = "sessions")]
    pub similarity: Option<PathBuf>,

    /// Schedule in wire format
    #[arg(long, value_name = "PATH", requires = "sessions")]
    pub schedule: Option<PathBuf>,
}
