//! `pave-iri` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use config::{Kernel, ModelKind, RunConfig};

/// Bad flags, config keys or parameter values. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(name = "pave-iri", version, about = "Estimate IRI classes from pavement distress surveys")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic raw survey corpus.
    Synth(SynthArgs),
    /// Aggregate segments and drop IRI outliers.
    Prep(PrepArgs),
    /// Train one model on the seeded training split.
    Train(TrainArgs),
    /// Score a trained model on its held-out split.
    Eval(EvalArgs),
    /// Train and score NB, SVM-RBF, SVM-poly and logit on one split.
    Compare(CompareArgs),
    /// Rank features by binary-logit coefficient.
    Importance(ImportanceArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Global seed. Falls back to PAVE_IRI_SEED, then 42.
    #[arg(long, env = "PAVE_IRI_SEED")]
    pub seed: Option<u64>,
    /// JSON file whose keys override flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of 0.1-mile segments (20 raw records each).
    #[arg(long)]
    pub segments: Option<usize>,
    /// JSON generator profile.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub spike_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrepFlags {
    #[arg(long)]
    pub no_aggregate: bool,
    /// Aggregation window, miles.
    #[arg(long)]
    pub segment_length: Option<f64>,
    #[arg(long)]
    pub no_outlier_filter: bool,
    #[arg(long)]
    pub outlier_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub prep: PrepFlags,
}

#[derive(Debug, Args)]
pub struct DataFlags {
    /// Prepared corpus.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub bin_origin: Option<f64>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub bin_count: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HyperFlags {
    #[arg(long)]
    pub degree: Option<u32>,
    /// SVM box constraint.
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// RBF width; defaults to 1 / (features * variance).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Choose C and gamma/degree by 5-fold cross-validation.
    #[arg(long)]
    pub grid_search: bool,
    /// Logit ridge penalty.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataFlags,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, value_enum)]
    pub kernel: Option<Kernel>,
    #[command(flatten)]
    pub hyper: HyperFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model file written by `train`.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Prepared corpus the model was trained from.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Report JSON; the comparison row goes next to it with a .csv extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub tolerances: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataFlags,
    /// Comparison table CSV; the full reports go next to it as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: HyperFlags,
    #[arg(long, value_delimiter = ',')]
    pub tolerances: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Prepared corpus.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ranking CSV; the JSON report goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rough means IRI above this, inches/mile.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl DataFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.input = self.input.clone().or(cfg.input.take());
        set(&mut cfg.bin_origin, self.bin_origin);
        set(&mut cfg.bin_width, self.bin_width);
        set(&mut cfg.bin_count, self.bin_count);
        set(&mut cfg.train_fraction, self.train_fraction);
    }
}

impl HyperFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.degree, self.degree);
        set(&mut cfg.c, self.c);
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        cfg.grid_search |= self.grid_search;
        set(&mut cfg.lambda, self.lambda);
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Prep(_) => "prep",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Compare(_) => "compare",
            Command::Importance(_) => "importance",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Synth(a) => &a.common,
            Command::Prep(a) => &a.common,
            Command::Train(a) => &a.common,
            Command::Eval(a) => &a.common,
            Command::Compare(a) => &a.common,
            Command::Importance(a) => &a.common,
        }
    }

    /// Flags first, then the config file on top.
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig {
            command: self.name().into(),
            ..RunConfig::default()
        };
        set(&mut cfg.seed, self.common().seed);
        match self {
            Command::Synth(a) => {
                cfg.out = a.out.clone();
                cfg.segments = a.segments;
                cfg.noise_sigma = a.noise_sigma;
                cfg.spike_rate = a.spike_rate;
                if let Some(path) = &a.profile {
                    cfg.profile = Some(commands::load_profile(path)?);
                }
            }
            Command::Prep(a) => {
                cfg.input = a.input.clone();
                cfg.out = a.out.clone();
                cfg.aggregate = !a.prep.no_aggregate;
                cfg.outlier_filter = !a.prep.no_outlier_filter;
                set(&mut cfg.segment_length, a.prep.segment_length);
                set(&mut cfg.outlier_threshold, a.prep.outlier_threshold);
            }
            Command::Train(a) => {
                a.data.apply(&mut cfg);
                a.hyper.apply(&mut cfg);
                cfg.out = a.out.clone();
                set(&mut cfg.model, a.model);
                set(&mut cfg.kernel, a.kernel);
            }
            Command::Eval(a) => {
                cfg.model_file = a.model_file.clone();
                cfg.input = a.input.clone();
                cfg.out = a.out.clone();
                set(&mut cfg.tolerances, a.tolerances.clone());
            }
            Command::Compare(a) => {
                a.data.apply(&mut cfg);
                a.hyper.apply(&mut cfg);
                cfg.out = a.out.clone();
                set(&mut cfg.tolerances, a.tolerances.clone());
            }
            Command::Importance(a) => {
                cfg.input = a.input.clone();
                cfg.out = a.out.clone();
                set(&mut cfg.threshold, a.threshold);
                set(&mut cfg.lambda, a.lambda);
            }
        }
        if let Some(path) = &self.common().config {
            cfg.apply_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Run one command; the returned text is a short summary for stdout.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let cfg = cli.command.resolve()?;
    match cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Prep(_) => commands::prep(&cfg),
        Command::Train(_) => commands::train(&cfg),
        Command::Eval(_) => commands::eval(cfg),
        Command::Compare(_) => commands::compare(&cfg),
        Command::Importance(_) => commands::importance(&cfg),
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}

/// Parse `args` (program name first), run, print, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
