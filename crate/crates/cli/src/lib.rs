//! Command-line front end: one JSON config, flag overrides, one output
//! directory per subcommand with a `provenance.json` beside the artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod provenance;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{Outcome, Prediction};
pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "scarseg", version, about = "LGE-MRI infarct detection and scar segmentation")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every module seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Segment every slice instead of gating with the detection model.
    #[arg(long, global = true)]
    pub no_detect: bool,
    /// Keep the coarse segmentation.
    #[arg(long, global = true)]
    pub no_refine: bool,
    /// Skip MVO inclusion.
    #[arg(long, global = true)]
    pub no_mvo: bool,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic phantom corpus.
    Phantom {
        #[command(subcommand)]
        action: PhantomAction,
    },
    /// Model training.
    Train {
        #[command(subcommand)]
        what: TrainTarget,
    },
    /// Repeated 80-10-10 detection splits with permuted-label refits.
    Detect,
    /// Cascade segmentation with masks and markers.
    Segment,
    /// The nine comparator methods.
    Baselines,
    /// Metrics and statistics for prediction manifests.
    Evaluate,
    /// Permutation test on detection AUC.
    Permtest,
}

#[derive(Debug, Subcommand)]
pub enum PhantomAction {
    Gen,
}

#[derive(Debug, Subcommand)]
pub enum TrainTarget {
    Detect,
    Refine,
}

impl Cli {
    /// Config file (or defaults) with flags applied.
    pub fn effective_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = config::Seeds::all(s);
        }
        if self.jobs.is_some() {
            cfg.jobs = self.jobs;
        }
        if self.out.is_some() {
            cfg.out_dir = self.out.clone();
        }
        cfg.pipeline.detect &= !self.no_detect;
        cfg.pipeline.refine &= !self.no_refine;
        cfg.pipeline.mvo &= !self.no_mvo;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn execute(&self) -> CliResult<Outcome> {
        let cfg = self.effective_config()?;
        if let Some(j) = cfg.jobs {
            scarseg::par::init_threads(j);
        }
        match &self.command {
            Command::Phantom { action: PhantomAction::Gen } => commands::phantom_gen(&cfg),
            Command::Train { what: TrainTarget::Detect } => commands::train_detect(&cfg),
            Command::Train { what: TrainTarget::Refine } => commands::train_refine(&cfg),
            Command::Detect => commands::detect(&cfg),
            Command::Segment => commands::segment(&cfg),
            Command::Baselines => commands::baselines(&cfg),
            Command::Evaluate => commands::evaluate(&cfg),
            Command::Permtest => commands::permtest(&cfg),
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Errors go to stderr as one line; help and version print normally.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first).stderr_line());
            return 1;
        }
    };
    match cli.execute() {
        Ok(o) => {
            println!("wrote {} artifacts to {}", o.artifacts.len(), o.dir.display());
            0
        }
        Err(e) => {
            eprintln!("{}", e.stderr_line());
            e.exit_code()
        }
    }
}
