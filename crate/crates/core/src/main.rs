use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stocktrend::features::SplitMode;
use stocktrend::models::persist::ModelFile;
use stocktrend::pipeline::{self, PredictInput, RunConfig};
use stocktrend::{Error, Result};

#[derive(Parser)]
#[command(name = "stocktrend", version, about = "Next-day stock trend prediction from prices and news sentiment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticker: Option<String>,
    /// chrono | random
    #[arg(long)]
    split_mode: Option<SplitMode>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(t) = &self.ticker {
            cfg.ticker = t.clone();
        }
        if let Some(m) = self.split_mode {
            cfg.split.mode = m;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ingest prices and news, compute indicators and sentiment, write features.
    BuildFeatures(RunArgs),
    /// Tune, fit and evaluate every model family.
    Train(RunArgs),
    /// Score rows with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV whose header names the feature columns.
        #[arg(long, conflicts_with = "row", required_unless_present = "row")]
        input: Option<PathBuf>,
        /// A single row as `Name=value,...`.
        #[arg(long)]
        row: Option<String>,
    },
    /// Re-render the comparison table from metrics.json.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildFeatures(args) => {
            let cfg = args.config()?;
            let build = pipeline::cmd_build_features(&cfg)?;
            for s in &build.report.stages {
                println!("{:<16} in {:>6}  out {:>6}  dropped {:>6}", s.stage, s.rows_in, s.rows_out, s.rows_dropped);
            }
            for w in &build.report.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", cfg.out_dir.join(pipeline::FEATURES_FILE).display());
        }
        Command::Train(args) => {
            let cfg = args.config()?;
            let report = pipeline::cmd_train(&cfg)?;
            print!("{}", report.table());
        }
        Command::Predict { model, input, row } => {
            let model = ModelFile::load(&model)?;
            let input = match (input, row) {
                (Some(p), _) => PredictInput::Csv(std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p, source: e })?),
                (None, Some(r)) => PredictInput::Row(r),
                (None, None) => unreachable!("clap requires one of --input/--row"),
            };
            println!("row,label,probability");
            for (i, p) in pipeline::cmd_predict(&model, &input)?.iter().enumerate() {
                println!("{i},{},{:.6}", p.label, p.probability);
            }
        }
        Command::Report { out } => print!("{}", pipeline::cmd_report(&out)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
