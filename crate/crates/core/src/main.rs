use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qubrain::bench::{
    gradcheck_suite, run_experiment, summarize_dir, CheckModule, ExperimentOptions, Seeds,
    SplitScale, MIN_SUMMARY_RUNS,
};
use qubrain::data::{bundled_fixture, load_csv, write_csv};
use qubrain::error::{Error, Result};
use qubrain::models::{build_model, ModelKind};

#[derive(Parser)]
#[command(
    name = "qubrain",
    version,
    about = "Train and benchmark fraud-detection models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model over a list of seeds and write records, checkpoints and summaries.
    Run {
        #[arg(long)]
        model: ModelKind,
        /// Transactions CSV.
        #[arg(long, env = "QUBRAIN_DATA", conflicts_with = "fixture")]
        data: Option<PathBuf>,
        /// Seeds as `a..b` (inclusive) or a comma-separated list.
        #[arg(long, default_value = "0..9")]
        seeds: Seeds,
        #[arg(long)]
        out: PathBuf,
        /// Use the bundled synthetic fixture with proportionally smaller splits.
        #[arg(long)]
        fixture: bool,
        /// Override the epoch count; the hybrid splits it across its two training phases.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Rebuild summary and curve files from the run records in a directory.
    Summarize {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Run finite-difference and parameter-shift gradient checks.
    Gradcheck {
        #[arg(long)]
        module: Option<CheckModule>,
    },
    /// Print a model's parameter count and its expected value.
    Paramcount {
        #[arg(long)]
        model: ModelKind,
    },
    /// Write the bundled synthetic fixture as CSV.
    Fixture {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            model,
            data,
            seeds,
            out,
            fixture,
            epochs,
            batch,
        } => {
            let (ds, scale) = if fixture {
                (bundled_fixture(), SplitScale::Fixture)
            } else {
                let path = data.ok_or_else(|| {
                    Error::Config("give --data, set QUBRAIN_DATA, or pass --fixture".into())
                })?;
                (load_csv(&path)?, SplitScale::Protocol)
            };
            let mut opts = ExperimentOptions::new(model, seeds.0, out);
            opts.epochs = epochs;
            opts.batch_size = batch;
            opts.scale = scale;
            let (records, summary) = run_experiment(&ds, &opts)?;
            for r in &records {
                println!(
                    "{} seed {}: f1 {:.4} auc {:.4} precision {:.4} recall {:.4} ({:.1}s)",
                    r.model,
                    r.seed,
                    r.metrics.f1,
                    r.metrics.auc,
                    r.metrics.precision,
                    r.metrics.recall,
                    r.wall_clock_secs
                );
            }
            match summary {
                Some(s) => println!(
                    "{}: median f1 {:.4}, median auc {:.4} over {} seeds",
                    s.model,
                    s.f1.median,
                    s.auc.median,
                    s.seeds.len()
                ),
                None => println!(
                    "{model}: boxplot summary needs at least {MIN_SUMMARY_RUNS} seeds, skipped"
                ),
            }
            Ok(true)
        }
        Command::Summarize { dir } => {
            for s in summarize_dir(&dir)? {
                println!(
                    "{}: {} seeds, median f1 {:.4}, median auc {:.4}",
                    s.model,
                    s.seeds.len(),
                    s.f1.median,
                    s.auc.median
                );
            }
            Ok(true)
        }
        Command::Gradcheck { module } => {
            let modules = module.map_or(CheckModule::ALL.to_vec(), |m| vec![m]);
            let mut all_passed = true;
            for m in modules {
                for c in gradcheck_suite(m)? {
                    println!("{c}");
                    all_passed &= c.passed;
                }
            }
            Ok(all_passed)
        }
        Command::Paramcount { model } => {
            let count = build_model(model, 0).param_count();
            println!(
                "{model}: {count} parameters (expected {} = {})",
                model.expected_param_count(),
                model.param_arithmetic()
            );
            Ok(count == model.expected_param_count())
        }
        Command::Fixture { out } => {
            write_csv(&bundled_fixture(), &out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
