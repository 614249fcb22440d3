use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use nidsgan::pipeline::{Pipeline, Variant};

#[derive(Parser)]
#[command(name = "nidsgan", version, about = "NSL-KDD intrusion classification pipeline")]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean and relabel the dataset.
    Ingest,
    /// Per-class feature summaries.
    Eda,
    /// Train and evaluate the boosted-tree classifier.
    Train {
        /// Rebalance the training partition with per-class GANs first.
        #[arg(long)]
        augmented: bool,
    },
    /// Rank classes by Isolation Forest anomaly score.
    Anomaly,
    /// Compare baseline and augmented metrics.
    Compare,
    /// Run every step in order.
    All,
}

fn run(cli: Cli) -> nidsgan::Result<()> {
    let Some(config) = cli.config else {
        Cli::command()
            .error(ErrorKind::MissingRequiredArgument, "--config <PATH> is required")
            .exit()
    };
    let p = Pipeline::from_file(&config, cli.out, cli.seed)?;
    match cli.command {
        Command::Ingest => {
            let r = p.ingest()?;
            eprintln!("ingested {} of {} rows", r.labels.rows_kept, r.rows_parsed);
        }
        Command::Eda => {
            let n = p.eda()?;
            eprintln!("wrote {n} feature summaries");
        }
        Command::Train { augmented } => {
            let v = if augmented { Variant::Augmented } else { Variant::Baseline };
            let o = p.train(v)?;
            eprintln!("{} test accuracy {:.6}", v.name(), o.metrics.accuracy);
        }
        Command::Anomaly => {
            for c in p.anomaly()? {
                eprintln!("{:<12} {:.4}", c.class, c.mean_score);
            }
        }
        Command::Compare => {
            let r = p.compare()?;
            eprintln!("accuracy {:.6} -> {:.6}", r.accuracy_before, r.accuracy_after);
        }
        Command::All => {
            let r = p.all()?;
            eprintln!("accuracy {:.6} -> {:.6}", r.accuracy_before, r.accuracy_after);
        }
    }
    eprintln!("artifacts in {}", p.out_dir().display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
