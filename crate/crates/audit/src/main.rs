use std::path::PathBuf;
use std::process::ExitCode;

use bias_audit::config::{Overrides, RunConfig};
use bias_audit::pipeline::{self, Outcome, Status};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bias-audit", version, about = "Counterfactual bias insertion and dataset statistics for skin lesion classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Insert every bias mask into every image.
    Insert(Common),
    /// CBI metrics from baseline and per-variant predictions.
    Cbi(Common),
    /// Artifact prevalence, correlation, PPS and annotator agreement.
    Stats(Common),
    /// FID, KID and precision/recall between two embedding files.
    Fidelity(Common),
    /// Merge earlier outputs into one Markdown report.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (Command::Insert(c) | Command::Cbi(c) | Command::Stats(c) | Command::Fidelity(c) | Command::Report(c)) = &cli.command;
    let mut cfg = RunConfig::load(&c.config)?;
    cfg.apply(&Overrides { out_dir: c.out.clone(), seed: c.seed, threshold: c.threshold })?;
    let outcome = match cli.command {
        Command::Insert(_) => pipeline::cmd_insert(&cfg)?.0,
        Command::Cbi(_) => pipeline::cmd_cbi(&cfg)?,
        Command::Stats(_) => pipeline::cmd_stats(&cfg)?,
        Command::Fidelity(_) => pipeline::cmd_fidelity(&cfg)?,
        Command::Report(_) => pipeline::cmd_report(&cfg)?,
    };
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            for n in &outcome.notices {
                eprintln!("notice: {n}");
            }
            match outcome.status {
                Status::Complete => ExitCode::SUCCESS,
                Status::CompletedWithSkips => ExitCode::from(2),
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
