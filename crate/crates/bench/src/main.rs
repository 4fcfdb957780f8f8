use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ope_bench::{emit_report, run, BenchError, ExperimentConfig, ExperimentKind, OutputFormat};

#[derive(Debug, Parser)]
#[command(name = "ope-bench", version, about = "Seeded off-policy estimator benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        #[arg(value_enum)]
        experiment: ExperimentKind,
        /// TOML file with configuration keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    let Command::Run {
        experiment,
        config,
        seed,
        reps,
        out,
        format,
    } = cli.command;
    let mut cfg = ExperimentConfig::load(experiment, config.as_deref())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = reps {
        cfg.reps = r;
    }
    if let Some(o) = out {
        cfg.out = Some(o);
    }
    if let Some(f) = format {
        cfg.format = f;
    }
    let rows = run(&cfg)?;
    emit_report(&rows, cfg.format, cfg.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
