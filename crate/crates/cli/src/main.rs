use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use npsq_cli::config::{resolve, CommandKind};
use npsq_cli::validate::run_validation;
use npsq_cli::{execute, rerun, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "npsq", version, about = "Number-phase squeezing transfer and ensemble detection simulator")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration: fig2, fig3 or fig1-protocol.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Overrides the master seed of a protocol run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write SVG line plots.
    #[arg(long, global = true)]
    plot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mode-2 number statistics and mode-1 squeezing along a guarded theta grid.
    TransferSweep,
    /// Counter-displacement ladder on the transferred state.
    CounterDisplace,
    /// Full ensemble run with detection and estimators.
    Protocol,
    /// Invariant suite, plus validation of --config when given.
    Validate,
    /// Re-run the command stored in a manifest.
    Rerun {
        manifest: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions {
        out: cli.out.clone(),
        plot: cli.plot,
        workers: cli.workers,
    };
    let run = |kind: CommandKind| -> Result<(), CliError> {
        let cfg = resolve(kind, cli.config.as_deref(), cli.preset.as_deref())?.with_seed(cli.seed);
        let m = execute(cfg, &opts)?;
        println!("{} finished in {:.1} s; wrote {} artifacts to {}", kind.name(), m.wall_clock_seconds, m.artifacts.len(), opts.out.display());
        Ok(())
    };
    let result = match &cli.command {
        Command::TransferSweep => run(CommandKind::TransferSweep),
        Command::CounterDisplace => run(CommandKind::CounterDisplace),
        Command::Protocol => run(CommandKind::Protocol),
        Command::Validate => run_validation(cli.config.as_deref(), cli.preset.as_deref(), &opts.out),
        Command::Rerun { manifest } => rerun(manifest, &opts.out, opts.workers).map(|m| {
            println!("re-ran {} into {}", m.command.name(), opts.out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
