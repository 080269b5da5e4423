use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spatial_katz_cli::{eval, run, score, synth, CliError, LoadedConfig, Overrides};

#[derive(Parser)]
#[command(name = "spatial-katz", version, about = "Katz-index link prediction on geolocated movement networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, replacing `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the [synth] block, replacing the configured one.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Score, tune and evaluate every configured model.
    Run,
    /// Generate a synthetic movement file and its truth summary.
    Synth,
    /// Write test-split score tables only.
    Score,
    /// Evaluate an existing score table.
    Eval,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut loaded = LoadedConfig::load(path)?;
    Overrides {
        out: cli.out.clone(),
        seed: cli.seed_override,
    }
    .apply(&mut loaded.config)?;
    match cli.command {
        Command::Run => {
            let reports = run(&loaded)?;
            for r in &reports {
                let r = &r.report;
                log::info!("{}: F1 {:.3}, AUPR {:.3}, AUROC {:.3}", r.model, r.f1, r.aupr, r.auroc);
            }
        }
        Command::Synth => {
            let truth = synth(&loaded)?;
            log::info!("{} movements, {} links over {} active nodes", truth.movements, truth.links, truth.active_nodes);
        }
        Command::Score => score(&loaded)?,
        Command::Eval => {
            let r = eval(&loaded)?.report;
            log::info!("{}: F1 {:.3}, AUPR {:.3}, AUROC {:.3}", r.model, r.f1, r.aupr, r.auroc);
        }
    }
    log::info!("artifacts written to {}", loaded.config.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
