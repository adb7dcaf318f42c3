use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pacons::harness::{self, output, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "pacons", version, about = "Consumption-efficient precoder experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design both precoders for one channel draw and print them as JSON.
    Precode(RunArgs),
    /// Monte Carlo PCG sweep over the configured antenna counts (CSV).
    Sweep(RunArgs),
    /// Per-antenna transmit powers for one channel draw (CSV).
    Profile(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Write to this file (metadata goes to `<out>.meta.json`) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> pacons::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(args: &RunArgs, cfg: &ExperimentConfig, body: &str) -> Result<(), String> {
    let meta = output::metadata_json(cfg);
    match &args.out {
        Some(path) => {
            let write = |p: &Path, text: &str| fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()));
            write(path, body)?;
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".meta.json");
            write(Path::new(&meta_path), &meta)
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: pacons::Error| e.to_string();
    match cli.command {
        Command::Precode(args) => {
            let cfg = args.load().map_err(err)?;
            let records = harness::precode_instance(&cfg).map_err(err)?;
            emit(&args, &cfg, &(output::records_json(&records) + "\n"))
        }
        Command::Sweep(args) => {
            let cfg = args.load().map_err(err)?;
            let result = match cfg.scenario {
                Scenario::SingleUserPcg => harness::run_single_user_pcg(&cfg),
                Scenario::MultiUserPcg => harness::run_multi_user_pcg(&cfg),
                Scenario::AntennaProfile => {
                    return Err("antenna_profile configs run with `profile`".into())
                }
            }
            .map_err(err)?;
            emit(&args, &cfg, &output::sweep_csv(&result))
        }
        Command::Profile(args) => {
            let cfg = args.load().map_err(err)?;
            let profile = harness::run_antenna_profile(&cfg).map_err(err)?;
            emit(&args, &cfg, &output::profile_csv(&profile))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
