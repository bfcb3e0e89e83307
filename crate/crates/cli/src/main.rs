//! `wbf`: run Waterberry Farms benchmark scenarios from config files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use wbf_core::harness::{self, ScenarioConfig};
use wbf_core::Error;

#[derive(Parser)]
#[command(name = "wbf", version, about = "Waterberry Farms informative path planning benchmark")]
struct Cli {
    /// Override the seed given in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure estimator wall-clock cost against the observation count.
    BenchCost {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the ground-truth environment trajectory only.
    GenEnv {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score information-model snapshots against ground-truth snapshots.
    Score {
        env_dir: PathBuf,
        info_dir: PathBuf,
        config: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(flag: Option<PathBuf>, config: &ScenarioConfig, config_path: &Path) -> PathBuf {
    flag.or_else(|| config.output_dir.clone()).unwrap_or_else(|| {
        let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        PathBuf::from("runs").join(stem)
    })
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config: path, out } => {
            let config = harness::load_config(&path, cli.seed)?;
            let out = output_dir(out, &config, &path);
            info!("running {} into {}", path.display(), out.display());
            let record = harness::run_scenario(&config, Some(&out))?;
            for w in &record.warnings {
                log::warn!("{w}");
            }
            match record.final_loss() {
                Some(loss) => println!("final loss {loss} (score {}) -> {}", -loss, out.display()),
                None => println!("environment trajectory -> {}", out.display()),
            }
        }
        Command::BenchCost { config: path, out } => {
            let config = harness::load_config(&path, cli.seed)?;
            let out = output_dir(out, &config, &path);
            let rows = harness::bench_estimator_cost(&config, |r| {
                println!(
                    "{:<14} {:<14} n={:<5} {:>10.4} s{}",
                    r.geometry,
                    r.estimator,
                    r.n_obs,
                    r.seconds,
                    if r.cutoff_hit { "  cutoff" } else { "" }
                );
            })?;
            let file = out.join("cost.csv");
            harness::write_atomic(&file, harness::cost_csv(&rows).as_bytes())?;
            println!("-> {}", file.display());
        }
        Command::GenEnv { config: path, out } => {
            let config = harness::load_config(&path, cli.seed)?;
            let out = output_dir(out, &config, &path);
            let days = harness::generate_environment(&config, &out)?;
            println!("{days} days -> {}", out.join("env").display());
        }
        Command::Score {
            env_dir,
            info_dir,
            config,
            out,
        } => {
            let config = harness::load_config(&config, cli.seed)?;
            let report = harness::score_offline(&env_dir, &info_dir, &config)?;
            let text = report.to_toml();
            if let Some(out) = out {
                harness::write_atomic(&out, text.as_bytes())?;
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wbf: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
