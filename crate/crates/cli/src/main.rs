//! `gnch`: run, validate and list verification experiments.
//!
//! Exit codes: 0 when every verdict passes, 1 when any verdict fails,
//! 2 on configuration or runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gnch_core::harness::{run_experiment, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gnch", version, about = "Two-layer internal-wave model verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Run even when the parameters leave the Camassa-Holm regime.
        #[arg(long)]
        force: bool,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a config file and print it with every default filled in.
    Validate { config: PathBuf },
    /// List the registered experiments and their thresholds.
    ListExperiments,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::parse_file(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<24} {}", e.name(), e.description());
                for t in e.thresholds() {
                    println!("    threshold.{} = {:e} ({}: {})", t.name, t.default, t.bound.name(), t.doc);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.echo_text());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, force, out } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            let overrides = [
                force.then(|| ("regime.force", "true".to_owned())),
                out.map(|o| ("output.dir", o.display().to_string())),
            ];
            for (key, value) in overrides.into_iter().flatten() {
                if let Err(e) = cfg.set(key, &value) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            match run_experiment(&cfg) {
                Ok(report) => {
                    for v in &report.verdicts {
                        println!(
                            "{} {}: {:.6e} ({} {:e})",
                            if v.pass { "PASS" } else { "FAIL" },
                            v.criterion,
                            v.metric,
                            v.threshold,
                            v.threshold_value
                        );
                    }
                    println!("report: {}", report.report_path().display());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
