//! Experiment configuration, registry and report emission.
//!
//! [`run_experiment`] writes into the configured output directory:
//! one CSV per run or table, `report.jsonl`, `SCHEMA.md`, and SVG plots when
//! `output.svg = true`.

pub mod config;
pub mod experiments;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use serde_json::json;

pub use config::{ExperimentConfig, InitialData, Profile};
pub use experiments::{initial_state, Bound, Experiment, Outcome, ThresholdSpec, Verdict};
pub use output::{CsvWriter, LinePlot, OutputDir};

use crate::error::{Error, Result};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "GNCH_THREADS";

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub verdicts: Vec<Verdict>,
    pub summary: serde_json::Value,
    pub output_dir: PathBuf,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn report_path(&self) -> PathBuf {
        self.output_dir.join("report.jsonl")
    }
}

/// Worker pool sized by `GNCH_THREADS` (unset or `0` means one per core).
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::config(None, Some(THREADS_ENV), format!("expected a thread count, found `{s}`")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(format!("cannot start the worker pool: {e}")))
}

/// Runs the configured experiment and writes every output file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let pool = worker_pool()?;
    let out = OutputDir::create(&cfg.output_dir(), cfg.flag("output.svg"))?;
    let outcome = experiments::run(cfg, &out, &pool)?;
    out.write_schema()?;

    let passed = outcome.verdicts.iter().all(|v| v.pass);
    let mut report = std::io::BufWriter::new(std::fs::File::create(out.path().join("report.jsonl"))?);
    let header = json!({
        "kind": "config",
        "experiment": cfg.experiment.name(),
        "config": cfg.echo_json(),
        "thresholds": cfg.thresholds(),
    });
    writeln!(report, "{header}")?;
    for v in &outcome.verdicts {
        writeln!(report, "{}", v.to_json())?;
    }
    let summary = json!({
        "kind": "summary",
        "experiment": cfg.experiment.name(),
        "pass": passed,
        "results": outcome.summary,
    });
    writeln!(report, "{summary}")?;
    report.flush()?;

    Ok(RunReport {
        experiment: cfg.experiment,
        verdicts: outcome.verdicts,
        summary: outcome.summary,
        output_dir: out.path().to_owned(),
    })
}
