//! Single runs written to disk, and parallel parameter sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::trace::Trace;

use super::config::ScenarioConfig;
use super::output::emit_csv;
use super::run::{run_cascade, run_highfi, CASCADE_MODEL, HIGHFI_MODEL};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Cascade,
    HighFi,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Cascade => CASCADE_MODEL,
            Model::HighFi => HIGHFI_MODEL,
        }
    }

    pub fn run(self, cfg: &ScenarioConfig, scenario: &str) -> Result<Trace<f64>, HarnessError> {
        match self {
            Model::Cascade => run_cascade(cfg, scenario),
            Model::HighFi => run_highfi(cfg, scenario),
        }
    }
}

/// Contents of the `<model>.json` file written next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub model: String,
    pub config_hash: String,
    pub status: &'static str,
    pub exit_code: i32,
    pub rows: usize,
    pub contact_loss_t: Option<f64>,
    pub message: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

/// Runs one model and writes `<model>.csv` (also the partial trace on
/// contact loss) and `<model>.json` into `dir`.
pub fn execute_run(
    model: Model,
    cfg: &ScenarioConfig,
    scenario: &str,
    dir: &Path,
) -> Result<(RunRecord, Result<Trace<f64>, HarnessError>), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let result = model.run(cfg, scenario);
    let csv_path = dir.join(format!("{}.csv", model.name()));
    let mut record = RunRecord {
        scenario: scenario.to_owned(),
        model: model.name().to_owned(),
        config_hash: cfg.hash(),
        status: "ok",
        exit_code: 0,
        rows: 0,
        contact_loss_t: None,
        message: None,
    };
    match &result {
        Ok(tr) => {
            emit_csv(tr, &csv_path)?;
            record.rows = tr.len();
        }
        Err(e) => {
            record.exit_code = e.exit_code();
            record.message = Some(e.to_string());
            record.status = "error";
            if let HarnessError::ContactLoss { t, trace } = e {
                emit_csv(trace, &csv_path)?;
                record.status = "contact_loss";
                record.rows = trace.len();
                record.contact_loss_t = Some(*t);
            }
        }
    }
    let json_path = dir.join(format!("{}.json", model.name()));
    let json = serde_json::to_string_pretty(&record).expect("record serializes") + "\n";
    fs::write(&json_path, json).map_err(io_err(&json_path))?;
    Ok((record, result))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub value: String,
    pub directory: PathBuf,
    pub runs: Vec<RunRecord>,
}

impl SweepOutcome {
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().map(|r| r.exit_code).find(|&c| c != 0).unwrap_or(0)
    }
}

/// Runs `models` for every value of `param`, in parallel, each in its own
/// `<out>/<param>=<value>` directory, then writes `<out>/summary.json`.
///
/// A value the config rejects yields an outcome with a config error
/// instead of aborting the sweep.
pub fn run_sweep(
    base: &ScenarioConfig,
    scenario: &str,
    param: &str,
    values: &[String],
    models: &[Model],
    out: &Path,
) -> Result<Vec<SweepOutcome>, HarnessError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let outcomes: Vec<SweepOutcome> = values
        .par_iter()
        .map(|value| {
            let dir = out.join(format!("{param}={value}"));
            let name = format!("{scenario}[{param}={value}]");
            let mut cfg = base.clone();
            let prepared = cfg
                .set(param, value)
                .map_err(|m| super::ConfigError::Invalid(format!("{param}: {m}")))
                .and_then(|_| cfg.validate());
            let runs = match prepared {
                Ok(()) => models
                    .iter()
                    .map(|&m| execute_run(m, &cfg, &name, &dir).map(|(rec, _)| rec))
                    .collect::<Result<Vec<_>, _>>()?,
                Err(e) => {
                    let e = HarnessError::from(e);
                    models
                        .iter()
                        .map(|m| RunRecord {
                            scenario: name.clone(),
                            model: m.name().to_owned(),
                            config_hash: String::new(),
                            status: "error",
                            exit_code: e.exit_code(),
                            rows: 0,
                            contact_loss_t: None,
                            message: Some(e.to_string()),
                        })
                        .collect()
                }
            };
            Ok(SweepOutcome { value: value.clone(), directory: dir, runs })
        })
        .collect::<Result<_, HarnessError>>()?;
    let path = out.join("summary.json");
    let json = serde_json::to_string_pretty(&outcomes).expect("summary serializes") + "\n";
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(outcomes)
}
