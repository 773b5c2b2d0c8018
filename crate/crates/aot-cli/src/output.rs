//! Data-file and manifest emission.
//!
//! CSV is the primary artifact; a JSON mirror of the same rows is optional.
//! Every experiment also writes `manifest.json` with the fully resolved
//! configuration, the seed, the toolkit version, and wall time — enough to
//! re-execute the run exactly. Data files are byte-deterministic for a
//! given config and seed; only the manifest's timing fields vary.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use aot_core::{RunDiagnostics, SimMetrics};

use crate::config::{CliError, OutputFormat, Result};

/// One slot of an emitted trace.
#[derive(Debug, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub rate: f64,
    pub indicator: u8,
    pub age: u64,
}

/// One point of an emitted trade-off sweep.
#[derive(Debug, Serialize)]
pub struct ParetoRow {
    pub alpha: f64,
    pub policy: String,
    pub average_aot: f64,
    pub throughput: f64,
    pub objective: f64,
}

/// One row of the ALOHA grid schema, shared by analytics, simulation, and
/// the optimiser sweeps. `source` is `analytic` or `sim`; standard-error
/// fields are filled only for simulation rows, and age columns hold the
/// half-peak and renewal values where defined.
#[derive(Debug, Serialize)]
pub struct AlohaRow {
    pub sensors: u64,
    pub activity: f64,
    pub slots: u64,
    pub trust_slots: u64,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub p_s: f64,
    pub p_t: f64,
    pub aot_half_peak: Option<f64>,
    pub aot_renewal: Option<f64>,
    pub eta: f64,
    pub h: Option<f64>,
    pub source: &'static str,
    pub p_s_se: Option<f64>,
    pub p_t_se: Option<f64>,
    pub age_se: Option<f64>,
    pub eta_se: Option<f64>,
}

/// One frame length of an optimiser scan.
#[derive(Debug, Serialize)]
pub struct ScanRow {
    pub sensors: u64,
    pub activity: f64,
    pub beta: f64,
    pub alpha: f64,
    pub slots: u64,
    pub trust_slots: u64,
    pub h: f64,
}

pub struct Emitter {
    dir: PathBuf,
    format: OutputFormat,
    written: Vec<String>,
}

impl Emitter {
    pub fn new(dir: PathBuf, format: OutputFormat) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Emitter { dir, format, written: Vec::new() })
    }

    /// Writes `name.csv` (and `name.json` when the format asks for it) from
    /// one row iterator.
    pub fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if self.format.wants_csv() {
            let path = self.dir.join(format!("{name}.csv"));
            let mut writer = csv::Writer::from_path(&path)
                .map_err(|e| CliError::config(format!("writing {}: {e}", path.display())))?;
            for row in rows {
                writer
                    .serialize(row)
                    .map_err(|e| CliError::config(format!("writing {}: {e}", path.display())))?;
            }
            writer
                .flush()
                .map_err(|e| CliError::io(format!("flushing {}", path.display()), e))?;
            self.written.push(format!("{name}.csv"));
        }
        if self.format.wants_json() {
            let path = self.dir.join(format!("{name}.json"));
            let text = serde_json::to_string_pretty(rows).expect("rows serialize");
            fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
            self.written.push(format!("{name}.json"));
        }
        Ok(())
    }

    /// Writes an arbitrary JSON document (policy tables and the like).
    pub fn json_file(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    /// Finishes the run by writing `manifest.json`.
    pub fn manifest(self, m: &Manifest) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        let mut value = serde_json::to_value(m).expect("manifest serializes");
        value["outputs"] = json!(self.written);
        fs::write(&path, serde_json::to_string_pretty(&value).expect("manifest serializes"))
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}

/// Run provenance: everything needed to re-execute the experiment exactly,
/// plus timing. `created_unix` and `wall_time_secs` are the only fields that
/// vary between identical runs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub toolkit_version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub entropy_seeded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<SimMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<RunDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
    pub wall_time_secs: f64,
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Manifest {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            seed: None,
            entropy_seeded: false,
            resolved_policy: None,
            metrics: None,
            diagnostics: None,
            summary: None,
            wall_time_secs: 0.0,
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn seeded(mut self, seed: u64, entropy: bool) -> Self {
        self.seed = Some(seed);
        self.entropy_seeded = entropy;
        self
    }
}
