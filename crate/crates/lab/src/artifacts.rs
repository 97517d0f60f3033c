//! Writing run artifacts: metrics, snapshot matrices, summaries, and the
//! comparison table. Everything except the `generated_unix_time` field of
//! summary.json is byte-deterministic for a given config and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use alr_core::fmtnum::format_sig;
use alr_core::residual::ExportMapping;
use alr_core::train::{render_metrics_csv, top_m_accuracy, TrainOutcome};
use serde::Serialize;

use crate::config::{ExperimentConfig, ResolvedRun};
use crate::error::{LabError, Result};

pub const SIG_DIGITS: usize = 9;

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| LabError::io(path, e))
}

pub fn write_bytes(path: &Path, content: &[u8]) -> Result<()> {
    fs::write(path, content).map_err(|e| LabError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| LabError::io(path, e))
}

#[derive(Serialize)]
struct Summary<'a> {
    /// Wall-clock stamp; the one field excluded from determinism guarantees.
    generated_unix_time: u64,
    method: &'a str,
    seed: u64,
    epochs: usize,
    num_classes: usize,
    final_train_acc: f64,
    final_test_acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_test_top_m_acc: Option<f64>,
    model_params: usize,
    /// Extra learnable parameters introduced by the residual matrix:
    /// K·(K−1) for residual methods, 0 otherwise.
    param_overhead: usize,
    total_params: usize,
    config: &'a ExperimentConfig,
}

/// Writes metrics.csv, per-epoch snapshot files, and summary.json into the
/// run directory. Returns the path of summary.json.
pub fn write_run_artifacts(run: &ResolvedRun, outcome: &TrainOutcome) -> Result<PathBuf> {
    let dir = &run.output_dir;
    create_dir(dir)?;

    write_string(&dir.join("metrics.csv"), &render_metrics_csv(&outcome.records))?;

    for (epoch, matrix) in &outcome.snapshots {
        write_string(
            &dir.join(format!("S_epoch{epoch}.csv")),
            &matrix.render_csv(ExportMapping::Residual),
        )?;
        write_bytes(
            &dir.join(format!("S_epoch{epoch}.pgm")),
            &matrix.render_pgm(ExportMapping::Residual),
        )?;
    }

    let last = outcome.final_record();
    let model_params = outcome.model.param_count();
    let overhead = outcome
        .residual
        .as_ref()
        .map(|s| s.param_count())
        .unwrap_or(0);
    let top_m = match run.top_m {
        Some(m) => Some(top_m_accuracy(&outcome.model, &run.test, m)?),
        None => None,
    };
    let summary = Summary {
        generated_unix_time: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        method: run.method.as_str(),
        seed: run.settings.seed,
        epochs: run.settings.epochs,
        num_classes: run.train.num_classes(),
        final_train_acc: last.train_acc,
        final_test_acc: last.test_acc,
        final_test_top_m_acc: top_m,
        model_params,
        param_overhead: overhead,
        total_params: model_params + overhead,
        config: &run.echo,
    };
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| LabError::config(format!("summary serialization: {e}")))?;
    text.push('\n');
    write_string(&path, &text)?;
    Ok(path)
}

/// One aggregate row of a method comparison.
pub struct CompareRow {
    pub method: String,
    pub seeds: usize,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
}

impl CompareRow {
    /// Mean and sample standard deviation (n−1 denominator; 0 for a single
    /// seed) of final test accuracies.
    pub fn from_accuracies(method: &str, accs: &[f64]) -> Self {
        let n = accs.len();
        let mean = accs.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
            var.sqrt()
        };
        CompareRow {
            method: method.to_string(),
            seeds: n,
            mean_test_acc: mean,
            std_test_acc: std,
        }
    }
}

pub fn render_compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("method,seeds,mean_test_acc,std_test_acc\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.method,
            row.seeds,
            format_sig(row.mean_test_acc, SIG_DIGITS),
            format_sig(row.std_test_acc, SIG_DIGITS),
        ));
    }
    out
}
