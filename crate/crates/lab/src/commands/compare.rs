use std::path::Path;

use alr_core::train::train;

use crate::artifacts::{create_dir, render_compare_csv, write_run_artifacts, write_string, CompareRow};
use crate::config::{ExperimentConfig, MethodName};
use crate::error::{LabError, Result};

/// Runs every (method, seed) cell, writes per-run artifacts under
/// `<output_dir>/<method>/seed<seed>/`, and aggregates final test accuracy
/// per method into `<output_dir>/compare.csv`.
///
/// Cells are independent — each owns its datasets, model, and output
/// directory — so they run on separate threads.
pub fn cmd_compare(config_path: &Path, methods: &[String], seeds: &[u64]) -> Result<()> {
    if methods.is_empty() {
        return Err(LabError::config("compare needs at least one method"));
    }
    if seeds.is_empty() {
        return Err(LabError::config("compare needs at least one seed"));
    }
    let methods: Vec<MethodName> = methods
        .iter()
        .map(|m| MethodName::parse(m))
        .collect::<Result<_>>()?;

    let config = ExperimentConfig::load(config_path)?;
    let base = config.output_dir.clone();
    create_dir(&base)?;

    let mut accuracies: Vec<Vec<f64>> = Vec::with_capacity(methods.len());
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for &method in &methods {
            for &seed in seeds {
                let config = &config;
                let dir = base
                    .join(method.as_str())
                    .join(format!("seed{seed}"));
                handles.push(scope.spawn(move || -> Result<f64> {
                    let run = config.resolve(Some(method), Some(seed), Some(dir))?;
                    let outcome = train(&run.settings, &run.train, &run.test)?;
                    write_run_artifacts(&run, &outcome)?;
                    Ok(outcome.final_record().test_acc)
                }));
            }
        }
        let mut results = handles.into_iter().map(|h| {
            h.join()
                .unwrap_or_else(|_| Err(LabError::config("a comparison cell panicked")))
        });
        for _ in &methods {
            let mut per_method = Vec::with_capacity(seeds.len());
            for _ in seeds {
                per_method.push(results.next().expect("one result per cell")?);
            }
            accuracies.push(per_method);
        }
        Ok(())
    })?;

    let rows: Vec<CompareRow> = methods
        .iter()
        .zip(&accuracies)
        .map(|(m, accs)| CompareRow::from_accuracies(m.as_str(), accs))
        .collect();
    let csv = render_compare_csv(&rows);
    write_string(&base.join("compare.csv"), &csv)?;

    print!("{csv}");
    Ok(())
}
