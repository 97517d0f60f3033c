use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use alr_core::train::METRICS_HEADER;

use crate::artifacts::{write_bytes, write_string};
use crate::error::{LabError, Result};

/// Re-renders the requested snapshot matrices as full-size heatmaps (one row
/// and column per class, zero diagonal) and writes the mean-row-entropy
/// trajectory for the whole run.
///
/// Works purely from the artifacts a training run wrote: snapshot CSVs and
/// metrics.csv. Cell strings are copied verbatim, so exported files are
/// byte-stable across re-runs.
pub fn cmd_export_heatmap(run_dir: &Path, epochs: &[usize]) -> Result<()> {
    if epochs.is_empty() {
        return Err(LabError::config("export-heatmap needs at least one epoch"));
    }

    // Validate the run directory and every requested epoch up front.
    let metrics_path = run_dir.join("metrics.csv");
    let metrics = read_run_file(&metrics_path, run_dir)?;
    let mut snapshot_paths: Vec<(usize, PathBuf)> = Vec::with_capacity(epochs.len());
    for &epoch in epochs {
        let path = run_dir.join(format!("S_epoch{epoch}.csv"));
        if !path.is_file() {
            return Err(LabError::config(format!(
                "no snapshot for epoch {epoch}: {} does not exist",
                path.display()
            )));
        }
        snapshot_paths.push((epoch, path));
    }

    write_string(&run_dir.join("entropy.csv"), &entropy_csv(&metrics, &metrics_path)?)?;

    for (epoch, path) in &snapshot_paths {
        let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let (csv, pgm) = full_heatmap(&text, path)?;
        write_string(&run_dir.join(format!("heatmap_epoch{epoch}.csv")), &csv)?;
        write_bytes(&run_dir.join(format!("heatmap_epoch{epoch}.pgm")), &pgm)?;
    }
    println!(
        "wrote entropy.csv and {} heatmap pair(s) to {}",
        snapshot_paths.len(),
        run_dir.display()
    );
    Ok(())
}

fn read_run_file(path: &Path, run_dir: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            LabError::config(format!(
                "{} is not a run directory: {} is missing",
                run_dir.display(),
                path.display()
            ))
        } else {
            LabError::io(path, e)
        }
    })
}

/// Extracts `epoch,mean_row_entropy` from metrics.csv, copying the cell
/// strings verbatim so the two files can never drift apart in rounding.
fn entropy_csv(metrics: &str, metrics_path: &Path) -> Result<String> {
    let mut lines = metrics.lines();
    let header = lines.next().unwrap_or_default();
    if header != METRICS_HEADER {
        return Err(LabError::config(format!(
            "{}: unexpected header {header:?}",
            metrics_path.display()
        )));
    }
    let entropy_col = METRICS_HEADER
        .split(',')
        .position(|name| name == "mean_row_entropy")
        .expect("column exists in the header constant");

    let mut out = String::from("epoch,mean_row_entropy\n");
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() <= entropy_col {
            return Err(LabError::config(format!(
                "{} line {}: expected {} columns, found {}",
                metrics_path.display(),
                idx + 2,
                entropy_col + 1,
                cells.len()
            )));
        }
        out.push_str(cells[0]);
        out.push(',');
        out.push_str(cells[entropy_col]);
        out.push('\n');
    }
    Ok(out)
}

/// Expands a residual-layout snapshot (K rows of K−1 probabilities) into the
/// full K×K layout with an exact zero on the diagonal, returning the CSV
/// text and the binary PGM image.
fn full_heatmap(snapshot: &str, path: &Path) -> Result<(String, Vec<u8>)> {
    let rows: Vec<Vec<&str>> = snapshot
        .lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').collect())
        .collect();
    let k = rows.len();
    if k < 2 {
        return Err(LabError::config(format!(
            "{}: a snapshot needs at least 2 rows, found {k}",
            path.display()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k - 1 {
            return Err(LabError::config(format!(
                "{} line {}: expected {} cells, found {}",
                path.display(),
                i + 1,
                k - 1,
                row.len()
            )));
        }
    }

    let mut csv = String::new();
    let mut pgm = format!("P5\n{k} {k}\n255\n").into_bytes();
    for (i, row) in rows.iter().enumerate() {
        let mut full_cells: Vec<&str> = Vec::with_capacity(k);
        full_cells.extend_from_slice(&row[..i]);
        full_cells.push("0");
        full_cells.extend_from_slice(&row[i..]);
        csv.push_str(&full_cells.join(","));
        csv.push('\n');
        for (j, cell) in full_cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                LabError::config(format!(
                    "{} line {}: cannot parse probability {cell:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(LabError::config(format!(
                    "{} line {} column {}: {value} is not a probability",
                    path.display(),
                    i + 1,
                    j + 1
                )));
            }
            pgm.push((255.0 * value).round() as u8);
        }
    }
    Ok((csv, pgm))
}
