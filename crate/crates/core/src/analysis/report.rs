use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AnalysisError, RankCompareReport, TimingReport, ValidationResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AnalysisError + '_ {
    move |source| AnalysisError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path)(e.into()))?;
    w.write_record(header).map_err(|e| io_err(path)(e.into()))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path)(e.into()))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AnalysisError> {
    let body = serde_json::to_string_pretty(value).expect("report types serialize");
    fs::write(path, body + "\n").map_err(io_err(path))
}

/// Scatter CSVs (`{molecule}_{methodA}_vs_{methodB}.csv`), pub-count curves
/// and a JSON summary. Returns the files written.
pub fn write_rank_compare(report: &RankCompareReport, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let stem = file_stem(&report.query_molecule);
    let mut written = Vec::new();
    for c in &report.correlations {
        let path = dir.join(format!("{stem}_{}_vs_{}.csv", c.pair.0, c.pair.1));
        write_csv(&path, &["rank_a", "rank_b"], &c.points)?;
        written.push(path);
    }
    for (method, curve) in &report.pubcount_curves {
        let path = dir.join(format!("{stem}_{method}_pubcount.csv"));
        write_csv(&path, &["rank", "n_pc"], curve)?;
        written.push(path);
    }
    let path = dir.join(format!("{stem}_correlations.json"));
    write_json(&path, report)?;
    written.push(path);
    Ok(written)
}

pub fn write_timing(report: &TimingReport, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("timing.csv");
    write_csv(
        &csv_path,
        &["method", "mean_s", "var_s"],
        report.rows.iter().map(|r| (&r.method, r.mean_s, r.var_s)),
    )?;
    let json_path = dir.join("timing.json");
    write_json(&json_path, report)?;
    Ok(vec![csv_path, json_path])
}

pub fn write_validation(result: &ValidationResult, dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let seed = result.config.seed;
    let t = &result.table;
    let csv_path = dir.join(format!("validation_seed{seed}.csv"));
    write_csv(
        &csv_path,
        &["sample", "nonneighbor", "neighbor"],
        [
            ("random", t.random_nonneighbor, t.random_neighbor),
            ("coauthor", t.coauthor_nonneighbor, t.coauthor_neighbor),
        ],
    )?;
    let json_path = dir.join(format!("validation_seed{seed}.json"));
    write_json(&json_path, result)?;
    Ok(vec![csv_path, json_path])
}
