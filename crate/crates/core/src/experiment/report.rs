//! Collects experiment CSVs and manifests of a results directory into `index.json`.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::records::CSV_HEADER;
use crate::experiment::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexEntry {
    pub experiment: String,
    pub csv: String,
    pub manifest: String,
    pub config_hash: String,
    pub passed: bool,
    /// The hash recorded in the manifest equals the hash of its config echo.
    pub hash_consistent: bool,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportIndex {
    pub tool_version: String,
    pub experiments: Vec<IndexEntry>,
}

impl ReportIndex {
    pub fn consistent(&self) -> bool {
        self.experiments.iter().all(|e| e.hash_consistent)
    }
}

fn entry(dir: &Path, csv_name: &str) -> Result<IndexEntry> {
    let stem = csv_name.trim_end_matches(".csv");
    let manifest_name = format!("{stem}_manifest.json");
    let text = std::fs::read_to_string(dir.join(&manifest_name))
        .map_err(|e| Error::Format(format!("{csv_name} has no readable manifest {manifest_name}: {e}")))?;
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    let recorded = manifest["config_hash"].as_str().unwrap_or_default().to_string();
    let config: ExperimentConfig =
        serde_json::from_value(manifest["config"].clone()).map_err(|e| Error::Format(format!("{manifest_name}: {e}")))?;
    let csv = std::fs::read_to_string(dir.join(csv_name))?;
    let mut lines = csv.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Format(format!("{csv_name} does not carry the experiment header")));
    }
    Ok(IndexEntry {
        experiment: manifest["experiment"].as_str().unwrap_or(stem).to_string(),
        csv: csv_name.to_string(),
        manifest: manifest_name,
        hash_consistent: config.hash() == recorded,
        config_hash: recorded,
        passed: manifest["passed"].as_bool().unwrap_or(false),
        rows: lines.count(),
    })
}

/// Scans `dir` for experiment CSVs, checks each against its manifest and writes `index.json`.
pub fn report_data(dir: &Path) -> Result<ReportIndex> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .filter(|n| dir.join(n.trim_end_matches(".csv").to_string() + "_manifest.json").exists())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Format(format!("no experiment CSVs found in {}", dir.display())));
    }
    let experiments = names.iter().map(|n| entry(dir, n)).collect::<Result<_>>()?;
    let index = ReportIndex { tool_version: env!("CARGO_PKG_VERSION").to_string(), experiments };
    std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index).expect("index serialises"))?;
    Ok(index)
}
