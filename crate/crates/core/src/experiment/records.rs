//! Result tables, CSV and manifest persistence, and trend verdicts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::experiment::ExperimentConfig;

pub const CSV_HEADER: &str = "eps,a_eps,replicas,metric_name,estimate,ci_low,ci_high,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Recorded only; does not enter the overall verdict.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub eps: Option<f64>,
    pub a_eps: Option<f64>,
    pub replicas: u64,
    pub metric_name: String,
    pub estimate: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub verdict: Verdict,
}

impl MetricRow {
    pub fn new(metric: &str, replicas: u64, estimate: f64, verdict: Verdict) -> Self {
        Self {
            eps: None,
            a_eps: None,
            replicas,
            metric_name: metric.to_string(),
            estimate,
            ci_low: None,
            ci_high: None,
            verdict,
        }
    }

    pub fn at(mut self, eps: f64, a_eps: f64) -> Self {
        self.eps = Some(eps);
        self.a_eps = Some(a_eps);
        self
    }

    pub fn ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Outcome of one experiment: its table, overall verdict and side data for the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
    pub details: BTreeMap<String, serde_json::Value>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash: config.hash(),
            seed: config.ensemble.seed,
            rows: Vec::new(),
            passed: false,
            wall_clock_seconds: 0.0,
            details: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("serialisable detail"));
    }

    /// Passes iff no row failed.
    pub fn settle(&mut self) {
        self.passed = self.rows.iter().all(|r| r.verdict != Verdict::Fail);
    }

    pub fn rows_named<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a MetricRow> + 'a {
        self.rows.iter().filter(move |r| r.metric_name == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:e},{},{},{}",
                num(r.eps),
                num(r.a_eps),
                r.replicas,
                r.metric_name,
                r.estimate,
                num(r.ci_low),
                num(r.ci_high),
                r.verdict.as_str()
            );
        }
        s
    }

    /// Writes `<experiment>.csv` and `<experiment>_manifest.json` under `dir`.
    pub fn persist(&self, dir: &Path, config: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.experiment));
        std::fs::write(&csv, self.to_csv())?;
        let manifest = Manifest {
            experiment: &self.experiment,
            config_hash: &self.config_hash,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            passed: self.passed,
            wall_clock_seconds: self.wall_clock_seconds,
            csv: csv.file_name().and_then(|n| n.to_str()).unwrap_or_default(),
            config,
            details: &self.details,
        };
        let path = dir.join(format!("{}_manifest.json", self.experiment));
        std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
        Ok((csv, path))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    tool_version: &'a str,
    seed: u64,
    passed: bool,
    wall_clock_seconds: f64,
    csv: &'a str,
    config: &'a ExperimentConfig,
    details: &'a BTreeMap<String, serde_json::Value>,
}

/// True iff along the sequence each value is below its predecessor plus
/// `sigmas` standard errors of the difference. With `sigmas = 0` the check is strict.
pub fn decreasing_within(estimates: &[f64], std_errors: &[f64], sigmas: f64) -> bool {
    estimates.windows(2).zip(std_errors.windows(2)).all(|(e, s)| {
        let slack = sigmas * (s[0] * s[0] + s[1] * s[1]).sqrt();
        if slack > 0.0 {
            e[1] <= e[0] + slack
        } else {
            e[1] < e[0]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_checks() {
        assert!(decreasing_within(&[3.0, 2.0, 1.0], &[0.0; 3], 0.0));
        assert!(!decreasing_within(&[3.0, 3.0, 1.0], &[0.0; 3], 0.0));
        assert!(decreasing_within(&[3.0, 3.1, 1.0], &[0.1; 3], 2.0));
        assert!(!decreasing_within(&[3.0, 3.5, 1.0], &[0.1; 3], 2.0));
        assert!(decreasing_within(&[1.0], &[0.0], 0.0));
    }

    #[test]
    fn csv_rows_follow_the_schema() {
        let cfg = crate::experiment::config::minimal_config();
        let mut rec = ExperimentRecord::new("demo", &cfg);
        rec.push(MetricRow::new("gap", 10, 0.25, Verdict::Pass).at(0.1, 0.1f64.powf(0.4)).ci(0.2, 0.3));
        rec.push(MetricRow::new("ratio", 0, 1e-17, Verdict::Info));
        rec.settle();
        assert!(rec.passed);
        let csv = rec.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1e-1,"));
        assert!(lines[1].ends_with(",10,gap,2.5e-1,2e-1,3e-1,pass"));
        assert_eq!(lines[2], ",,0,ratio,1e-17,,,info");
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 8);
        }
        rec.push(MetricRow::new("bad", 1, 1.0, Verdict::Fail));
        rec.settle();
        assert!(!rec.passed);
    }

    #[test]
    fn persist_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = crate::experiment::config::minimal_config();
        let mut rec = ExperimentRecord::new("demo", &cfg);
        rec.detail("note", "hello");
        rec.settle();
        let (csv, man) = rec.persist(dir.path(), &cfg).unwrap();
        assert!(csv.exists());
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(man).unwrap()).unwrap();
        assert_eq!(v["config_hash"], cfg.hash());
        assert_eq!(v["details"]["note"], "hello");
        assert_eq!(v["config"]["basis"]["n"], 2);
    }
}
