//! Delivery-time statistics and their CSV/JSON exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scheme;

/// Successful drop times of one scheme, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DropStats {
    pub scheme: Scheme,
    pub times: Vec<f64>,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// `None` when every drop failed.
    pub mean: Option<f64>,
    pub p50: Option<f64>,
    pub p95: Option<f64>,
    pub n: usize,
    pub failed: usize,
}

impl DropStats {
    pub fn new(scheme: Scheme, mut times: Vec<f64>, failed: usize) -> Self {
        times.sort_by(f64::total_cmp);
        Self { scheme, times, failed }
    }

    pub fn mean(&self) -> f64 {
        if self.times.is_empty() {
            return f64::NAN;
        }
        self.times.iter().sum::<f64>() / self.times.len() as f64
    }

    /// Sample at 1-based rank `⌈q n⌉`.
    pub fn percentile(&self, q: f64) -> f64 {
        let n = self.times.len();
        if n == 0 {
            return f64::NAN;
        }
        let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
        self.times[rank - 1]
    }

    pub fn spread(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => f64::NAN,
        }
    }

    /// `(time, cumulative probability)` steps.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let n = self.times.len() as f64;
        self.times.iter().enumerate().map(|(i, &t)| (t, (i + 1) as f64 / n)).collect()
    }

    pub fn summary(&self) -> Summary {
        let some = |x: f64| (!self.times.is_empty()).then_some(x);
        Summary {
            mean: some(self.mean()),
            p50: some(self.percentile(0.5)),
            p95: some(self.percentile(0.95)),
            n: self.times.len(),
            failed: self.failed,
        }
    }
}

pub fn emit_cdf(stats: &DropStats) -> String {
    let mut out = String::from("time,cum_prob\n");
    for (t, p) in stats.cdf() {
        let _ = writeln!(out, "{t},{p}");
    }
    out
}

pub fn emit_summary(stats: &[DropStats]) -> String {
    let map: BTreeMap<String, Summary> = stats.iter().map(|s| (s.scheme.name().to_string(), s.summary())).collect();
    serde_json::to_string_pretty(&map).expect("summary serializes") + "\n"
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Format(String),
}

/// Writes `cdf_<scheme>.csv` per scheme and `summary.json` into `dir`.
pub fn export_report(stats: &[DropStats], dir: &Path) -> Result<(), ReportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ReportError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for s in stats {
        let path = dir.join(format!("cdf_{}.csv", s.scheme.name()));
        std::fs::write(&path, emit_cdf(s)).map_err(io(&path))?;
    }
    let path = dir.join("summary.json");
    std::fs::write(&path, emit_summary(stats)).map_err(io(&path))
}

/// Rebuilds statistics from a CDF file and the scheme's summary entry.
pub fn parse_report(scheme: Scheme, cdf: &str, summary: &str) -> Result<DropStats, ReportError> {
    let mut times = Vec::new();
    for (i, line) in cdf.lines().enumerate().skip(1) {
        let t = line
            .split(',')
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or_else(|| ReportError::Format(format!("line {}: expected `time,cum_prob`", i + 1)))?;
        times.push(t);
    }
    let map: BTreeMap<String, Summary> = serde_json::from_str(summary).map_err(|e| ReportError::Format(e.to_string()))?;
    let entry = map.get(scheme.name()).ok_or_else(|| ReportError::Format(format!("no summary for {scheme}")))?;
    if entry.n != times.len() {
        return Err(ReportError::Format(format!("{scheme}: summary counts {} drops, CDF has {}", entry.n, times.len())));
    }
    Ok(DropStats::new(scheme, times, entry.failed))
}

/// Loads every scheme with a CDF file in `dir`.
pub fn load_report(dir: &Path) -> Result<Vec<DropStats>, ReportError> {
    let read = |path: &Path| std::fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.display().to_string(), source });
    let summary = read(&dir.join("summary.json"))?;
    let mut out = Vec::new();
    for scheme in Scheme::ALL {
        let path = dir.join(format!("cdf_{}.csv", scheme.name()));
        if path.exists() {
            out.push(parse_report(scheme, &read(&path)?, &summary)?);
        }
    }
    Ok(out)
}
