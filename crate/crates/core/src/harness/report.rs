use serde::{Deserialize, Serialize};

use super::System;
use crate::corpus::Channel;
use crate::{Error, Result};

/// Metrics of one system under one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    /// Epoch (1-based) with the best dev accuracy.
    pub epoch: usize,
    pub dev: f64,
    pub real_test: f64,
    pub max_test: f64,
}

/// Means over seeds plus the population std of `real_test`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub dev: f64,
    pub real_test: f64,
    pub max_test: f64,
    pub std_real_test: f64,
}

pub fn aggregate(per_seed: &[SeedMetrics]) -> Result<Aggregate> {
    if per_seed.is_empty() {
        return Err(Error::InvalidInput("cannot aggregate zero seeds".into()));
    }
    let n = per_seed.len() as f64;
    let mean = |f: fn(&SeedMetrics) -> f64| per_seed.iter().map(f).sum::<f64>() / n;
    let real_test = mean(|m| m.real_test);
    let var = per_seed.iter().map(|m| (m.real_test - real_test).powi(2)).sum::<f64>() / n;
    Ok(Aggregate {
        seeds: per_seed.len(),
        dev: mean(|m| m.dev),
        real_test,
        max_test: mean(|m| m.max_test),
        std_real_test: var.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub system: System,
    pub data: Channel,
    pub per_seed: Vec<SeedMetrics>,
    /// Absent when no seed completed.
    pub aggregate: Option<Aggregate>,
}

/// A seed aborted by a failing stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedSeed {
    pub seed: u64,
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seeds: Vec<u64>,
    pub systems: Vec<SystemReport>,
    pub failed: Vec<FailedSeed>,
}

impl RunReport {
    pub fn system(&self, system: System) -> Option<&SystemReport> {
        self.systems.iter().find(|s| s.system == system)
    }

    pub fn is_complete(&self) -> bool {
        self.failed.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

const HEADER: [&str; 6] = ["Models", "Data", "Dev.", "Real Test", "Max Test", "Std. Dev."];

fn row_cells(system: &SystemReport) -> [String; 6] {
    let pct = |x: f64| format!("{:.1}", 100.0 * x);
    match &system.aggregate {
        Some(a) => [
            system.system.to_string(),
            system.data.to_string(),
            pct(a.dev),
            pct(a.real_test),
            pct(a.max_test),
            format!("{:.3}", a.std_real_test),
        ],
        None => [
            system.system.to_string(),
            system.data.to_string(),
            "-".into(),
            "-".into(),
            "-".into(),
            "-".into(),
        ],
    }
}

/// Aligned `|`-separated table with one row per system.
pub fn render_table(report: &RunReport) -> String {
    let rows: Vec<[String; 6]> = report.systems.iter().map(row_cells).collect();
    let mut widths = HEADER.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let mut out = line(HEADER.to_vec());
    out.push('\n');
    out.push_str(&widths.map(|w| "-".repeat(w)).join("-|-"));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    for f in &report.failed {
        out.push_str(&format!("seed {} failed during {}: {}\n", f.seed, f.stage, f.message));
    }
    out
}

pub fn render_report(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Text => Ok(render_table(report).into_bytes()),
        ReportFormat::Json => {
            let mut s = report.to_json()?;
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}
