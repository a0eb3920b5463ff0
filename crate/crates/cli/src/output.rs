//! CSV tables, JSON summaries and run manifests.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use convolve_ineq::report::{RatioReport, TailReport};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const RATES_HEADER: [&str; 13] = [
    "model", "scheme", "lambda", "beta", "p", "K", "n_ref", "M", "seed", "n", "E_hat", "ci_lo",
    "ci_hi",
];
pub const RATIO_HEADER: [&str; 9] = [
    "trial", "regime", "p", "D", "lhs", "lhs_ci", "rhs", "ratio", "verdict",
];
pub const TAIL_HEADER: [&str; 8] = [
    "trial",
    "regime",
    "r",
    "empirical",
    "stderr",
    "bound",
    "informative",
    "verdict",
];

/// One CSV file; `suffix` distinguishes secondary tables of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub suffix: Option<&'static str>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            suffix: None,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn with_suffix(mut self, suffix: &'static str) -> Self {
        self.suffix = Some(suffix);
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().context("flushing CSV")
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn ratio_table(reports: &[&RatioReport]) -> Table {
    let mut t = Table::new(&RATIO_HEADER);
    for r in reports {
        t.push(vec![
            r.trial.clone(),
            r.regime.clone(),
            num(r.p),
            num(r.d),
            num(r.lhs),
            num(r.lhs_ci.half_width()),
            num(r.rhs),
            num(r.ratio),
            r.verdict.as_str().to_string(),
        ]);
    }
    t
}

pub fn tail_table(report: &TailReport) -> Table {
    let mut t = Table::new(&TAIL_HEADER);
    for p in &report.points {
        t.push(vec![
            report.trial.clone(),
            report.regime.clone(),
            num(p.r),
            num(p.empirical),
            num(p.stderr),
            num(p.bound),
            p.informative.to_string(),
            if p.pass { "pass" } else { "fail" }.to_string(),
        ]);
    }
    t
}

/// Provenance record written next to every result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub experiment: String,
    pub kind: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub passed: bool,
}

/// File name stem for an experiment id.
pub fn stem(id: &str) -> String {
    id.replace(':', "_")
}

pub fn table_path(out: &Path, stem: &str, table: &Table) -> PathBuf {
    match table.suffix {
        Some(s) => out.join(format!("{stem}.{s}.csv")),
        None => out.join(format!("{stem}.csv")),
    }
}
