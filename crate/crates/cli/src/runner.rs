//! Runs one experiment and writes its CSV tables, summary and manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde_json::json;

use crate::config::ExperimentSpec;
use crate::experiments::RunContext;
use crate::output::{stem, table_path, RunManifest, SCHEMA_VERSION};
use crate::registry::Experiment;

#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Runs `spec` under `experiment` and persists every artifact into `out`.
pub fn execute(
    experiment: &dyn Experiment,
    spec: &ExperimentSpec,
    out: &Path,
    ctx: &RunContext,
) -> Result<RunResult> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let started_at = now();
    log::info!(
        "running {} (config {})",
        experiment.id(),
        spec.config_hash()
    );
    let outcome = experiment.run(spec, ctx)?;
    let stem = stem(experiment.id());
    let mut outputs = Vec::new();
    for table in &outcome.tables {
        let path = table_path(out, &stem, table);
        write(&path, &table.to_bytes()?)?;
        outputs.push(path);
    }
    let summary_path = out.join(format!("{stem}.summary.json"));
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment.id(),
        "kind": spec.kind(),
        "config_hash": spec.config_hash(),
        "config": spec,
        "tables": outputs,
        "passed": outcome.passed,
        "result": outcome.summary,
    });
    write(
        &summary_path,
        serde_json::to_string_pretty(&summary)?.as_bytes(),
    )?;
    outputs.push(summary_path.clone());
    let manifest_path = out.join(format!("{stem}.manifest.json"));
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.id().to_string(),
        kind: spec.kind().to_string(),
        config_hash: spec.config_hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: spec.seed(),
        workers: ctx.workers,
        started_at,
        finished_at: now(),
        outputs,
        passed: outcome.passed,
    };
    write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(RunResult {
        manifest,
        summary_path,
        manifest_path,
    })
}
