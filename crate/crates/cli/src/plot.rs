//! Hand-off descriptions for the plotting scripts.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    Rate,
    Tail,
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSlope {
    pub label: String,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub reference_slopes: Vec<ReferenceSlope>,
}

/// Builds a plot description from a run summary.
pub fn plot_spec(summary: &Value, output: &Path) -> Result<PlotSpec> {
    let kind = summary
        .get("kind")
        .and_then(Value::as_str)
        .context("summary has no `kind`")?;
    let plot = match kind {
        "rates" => PlotKind::Rate,
        "tail" | "tail_lemma" => PlotKind::Tail,
        "pinelis" | "low_p" | "burkholder" | "maximal" | "stability" | "linfty" => PlotKind::Ratio,
        other => bail!("experiments of kind `{other}` have no plot"),
    };
    let inputs: Vec<PathBuf> = summary
        .get("tables")
        .and_then(Value::as_array)
        .context("summary has no `tables`")?
        .iter()
        .filter_map(Value::as_str)
        .map(PathBuf::from)
        // per-sample records are not plotted
        .filter(|p| !p.to_string_lossy().ends_with(".records.csv"))
        .collect();
    let mut reference_slopes = Vec::new();
    if plot == PlotKind::Rate {
        let result = &summary["result"];
        if let Some(s) = result["fit"]["slope"].as_f64() {
            reference_slopes.push(ReferenceSlope {
                label: "fitted".into(),
                slope: s,
            });
        }
        if let Some(s) = result["predicted_slope"].as_f64() {
            reference_slopes.push(ReferenceSlope {
                label: "predicted".into(),
                slope: s,
            });
        }
    }
    Ok(PlotSpec {
        kind: plot,
        inputs,
        output: output.to_path_buf(),
        reference_slopes,
    })
}

pub fn load_summary(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read summary {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rate_summary_yields_slopes_and_drops_records() {
        let s = json!({
            "kind": "rates",
            "tables": ["out/a.csv", "out/a.records.csv"],
            "result": { "fit": { "slope": -0.51 }, "predicted_slope": -0.5 }
        });
        let p = plot_spec(&s, Path::new("a.png")).unwrap();
        assert_eq!(p.kind, PlotKind::Rate);
        assert_eq!(p.inputs, vec![PathBuf::from("out/a.csv")]);
        assert_eq!(p.reference_slopes.len(), 2);
        assert_eq!(p.reference_slopes[0].slope, -0.51);
    }

    #[test]
    fn probes_have_no_plot() {
        let s = json!({ "kind": "order", "tables": [] });
        assert!(plot_spec(&s, Path::new("x.png"))
            .unwrap_err()
            .to_string()
            .contains("order"));
    }
}
