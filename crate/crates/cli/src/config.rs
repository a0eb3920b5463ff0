//! Experiment configurations, tagged by `kind`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use convolve_core::estimator::ExperimentConfig;
use convolve_core::forcing::ForcingSpec;
use convolve_core::generator::{GeneratorRegistry, Model, Multiplier};
use convolve_core::space::{ModeGrid, SobolevWeight};
use convolve_ineq::convolution::{ConvolutionSetup, McParams, StabilityContraction};
use convolve_ineq::lift::LiftSpec;
use convolve_ineq::recursion::DiscreteRecursionSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const KINDS: [&str; 12] = [
    "rates",
    "pinelis",
    "low_p",
    "tail_lemma",
    "burkholder",
    "maximal",
    "stability",
    "tail",
    "linfty",
    "cond_smooth",
    "order",
    "contractivity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Rates(ExperimentConfig),
    Pinelis(DiscreteRecursionSpec),
    LowP(DiscreteRecursionSpec),
    TailLemma(TailLemmaConfig),
    Burkholder(ConvolutionConfig),
    Maximal(MaximalConfig),
    Stability(StabilityConfig),
    Tail(TailConfig),
    Linfty(LiftSpec),
    CondSmooth(CondSmoothConfig),
    Order(OrderProbeConfig),
    Contractivity(ContractivityConfig),
}

/// Subcommand an experiment kind belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Rates,
    Ineq,
    Probe,
}

impl Group {
    pub fn name(&self) -> &'static str {
        match self {
            Group::Rates => "rates",
            Group::Ineq => "ineq",
            Group::Probe => "probe",
        }
    }
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Rates(_) => "rates",
            ExperimentSpec::Pinelis(_) => "pinelis",
            ExperimentSpec::LowP(_) => "low_p",
            ExperimentSpec::TailLemma(_) => "tail_lemma",
            ExperimentSpec::Burkholder(_) => "burkholder",
            ExperimentSpec::Maximal(_) => "maximal",
            ExperimentSpec::Stability(_) => "stability",
            ExperimentSpec::Tail(_) => "tail",
            ExperimentSpec::Linfty(_) => "linfty",
            ExperimentSpec::CondSmooth(_) => "cond_smooth",
            ExperimentSpec::Order(_) => "order",
            ExperimentSpec::Contractivity(_) => "contractivity",
        }
    }

    pub fn group(&self) -> Group {
        match self {
            ExperimentSpec::Rates(_) => Group::Rates,
            ExperimentSpec::Order(_) | ExperimentSpec::Contractivity(_) => Group::Probe,
            _ => Group::Ineq,
        }
    }

    /// Master seed, for kinds that draw random numbers.
    pub fn seed(&self) -> Option<u64> {
        match self {
            ExperimentSpec::Rates(c) => Some(c.seed),
            ExperimentSpec::Pinelis(s) | ExperimentSpec::LowP(s) => Some(s.seed),
            ExperimentSpec::TailLemma(c) => Some(c.recursion.seed),
            ExperimentSpec::Burkholder(c) => Some(c.seed),
            ExperimentSpec::Maximal(c) => Some(c.setup.seed),
            ExperimentSpec::Stability(c) => Some(c.setup.seed),
            ExperimentSpec::Tail(c) => Some(c.setup.seed),
            ExperimentSpec::Linfty(s) => Some(s.seed),
            ExperimentSpec::CondSmooth(c) => Some(c.seed),
            ExperimentSpec::Order(_) | ExperimentSpec::Contractivity(_) => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) -> Result<()> {
        let slot = match self {
            ExperimentSpec::Rates(c) => &mut c.seed,
            ExperimentSpec::Pinelis(s) | ExperimentSpec::LowP(s) => &mut s.seed,
            ExperimentSpec::TailLemma(c) => &mut c.recursion.seed,
            ExperimentSpec::Burkholder(c) => &mut c.seed,
            ExperimentSpec::Maximal(c) => &mut c.setup.seed,
            ExperimentSpec::Stability(c) => &mut c.setup.seed,
            ExperimentSpec::Tail(c) => &mut c.setup.seed,
            ExperimentSpec::Linfty(s) => &mut s.seed,
            ExperimentSpec::CondSmooth(c) => &mut c.seed,
            ExperimentSpec::Order(_) | ExperimentSpec::Contractivity(_) => {
                bail!(
                    "`{}` experiments are deterministic and take no seed",
                    self.kind()
                )
            }
        };
        *slot = seed;
        Ok(())
    }

    /// Canonical JSON: fields in declaration order, defaults filled in.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).context("config is not valid TOML")?;
        check_kind(value.get("kind").map(|k| k.as_str()))?;
        value
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("invalid config: {}", e.message()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        check_kind(value.get("kind").map(|k| k.as_str()))?;
        serde_json::from_value(value).context("invalid config")
    }

    /// TOML, or JSON for a `.json` extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.with_context(|| format!("in config {}", path.display()))
    }
}

fn check_kind(kind: Option<Option<&str>>) -> Result<()> {
    match kind {
        None => bail!("missing field `kind`; expected one of {}", KINDS.join(", ")),
        Some(None) => bail!("field `kind` must be a string"),
        Some(Some(k)) if !KINDS.contains(&k) => {
            bail!(
                "unknown experiment kind `{k}` in field `kind`; expected one of {}",
                KINDS.join(", ")
            )
        }
        Some(Some(_)) => Ok(()),
    }
}

fn default_model() -> String {
    "heat".into()
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

/// Multiplier of a named built-in model.
pub fn builtin_multiplier(model: &str, grid: &ModeGrid) -> Result<Multiplier> {
    if Model::parse(model)? == Model::Custom {
        bail!("field `model`: custom symbols are only supported by `rates` experiments");
    }
    Ok(Multiplier::from_generator(
        GeneratorRegistry::default().get(model)?.as_ref(),
        grid,
    )?)
}

/// Model, forcing and Monte Carlo budget for the convolution trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvolutionConfig {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(alias = "K")]
    pub cutoff: usize,
    #[serde(default = "one_usize")]
    pub dimension: usize,
    /// Smoothness of the state space.
    #[serde(default)]
    pub lambda: f64,
    /// Forcing decay `s`; `lambda + d/2 + 1/2` when absent.
    #[serde(default)]
    pub decay: Option<f64>,
    /// Force only the zero mode.
    #[serde(default)]
    pub single_mode: bool,
    /// Overall factor on the forcing.
    #[serde(default = "one")]
    pub amplitude: f64,
    pub n_ref: usize,
    #[serde(default = "one", alias = "T")]
    pub horizon: f64,
    pub p: f64,
    #[serde(alias = "M")]
    pub samples: usize,
    pub seed: u64,
}

impl ConvolutionConfig {
    pub fn setup(&self) -> Result<ConvolutionSetup> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            bail!("field `amplitude` must be finite and nonnegative");
        }
        let grid = ModeGrid::new(self.dimension, self.cutoff)?;
        let multiplier = builtin_multiplier(&self.model, &grid)?;
        let forcing = if self.single_mode {
            ForcingSpec::single_mode(
                &grid,
                grid.zero_index(),
                Complex64::new(self.amplitude, 0.0),
            )?
        } else {
            let s = self
                .decay
                .unwrap_or(self.lambda + self.dimension as f64 / 2.0 + 0.5);
            ForcingSpec::decaying(&grid, s)?.scaled(self.amplitude)
        };
        Ok(ConvolutionSetup {
            grid,
            multiplier,
            forcing,
            weight: SobolevWeight::new(self.lambda),
            n_ref: self.n_ref,
            horizon: self.horizon,
        })
    }

    pub fn mc(&self, workers: usize) -> McParams {
        McParams {
            p: self.p,
            samples: self.samples,
            seed: self.seed,
            workers,
        }
    }
}

fn default_factor() -> f64 {
    convolve_ineq::convolution::MAXIMAL_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalConfig {
    /// Multiple of `D sqrt(p)` used as the constant.
    #[serde(default = "default_factor")]
    pub factor: f64,
    pub setup: ConvolutionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub scheme: String,
    /// Number of coarse steps.
    pub n: usize,
    pub contraction: StabilityContraction,
    pub setup: ConvolutionConfig,
}

fn default_multiples() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    /// Levels as multiples of `sigma`.
    #[serde(default = "default_multiples")]
    pub multiples: Vec<f64>,
    pub setup: ConvolutionConfig,
}

fn default_multipliers() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailLemmaConfig {
    /// Levels as multiples of `b^2 / a`.
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
    pub recursion: DiscreteRecursionSpec,
}

fn default_qs() -> Vec<f64> {
    vec![2.0, 3.0, 4.0]
}
fn default_space_qs() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_three() -> usize {
    3
}
fn default_weakened() -> f64 {
    0.5f64.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondSmoothConfig {
    /// Exponents for the two-point search.
    #[serde(default = "default_qs")]
    pub qs: Vec<f64>,
    #[serde(default = "default_three")]
    pub dim: usize,
    pub pairs: usize,
    /// Factor on `D` that should produce violations.
    #[serde(default = "default_weakened")]
    pub weakened_factor: f64,
    /// Exponents for the conditional search.
    #[serde(default = "default_space_qs")]
    pub space_qs: Vec<f64>,
    #[serde(default = "default_three")]
    pub space_dim: usize,
    pub spaces: usize,
    pub seed: u64,
}

fn default_tolerance() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderProbeConfig {
    pub model: String,
    pub scheme: String,
    #[serde(alias = "K")]
    pub cutoff: usize,
    #[serde(default = "one_usize")]
    pub dimension: usize,
    pub source_lambda: f64,
    #[serde(default)]
    pub target_lambda: f64,
    #[serde(default = "one")]
    pub time: f64,
    pub n_list: Vec<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractivityConfig {
    pub model: String,
    pub schemes: Vec<String>,
    #[serde(alias = "K")]
    pub cutoff: usize,
    #[serde(default = "one_usize")]
    pub dimension: usize,
    pub h_list: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATES: &str = r#"
kind = "rates"
model = "heat"
scheme = "splitting"
beta = 0.5
n_list = [8, 16, 32, 64]
n_ref = 1024
K = 32
M = 200
seed = 1
"#;

    #[test]
    fn parses_toml_and_json_identically() {
        let a = ExperimentSpec::from_toml(RATES).unwrap();
        let b = ExperimentSpec::from_json(&a.canonical_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.kind(), "rates");
        assert_eq!(a.group(), Group::Rates);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentSpec::from_toml(RATES).unwrap();
        let mut b = a.clone();
        b.set_seed(2).unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        // whitespace and aliases do not matter
        let c = ExperimentSpec::from_toml(&RATES.replace("K = 32", "cutoff   =   32")).unwrap();
        assert_eq!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn kind_errors_name_the_field() {
        let e = ExperimentSpec::from_toml("model = 'heat'")
            .unwrap_err()
            .to_string();
        assert!(e.contains("kind"), "{e}");
        let e = ExperimentSpec::from_toml("kind = 'bogus'")
            .unwrap_err()
            .to_string();
        assert!(e.contains("bogus") && e.contains("kind"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ExperimentSpec::from_toml(&format!("{RATES}\nwibble = 3"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("wibble"), "{e}");
    }

    #[test]
    fn deterministic_kinds_refuse_seeds() {
        let mut s = ExperimentSpec::Contractivity(ContractivityConfig {
            model: "heat".into(),
            schemes: vec!["ie".into()],
            cutoff: 4,
            dimension: 1,
            h_list: vec![0.1],
        });
        assert!(s.set_seed(3).is_err());
        assert_eq!(s.seed(), None);
    }
}
