//! Monte Carlo estimation of strong discretisation errors and rate fits.

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap, lp_mean, Interval, DEFAULT_RESAMPLES};
use crate::bundle::NoiseModel;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::forcing::{ForcingSpec, TimeProfile};
use crate::generator::{GeneratorRegistry, Model, Multiplier};
use crate::scheme::{CustomRational, RationalScheme, SchemeRegistry};
use crate::simulate::ErrorSweep;
use crate::space::{ModeGrid, SobolevWeight};

/// Number of bursts in the windowed time profile.
pub const WINDOW_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    #[default]
    Auto,
    Constant,
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSchemeSpec {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

fn default_p() -> f64 {
    2.0
}
fn default_dimension() -> usize {
    1
}
fn default_horizon() -> f64 {
    1.0
}
fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub scheme: String,
    /// Smoothness of the state space the forcing lives in.
    #[serde(default)]
    pub lambda: f64,
    /// Weak-norm offset; errors are measured at `lambda - a beta`.
    pub beta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    pub n_list: Vec<usize>,
    pub n_ref: usize,
    #[serde(alias = "K")]
    pub cutoff: usize,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_horizon", alias = "T")]
    pub horizon: f64,
    #[serde(alias = "M")]
    pub samples: usize,
    pub seed: u64,
    /// Forcing decay `s`; derived from the other fields when absent.
    #[serde(default)]
    pub decay: Option<f64>,
    #[serde(default)]
    pub profile: ProfileChoice,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Allowed distance between fitted and predicted slope.
    #[serde(default)]
    pub slope_tolerance: Option<f64>,
    /// `[re, im]` symbol per grid mode when `model = "custom"`.
    #[serde(default)]
    pub custom_symbols: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub custom_order: Option<u32>,
    #[serde(default)]
    pub custom_scheme: Option<CustomSchemeSpec>,
}

/// Predicted slope of `log E` against `log n`.
pub fn predicted_slope(model: Model, scheme: &str, beta: f64) -> Option<f64> {
    match (model, scheme) {
        (Model::Heat, "splitting" | "implicit_euler" | "crank_nicolson") => Some(-beta),
        (Model::Transport | Model::Schroedinger, "splitting") => Some(-beta),
        (Model::Transport | Model::Schroedinger, "implicit_euler") => Some(-beta / 2.0),
        (Model::Transport | Model::Schroedinger, "crank_nicolson") => Some(-2.0 * beta / 3.0),
        _ => None,
    }
}

/// Upper end of the admissible `beta` interval `(0, max]`.
pub fn beta_max(model: Model, scheme: &str) -> Option<f64> {
    match (model, scheme) {
        (Model::Heat, _) => Some(1.0),
        (Model::Transport | Model::Schroedinger, "splitting") => Some(1.0),
        (Model::Transport | Model::Schroedinger, "implicit_euler") => Some(2.0),
        (Model::Transport | Model::Schroedinger, "crank_nicolson") => Some(1.5),
        _ => None,
    }
}

/// A configuration resolved into grid, operators and forcing.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub grid: ModeGrid,
    pub multiplier: Multiplier,
    pub scheme: RationalScheme,
    pub forcing: ForcingSpec,
    pub error_weight: SobolevWeight,
    pub predicted_slope: Option<f64>,
    pub slope_tolerance: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::config("n_list", "must not be empty"));
        }
        if self.n_ref == 0 || !self.n_ref.is_power_of_two() {
            return Err(Error::config(
                "n_ref",
                format!("must be a power of two, got {}", self.n_ref),
            ));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_list", "must be strictly ascending"));
        }
        for &n in &self.n_list {
            if n == 0 || !self.n_ref.is_multiple_of(n) {
                return Err(Error::config(
                    "n_list",
                    format!("n = {n} does not divide n_ref = {}", self.n_ref),
                ));
            }
        }
        if *self.n_list.last().unwrap() > self.n_ref / 4 {
            return Err(Error::config(
                "n_list",
                "largest n must be at most n_ref / 4",
            ));
        }
        if !self.p.is_finite() || self.p < 2.0 {
            return Err(Error::Unsupported(format!(
                "field `p`: p = {} below 2; use the low-p martingale trials instead",
                self.p
            )));
        }
        if self.p > 8.0 {
            return Err(Error::config(
                "p",
                format!("must be in [2, 8], got {}", self.p),
            ));
        }
        if self.samples < 100 {
            return Err(Error::config(
                "samples",
                format!("need at least 100, got {}", self.samples),
            ));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::config("horizon", "must be positive"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::config("lambda", "must be finite"));
        }
        let model = Model::parse(&self.model)?;
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::config(
                "beta",
                format!("must be positive, got {}", self.beta),
            ));
        }
        let scheme = self.resolve_scheme()?;
        if let Some(max) = beta_max(model, scheme.name()) {
            if self.beta > max + 1e-12 {
                return Err(Error::config(
                    "beta",
                    format!(
                        "must lie in (0, {max}] for {} with {}",
                        model.name(),
                        scheme.name()
                    ),
                ));
            }
        }
        if let Some(tol) = self.slope_tolerance {
            if !(tol > 0.0) {
                return Err(Error::config("slope_tolerance", "must be positive"));
            }
        }
        Ok(())
    }

    fn resolve_scheme(&self) -> Result<RationalScheme> {
        if self.scheme == "custom" {
            let spec = self.custom_scheme.as_ref().ok_or_else(|| {
                Error::config("custom_scheme", "required when scheme = \"custom\"")
            })?;
            return Ok(Arc::new(CustomRational::new(
                "custom",
                spec.numerator.clone(),
                spec.denominator.clone(),
            )?));
        }
        SchemeRegistry::default().get(&self.scheme)
    }

    fn resolve_multiplier(&self, grid: &ModeGrid) -> Result<Multiplier> {
        match Model::parse(&self.model)? {
            Model::Custom => {
                let table = self.custom_symbols.as_ref().ok_or_else(|| {
                    Error::config("custom_symbols", "required when model = \"custom\"")
                })?;
                let symbols = table.iter().map(|s| Complex64::new(s[0], s[1])).collect();
                Multiplier::custom(grid, symbols, self.custom_order.unwrap_or(2))
            }
            _ => Multiplier::from_generator(
                GeneratorRegistry::default().get(&self.model)?.as_ref(),
                grid,
            ),
        }
    }

    pub fn build(&self) -> Result<Experiment> {
        self.validate()?;
        let grid = ModeGrid::new(self.dimension, self.cutoff)?;
        let multiplier = self.resolve_multiplier(&grid)?;
        let scheme = self.resolve_scheme()?;
        let model = multiplier.model();
        let a = multiplier.operator_order() as f64;
        let predicted = predicted_slope(model, scheme.name(), self.beta);
        let rate = predicted.map(|s| -s);
        // borderline decay, with extra room when the rate sits at its cap of 1
        let eps = if rate.is_some_and(|r| r >= 1.0 - 1e-12) {
            1.0
        } else {
            0.1
        };
        let s = self
            .decay
            .unwrap_or(self.lambda + self.dimension as f64 / 2.0 + eps);
        let mut forcing = ForcingSpec::decaying(&grid, s)?;
        let windowed = match self.profile {
            ProfileChoice::Constant => false,
            ProfileChoice::Windowed => true,
            ProfileChoice::Auto => {
                // smooth-in-time forcing gains half an order under parabolic smoothing
                multiplier.is_analytic()
                    && rate.is_some_and(|r| (self.beta + 0.5).min(1.0) > r + 1e-12)
            }
        };
        if windowed {
            let width = self.horizon / self.n_ref as f64;
            forcing =
                forcing.with_profile(TimeProfile::windows(self.horizon, WINDOW_COUNT, width)?);
        }
        let default_tol = if scheme.name() == "crank_nicolson" {
            0.2
        } else {
            0.15
        };
        Ok(Experiment {
            error_weight: SobolevWeight::new(self.lambda - a * self.beta),
            predicted_slope: predicted,
            slope_tolerance: self.slope_tolerance.unwrap_or(default_tol),
            config: self.clone(),
            grid,
            multiplier,
            scheme,
            forcing,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub e_hat: f64,
    pub ci: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
    pub fit: Option<LineFit>,
    pub fit_corrected: Option<LineFit>,
    pub fit_note: Option<String>,
    pub predicted_slope: Option<f64>,
    pub slope_tolerance: f64,
    /// `||g||` in `L^2(0,T; gamma(H, H^lambda))`.
    pub forcing_norm: f64,
    pub decay: f64,
    pub windowed: bool,
}

impl RateTable {
    /// `Some(true)` when the fitted slope is within tolerance of the
    /// prediction; `None` when there is nothing to compare.
    pub fn slope_verdict(&self) -> Option<bool> {
        let fit = self.fit?;
        let pred = self.predicted_slope?;
        Some((fit.slope - pred).abs() <= self.slope_tolerance)
    }
}

/// Build a pool with `workers` threads (0 means rayon's default).
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))
}

/// Per-sample sup errors, row `m` holding one value per `n`.
pub fn sample_errors(exp: &Experiment, workers: usize) -> Result<Vec<Vec<f64>>> {
    let cfg = &exp.config;
    let noise = NoiseModel::new(
        &exp.grid,
        &exp.multiplier,
        &exp.forcing,
        cfg.n_ref,
        cfg.horizon,
    )?;
    let sweep = ErrorSweep::new(
        noise,
        &exp.grid,
        &exp.multiplier,
        exp.scheme.as_ref(),
        &cfg.n_list,
        exp.error_weight,
    )?;
    let pool = worker_pool(workers)?;
    Ok(pool.install(|| {
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|m| sweep.sample(cfg.seed, m))
            .collect()
    }))
}

/// Ratio of the largest row error below which rows count as noise.
const NOISE_FLOOR: f64 = 10.0 * f64::EPSILON;

pub fn estimate_e(config: &ExperimentConfig, workers: usize) -> Result<RateTable> {
    let exp = config.build()?;
    let errors = sample_errors(&exp, workers)?;
    rate_table(&exp, &errors)
}

/// Reduce per-sample errors to the rate table.
pub fn rate_table(exp: &Experiment, errors: &[Vec<f64>]) -> Result<RateTable> {
    let cfg = &exp.config;
    let columns: Vec<Vec<f64>> = (0..cfg.n_list.len())
        .map(|c| errors.iter().map(|row| row[c]).collect())
        .collect();
    let stat = |idx: &[usize]| {
        columns
            .iter()
            .map(|col| lp_mean(col, idx, cfg.p))
            .collect::<Vec<_>>()
    };
    let all: Vec<usize> = (0..errors.len()).collect();
    let point = stat(&all);
    let cis = bootstrap(errors.len(), cfg.bootstrap_resamples, cfg.seed, 0.95, stat);
    let rows: Vec<RateRow> = cfg
        .n_list
        .iter()
        .zip(point.iter().zip(cis))
        .map(|(&n, (&e_hat, ci))| RateRow { n, e_hat, ci })
        .collect();

    let top = point.iter().cloned().fold(0.0f64, f64::max);
    let (ns, es): (Vec<usize>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.e_hat > NOISE_FLOOR * top)
        .map(|r| (r.n, r.e_hat))
        .unzip();
    let (fit, fit_corrected, fit_note) = match loglog_fit(&ns, &es, false, 4) {
        Ok(f) => (Some(f), loglog_fit(&ns, &es, true, 4).ok(), None),
        Err(e) => {
            warn!("rate fit skipped: {e}");
            (None, None, Some(e.to_string()))
        }
    };
    let a = exp.multiplier.operator_order() as f64;
    let norm_weight = exp.error_weight.shifted(a * cfg.beta);
    Ok(RateTable {
        rows,
        fit,
        fit_corrected,
        fit_note,
        predicted_slope: exp.predicted_slope,
        slope_tolerance: exp.slope_tolerance,
        forcing_norm: exp
            .forcing
            .gamma_norm(&exp.grid, norm_weight, cfg.horizon)?,
        decay: exp.forcing.decay().unwrap_or(f64::NAN),
        windowed: !matches!(exp.forcing.profile(), TimeProfile::Constant),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub e_hat: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `E_n <= 2 C_{p,D} (T/n)^nu ||g||` with `C_{p,D} = 10 D sqrt(p)`, `D = 1`
/// and `nu = beta`, for the splitting scheme.
pub fn bound_check(table: &RateTable, config: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let scheme = config.resolve_scheme()?;
    if scheme.name() != "splitting" {
        return Err(Error::Unsupported(format!(
            "level bound is only explicit for splitting, not `{}`",
            scheme.name()
        )));
    }
    if !table.forcing_norm.is_finite() {
        return Err(Error::config("forcing_norm", "missing forcing norm"));
    }
    let c = 10.0 * config.p.sqrt();
    Ok(table
        .rows
        .iter()
        .map(|r| {
            let bound =
                2.0 * c * (config.horizon / r.n as f64).powf(config.beta) * table.forcing_norm;
            let ratio = if bound > 0.0 {
                r.e_hat / bound
            } else if r.e_hat == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let slack = if bound > 0.0 {
                3.0 * r.ci.half_width() / bound
            } else {
                0.0
            };
            BoundRow {
                n: r.n,
                e_hat: r.e_hat,
                bound,
                ratio,
                pass: ratio <= 1.0 + slack,
            }
        })
        .collect())
}
