//! Pinelis-type maximal bounds for discrete martingale recursions.

use convolve_core::bootstrap::{bootstrap, lp_mean, DEFAULT_RESAMPLES};
use convolve_core::error::{Error, Result};
use log::warn;

use crate::recursion::{
    enumerate, simulate, CoefficientRule, ContractionKind, DiscreteRecursionSpec, IncrementLaw,
    PathStats, COEFFICIENT_MAX,
};
use crate::report::{RatioReport, TailPoint, TailReport};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.95;

/// Largest path count for which trials attach the enumeration oracle.
pub const ORACLE_PATHS: usize = 4096;

/// `(a, b)` in `||f*||_p <= a ||dg*||_p + b ||s(g)||_p`.
pub fn pinelis_constants(symmetric: bool, p: f64, d: f64) -> (f64, f64) {
    if symmetric {
        (5.0 * p, 10.0 * d * p.sqrt())
    } else {
        (30.0 * p, 40.0 * d * p.sqrt())
    }
}

/// `c` in `||f*||_p <= c ||s(g)||_p` for `0 < p < 2`.
pub fn low_p_constant(symmetric: bool, p: f64, d: f64) -> f64 {
    let base = if symmetric { 100.0 } else { 300.0 };
    (base * d).powf(2.0 / p)
}

fn columns(stats: &[PathStats]) -> [Vec<f64>; 3] {
    [
        stats.iter().map(|s| s.f_star).collect(),
        stats.iter().map(|s| s.dg_star).collect(),
        stats.iter().map(|s| s.s).collect(),
    ]
}

fn oracle(spec: &DiscreteRecursionSpec) -> Option<f64> {
    let enumerable = matches!(
        spec.law,
        IncrementLaw::Rademacher | IncrementLaw::SparseRademacher
    ) && spec.contraction == ContractionKind::Identity;
    if !enumerable {
        return None;
    }
    let base: usize = if spec.law == IncrementLaw::Rademacher {
        2
    } else {
        3
    };
    let cells = (spec.steps * spec.dim) as u32;
    let paths = base.checked_pow(cells)?;
    if paths > ORACLE_PATHS {
        return None;
    }
    enumerate(spec, &[]).ok().map(|e| e.f_star)
}

/// Monte Carlo `||f*||_p` against the regime's bound, for `p >= 2`.
pub fn pinelis_trial(spec: &DiscreteRecursionSpec, workers: usize) -> Result<RatioReport> {
    spec.validate()?;
    if spec.p < 2.0 {
        return Err(Error::Unsupported(format!(
            "field `p`: pinelis_trial needs p >= 2, got {}; use low_p_trial",
            spec.p
        )));
    }
    let d = spec.smoothness();
    let (a, b) = pinelis_constants(spec.law.is_symmetric(), spec.p, d);
    let [f, dg, s] = columns(&simulate(spec, workers)?);
    let p = spec.p;
    let stat = |idx: &[usize]| {
        vec![
            lp_mean(&f, idx, p),
            a * lp_mean(&dg, idx, p) + b * lp_mean(&s, idx, p),
        ]
    };
    let point = stat(&(0..f.len()).collect::<Vec<_>>());
    let ci = bootstrap(f.len(), DEFAULT_RESAMPLES, spec.seed, CONFIDENCE, stat);
    Ok(RatioReport::new(
        "pinelis",
        spec.regime(),
        p,
        d,
        point[0],
        ci[0],
        point[1],
        ci[1],
    )
    .with_exact(oracle(spec)))
}

/// Monte Carlo `||f*||_p` against `c ||s(g)||_p` for `0 < p < 2`.
pub fn low_p_trial(spec: &DiscreteRecursionSpec, workers: usize) -> Result<RatioReport> {
    spec.validate()?;
    if spec.p >= 2.0 {
        return Err(Error::config(
            "p",
            format!("low_p_trial needs 0 < p < 2, got {}", spec.p),
        ));
    }
    let d = spec.smoothness();
    let c = low_p_constant(spec.law.is_symmetric(), spec.p, d);
    let [f, _, s] = columns(&simulate(spec, workers)?);
    let p = spec.p;
    let stat = |idx: &[usize]| vec![lp_mean(&f, idx, p), c * lp_mean(&s, idx, p)];
    let point = stat(&(0..f.len()).collect::<Vec<_>>());
    let ci = bootstrap(f.len(), DEFAULT_RESAMPLES, spec.seed, CONFIDENCE, stat);
    Ok(RatioReport::new(
        "low_p",
        spec.regime(),
        p,
        d,
        point[0],
        ci[0],
        point[1],
        ci[1],
    )
    .with_exact(oracle(spec)))
}

/// Levels and bounds of the tail lemma for a bounded-increment spec.
#[derive(Debug, Clone, PartialEq)]
pub struct TailLevels {
    /// Almost-sure bound on `||dg_j||`.
    pub a: f64,
    /// `D` times the almost-sure bound on `s(g)`.
    pub b: f64,
    pub levels: Vec<f64>,
    pub bounds: Vec<f64>,
}

/// `P(f* >= r) <= 2 (e b^2 / (r a))^{r/a}`.
pub fn tail_lemma_bound(r: f64, a: f64, b: f64) -> f64 {
    if r <= 0.0 {
        return f64::INFINITY;
    }
    2.0 * (std::f64::consts::E * b * b / (r * a)).powf(r / a)
}

/// Levels `r = c b^2 / a` for each multiplier `c`.
pub fn tail_lemma_levels(spec: &DiscreteRecursionSpec, multipliers: &[f64]) -> Result<TailLevels> {
    spec.validate()?;
    if !matches!(
        spec.law,
        IncrementLaw::Rademacher | IncrementLaw::SparseRademacher
    ) {
        return Err(Error::Unsupported(format!(
            "tail lemma needs bounded increments, {} is unbounded",
            spec.law.name()
        )));
    }
    let cmax = match spec.coefficients {
        CoefficientRule::Constant => spec.scale,
        CoefficientRule::Predictable => spec.scale * COEFFICIENT_MAX,
    };
    let m = spec.dim as f64;
    let a = cmax * m.powf(1.0 / spec.q);
    let step_var = if spec.q == 2.0 || spec.dim == 1 {
        let second = if spec.law == IncrementLaw::SparseRademacher {
            spec.sparsity
        } else {
            1.0
        };
        second * m * cmax * cmax
    } else {
        a * a
    };
    let b = spec.smoothness() * (spec.steps as f64 * step_var).sqrt();
    if a == 0.0 {
        return Err(Error::config(
            "scale",
            "tail lemma needs nonzero increments",
        ));
    }
    let levels: Vec<f64> = multipliers.iter().map(|c| c * b * b / a).collect();
    let bounds = levels.iter().map(|&r| tail_lemma_bound(r, a, b)).collect();
    Ok(TailLevels {
        a,
        b,
        levels,
        bounds,
    })
}

/// Empirical survival of `f*` against the tail lemma at each level.
pub fn tail_lemma_trial(
    spec: &DiscreteRecursionSpec,
    multipliers: &[f64],
    workers: usize,
) -> Result<TailReport> {
    let lv = tail_lemma_levels(spec, multipliers)?;
    let stats = simulate(spec, workers)?;
    let points: Vec<TailPoint> = lv
        .levels
        .iter()
        .zip(&lv.bounds)
        .map(|(&r, &bound)| {
            let hits = stats.iter().filter(|s| s.f_star >= r).count();
            TailPoint::new(r, hits, stats.len(), bound)
        })
        .collect();
    let report = TailReport {
        trial: "tail_lemma".into(),
        regime: spec.regime(),
        samples: stats.len(),
        points,
    };
    if report.informative_count() == 0 {
        warn!("tail lemma bound is at least 1 at every level; the trial is vacuous");
    }
    Ok(report)
}
