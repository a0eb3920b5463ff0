//! Percentile bootstrap with resample indices shared across statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, AUX_STREAM_BASE};

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile intervals at `level` for a vector-valued statistic of `m`
/// samples. `stat` receives the resampled indices. Each interval is widened
/// if needed to contain the full-sample value.
pub fn bootstrap<F>(m: usize, resamples: usize, seed: u64, level: f64, stat: F) -> Vec<Interval>
where
    F: Fn(&[usize]) -> Vec<f64>,
{
    let identity: Vec<usize> = (0..m).collect();
    let point = stat(&identity);
    if m == 0 || resamples == 0 {
        return point.iter().map(|&p| Interval { lo: p, hi: p }).collect();
    }
    let mut rng = stream_rng(seed, 0, AUX_STREAM_BASE + 1);
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(resamples); point.len()];
    let mut idx = vec![0usize; m];
    for _ in 0..resamples {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..m);
        }
        for (d, v) in draws.iter_mut().zip(stat(&idx)) {
            d.push(v);
        }
    }
    let alpha = 0.5 * (1.0 - level);
    draws
        .into_iter()
        .zip(point)
        .map(|(mut d, p)| {
            d.sort_by(f64::total_cmp);
            Interval {
                lo: quantile(&d, alpha).min(p),
                hi: quantile(&d, 1.0 - alpha).max(p),
            }
        })
        .collect()
}

/// `(mean x^p)^{1/p}` over the given indices.
pub fn lp_mean(values: &[f64], idx: &[usize], p: f64) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let s: f64 = idx.iter().map(|&i| values[i].powf(p)).sum();
    (s / idx.len() as f64).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn quantiles() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 0.5), 3.0);
        assert_eq!(quantile(&d, 0.125), 1.5);
    }

    #[test]
    fn covers_point_and_is_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let stat = |idx: &[usize]| vec![idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64];
        let a = bootstrap(x.len(), 400, 9, 0.95, stat);
        let b = bootstrap(x.len(), 400, 9, 0.95, stat);
        assert_eq!(a, b);
        let mean = stat(&(0..500).collect::<Vec<_>>())[0];
        assert!(a[0].lo <= mean && mean <= a[0].hi);
        // normal-theory half width 1.96/sqrt(500)
        assert!((a[0].half_width() - 1.96 / 500f64.sqrt()).abs() < 0.03);
    }

    #[test]
    fn width_shrinks_with_sample_size() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let w = |m: usize| {
            let v = &x[..m];
            bootstrap(m, 1000, 1, 0.95, |idx| vec![lp_mean(v, idx, 2.0)])[0].half_width()
        };
        let ratio = w(1000) / w(2000);
        assert!((ratio - 2f64.sqrt()).abs() < 0.25, "ratio {ratio}");
    }
}
