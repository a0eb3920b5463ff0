//! Discrete martingale recursions `f_j = V_j f_{j-1} + dg_j` in `l^q_m`.

use convolve_core::error::{Error, Result};
use convolve_core::estimator::worker_pool;
use convolve_core::rng::{sample_seed, stream_rng};
use convolve_core::space::SequenceSpace;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementLaw {
    Rademacher,
    Gaussian,
    /// `+-1` each with probability `sparsity / 2`, else 0.
    SparseRademacher,
    /// `Exp(1) - 1`, centred but not symmetric.
    Exponential,
}

impl IncrementLaw {
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, IncrementLaw::Exponential)
    }

    pub fn name(&self) -> &'static str {
        match self {
            IncrementLaw::Rademacher => "rademacher",
            IncrementLaw::Gaussian => "gaussian",
            IncrementLaw::SparseRademacher => "sparse_rademacher",
            IncrementLaw::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionKind {
    #[default]
    Identity,
    /// Gaussian matrix scaled below operator norm 1.
    Gaussian,
    /// Haar-distributed orthogonal matrix (Euclidean norm only).
    Orthogonal,
}

impl ContractionKind {
    pub fn name(&self) -> &'static str {
        match self {
            ContractionKind::Identity => "identity",
            ContractionKind::Gaussian => "gaussian",
            ContractionKind::Orthogonal => "orthogonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientRule {
    #[default]
    Constant,
    /// `v_j = scale (1 + tanh(f_{j-1}) / 2)` componentwise.
    Predictable,
}

/// Source of randomness for `V_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractionSource {
    /// A stream independent of the increments.
    #[default]
    Independent,
    /// Seeded by a hash of `f_{j-1}`, hence adapted to the increment filtration.
    PathHash,
}

fn default_q() -> f64 {
    2.0
}
fn default_scale() -> f64 {
    1.0
}
fn default_sparsity() -> f64 {
    1.0 / 32.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteRecursionSpec {
    pub dim: usize,
    pub steps: usize,
    /// Exponent of the `l^q` norm; 2 is Euclidean.
    #[serde(default = "default_q")]
    pub q: f64,
    pub law: IncrementLaw,
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    #[serde(default)]
    pub contraction: ContractionKind,
    #[serde(default)]
    pub contraction_source: ContractionSource,
    #[serde(default)]
    pub coefficients: CoefficientRule,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Largest value of the predictable coefficient relative to `scale`.
pub const COEFFICIENT_MAX: f64 = 1.5;

impl DiscreteRecursionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("dim", "must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::config("steps", "must be positive"));
        }
        if !(self.q >= 2.0) || !self.q.is_finite() {
            return Err(Error::config(
                "q",
                format!("need 2 <= q < inf, got {}", self.q),
            ));
        }
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(Error::config("scale", "must be finite and nonnegative"));
        }
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::config("p", "must be positive"));
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "must be positive"));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::config("sparsity", "must lie in (0, 1]"));
        }
        if self.contraction == ContractionKind::Orthogonal && self.q != 2.0 {
            return Err(Error::config(
                "contraction",
                "orthogonal matrices contract only the Euclidean norm",
            ));
        }
        let closed_form = self.q == 2.0 || self.dim == 1 || self.law == IncrementLaw::Rademacher;
        if !closed_form {
            return Err(Error::Unsupported(format!(
                "no closed-form conditional variance for {} increments in l^{} with m = {}",
                self.law.name(),
                self.q,
                self.dim
            )));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SequenceSpace> {
        SequenceSpace::new(self.q, self.dim)
    }

    /// `D = sqrt(q - 1)`.
    pub fn smoothness(&self) -> f64 {
        (self.q - 1.0).sqrt()
    }

    pub fn regime(&self) -> String {
        let sym = if self.law.is_symmetric() {
            "symmetric"
        } else {
            "general"
        };
        format!("{sym}/{}/{}", self.law.name(), self.contraction.name())
    }

    /// `E eps^2` for one coordinate.
    fn second_moment(&self) -> f64 {
        match self.law {
            IncrementLaw::SparseRademacher => self.sparsity,
            _ => 1.0,
        }
    }

    fn coefficient(&self, prev: f64) -> f64 {
        match self.coefficients {
            CoefficientRule::Constant => self.scale,
            CoefficientRule::Predictable => self.scale * (1.0 + 0.5 * prev.tanh()),
        }
    }

    /// `E_{j-1} ||v (.) eps||^2` given the coefficients `v`.
    fn conditional_variance(&self, v: &[f64]) -> f64 {
        if self.q == 2.0 || self.dim == 1 {
            self.second_moment() * v.iter().map(|x| x * x).sum::<f64>()
        } else {
            // Rademacher: |eps| = 1 so the norm is deterministic
            let n = lq(v, self.q);
            n * n
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            IncrementLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            IncrementLaw::Gaussian => rng.sample(StandardNormal),
            IncrementLaw::SparseRademacher => {
                let u: f64 = rng.random();
                if u < 0.5 * self.sparsity {
                    1.0
                } else if u < self.sparsity {
                    -1.0
                } else {
                    0.0
                }
            }
            IncrementLaw::Exponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
        }
    }
}

fn lq(v: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * v.iter()
            .map(|x| (x.abs() / scale).powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
}

/// Sup statistics of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    /// `max_j ||f_j||`.
    pub f_star: f64,
    /// `max_j ||dg_j||`.
    pub dg_star: f64,
    /// `(sum_j E_{j-1} ||dg_j||^2)^{1/2}`.
    pub s: f64,
}

/// Run one path with signs from `eps(j, i)` and contractions from `next_v`.
pub(crate) fn run_path<E, V>(spec: &DiscreteRecursionSpec, mut eps: E, mut next_v: V) -> PathStats
where
    E: FnMut(usize, usize) -> f64,
    V: FnMut(usize, &[f64]) -> Option<DMatrix<f64>>,
{
    let m = spec.dim;
    let mut f = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut dg = vec![0.0; m];
    let mut stats = PathStats {
        f_star: 0.0,
        dg_star: 0.0,
        s: 0.0,
    };
    let mut s2 = 0.0;
    for j in 0..spec.steps {
        for i in 0..m {
            v[i] = spec.coefficient(f[i]);
        }
        s2 += spec.conditional_variance(&v);
        if let Some(mat) = next_v(j, &f) {
            let next = &mat * nalgebra::DVector::from_column_slice(&f);
            f.copy_from_slice(next.as_slice());
        }
        for i in 0..m {
            dg[i] = v[i] * eps(j, i);
            f[i] += dg[i];
        }
        stats.dg_star = stats.dg_star.max(lq(&dg, spec.q));
        stats.f_star = stats.f_star.max(lq(&f, spec.q));
    }
    stats.s = s2.sqrt();
    stats
}

/// Random contraction in the operator norm of `l^q_dim`.
pub fn random_contraction<R: Rng + ?Sized>(
    kind: ContractionKind,
    dim: usize,
    q: f64,
    rng: &mut R,
) -> Option<DMatrix<f64>> {
    let gaussian =
        |rng: &mut R| DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    match kind {
        ContractionKind::Identity => None,
        ContractionKind::Gaussian => {
            let a = gaussian(rng);
            let norm = if q == 2.0 {
                a.clone().singular_values().max()
            } else {
                // Riesz-Thorin: ||A||_{q->q} <= max(||A||_1, ||A||_inf)
                let col = (0..dim)
                    .map(|c| a.column(c).abs().sum())
                    .fold(0.0, f64::max);
                let row = (0..dim).map(|r| a.row(r).abs().sum()).fold(0.0, f64::max);
                col.max(row)
            };
            Some(a * ((1.0 - 1e-8) / norm))
        }
        ContractionKind::Orthogonal => {
            let qr = gaussian(rng).qr();
            let r = qr.r();
            let mut q_mat = qr.q();
            for c in 0..dim {
                if r[(c, c)] < 0.0 {
                    q_mat.column_mut(c).neg_mut();
                }
            }
            Some(q_mat)
        }
    }
}

/// Monte Carlo paths in sample order; deterministic for any worker count.
pub fn simulate(spec: &DiscreteRecursionSpec, workers: usize) -> Result<Vec<PathStats>> {
    spec.validate()?;
    let pool = worker_pool(workers)?;
    Ok(pool.install(|| {
        (0..spec.samples as u64)
            .into_par_iter()
            .map(|m| {
                let mut inc = stream_rng(spec.seed, m, 0);
                let mut ctr = stream_rng(spec.seed, m, 1);
                run_path(
                    spec,
                    |_, _| spec.draw(&mut inc),
                    |j, f| match spec.contraction_source {
                        ContractionSource::Independent => {
                            random_contraction(spec.contraction, spec.dim, spec.q, &mut ctr)
                        }
                        ContractionSource::PathHash => {
                            let key = f.iter().fold(j as u64, |h, x| sample_seed(h, x.to_bits()));
                            let mut rng = stream_rng(spec.seed ^ key, m, 1);
                            random_contraction(spec.contraction, spec.dim, spec.q, &mut rng)
                        }
                    },
                )
            })
            .collect()
    }))
}

/// Exact moments from enumerating every increment path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub paths: usize,
    /// `||f*||_p`, `||dg*||_p`, `||s(g)||_p`.
    pub f_star: f64,
    pub dg_star: f64,
    pub s: f64,
    /// `P(f* >= r)` for each requested level.
    pub survival: Vec<f64>,
}

/// Largest number of enumerated paths.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

/// Exhaustive enumeration for Rademacher-type laws with `V = I`.
pub fn enumerate(spec: &DiscreteRecursionSpec, levels: &[f64]) -> Result<Enumeration> {
    spec.validate()?;
    if spec.contraction != ContractionKind::Identity {
        return Err(Error::Unsupported("enumeration needs V = I".into()));
    }
    let outcomes: Vec<(f64, f64)> = match spec.law {
        IncrementLaw::Rademacher => vec![(1.0, 0.5), (-1.0, 0.5)],
        IncrementLaw::SparseRademacher => vec![
            (1.0, 0.5 * spec.sparsity),
            (-1.0, 0.5 * spec.sparsity),
            (0.0, 1.0 - spec.sparsity),
        ],
        _ => {
            return Err(Error::Unsupported(
                "enumeration needs a discrete law".into(),
            ))
        }
    };
    let cells = spec.steps * spec.dim;
    let base = outcomes.len();
    let paths = (0..cells).try_fold(1usize, |acc, _| {
        acc.checked_mul(base).filter(|&n| n <= ENUMERATION_LIMIT)
    });
    let Some(paths) = paths else {
        return Err(Error::Unsupported(format!(
            "{base}^{cells} paths exceed the enumeration limit"
        )));
    };
    let p = spec.p;
    let (mut ef, mut edg, mut es) = (0.0, 0.0, 0.0);
    let mut survival = vec![0.0; levels.len()];
    let mut digits = vec![0usize; cells];
    for code in 0..paths {
        let mut c = code;
        let mut prob = 1.0;
        for d in digits.iter_mut() {
            *d = c % base;
            c /= base;
            prob *= outcomes[*d].1;
        }
        let stats = run_path(
            spec,
            |j, i| outcomes[digits[j * spec.dim + i]].0,
            |_, _| None,
        );
        ef += prob * stats.f_star.powf(p);
        edg += prob * stats.dg_star.powf(p);
        es += prob * stats.s.powf(p);
        for (sv, &r) in survival.iter_mut().zip(levels) {
            if stats.f_star >= r {
                *sv += prob;
            }
        }
    }
    Ok(Enumeration {
        paths,
        f_star: ef.powf(1.0 / p),
        dg_star: edg.powf(1.0 / p),
        s: es.powf(1.0 / p),
        survival,
    })
}
