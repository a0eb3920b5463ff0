//! Two-point and conditional smoothness of `l^q` norms.

use convolve_core::error::{Error, Result};
use convolve_core::estimator::worker_pool;
use convolve_core::rng::stream_rng;
use convolve_core::space::SequenceSpace;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pairs drawn per deterministic chunk.
const CHUNK: usize = 10_000;

/// Violations below this fraction of the right-hand side count as rounding.
pub const RELATIVE_TOLERANCE: f64 = 1e-12;

/// Smallest `||y|| / ||x||` entering the reported curvature ratio.
const RATIO_FLOOR: f64 = 1e-3;

fn default_dim() -> usize {
    3
}
fn default_factor() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub q: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub pairs: usize,
    /// Multiplies `D = sqrt(q-1)`; below 1 the inequality should break.
    #[serde(default = "default_factor")]
    pub d_factor: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub q: f64,
    pub dim: usize,
    pub d: f64,
    pub pairs: usize,
    pub violations: usize,
    /// Largest `(||x+y||^2 + ||x-y||^2 - 2||x||^2) / (2||y||^2)` over pairs
    /// with `||y|| >= 1e-3 ||x||`, where cancellation stays negligible.
    pub max_ratio: f64,
    /// Largest violation divided by `2||x||^2 + 2 D^2 ||y||^2`.
    pub max_relative: f64,
}

fn sparse_gaussian<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.random::<bool>() {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                }
            })
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            return v;
        }
    }
}

/// Random pair with `||y||` spread over five decades below `||x||`, and
/// sometimes concentrated on one coordinate of `x` where the norm curves most.
fn draw_pair<R: Rng>(rng: &mut R, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let x = sparse_gaussian(rng, dim);
    let scale = 10f64.powf(rng.random_range(-4.0..1.0));
    let y = if rng.random::<f64>() < 0.25 {
        let i = rng.random_range(0..dim);
        let mut y = vec![0.0; dim];
        y[i] = scale * if x[i] != 0.0 { x[i] } else { 1.0 };
        y
    } else {
        sparse_gaussian(rng, dim)
            .into_iter()
            .map(|v| scale * v)
            .collect()
    };
    (x, y)
}

/// Random search for pairs violating
/// `||x+y||^2 + ||x-y||^2 <= 2||x||^2 + 2 D^2 ||y||^2`.
pub fn two_point_search(spec: &SearchSpec, workers: usize) -> Result<SearchReport> {
    if !(spec.d_factor > 0.0) {
        return Err(Error::config("d_factor", "must be positive"));
    }
    let base = SequenceSpace::new(spec.q, spec.dim)?;
    let d = base.smoothness_constant() * spec.d_factor;
    let space = base.with_smoothness(d);
    let chunks = spec.pairs.div_ceil(CHUNK);
    let pool = worker_pool(workers)?;
    let parts: Vec<(usize, f64, f64)> = pool.install(|| {
        (0..chunks as u64)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(spec.seed, c, 0);
                let count = CHUNK.min(spec.pairs - c as usize * CHUNK);
                let (mut hits, mut ratio, mut rel) = (0usize, 0.0f64, f64::NEG_INFINITY);
                for _ in 0..count {
                    let (x, y) = draw_pair(&mut rng, spec.dim);
                    let v = space.two_point_violation(&x, &y).expect("dimensions match");
                    let nx = space.norm(&x).expect("dimensions match");
                    let ny = space.norm(&y).expect("dimensions match");
                    let rhs = 2.0 * nx * nx + 2.0 * d * d * ny * ny;
                    let r = v / rhs;
                    if r > RELATIVE_TOLERANCE {
                        hits += 1;
                    }
                    rel = rel.max(r);
                    if ny >= RATIO_FLOOR * nx {
                        ratio = ratio.max((v + 2.0 * d * d * ny * ny) / (2.0 * ny * ny));
                    }
                }
                (hits, ratio, rel)
            })
            .collect()
    });
    Ok(SearchReport {
        q: spec.q,
        dim: spec.dim,
        d,
        pairs: spec.pairs,
        violations: parts.iter().map(|p| p.0).sum(),
        max_ratio: parts.iter().map(|p| p.1).fold(0.0, f64::max),
        max_relative: parts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Largest admissible `|E_G eta|` relative to `max(1, |eta|)`.
pub const CENTRING_TOLERANCE: f64 = 1e-12;

/// Largest number of atoms of a finite probability space.
pub const MAX_ATOMS: usize = 64;

/// Finite probability space with integer atom weights, a partition generating
/// the conditioning sigma-algebra, and vector-valued `xi`, `eta` per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub q: f64,
    pub weights: Vec<u64>,
    /// Partition block of each atom.
    pub blocks: Vec<usize>,
    pub xi: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
}

/// Largest signed gaps in the two conditional inequalities; nonpositive
/// means both hold on every block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCheck {
    pub quadratic: f64,
    pub cosh: f64,
}

impl SmoothnessCheck {
    pub fn max(&self) -> f64 {
        self.quadratic.max(self.cosh)
    }
}

impl FiniteSpace {
    fn block_ids(&self) -> Vec<usize> {
        let mut ids = self.blocks.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn validate(&self) -> Result<SequenceSpace> {
        let atoms = self.weights.len();
        if atoms == 0 || atoms > MAX_ATOMS {
            return Err(Error::config(
                "weights",
                format!("need 1..={MAX_ATOMS} atoms, got {atoms}"),
            ));
        }
        if self.weights.contains(&0) {
            return Err(Error::config("weights", "atom weights must be positive"));
        }
        for (name, len) in [
            ("blocks", self.blocks.len()),
            ("xi", self.xi.len()),
            ("eta", self.eta.len()),
        ] {
            if len != atoms {
                return Err(Error::config(
                    name,
                    format!("expected {atoms} entries, got {len}"),
                ));
            }
        }
        let dim = self.xi[0].len();
        let space = SequenceSpace::new(self.q, dim)?;
        if self.xi.iter().chain(&self.eta).any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: 0,
            });
        }
        for b in self.block_ids() {
            let members: Vec<usize> = (0..atoms).filter(|&a| self.blocks[a] == b).collect();
            let first = &self.xi[members[0]];
            if members.iter().any(|&a| &self.xi[a] != first) {
                return Err(Error::config(
                    "xi",
                    format!("xi is not constant on block {b}"),
                ));
            }
            let total: f64 = members.iter().map(|&a| self.weights[a] as f64).sum();
            for i in 0..dim {
                let mean = members
                    .iter()
                    .map(|&a| self.weights[a] as f64 * self.eta[a][i])
                    .sum::<f64>()
                    / total;
                let scale = members
                    .iter()
                    .fold(1.0f64, |m, &a| m.max(self.eta[a][i].abs()));
                if mean.abs() > CENTRING_TOLERANCE * scale {
                    return Err(Error::Domain(format!(
                        "conditional mean of eta is {mean:e} on block {b}, coordinate {i}; it must vanish"
                    )));
                }
            }
        }
        Ok(space)
    }
}

/// Both conditional smoothness inequalities evaluated exactly on every block.
pub fn conditional_smoothness_exact(space: &FiniteSpace) -> Result<SmoothnessCheck> {
    let seq = space.validate()?;
    let d2 = seq.smoothness_constant().powi(2);
    let norm = |v: &[f64]| seq.norm(v).expect("validated dimensions");
    let mut check = SmoothnessCheck {
        quadratic: f64::NEG_INFINITY,
        cosh: f64::NEG_INFINITY,
    };
    for b in space.block_ids() {
        let members: Vec<usize> = (0..space.weights.len())
            .filter(|&a| space.blocks[a] == b)
            .collect();
        let total: f64 = members.iter().map(|&a| space.weights[a] as f64).sum();
        let xi = &space.xi[members[0]];
        let nxi = norm(xi);
        let (mut sum_sq, mut eta_sq, mut sum_cosh, mut eta_exp) = (0.0, 0.0, 0.0, 0.0);
        for &a in &members {
            let w = space.weights[a] as f64 / total;
            let shifted: Vec<f64> = xi.iter().zip(&space.eta[a]).map(|(x, e)| x + e).collect();
            let ns = norm(&shifted);
            let ne = norm(&space.eta[a]);
            sum_sq += w * ns * ns;
            eta_sq += w * ne * ne;
            sum_cosh += w * ns.cosh();
            eta_exp += w * (ne.exp_m1() - ne);
        }
        check.quadratic = check.quadratic.max(sum_sq - nxi * nxi - d2 * eta_sq);
        check.cosh = check.cosh.max(sum_cosh - (1.0 + d2 * eta_exp) * nxi.cosh());
    }
    Ok(check)
}

/// Random space: up to 8 blocks of up to 8 atoms, weights in `1..=5`,
/// `eta` centred on each block.
pub fn random_finite_space<R: Rng>(rng: &mut R, q: f64, dim: usize) -> FiniteSpace {
    let mut space = FiniteSpace {
        q,
        weights: Vec::new(),
        blocks: Vec::new(),
        xi: Vec::new(),
        eta: Vec::new(),
    };
    let blocks = rng.random_range(1..=8);
    for b in 0..blocks {
        let size = rng.random_range(1..=8);
        let xs: f64 = rng.random_range(0.0..1.5);
        let xi: Vec<f64> = (0..dim)
            .map(|_| xs * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let es: f64 = rng.random_range(0.0..1.0);
        let start = space.weights.len();
        for _ in 0..size {
            space.weights.push(rng.random_range(1..=5));
            space.blocks.push(b);
            space.xi.push(xi.clone());
            space.eta.push(
                (0..dim)
                    .map(|_| es * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
            );
        }
        let total: f64 = space.weights[start..].iter().map(|&w| w as f64).sum();
        for i in 0..dim {
            let mean = (start..space.weights.len())
                .map(|a| space.weights[a] as f64 * space.eta[a][i])
                .sum::<f64>()
                / total;
            for a in start..space.weights.len() {
                space.eta[a][i] -= mean;
            }
        }
    }
    space
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSearchReport {
    pub q: f64,
    pub dim: usize,
    pub spaces: usize,
    pub max_violation: f64,
}

/// Worst exact violation over `spaces` random finite spaces.
pub fn conditional_smoothness_search(
    q: f64,
    dim: usize,
    spaces: usize,
    seed: u64,
    workers: usize,
) -> Result<ConditionalSearchReport> {
    SequenceSpace::new(q, dim)?;
    let pool = worker_pool(workers)?;
    let worst = pool.install(|| {
        (0..spaces as u64)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream_rng(seed, s, 0);
                conditional_smoothness_exact(&random_finite_space(&mut rng, q, dim))
                    .map(|c| c.max())
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(ConditionalSearchReport {
        q,
        dim,
        spaces,
        max_violation: worst.into_iter().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn search(q: f64, d_factor: f64) -> SearchReport {
        two_point_search(
            &SearchSpec {
                q,
                dim: 3,
                pairs: 50_000,
                d_factor,
                seed: 2,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn sharp_constant_holds_and_halved_square_fails() {
        for q in [2.0, 3.0, 4.0] {
            let ok = search(q, 1.0);
            assert_eq!(ok.violations, 0, "q = {q}");
            assert!(ok.max_ratio <= (q - 1.0) * (1.0 + 1e-9));
            let bad = search(q, 0.5f64.sqrt());
            assert!(bad.violations > 0, "q = {q}");
        }
    }

    #[test]
    fn zero_eta_gives_equality() {
        let s = FiniteSpace {
            q: 4.0,
            weights: vec![1, 2, 3],
            blocks: vec![0, 0, 1],
            xi: vec![vec![1.0, -2.0], vec![1.0, -2.0], vec![0.5, 0.0]],
            eta: vec![vec![0.0; 2]; 3],
        };
        let c = conditional_smoothness_exact(&s).unwrap();
        assert!(c.quadratic.abs() < 1e-15);
        assert!(c.cosh.abs() < 1e-15);
    }

    #[test]
    fn euclidean_symmetric_pairs() {
        // eta = +-v on each block: E||xi+eta||^2 = ||xi||^2 + ||v||^2 exactly
        let s = FiniteSpace {
            q: 2.0,
            weights: vec![1, 1, 1, 1],
            blocks: vec![0, 0, 1, 1],
            xi: vec![
                vec![1.0, 2.0],
                vec![1.0, 2.0],
                vec![-3.0, 0.5],
                vec![-3.0, 0.5],
            ],
            eta: vec![
                vec![0.5, -1.0],
                vec![-0.5, 1.0],
                vec![2.0, 0.0],
                vec![-2.0, 0.0],
            ],
        };
        let c = conditional_smoothness_exact(&s).unwrap();
        assert!(c.quadratic <= 1e-14);
        assert!(c.cosh <= 0.0);
    }

    #[test]
    fn rejects_uncentred_eta_and_unmeasurable_xi() {
        let mut s = FiniteSpace {
            q: 2.0,
            weights: vec![1, 1],
            blocks: vec![0, 0],
            xi: vec![vec![0.0], vec![0.0]],
            eta: vec![vec![1.0], vec![-0.5]],
        };
        assert!(matches!(
            conditional_smoothness_exact(&s),
            Err(Error::Domain(_))
        ));
        s.eta = vec![vec![1.0], vec![-1.0]];
        s.xi = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            conditional_smoothness_exact(&s),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn random_spaces_satisfy_both_parts() {
        for q in [2.0, 4.0] {
            let r = conditional_smoothness_search(q, 3, 2000, 4, 1).unwrap();
            assert!(r.max_violation <= 1e-12, "q = {q}: {}", r.max_violation);
        }
    }

    #[test]
    fn random_spaces_are_valid() {
        let mut rng = stream_rng(1, 0, 0);
        for _ in 0..200 {
            let s = random_finite_space(&mut rng, 3.0, 2);
            assert!(s.weights.len() <= MAX_ATOMS);
            s.validate().unwrap();
        }
    }
}
