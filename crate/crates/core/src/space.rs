//! Truncated Fourier-mode state spaces and finite sequence spaces.
//!
//! The spatial domain is the torus, so the frequency lattice is `Z^d`
//! truncated to the max-norm ball of radius `K`. Sobolev norms are the
//! weighted sums `sqrt(sum_k (1+|k|^2)^lambda |x_k|^2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequency lattice `{k in Z^d : max_i |k_i| <= K}` in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    dimension: usize,
    cutoff: usize,
    frequencies: Vec<Vec<i64>>,
    sq_norms: Vec<f64>,
}

impl ModeGrid {
    pub fn new(dimension: usize, cutoff: usize) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::config(
                "dimension",
                "supported dimensions are 1, 2, 3",
            ));
        }
        if cutoff == 0 {
            return Err(Error::config("K", "cutoff must be positive"));
        }
        let k = cutoff as i64;
        let side = 2 * cutoff + 1;
        let count = side.pow(dimension as u32);
        let mut frequencies = Vec::with_capacity(count);
        for idx in 0..count {
            let mut rem = idx;
            let mut freq = vec![0i64; dimension];
            for slot in (0..dimension).rev() {
                freq[slot] = (rem % side) as i64 - k;
                rem /= side;
            }
            frequencies.push(freq);
        }
        let sq_norms = frequencies
            .iter()
            .map(|f| f.iter().map(|&c| (c * c) as f64).sum())
            .collect();
        Ok(Self {
            dimension,
            cutoff,
            frequencies,
            sq_norms,
        })
    }

    /// One-dimensional grid with cutoff `K`, i.e. modes `-K..=K`.
    pub fn one_dim(cutoff: usize) -> Result<Self> {
        Self::new(1, cutoff)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[Vec<i64>] {
        &self.frequencies
    }

    pub fn frequency(&self, idx: usize) -> &[i64] {
        &self.frequencies[idx]
    }

    /// `|k|^2` for every frequency, in grid order.
    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    pub fn zero_index(&self) -> usize {
        self.len() / 2
    }

    /// Weights `(1+|k|^2)^lambda` in grid order.
    pub fn weights(&self, weight: SobolevWeight) -> Vec<f64> {
        self.sq_norms.iter().map(|&k2| weight.at(k2)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    pub fn sobolev_norm(&self, state: &StateVector, weight: SobolevWeight) -> Result<f64> {
        self.check_len(state.len())?;
        Ok(weighted_norm(state.coefficients(), &self.weights(weight)))
    }
}

/// `sqrt(sum w_k |x_k|^2)` with caller-supplied weights.
pub fn weighted_norm(coeffs: &[Complex64], weights: &[f64]) -> f64 {
    weighted_sq_norm(coeffs, weights).sqrt()
}

pub fn weighted_sq_norm(coeffs: &[Complex64], weights: &[f64]) -> f64 {
    coeffs
        .iter()
        .zip(weights)
        .map(|(x, w)| w * x.norm_sqr())
        .sum()
}

/// Smoothness exponent of the weight `(1+|k|^2)^lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevWeight {
    pub lambda: f64,
}

impl SobolevWeight {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }

    #[inline]
    pub fn at(&self, sq_norm: f64) -> f64 {
        (1.0 + sq_norm).powf(self.lambda)
    }

    /// Weight shifted by `delta` Sobolev orders.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            lambda: self.lambda + delta,
        }
    }
}

/// Complex per-mode coefficients of a state on an associated grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coefficients: Vec<Complex64>,
}

impl StateVector {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Domain(
                "state contains non-finite coefficients".into(),
            ));
        }
        Ok(Self { coefficients })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coefficients: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn for_grid(grid: &ModeGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coefficients.len())?;
        Self::new(coefficients)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        self.coefficients
    }

    pub(crate) fn from_raw(coefficients: Vec<Complex64>) -> Self {
        Self { coefficients }
    }
}

/// Finite sequence space `l^q_m` together with a two-point smoothness constant.
///
/// The constant defaults to `sqrt(q-1)`; [`SequenceSpace::with_smoothness`]
/// overrides it, which is how deliberately weakened constants are probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpace {
    q: f64,
    dim: usize,
    smoothness_constant: f64,
}

impl SequenceSpace {
    pub fn new(q: f64, dim: usize) -> Result<Self> {
        if q.is_nan() || (q < 2.0 && q != f64::INFINITY) {
            return Err(Error::UnsupportedExponent(q));
        }
        if dim == 0 {
            return Err(Error::config("dim", "dimension must be positive"));
        }
        Ok(Self {
            q,
            dim,
            smoothness_constant: (q - 1.0).sqrt(),
        })
    }

    pub fn with_smoothness(mut self, d: f64) -> Self {
        self.smoothness_constant = d;
        self
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness_constant(&self) -> f64 {
        self.smoothness_constant
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(lq_norm_unchecked(v, self.q))
    }

    /// `||x+y||^2 + ||x-y||^2 - 2||x||^2 - 2 D^2 ||y||^2`.
    ///
    /// Nonpositive values certify the two-point inequality for the pair.
    pub fn two_point_violation(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let nx = self.norm(x)?;
        let ny = self.norm(y)?;
        let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let np = lq_norm_unchecked(&plus, self.q);
        let nm = lq_norm_unchecked(&minus, self.q);
        let d2 = self.smoothness_constant * self.smoothness_constant;
        Ok(np * np + nm * nm - 2.0 * nx * nx - 2.0 * d2 * ny * ny)
    }
}

pub fn lq_norm(v: &[f64], space: &SequenceSpace) -> Result<f64> {
    space.norm(v)
}

pub fn two_point_smoothness_violation(x: &[f64], y: &[f64], space: &SequenceSpace) -> Result<f64> {
    space.two_point_violation(x, y)
}

pub(crate) fn lq_norm_unchecked(v: &[f64], q: f64) -> f64 {
    if q == f64::INFINITY {
        return v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    if q == 2.0 {
        return v.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    // scale by the max entry so large exponents do not overflow
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / scale).powf(q)).sum();
    scale * s.powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_has_expected_size_and_zero() {
        for d in 1..=3 {
            let g = ModeGrid::new(d, 2).unwrap();
            assert_eq!(g.len(), 5usize.pow(d as u32));
            assert!(g.frequency(g.zero_index()).iter().all(|&k| k == 0));
            let mut seen = std::collections::HashSet::new();
            for f in g.frequencies() {
                assert!(f.iter().all(|k| k.abs() <= 2));
                assert!(seen.insert(f.clone()));
            }
        }
        assert!(ModeGrid::new(4, 1).is_err());
        assert!(ModeGrid::new(1, 0).is_err());
    }

    #[test]
    fn grid_order_is_deterministic() {
        let a = ModeGrid::new(2, 3).unwrap();
        let b = ModeGrid::new(2, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frequency(0), &[-3, -3]);
        assert_eq!(a.frequency(1), &[-3, -2]);
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = ModeGrid::one_dim(4).unwrap();
        let zero = StateVector::zeros(g.len());
        assert_eq!(g.sobolev_norm(&zero, SobolevWeight::new(3.7)).unwrap(), 0.0);

        let mut coeffs = vec![c(0.0, 0.0); g.len()];
        let k1 = g.frequencies().iter().position(|f| f[0] == 1).unwrap();
        coeffs[k1] = c(1.0, 0.0);
        let s = StateVector::for_grid(&g, coeffs).unwrap();
        assert_eq!(g.sobolev_norm(&s, SobolevWeight::new(2.0)).unwrap(), 2.0);

        let short = StateVector::zeros(3);
        assert!(matches!(
            g.sobolev_norm(&short, SobolevWeight::new(0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sobolev_norm_matches_termwise_sum() {
        let g = ModeGrid::one_dim(32).unwrap();
        assert_eq!(g.len(), 65);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<Complex64> = (0..65)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let s = StateVector::for_grid(&g, coeffs.clone()).unwrap();
        let lambda = 0.75;
        let mut oracle = 0.0;
        for (i, k) in (-32i64..=32).enumerate() {
            let w = (1.0 + (k * k) as f64).powf(lambda);
            oracle += w * (coeffs[i].re * coeffs[i].re + coeffs[i].im * coeffs[i].im);
        }
        let oracle = oracle.sqrt();
        let got = g.sobolev_norm(&s, SobolevWeight::new(lambda)).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn non_finite_state_rejected() {
        assert!(StateVector::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(StateVector::new(vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn lq_norm_examples() {
        let l2 = SequenceSpace::new(2.0, 2).unwrap();
        assert_eq!(lq_norm(&[3.0, 4.0], &l2).unwrap(), 5.0);
        let l4 = SequenceSpace::new(4.0, 4).unwrap();
        let v = lq_norm(&[1.0, 1.0, 1.0, 1.0], &l4).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        let linf = SequenceSpace::new(f64::INFINITY, 3).unwrap();
        assert_eq!(lq_norm(&[1.0, -7.0, 2.0], &linf).unwrap(), 7.0);
        assert!(matches!(
            SequenceSpace::new(1.5, 3),
            Err(Error::UnsupportedExponent(_))
        ));
        assert!(lq_norm(&[1.0], &l4).is_err());
    }

    #[test]
    fn lq_norm_matches_summation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let space = SequenceSpace::new(3.0, 17).unwrap();
        let v: Vec<f64> = (0..17).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let oracle = v.iter().map(|x| x.abs().powi(3)).sum::<f64>().cbrt();
        let got = lq_norm(&v, &space).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn smoothness_constants() {
        let s2 = SequenceSpace::new(2.0, 3).unwrap();
        assert_eq!(s2.smoothness_constant(), 1.0);
        let s4 = SequenceSpace::new(4.0, 3).unwrap();
        assert!((s4.smoothness_constant() - 3f64.sqrt()).abs() < 1e-15);
        assert!(s4.smoothness_constant() >= 1.0);
    }

    #[test]
    fn two_point_degenerate_cases() {
        let s4 = SequenceSpace::new(4.0, 3).unwrap();
        let x = [0.3, -1.2, 2.0];
        assert_eq!(
            two_point_smoothness_violation(&x, &[0.0; 3], &s4).unwrap(),
            0.0
        );

        let s2 = SequenceSpace::new(2.0, 3).unwrap();
        let y = [1.5, 0.25, -0.5];
        let v = two_point_smoothness_violation(&x, &y, &s2).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(two_point_smoothness_violation(&x, &[1.0], &s2).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sobolev_norm_is_a_norm(
            a in proptest::collection::vec(-5.0f64..5.0, 18),
            b in proptest::collection::vec(-5.0f64..5.0, 18),
            scale in -10.0f64..10.0,
            lambda in -2.0f64..2.0,
        ) {
            let g = ModeGrid::one_dim(4).unwrap();
            let x: Vec<Complex64> = a.chunks(2).map(|p| c(p[0], p[1])).collect();
            let y: Vec<Complex64> = b.chunks(2).map(|p| c(p[0], p[1])).collect();
            let w = SobolevWeight::new(lambda);
            let nx = g.sobolev_norm(&StateVector::new(x.clone()).unwrap(), w).unwrap();
            let ny = g.sobolev_norm(&StateVector::new(y.clone()).unwrap(), w).unwrap();
            let sum: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
            let ns = g.sobolev_norm(&StateVector::new(sum).unwrap(), w).unwrap();
            proptest::prop_assert!(ns <= (nx + ny) * (1.0 + 1e-12) + 1e-300);
            let scaled: Vec<Complex64> = x.iter().map(|p| p * scale).collect();
            let nsc = g.sobolev_norm(&StateVector::new(scaled).unwrap(), w).unwrap();
            proptest::prop_assert!((nsc - scale.abs() * nx).abs() <= 1e-12 * (1.0 + scale.abs() * nx));
        }

        #[test]
        fn hilbert_norms_agree_on_real_vectors(v in proptest::collection::vec(-3.0f64..3.0, 9)) {
            let g = ModeGrid::one_dim(4).unwrap();
            let state = StateVector::new(v.iter().map(|&x| c(x, 0.0)).collect()).unwrap();
            let a = g.sobolev_norm(&state, SobolevWeight::new(0.0)).unwrap();
            let b = lq_norm(&v, &SequenceSpace::new(2.0, 9).unwrap()).unwrap();
            proptest::prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }
}
