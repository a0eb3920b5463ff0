//! Exact one-step law of a scalar Ornstein-Uhlenbeck convolution.
//!
//! For one mode, `I = g int_0^h e^{mu (h - s)} dW_s` and the Brownian
//! increment `dW = W_h - W_0` are jointly Gaussian; this module builds the
//! covariance of `(Re I, Im I, dW)` and a pivoted square-root factor.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Below this `|c| h` the integrals switch to their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// Negative pivots above `-CLAMP * max(1, scale)` are treated as zero.
const CLAMP: f64 = 1e-12;

/// `exp(z) - 1` without cancellation near zero.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let s = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * s * s, x.exp() * y.sin())
}

/// `int_0^h e^{c tau} d tau`.
pub fn exp_integral(c: Complex64, h: f64) -> Complex64 {
    let x = c * h;
    if x.norm() <= SERIES_THRESHOLD {
        let one = Complex64::new(1.0, 0.0);
        h * (one + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0))))
    } else {
        cexpm1(x) / c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuStepLaw {
    pub mu: Complex64,
    pub g: Complex64,
    pub h: f64,
    /// Covariance of `(Re I, Im I, dW)`.
    pub cov: [[f64; 3]; 3],
    /// `chol * chol^T = cov`; only the first `rank` columns are nonzero.
    pub chol: [[f64; 3]; 3],
    pub rank: usize,
}

impl OuStepLaw {
    /// Draw `(Re I, Im I, dW)` from `rank` standard normals.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let mut z = [0.0; 3];
        for zi in z.iter_mut().take(self.rank) {
            *zi = rng.sample(StandardNormal);
        }
        let mut out = [0.0; 3];
        for (o, row) in out.iter_mut().zip(&self.chol) {
            *o = row[0] * z[0] + row[1] * z[1] + row[2] * z[2];
        }
        out
    }

    /// Max-entry distance between `chol * chol^T` and `cov`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|c| self.chol[i][c] * self.chol[j][c]).sum();
                worst = worst.max((r - self.cov[i][j]).abs());
            }
        }
        worst
    }
}

pub fn ou_step_cov(mu: Complex64, g: Complex64, h: f64) -> Result<OuStepLaw> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!(
            "step size must be positive, got {h}"
        )));
    }
    let e1 = exp_integral(mu, h);
    let e2 = exp_integral(Complex64::new(2.0 * mu.re, 0.0), h).re;
    let e3 = exp_integral(2.0 * mu, h);
    let g2e3 = g * g * e3;
    let abs2 = g.norm_sqr() * e2;
    let ge1 = g * e1;
    let var_re = 0.5 * (abs2 + g2e3.re);
    let var_im = 0.5 * (abs2 - g2e3.re);
    let cov_ri = 0.5 * g2e3.im;
    let cov = [
        [var_re, cov_ri, ge1.re],
        [cov_ri, var_im, ge1.im],
        [ge1.re, ge1.im, h],
    ];
    let (chol, rank) = pivoted_cholesky(&cov)?;
    Ok(OuStepLaw {
        mu,
        g,
        h,
        cov,
        chol,
        rank,
    })
}

/// Outer-product Cholesky with diagonal pivoting for a 3x3 PSD matrix.
pub fn pivoted_cholesky(cov: &[[f64; 3]; 3]) -> Result<([[f64; 3]; 3], usize)> {
    let scale = (0..3).map(|i| cov[i][i].abs()).fold(0.0f64, f64::max);
    let floor = -CLAMP * scale.max(1.0);
    let stop = 1e-15 * scale;
    let mut l = [[0.0f64; 3]; 3];
    let mut used = [false; 3];
    let mut rank = 0;
    for col in 0..3 {
        let residual = |i: usize, l: &[[f64; 3]; 3]| {
            cov[i][i] - (0..col).map(|c| l[i][c] * l[i][c]).sum::<f64>()
        };
        let mut best: Option<(usize, f64)> = None;
        for i in (0..3).filter(|&i| !used[i]) {
            let d = residual(i, &l);
            if d < floor {
                return Err(Error::Factorization { pivot: d });
            }
            if best.is_none_or(|(_, b)| d > b) {
                best = Some((i, d));
            }
        }
        let Some((p, d)) = best else { break };
        if d <= stop {
            break;
        }
        let root = d.sqrt();
        l[p][col] = root;
        for i in (0..3).filter(|&i| !used[i] && i != p) {
            let dot: f64 = (0..col).map(|c| l[i][c] * l[p][c]).sum();
            l[i][col] = (cov[i][p] - dot) / root;
        }
        used[p] = true;
        rank += 1;
    }
    Ok((l, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn brownian_case() {
        let law = ou_step_cov(c(0.0, 0.0), c(1.0, 0.0), 1.0).unwrap();
        let expect = [[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((law.cov[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(law.rank, 1);
    }

    #[test]
    fn damped_case() {
        let law = ou_step_cov(c(-1.0, 0.0), c(1.0, 0.0), 1.0).unwrap();
        assert!((law.cov[0][0] - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((law.cov[0][2] - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(law.cov[2][2], 1.0);
        assert_eq!(law.rank, 2);
        assert!(law.reconstruction_error() <= 1e-12 * law.cov[2][2]);
    }

    #[test]
    fn unitary_case_total_variance() {
        let law = ou_step_cov(c(0.0, 1.0), c(1.0, 0.0), std::f64::consts::PI).unwrap();
        assert!((law.cov[0][0] + law.cov[1][1] - std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(law.rank, 3);
    }

    #[test]
    fn series_branch_is_continuous() {
        for mu in [c(-1.0, 0.3), c(0.0, -2.0), c(-5.0, 0.0)] {
            let h_in = 0.99 * SERIES_THRESHOLD / mu.norm();
            let h_out = 1.01 * SERIES_THRESHOLD / mu.norm();
            let a = exp_integral(mu, h_in) / h_in;
            let b = exp_integral(mu, h_out) / h_out;
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn zero_forcing_is_rank_one() {
        let law = ou_step_cov(c(-3.0, 1.0), c(0.0, 0.0), 0.5).unwrap();
        assert_eq!(law.rank, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = law.sample(&mut rng);
        assert_eq!((x[0], x[1]), (0.0, 0.0));
        assert!(x[2] != 0.0);
    }

    #[test]
    fn indefinite_matrix_aborts() {
        let bad = [[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [2.0, 0.0, 1.0]];
        assert!(matches!(
            pivoted_cholesky(&bad),
            Err(Error::Factorization { .. })
        ));
        assert!(ou_step_cov(c(-1.0, 0.0), c(1.0, 0.0), 0.0).is_err());
    }
}
