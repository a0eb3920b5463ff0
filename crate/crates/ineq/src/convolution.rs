//! Maximal, stability and tail bounds for the stochastic convolution.

use convolve_core::bootstrap::{bootstrap, lp_mean, Interval, DEFAULT_RESAMPLES};
use convolve_core::bundle::NoiseModel;
use convolve_core::error::{Error, Result};
use convolve_core::estimator::worker_pool;
use convolve_core::forcing::ForcingSpec;
use convolve_core::generator::Multiplier;
use convolve_core::rng::{stream_rng, AUX_STREAM_BASE};
use convolve_core::scheme::{contractivity_check, step_factors, TimeStepper};
use convolve_core::space::{ModeGrid, SobolevWeight};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::martingale::CONFIDENCE;
use crate::recursion::{random_contraction, ContractionKind};
use crate::report::{RatioReport, TailPoint, TailReport};

/// Smoothness constant of a Hilbert space.
const HILBERT_D: f64 = 1.0;

/// Stream for random contractions in the stability trial.
const CONTRACTION_STREAM: u64 = AUX_STREAM_BASE + 2;

/// Model, forcing and fine grid of a convolution trial.
#[derive(Debug, Clone)]
pub struct ConvolutionSetup {
    pub grid: ModeGrid,
    pub multiplier: Multiplier,
    pub forcing: ForcingSpec,
    /// Norm of the state space `H^lambda`.
    pub weight: SobolevWeight,
    pub n_ref: usize,
    pub horizon: f64,
}

/// Monte Carlo budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McParams {
    fn check(&self, min_p: f64) -> Result<()> {
        if !(self.p >= min_p) || !self.p.is_finite() {
            return Err(Error::config(
                "p",
                format!("need {min_p} <= p < inf, got {}", self.p),
            ));
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "must be positive"));
        }
        Ok(())
    }
}

impl ConvolutionSetup {
    /// `||g||_{L^2(0,T; gamma(H, H^lambda))}`.
    pub fn gamma_norm(&self) -> Result<f64> {
        self.forcing
            .gamma_norm(&self.grid, self.weight, self.horizon)
    }

    fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(
            &self.grid,
            &self.multiplier,
            &self.forcing,
            self.n_ref,
            self.horizon,
        )
    }

    fn with_multiplier(&self, multiplier: Multiplier) -> Self {
        Self {
            multiplier,
            ..self.clone()
        }
    }
}

/// Per-sample `sup_j ||u(t_j)||` over the fine grid, in sample order.
pub fn sup_fine_samples(setup: &ConvolutionSetup, mc: &McParams) -> Result<Vec<f64>> {
    let noise = setup.noise()?;
    let weights = setup.grid.weights(setup.weight);
    let h = noise.fine_step();
    let decay: Vec<Complex64> = noise.symbols().iter().map(|mu| (mu * h).exp()).collect();
    let pool = worker_pool(mc.workers)?;
    Ok(pool.install(|| {
        (0..mc.samples as u64)
            .into_par_iter()
            .map(|m| {
                let mut sq = vec![0.0f64; noise.n_ref()];
                for k in 0..noise.modes() {
                    let mut u = Complex64::new(0.0, 0.0);
                    for (s, x) in sq.iter_mut().zip(noise.mode_draws(mc.seed, m, k)) {
                        u = decay[k] * u + Complex64::new(x[0], x[1]);
                        *s += weights[k] * u.norm_sqr();
                    }
                }
                sq.into_iter().fold(0.0, f64::max).sqrt()
            })
            .collect()
    }))
}

fn ratio_report(
    trial: &str,
    regime: String,
    sups: &[f64],
    constant: f64,
    gamma_norm: f64,
    mc: &McParams,
) -> RatioReport {
    let p = mc.p;
    let stat = |idx: &[usize]| vec![lp_mean(sups, idx, p)];
    let lhs = stat(&(0..sups.len()).collect::<Vec<_>>())[0];
    let ci = bootstrap(sups.len(), DEFAULT_RESAMPLES, mc.seed, CONFIDENCE, stat);
    let rhs = constant * gamma_norm;
    let exact = Interval { lo: rhs, hi: rhs };
    RatioReport::new(trial, regime, p, HILBERT_D, lhs, ci[0], rhs, exact)
}

/// `10 D sqrt(p)`.
pub fn maximal_constant(p: f64) -> f64 {
    10.0 * HILBERT_D * p.sqrt()
}

/// `sup_t ||int_0^t g dW||` against `10 D sqrt(p) ||g||`.
pub fn burkholder_trial(setup: &ConvolutionSetup, mc: &McParams) -> Result<RatioReport> {
    mc.check(2.0)?;
    let flat = setup.with_multiplier(Multiplier::zero(&setup.grid));
    let sups = sup_fine_samples(&flat, mc)?;
    Ok(ratio_report(
        "burkholder",
        "S=I".into(),
        &sups,
        maximal_constant(mc.p),
        setup.gamma_norm()?,
        mc,
    ))
}

/// Default multiple of `D sqrt(p)` in the maximal inequality.
pub const MAXIMAL_FACTOR: f64 = 10.0;

/// `sup_t ||u_t||` against `factor D sqrt(p) ||g||` for a contraction
/// semigroup.
pub fn maximal_ratio_trial(
    setup: &ConvolutionSetup,
    mc: &McParams,
    factor: f64,
) -> Result<RatioReport> {
    mc.check(2.0)?;
    if !setup.multiplier.is_dissipative() {
        return Err(Error::Unsupported(
            "the maximal inequality assumes a contraction semigroup; some symbol has positive real part".into(),
        ));
    }
    let sups = sup_fine_samples(setup, mc)?;
    let constant = factor * HILBERT_D * mc.p.sqrt();
    let regime = setup.multiplier.model().name().to_string();
    Ok(ratio_report(
        "maximal",
        regime,
        &sups,
        constant,
        setup.gamma_norm()?,
        mc,
    ))
}

/// Choice of the operators `V_j` in `u_j = V_j (u_{j-1} + d_j M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityContraction {
    /// `r(h mu_k)` coefficientwise.
    Scheme,
    Identity,
    /// Haar orthogonal in weighted real coordinates, fresh each step.
    RandomOrthogonal,
}

impl StabilityContraction {
    pub fn name(&self) -> &'static str {
        match self {
            StabilityContraction::Scheme => "scheme",
            StabilityContraction::Identity => "identity",
            StabilityContraction::RandomOrthogonal => "random_orthogonal",
        }
    }
}

/// `100 D p^{5/2} / (p - 1) + (10 / sqrt 2) D^2 p`.
pub fn stability_constant(p: f64, d: f64) -> f64 {
    100.0 * d * p.powf(2.5) / (p - 1.0) + 10.0 / 2f64.sqrt() * d * d * p
}

/// Coarse increments `d_j M = g sum phi dW` for every mode.
fn coarse_increments(noise: &NoiseModel, seed: u64, m: u64, n: usize) -> Vec<Vec<Complex64>> {
    let ratio = noise.n_ref() / n;
    let phi = noise.profile();
    (0..noise.modes())
        .map(|k| {
            let g = noise.amplitudes()[k];
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (i, x) in noise.mode_draws(seed, m, k).enumerate() {
                out[i / ratio] += g * (phi[i] * x[2]);
            }
            out
        })
        .collect()
}

/// `sup_j ||u_j||` of the coarse recursion against `K_{p,D} ||g||`.
pub fn stability_trial(
    setup: &ConvolutionSetup,
    scheme: &dyn TimeStepper,
    n: usize,
    contraction: StabilityContraction,
    mc: &McParams,
) -> Result<RatioReport> {
    mc.check(2.0)?;
    if n == 0 || !setup.n_ref.is_multiple_of(n) {
        return Err(Error::Mesh {
            coarse: n,
            fine: setup.n_ref,
        });
    }
    let noise = setup.noise()?;
    let factors = match contraction {
        StabilityContraction::Scheme => {
            let h = setup.horizon / n as f64;
            let report = contractivity_check(scheme, &setup.multiplier, h);
            if !report.ok {
                return Err(Error::Unsupported(format!(
                    "{} is not a contraction at h = {h}: max |r(h mu)| = {}",
                    scheme.name(),
                    report.max_modulus
                )));
            }
            step_factors(scheme, &setup.multiplier, h)?
        }
        _ => vec![Complex64::new(1.0, 0.0); setup.grid.len()],
    };
    let weights = setup.grid.weights(setup.weight);
    let roots: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let modes = setup.grid.len();
    let pool = worker_pool(mc.workers)?;
    let sups: Vec<f64> = pool.install(|| {
        (0..mc.samples as u64)
            .into_par_iter()
            .map(|m| {
                let dm = coarse_increments(&noise, mc.seed, m, n);
                let mut sup = 0.0f64;
                if contraction == StabilityContraction::RandomOrthogonal {
                    let mut rng = stream_rng(mc.seed, m, CONTRACTION_STREAM);
                    let mut x = DVector::<f64>::zeros(2 * modes);
                    for j in 0..n {
                        for k in 0..modes {
                            x[2 * k] += roots[k] * dm[k][j].re;
                            x[2 * k + 1] += roots[k] * dm[k][j].im;
                        }
                        let v = random_contraction(
                            ContractionKind::Orthogonal,
                            2 * modes,
                            2.0,
                            &mut rng,
                        )
                        .expect("orthogonal draw");
                        x = v * x;
                        sup = sup.max(x.norm());
                    }
                } else {
                    let mut u = vec![Complex64::new(0.0, 0.0); modes];
                    for j in 0..n {
                        let mut sq = 0.0;
                        for k in 0..modes {
                            u[k] = factors[k] * (u[k] + dm[k][j]);
                            sq += weights[k] * u[k].norm_sqr();
                        }
                        sup = sup.max(sq.sqrt());
                    }
                }
                sup
            })
            .collect()
    });
    let regime = format!(
        "{}/{}/{}",
        setup.multiplier.model().name(),
        scheme.name(),
        contraction.name()
    );
    Ok(ratio_report(
        "stability",
        regime,
        &sups,
        stability_constant(mc.p, HILBERT_D),
        setup.gamma_norm()?,
        mc,
    ))
}

/// `sigma^2 = 100 e D^2 ||g||^2`.
pub fn tail_sigma(gamma_norm: f64) -> f64 {
    (100.0 * std::f64::consts::E).sqrt() * HILBERT_D * gamma_norm
}

/// `2 exp(-r^2 / (2 sigma^2))`.
pub fn tail_bound(r: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if r > 0.0 { 0.0 } else { 2.0 };
    }
    2.0 * (-r * r / (2.0 * sigma * sigma)).exp()
}

/// Empirical `P(sup_t ||u_t|| >= c sigma)` against the exponential bound.
pub fn tail_trial(
    setup: &ConvolutionSetup,
    multiples: &[f64],
    mc: &McParams,
) -> Result<TailReport> {
    mc.check(0.0)?;
    if multiples.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::config("multiples", "levels must be nonnegative"));
    }
    let sigma = tail_sigma(setup.gamma_norm()?);
    let sups = sup_fine_samples(setup, mc)?;
    let points = multiples
        .iter()
        .map(|c| {
            let r = c * sigma;
            let hits = sups.iter().filter(|&&s| s >= r).count();
            TailPoint::new(r, hits, sups.len(), tail_bound(r, sigma))
        })
        .collect();
    Ok(TailReport {
        trial: "tail".into(),
        regime: setup.multiplier.model().name().to_string(),
        samples: sups.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;
    use convolve_core::scheme::{CrankNicolson, ImplicitEuler};

    fn single_mode(amp: f64, n_ref: usize) -> ConvolutionSetup {
        let grid = ModeGrid::one_dim(1).unwrap();
        let forcing =
            ForcingSpec::single_mode(&grid, grid.zero_index(), Complex64::new(amp, 0.0)).unwrap();
        ConvolutionSetup {
            multiplier: Multiplier::zero(&grid),
            grid,
            forcing,
            weight: SobolevWeight::new(0.0),
            n_ref,
            horizon: 1.0,
        }
    }

    fn heat(cutoff: usize) -> ConvolutionSetup {
        let grid = ModeGrid::one_dim(cutoff).unwrap();
        ConvolutionSetup {
            multiplier: Multiplier::heat(&grid).unwrap(),
            forcing: ForcingSpec::decaying(&grid, 1.0).unwrap(),
            grid,
            weight: SobolevWeight::new(0.0),
            n_ref: 256,
            horizon: 1.0,
        }
    }

    fn mc(p: f64, samples: usize) -> McParams {
        McParams {
            p,
            samples,
            seed: 9,
            workers: 1,
        }
    }

    #[test]
    fn brownian_sup_below_doob() {
        let r = burkholder_trial(&single_mode(1.0, 512), &mc(2.0, 4000)).unwrap();
        // E sup |W|^2 <= 4 while RHS^2 = 200
        assert!(r.lhs * r.lhs <= 4.0 && r.lhs > 1.0);
        assert!((r.rhs - 200f64.sqrt()).abs() < 1e-12);
        assert!((r.ratio - 0.12).abs() < 0.03, "ratio {}", r.ratio);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_forcing_is_vacuous() {
        let mut s = heat(4);
        s.forcing = ForcingSpec::zero(&s.grid);
        assert_eq!(
            burkholder_trial(&s, &mc(2.0, 20)).unwrap().verdict,
            Verdict::Vacuous
        );
        assert_eq!(
            maximal_ratio_trial(&s, &mc(2.0, 20), 10.0).unwrap().verdict,
            Verdict::Vacuous
        );
    }

    #[test]
    fn zero_symbol_reduces_to_burkholder() {
        let s = heat(3);
        let flat = s.with_multiplier(Multiplier::zero(&s.grid));
        let a = burkholder_trial(&s, &mc(4.0, 200)).unwrap();
        let b = maximal_ratio_trial(&flat, &mc(4.0, 200), MAXIMAL_FACTOR).unwrap();
        assert_eq!(a.lhs, b.lhs);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn heat_maximal_and_non_vacuity() {
        let s = heat(16);
        let ok = maximal_ratio_trial(&s, &mc(2.0, 1000), MAXIMAL_FACTOR).unwrap();
        assert_eq!(ok.verdict, Verdict::Pass);
        let bad = maximal_ratio_trial(&s, &mc(2.0, 1000), 0.1).unwrap();
        assert_eq!(bad.verdict, Verdict::Fail, "ratio {}", bad.ratio);
    }

    #[test]
    fn refuses_growing_semigroup() {
        let grid = ModeGrid::one_dim(2).unwrap();
        let mut s = heat(2);
        s.multiplier =
            Multiplier::custom(&grid, vec![Complex64::new(0.5, 0.0); grid.len()], 2).unwrap();
        assert!(matches!(
            maximal_ratio_trial(&s, &mc(2.0, 10), 10.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn scale_equivariance() {
        let s = heat(6);
        let mut big = s.clone();
        big.forcing = s.forcing.scaled(3.0);
        let a = maximal_ratio_trial(&s, &mc(2.0, 200), 10.0).unwrap();
        let b = maximal_ratio_trial(&big, &mc(2.0, 200), 10.0).unwrap();
        assert!((b.lhs - 3.0 * a.lhs).abs() <= 1e-12 * b.lhs);
        assert!((b.rhs - 3.0 * a.rhs).abs() <= 1e-12 * b.rhs);
        assert!((b.ratio - a.ratio).abs() <= 1e-12);
    }

    #[test]
    fn identity_stability_matches_burkholder_on_fine_grid() {
        let s = single_mode(1.5, 128);
        let a = burkholder_trial(&s, &mc(2.0, 300)).unwrap();
        let b = stability_trial(
            &s,
            &ImplicitEuler::default(),
            128,
            StabilityContraction::Identity,
            &mc(2.0, 300),
        )
        .unwrap();
        assert!((a.lhs - b.lhs).abs() <= 1e-12 * a.lhs);
    }

    #[test]
    fn stability_variants_pass() {
        let s = heat(4);
        for v in [
            StabilityContraction::Scheme,
            StabilityContraction::Identity,
            StabilityContraction::RandomOrthogonal,
        ] {
            let r = stability_trial(&s, &CrankNicolson::default(), 32, v, &mc(2.0, 200)).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{v:?}");
            assert!(r.ratio < 0.1);
        }
        assert!(matches!(
            stability_trial(
                &s,
                &ImplicitEuler::default(),
                48,
                StabilityContraction::Scheme,
                &mc(2.0, 10)
            ),
            Err(Error::Mesh { .. })
        ));
    }

    #[test]
    fn tail_levels() {
        assert_eq!(tail_bound(0.0, 1.0), 2.0);
        assert!((tail_bound(1.0, 1.0) - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((tail_bound(4.0, 1.0) - 6.709e-4).abs() < 1e-6);
        let r = tail_trial(&heat(8), &[0.0, 1.0, 4.0], &mc(2.0, 500)).unwrap();
        assert!(r.passed());
        assert_eq!(r.informative_count(), 1);
        assert_eq!(r.points[0].empirical, 1.0);
    }

    /// `P(sup_{t<=1} |W_t| >= r)` from the series for Brownian exit times.
    fn two_sided_sup_tail(r: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let mut s = 0.0;
        for k in 0..200 {
            let odd = (2 * k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign / odd * (-odd * odd * pi * pi / (8.0 * r * r)).exp();
        }
        1.0 - 4.0 / pi * s
    }

    #[test]
    fn brownian_tail_matches_reflection_oracle() {
        let n_ref = 4096;
        let params = mc(2.0, 20_000);
        let sups = sup_fine_samples(&single_mode(1.0, n_ref), &params).unwrap();
        // discrete monitoring undershoots the continuous sup by about 0.5826 sqrt(h)
        let shift = 0.5826 * (1.0 / n_ref as f64).sqrt();
        for r in [1.0, 1.5, 2.0, 2.5] {
            let emp = sups.iter().filter(|&&s| s >= r).count() as f64 / sups.len() as f64;
            let exact = two_sided_sup_tail(r + shift);
            let se = (exact * (1.0 - exact) / sups.len() as f64).sqrt();
            assert!((emp - exact).abs() <= 4.0 * se, "r {r}: {emp} vs {exact}");
            // and the one-sided reflection value 2 P(|W_1| >= r) dominates
            let refl = 2.0 * statrs::function::erf::erfc(r / 2f64.sqrt());
            assert!(emp <= refl + 4.0 * se);
        }
    }
}
