//! Exact reference paths, scheme recursions and sup-over-grid errors.

use num_complex::Complex64;

use crate::bundle::{aggregate_increments, NoiseModel, PathBundle};
use crate::error::{Error, Result};
use crate::generator::Multiplier;
use crate::scheme::{step_factors, TimeStepper};
use crate::space::{weighted_sq_norm, ModeGrid, SobolevWeight, StateVector};

fn check_model(bundle: &PathBundle, mult: &Multiplier) -> Result<()> {
    if bundle.symbols() != mult.symbols() {
        return Err(Error::ModelMismatch(
            "bundle was generated for a different multiplier".into(),
        ));
    }
    Ok(())
}

/// Exact mild solution at every fine grid time, mode-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    n_ref: usize,
    values: Vec<Complex64>,
}

impl ReferenceRun {
    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn modes(&self) -> usize {
        self.values.len() / (self.n_ref + 1)
    }

    pub fn mode(&self, k: usize) -> &[Complex64] {
        &self.values[k * (self.n_ref + 1)..(k + 1) * (self.n_ref + 1)]
    }

    /// State at fine time index `i`.
    pub fn state(&self, i: usize) -> StateVector {
        StateVector::from_raw((0..self.modes()).map(|k| self.mode(k)[i]).collect())
    }
}

/// Coarse-grid states `u_0, ..., u_n`, mode-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun {
    n: usize,
    values: Vec<Complex64>,
}

impl SchemeRun {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.values.len() / (self.n + 1)
    }

    pub fn mode(&self, k: usize) -> &[Complex64] {
        &self.values[k * (self.n + 1)..(k + 1) * (self.n + 1)]
    }

    pub fn state(&self, j: usize) -> StateVector {
        StateVector::from_raw((0..self.modes()).map(|k| self.mode(k)[j]).collect())
    }
}

/// `u_{i+1} = e^{mu h} u_i + I_i` per mode, from `u_0 = 0`.
pub fn reference_run(bundle: &PathBundle, mult: &Multiplier) -> Result<ReferenceRun> {
    check_model(bundle, mult)?;
    let h = bundle.fine_step();
    let n_ref = bundle.n_ref;
    let mut values = Vec::with_capacity(bundle.modes() * (n_ref + 1));
    for (k, mu) in mult.symbols().iter().enumerate() {
        let decay = (mu * h).exp();
        let mut u = Complex64::new(0.0, 0.0);
        values.push(u);
        for x in bundle.mode(k) {
            u = decay * u + Complex64::new(x[0], x[1]);
            values.push(u);
        }
    }
    Ok(ReferenceRun { n_ref, values })
}

/// `u_j = r(h mu)(u_{j-1} + d_j M)` with `h = T/n`, from `u_0 = 0`.
pub fn scheme_run(
    bundle: &PathBundle,
    mult: &Multiplier,
    scheme: &dyn TimeStepper,
    n: usize,
) -> Result<SchemeRun> {
    check_model(bundle, mult)?;
    let increments = aggregate_increments(bundle, n)?;
    let factors = step_factors(scheme, mult, bundle.horizon / n as f64)?;
    let mut values = Vec::with_capacity(bundle.modes() * (n + 1));
    for (r, dm) in factors.iter().zip(&increments) {
        let mut u = Complex64::new(0.0, 0.0);
        values.push(u);
        for d in dm {
            u = r * (u + d);
            values.push(u);
        }
    }
    Ok(SchemeRun { n, values })
}

/// `max_j ||u(t_j) - u_j||` in the weighted norm.
pub fn error_sup(
    reference: &ReferenceRun,
    run: &SchemeRun,
    grid: &ModeGrid,
    weight: SobolevWeight,
) -> Result<f64> {
    if run.n == 0 || !reference.n_ref.is_multiple_of(run.n) {
        return Err(Error::Mesh {
            coarse: run.n,
            fine: reference.n_ref,
        });
    }
    if reference.modes() != grid.len() || run.modes() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: run.modes(),
        });
    }
    let ratio = reference.n_ref / run.n;
    let weights = grid.weights(weight);
    let mut sup = 0.0f64;
    for j in 0..=run.n {
        let diff: Vec<Complex64> = (0..grid.len())
            .map(|k| reference.mode(k)[j * ratio] - run.mode(k)[j])
            .collect();
        sup = sup.max(weighted_sq_norm(&diff, &weights));
    }
    Ok(sup.sqrt())
}

/// Per-sample sup errors for several coarse grids at once, streaming over
/// modes so no bundle is materialised.
#[derive(Debug, Clone)]
pub struct ErrorSweep {
    noise: NoiseModel,
    n_list: Vec<usize>,
    weights: Vec<f64>,
    fine_decay: Vec<Complex64>,
    /// `r(T/n mu_k)` per coarse grid.
    factors: Vec<Vec<Complex64>>,
}

impl ErrorSweep {
    pub fn new(
        noise: NoiseModel,
        grid: &ModeGrid,
        mult: &Multiplier,
        scheme: &dyn TimeStepper,
        n_list: &[usize],
        weight: SobolevWeight,
    ) -> Result<Self> {
        if noise.symbols() != mult.symbols() {
            return Err(Error::ModelMismatch(
                "noise model built for a different multiplier".into(),
            ));
        }
        let n_ref = noise.n_ref();
        for &n in n_list {
            if n == 0 || !n_ref.is_multiple_of(n) {
                return Err(Error::Mesh {
                    coarse: n,
                    fine: n_ref,
                });
            }
        }
        let factors = n_list
            .iter()
            .map(|&n| step_factors(scheme, mult, noise.horizon() / n as f64))
            .collect::<Result<Vec<_>>>()?;
        let h = noise.fine_step();
        Ok(Self {
            fine_decay: mult.symbols().iter().map(|mu| (mu * h).exp()).collect(),
            weights: grid.weights(weight),
            n_list: n_list.to_vec(),
            factors,
            noise,
        })
    }

    pub fn n_list(&self) -> &[usize] {
        &self.n_list
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// `sup_j ||u(t_j) - u_j^{(n)}||` for each `n`, for sample `m`.
    pub fn sample(&self, seed: u64, m: u64) -> Vec<f64> {
        let n_ref = self.noise.n_ref();
        let ratios: Vec<usize> = self.n_list.iter().map(|&n| n_ref / n).collect();
        let offsets: Vec<usize> = self
            .n_list
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n + 1;
                Some(o)
            })
            .collect();
        let total: usize = self.n_list.iter().map(|n| n + 1).sum();
        let mut sq = vec![0.0f64; total];
        let nl = self.n_list.len();
        let mut state = vec![Complex64::new(0.0, 0.0); nl];
        let mut pending = vec![0.0f64; nl];
        // coarse sizes divide the power-of-two n_ref, so boundaries are masks
        let masks: Vec<usize> = ratios.iter().map(|r| r - 1).collect();
        let finest = masks.iter().copied().min().unwrap_or(0);
        for k in 0..self.noise.modes() {
            let w = self.weights[k];
            let g = self.noise.amplitudes()[k];
            let decay = self.fine_decay[k];
            let phi = self.noise.profile();
            let mut u_ref = Complex64::new(0.0, 0.0);
            state.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
            pending.iter_mut().for_each(|p| *p = 0.0);
            for (i, x) in self.noise.mode_draws(seed, m, k).enumerate() {
                u_ref = decay * u_ref + Complex64::new(x[0], x[1]);
                let dw = phi[i] * x[2];
                pending.iter_mut().for_each(|p| *p += dw);
                let step = i + 1;
                if step & finest != 0 {
                    continue;
                }
                for c in 0..nl {
                    if step & masks[c] == 0 {
                        state[c] = self.factors[c][k] * (state[c] + g * pending[c]);
                        pending[c] = 0.0;
                        let j = step / ratios[c];
                        sq[offsets[c] + j] += w * (u_ref - state[c]).norm_sqr();
                    }
                }
            }
        }
        (0..nl)
            .map(|c| {
                sq[offsets[c]..offsets[c] + self.n_list[c] + 1]
                    .iter()
                    .fold(0.0f64, |a, &b| a.max(b))
                    .sqrt()
            })
            .collect()
    }
}
