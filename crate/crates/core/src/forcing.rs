//! Deterministic mode-diagonal forcing `g` and its gamma-radonifying norm.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{weighted_sq_norm, ModeGrid, SobolevWeight};

/// Scalar time profile `phi(t)` multiplying every amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant,
    /// `phi = values[i]` on `[breaks[i], breaks[i+1])`; `breaks` starts at 0
    /// and ends at the horizon.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TimeProfile {
    /// `count` bursts of width `width`, the `j`-th ending at `j T / count`,
    /// zero elsewhere, scaled so that `int_0^T phi^2 = T`.
    pub fn windows(horizon: f64, count: usize, width: f64) -> Result<Self> {
        if count == 0 || !(width > 0.0) || width * count as f64 > horizon * (1.0 + 1e-12) {
            return Err(Error::config(
                "profile",
                "windows must be nonempty and fit in the horizon",
            ));
        }
        let level = (horizon / (count as f64 * width)).sqrt();
        let mut breaks = vec![0.0];
        let mut values = Vec::new();
        for j in 1..=count {
            let end = horizon * j as f64 / count as f64;
            let start = end - width;
            let last = *breaks.last().unwrap();
            if start > last {
                breaks.push(start);
                values.push(0.0);
            }
            breaks.push(end);
            values.push(level);
        }
        Ok(TimeProfile::Piecewise { breaks, values })
    }

    fn validate(&self, horizon: f64) -> Result<()> {
        if let TimeProfile::Piecewise { breaks, values } = self {
            let ok = breaks.len() == values.len() + 1
                && !values.is_empty()
                && breaks[0] == 0.0
                && (breaks[breaks.len() - 1] - horizon).abs() <= 1e-12 * horizon
                && breaks.windows(2).all(|w| w[0] < w[1])
                && values.iter().all(|v| v.is_finite());
            if !ok {
                return Err(Error::config(
                    "profile",
                    "breaks must ascend from 0 to the horizon with one finite value per segment",
                ));
            }
        }
        Ok(())
    }

    /// `int_0^T phi(t)^2 dt`, summed exactly over the segments.
    pub fn square_integral(&self, horizon: f64) -> Result<f64> {
        self.validate(horizon)?;
        Ok(match self {
            TimeProfile::Constant => horizon,
            TimeProfile::Piecewise { breaks, values } => breaks
                .windows(2)
                .zip(values)
                .map(|(w, v)| (w[1] - w[0]) * v * v)
                .sum(),
        })
    }

    /// Value on each of `n_ref` fine steps. Breaks must sit on the fine grid.
    pub fn fine_values(&self, n_ref: usize, horizon: f64) -> Result<Vec<f64>> {
        self.validate(horizon)?;
        match self {
            TimeProfile::Constant => Ok(vec![1.0; n_ref]),
            TimeProfile::Piecewise { breaks, values } => {
                let h = horizon / n_ref as f64;
                for b in breaks {
                    let pos = b / h;
                    if (pos - pos.round()).abs() > 1e-9 {
                        return Err(Error::config(
                            "profile",
                            format!("break {b} is not on the fine grid"),
                        ));
                    }
                }
                let mut out = Vec::with_capacity(n_ref);
                let mut seg = 0;
                for i in 0..n_ref {
                    let mid = (i as f64 + 0.5) * h;
                    while mid > breaks[seg + 1] {
                        seg += 1;
                    }
                    out.push(values[seg]);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    amplitudes: Vec<Complex64>,
    decay: Option<f64>,
    profile: TimeProfile,
}

impl ForcingSpec {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::config("forcing", "amplitudes must be finite"));
        }
        Ok(Self {
            amplitudes,
            decay: None,
            profile: TimeProfile::Constant,
        })
    }

    /// `g^k = (1+|k|^2)^{-s/2}`.
    pub fn decaying(grid: &ModeGrid, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::config("decay", "decay exponent must be finite"));
        }
        let amplitudes = grid
            .sq_norms()
            .iter()
            .map(|&k2| Complex64::new((1.0 + k2).powf(-s / 2.0), 0.0))
            .collect();
        Ok(Self {
            amplitudes,
            decay: Some(s),
            profile: TimeProfile::Constant,
        })
    }

    pub fn zero(grid: &ModeGrid) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
            decay: None,
            profile: TimeProfile::Constant,
        }
    }

    /// Unit amplitude on a single mode.
    pub fn single_mode(grid: &ModeGrid, index: usize, amplitude: Complex64) -> Result<Self> {
        if index >= grid.len() {
            return Err(Error::config(
                "mode",
                format!("mode index {index} outside the grid"),
            ));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); grid.len()];
        amplitudes[index] = amplitude;
        Self::from_amplitudes(amplitudes)
    }

    pub fn with_profile(mut self, profile: TimeProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * c).collect(),
            decay: self.decay,
            profile: self.profile.clone(),
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn profile(&self) -> &TimeProfile {
        &self.profile
    }

    pub fn decay(&self) -> Option<f64> {
        self.decay
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.iter().all(|a| a.norm_sqr() == 0.0)
    }

    /// Largest `sigma` with `sum (1+|k|^2)^sigma |g^k|^2 < inf` on the full
    /// lattice: `s - d/2` (the supremum, not attained).
    pub fn regularity_target(&self, dimension: usize) -> Option<f64> {
        self.decay.map(|s| s - dimension as f64 / 2.0)
    }

    /// `||g||_{L^2(0,T; gamma(H, H^lambda))}`.
    pub fn gamma_norm(&self, grid: &ModeGrid, weight: SobolevWeight, horizon: f64) -> Result<f64> {
        if self.amplitudes.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: self.amplitudes.len(),
            });
        }
        let spatial = weighted_sq_norm(&self.amplitudes, &grid.weights(weight));
        Ok((spatial * self.profile.square_integral(horizon)?).sqrt())
    }
}

pub fn forcing_gamma_norm(
    forcing: &ForcingSpec,
    grid: &ModeGrid,
    weight: SobolevWeight,
    horizon: f64,
) -> Result<f64> {
    forcing.gamma_norm(grid, weight, horizon)
}
