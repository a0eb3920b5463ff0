//! Seeded Brownian paths on a dyadic fine grid, jointly sampled with the
//! exact per-step stochastic convolution.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forcing::ForcingSpec;
use crate::generator::Multiplier;
use crate::ou::{ou_step_cov, OuStepLaw};
use crate::rng::stream_rng;
use crate::space::ModeGrid;

const MAGIC: &[u8; 4] = b"CVBN";
const SIDECAR_VERSION: u32 = 1;

/// Everything needed to draw fine-grid increments, shared by all samples.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    cutoff: usize,
    dimension: usize,
    n_ref: usize,
    horizon: f64,
    symbols: Vec<Complex64>,
    amplitudes: Vec<Complex64>,
    profile: Vec<f64>,
    laws: Vec<OuStepLaw>,
}

impl NoiseModel {
    pub fn new(
        grid: &ModeGrid,
        mult: &Multiplier,
        forcing: &ForcingSpec,
        n_ref: usize,
        horizon: f64,
    ) -> Result<Self> {
        if n_ref == 0 || !n_ref.is_power_of_two() {
            return Err(Error::config(
                "n_ref",
                format!("must be a power of two, got {n_ref}"),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        for len in [mult.len(), forcing.amplitudes().len()] {
            if len != grid.len() {
                return Err(Error::DimensionMismatch {
                    expected: grid.len(),
                    got: len,
                });
            }
        }
        let h = horizon / n_ref as f64;
        // unit-amplitude laws; paths then scale exactly with g
        let one = Complex64::new(1.0, 0.0);
        let laws = mult
            .symbols()
            .iter()
            .map(|&mu| ou_step_cov(mu, one, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cutoff: grid.cutoff(),
            dimension: grid.dimension(),
            n_ref,
            horizon,
            symbols: mult.symbols().to_vec(),
            amplitudes: forcing.amplitudes().to_vec(),
            profile: forcing.profile().fine_values(n_ref, horizon)?,
            laws,
        })
    }

    pub fn n_ref(&self) -> usize {
        self.n_ref
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn fine_step(&self) -> f64 {
        self.horizon / self.n_ref as f64
    }

    pub fn modes(&self) -> usize {
        self.laws.len()
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Fine-step draws `(Re I, Im I, dW)` for one mode of one sample, with the
    /// time profile already applied to `I`.
    pub fn mode_draws(&self, seed: u64, sample: u64, mode: usize) -> ModeDraws<'_> {
        ModeDraws {
            law: &self.laws[mode],
            g: self.amplitudes[mode],
            profile: &self.profile,
            rng: stream_rng(seed, sample, mode as u64),
            step: 0,
        }
    }
}

pub struct ModeDraws<'a> {
    law: &'a OuStepLaw,
    g: Complex64,
    profile: &'a [f64],
    rng: ChaCha8Rng,
    step: usize,
}

impl Iterator for ModeDraws<'_> {
    type Item = [f64; 3];

    #[inline]
    fn next(&mut self) -> Option<[f64; 3]> {
        let phi = *self.profile.get(self.step)?;
        self.step += 1;
        let [a, b, dw] = self.law.sample(&mut self.rng);
        let i = self.g * Complex64::new(a, b) * phi;
        Some([i.re, i.im, dw])
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.profile.len() - self.step;
        (left, Some(left))
    }
}

/// One Monte Carlo sample of fine-grid increments for every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub seed: u64,
    pub sample: u64,
    pub n_ref: usize,
    pub horizon: f64,
    pub cutoff: usize,
    pub dimension: usize,
    symbols: Vec<Complex64>,
    amplitudes: Vec<Complex64>,
    profile: Vec<f64>,
    /// `(Re I, Im I, dW)` per fine step, mode-major.
    increments: Vec<[f64; 3]>,
}

impl PathBundle {
    pub fn from_model(model: &NoiseModel, seed: u64, sample: u64) -> Self {
        let mut increments = Vec::with_capacity(model.modes() * model.n_ref);
        for mode in 0..model.modes() {
            increments.extend(model.mode_draws(seed, sample, mode));
        }
        Self {
            seed,
            sample,
            n_ref: model.n_ref,
            horizon: model.horizon,
            cutoff: model.cutoff,
            dimension: model.dimension,
            symbols: model.symbols.clone(),
            amplitudes: model.amplitudes.clone(),
            profile: model.profile.clone(),
            increments,
        }
    }

    pub fn modes(&self) -> usize {
        self.symbols.len()
    }

    pub fn fine_step(&self) -> f64 {
        self.horizon / self.n_ref as f64
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    /// Fine increments of one mode.
    pub fn mode(&self, mode: usize) -> &[[f64; 3]] {
        &self.increments[mode * self.n_ref..(mode + 1) * self.n_ref]
    }

    /// Fine Brownian increments `dW` of one mode.
    pub fn brownian(&self, mode: usize) -> impl Iterator<Item = f64> + '_ {
        self.mode(mode).iter().map(|x| x[2])
    }
}

/// Sample 0 of `seed`.
pub fn generate_bundle(
    seed: u64,
    grid: &ModeGrid,
    mult: &Multiplier,
    forcing: &ForcingSpec,
    n_ref: usize,
    horizon: f64,
) -> Result<PathBundle> {
    Ok(PathBundle::from_model(
        &NoiseModel::new(grid, mult, forcing, n_ref, horizon)?,
        seed,
        0,
    ))
}

/// `d_j M^k = g^k sum phi_i dW_i^k` over the fine steps inside coarse step `j`.
pub fn aggregate_increments(bundle: &PathBundle, n: usize) -> Result<Vec<Vec<Complex64>>> {
    if n == 0 || !bundle.n_ref.is_multiple_of(n) {
        return Err(Error::Mesh {
            coarse: n,
            fine: bundle.n_ref,
        });
    }
    let ratio = bundle.n_ref / n;
    Ok((0..bundle.modes())
        .map(|k| {
            let g = bundle.amplitudes[k];
            bundle
                .mode(k)
                .chunks(ratio)
                .zip(bundle.profile.chunks(ratio))
                .map(|(chunk, phi)| g * chunk.iter().zip(phi).map(|(x, p)| p * x[2]).sum::<f64>())
                .collect()
        })
        .collect())
}

/// Header of a bundle sidecar file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SidecarHeader {
    pub version: u32,
    pub seed: u64,
    pub sample: u64,
    pub n_ref: u64,
    pub cutoff: u64,
    pub dimension: u64,
    pub modes: u64,
}

/// Header, then `3 * n_ref` little-endian doubles per mode.
pub fn write_sidecar<W: Write>(bundle: &PathBundle, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_u32::<LittleEndian>(SIDECAR_VERSION)?;
    for v in [
        bundle.seed,
        bundle.sample,
        bundle.n_ref as u64,
        bundle.cutoff as u64,
        bundle.dimension as u64,
        bundle.modes() as u64,
    ] {
        out.write_u64::<LittleEndian>(v)?;
    }
    for triple in &bundle.increments {
        for v in triple {
            out.write_f64::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

pub fn read_sidecar<R: Read>(mut input: R) -> Result<(SidecarHeader, Vec<[f64; 3]>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a bundle sidecar".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != SIDECAR_VERSION {
        return Err(Error::Io(format!("unsupported sidecar version {version}")));
    }
    let mut fields = [0u64; 6];
    for f in &mut fields {
        *f = input.read_u64::<LittleEndian>()?;
    }
    let header = SidecarHeader {
        version,
        seed: fields[0],
        sample: fields[1],
        n_ref: fields[2],
        cutoff: fields[3],
        dimension: fields[4],
        modes: fields[5],
    };
    let count = (header.modes * header.n_ref) as usize;
    let mut payload = Vec::with_capacity(count);
    for _ in 0..count {
        let mut t = [0.0; 3];
        for v in &mut t {
            *v = input.read_f64::<LittleEndian>()?;
        }
        payload.push(t);
    }
    Ok((header, payload))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModeGrid, Multiplier, ForcingSpec) {
        let g = ModeGrid::one_dim(3).unwrap();
        let m = Multiplier::heat(&g).unwrap();
        let f = ForcingSpec::decaying(&g, 1.0).unwrap();
        (g, m, f)
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (g, m, f) = setup();
        let a = generate_bundle(9, &g, &m, &f, 64, 1.0).unwrap();
        let b = generate_bundle(9, &g, &m, &f, 64, 1.0).unwrap();
        let c = generate_bundle(10, &g, &m, &f, 64, 1.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(generate_bundle(9, &g, &m, &f, 48, 1.0).is_err());
        assert!(generate_bundle(9, &g, &m, &f, 64, 0.0).is_err());
    }

    #[test]
    fn zero_amplitude_mode() {
        let g = ModeGrid::one_dim(2).unwrap();
        let m = Multiplier::heat(&g).unwrap();
        let f = ForcingSpec::single_mode(&g, 0, Complex64::new(1.0, 0.0)).unwrap();
        let b = generate_bundle(1, &g, &m, &f, 32, 1.0).unwrap();
        for k in 1..g.len() {
            assert!(b.mode(k).iter().all(|x| x[0] == 0.0 && x[1] == 0.0));
            assert!(b.brownian(k).any(|w| w != 0.0));
        }
    }

    #[test]
    fn aggregation_identities() {
        let (g, m, f) = setup();
        let b = generate_bundle(2, &g, &m, &f, 32, 1.0).unwrap();
        let fine = aggregate_increments(&b, 32).unwrap();
        for k in 0..g.len() {
            for (i, w) in b.brownian(k).enumerate() {
                assert_eq!(fine[k][i], f.amplitudes()[k] * w);
            }
        }
        let one = aggregate_increments(&b, 1).unwrap();
        for k in 0..g.len() {
            let wt: f64 = b.brownian(k).sum();
            assert!((one[k][0] - f.amplitudes()[k] * wt).norm() < 1e-14);
        }
        for n in [2usize, 4, 8] {
            let agg = aggregate_increments(&b, n).unwrap();
            let r = 32 / n;
            for k in 0..g.len() {
                for j in 0..n {
                    let direct: f64 = b.brownian(k).skip(j * r).take(r).sum();
                    assert!((agg[k][j] - f.amplitudes()[k] * direct).norm() < 1e-14);
                }
            }
        }
        assert!(matches!(
            aggregate_increments(&b, 3),
            Err(Error::Mesh { .. })
        ));
        assert!(matches!(
            aggregate_increments(&b, 0),
            Err(Error::Mesh { .. })
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let (g, m, f) = setup();
        let b = generate_bundle(5, &g, &m, &f, 16, 1.0).unwrap();
        let mut buf = Vec::new();
        write_sidecar(&b, &mut buf).unwrap();
        let (h, payload) = read_sidecar(buf.as_slice()).unwrap();
        assert_eq!(
            (h.seed, h.n_ref, h.cutoff, h.dimension, h.modes),
            (5, 16, 3, 1, 7)
        );
        assert_eq!(payload, b.increments);
        assert!(read_sidecar(&b"XXXX"[..]).is_err());
    }
}
