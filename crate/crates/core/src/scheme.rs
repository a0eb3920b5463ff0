//! Rational time steppers `R(h) = r(hA)` acting on diagonal multipliers.
//!
//! Each scheme implements [`TimeStepper`]; the catalog (`splitting`,
//! `implicit_euler`, `crank_nicolson`) is registered by name in a
//! [`SchemeRegistry`], and custom rational functions are built from
//! numerator/denominator coefficient lists.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generator::Multiplier;
use crate::space::StateVector;

/// Minimum allowed distance between `h mu_k` and a pole of `r`.
pub const POLE_TOLERANCE: f64 = 1e-8;

pub trait TimeStepper: Send + Sync {
    fn name(&self) -> &str;

    /// `r(z)` without the pole-proximity guard.
    fn eval_raw(&self, z: Complex64) -> Complex64;

    fn poles(&self) -> &[Complex64] {
        &[]
    }

    /// Largest `l` with `|r(z) - e^z| = O(z^{l+1})`; `None` for the exact
    /// exponential.
    fn classical_order(&self) -> Option<u32>;

    fn is_exponential(&self) -> bool {
        false
    }

    /// `r(z)`, refusing evaluations within [`POLE_TOLERANCE`] of a pole.
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        if let Some(d) = self
            .poles()
            .iter()
            .map(|p| (p - z).norm())
            .min_by(|a, b| a.total_cmp(b))
        {
            if d < POLE_TOLERANCE {
                return Err(Error::SingularStep {
                    z: format!("{z}"),
                    distance: d,
                });
            }
        }
        Ok(self.eval_raw(z))
    }

    /// `r(z)^n`. For `|r| <= 1` the power goes through `exp(n log r)`.
    fn power(&self, z: Complex64, n: u64) -> Result<Complex64> {
        let r = self.eval(z)?;
        Ok(complex_power(r, n))
    }
}

pub(crate) fn complex_power(r: Complex64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if r.norm() <= 1.0 {
        if r == Complex64::new(0.0, 0.0) {
            return r;
        }
        (r.ln() * n as f64).exp()
    } else {
        r.powu(n as u32)
    }
}

/// `r(z) = e^z`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Splitting;

impl TimeStepper for Splitting {
    fn name(&self) -> &str {
        "splitting"
    }
    fn eval_raw(&self, z: Complex64) -> Complex64 {
        z.exp()
    }
    fn classical_order(&self) -> Option<u32> {
        None
    }
    fn is_exponential(&self) -> bool {
        true
    }
    fn power(&self, z: Complex64, n: u64) -> Result<Complex64> {
        Ok((z * n as f64).exp())
    }
}

/// `r(z) = (1 - z)^{-1}`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitEuler {
    poles: [Complex64; 1],
}

impl Default for ImplicitEuler {
    fn default() -> Self {
        Self {
            poles: [Complex64::new(1.0, 0.0)],
        }
    }
}

impl TimeStepper for ImplicitEuler {
    fn name(&self) -> &str {
        "implicit_euler"
    }
    fn eval_raw(&self, z: Complex64) -> Complex64 {
        (Complex64::new(1.0, 0.0) - z).inv()
    }
    fn poles(&self) -> &[Complex64] {
        &self.poles
    }
    fn classical_order(&self) -> Option<u32> {
        Some(1)
    }
}

/// `r(z) = (2 + z)(2 - z)^{-1}`.
#[derive(Debug, Clone, Copy)]
pub struct CrankNicolson {
    poles: [Complex64; 1],
}

impl Default for CrankNicolson {
    fn default() -> Self {
        Self {
            poles: [Complex64::new(2.0, 0.0)],
        }
    }
}

impl TimeStepper for CrankNicolson {
    fn name(&self) -> &str {
        "crank_nicolson"
    }
    fn eval_raw(&self, z: Complex64) -> Complex64 {
        let two = Complex64::new(2.0, 0.0);
        (two + z) / (two - z)
    }
    fn poles(&self) -> &[Complex64] {
        &self.poles
    }
    fn classical_order(&self) -> Option<u32> {
        Some(2)
    }
}

/// `r(z) = p(z) / q(z)` with coefficients in ascending powers.
#[derive(Clone)]
pub struct CustomRational {
    name: String,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    poles: Vec<Complex64>,
    order: Option<u32>,
}

impl fmt::Debug for CustomRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRational")
            .field("name", &self.name)
            .field("numerator", &self.numerator)
            .field("denominator", &self.denominator)
            .finish()
    }
}

impl CustomRational {
    pub fn new(
        name: impl Into<String>,
        numerator: Vec<f64>,
        denominator: Vec<f64>,
    ) -> Result<Self> {
        let numerator = trim_trailing_zeros(numerator);
        let denominator = trim_trailing_zeros(denominator);
        if numerator.is_empty() || denominator.is_empty() {
            return Err(Error::config(
                "scheme",
                "coefficient lists must be non-empty and nonzero",
            ));
        }
        if numerator.iter().chain(&denominator).any(|c| !c.is_finite()) {
            return Err(Error::config("scheme", "coefficients must be finite"));
        }
        if denominator[0] == 0.0 {
            return Err(Error::config("scheme", "r has a pole at z = 0"));
        }
        let poles = polynomial_roots(&denominator);
        let order = taylor_order(&numerator, &denominator);
        Ok(Self {
            name: name.into(),
            numerator,
            denominator,
            poles,
            order,
        })
    }
}

impl TimeStepper for CustomRational {
    fn name(&self) -> &str {
        &self.name
    }
    fn eval_raw(&self, z: Complex64) -> Complex64 {
        horner(&self.numerator, z) / horner(&self.denominator, z)
    }
    fn poles(&self) -> &[Complex64] {
        &self.poles
    }
    fn classical_order(&self) -> Option<u32> {
        self.order
    }
}

fn trim_trailing_zeros(mut v: Vec<f64>) -> Vec<f64> {
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Roots of a real polynomial (ascending coefficients) by Durand-Kerner.
fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..degree {
            let zi = roots[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            let step = horner(&monic, zi) / denom;
            roots[i] = zi - step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}

/// Number of Taylor coefficients of `p/q` matching `1/j!`, minus one.
fn taylor_order(num: &[f64], den: &[f64]) -> Option<u32> {
    const TERMS: usize = 12;
    let mut c = [0.0; TERMS];
    let mut fact = 1.0;
    let mut matched = None;
    for j in 0..TERMS {
        let mut acc = num.get(j).copied().unwrap_or(0.0);
        for i in 1..=j {
            acc -= den.get(i).copied().unwrap_or(0.0) * c[j - i];
        }
        c[j] = acc / den[0];
        if j > 0 {
            fact *= j as f64;
        }
        if (c[j] - 1.0 / fact).abs() > 1e-12 * (1.0 / fact).max(1e-300) {
            break;
        }
        matched = Some(j as u32);
    }
    match matched {
        Some(l) if l >= 1 => Some(l),
        _ => None,
    }
}

pub type RationalScheme = Arc<dyn TimeStepper>;

/// `R(h) x`, coefficientwise `r(h mu_k) x_k`.
pub fn scheme_step(
    scheme: &dyn TimeStepper,
    mult: &Multiplier,
    h: f64,
    state: &StateVector,
) -> Result<StateVector> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    if state.len() != mult.len() {
        return Err(Error::DimensionMismatch {
            expected: mult.len(),
            got: state.len(),
        });
    }
    let factors = step_factors(scheme, mult, h)?;
    Ok(StateVector::from_raw(
        state
            .coefficients()
            .iter()
            .zip(&factors)
            .map(|(x, r)| r * x)
            .collect(),
    ))
}

/// `r(h mu_k)` for every mode.
pub fn step_factors(scheme: &dyn TimeStepper, mult: &Multiplier, h: f64) -> Result<Vec<Complex64>> {
    mult.symbols()
        .iter()
        .map(|mu| scheme.eval(mu * h))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractivityReport {
    pub ok: bool,
    pub max_modulus: f64,
}

/// `max_k |r(h mu_k)|` and whether it stays below `1 + 1e-12`.
pub fn contractivity_check(
    scheme: &dyn TimeStepper,
    mult: &Multiplier,
    h: f64,
) -> ContractivityReport {
    let mut max_modulus = 0.0f64;
    for mu in mult.symbols() {
        match scheme.eval(mu * h) {
            Ok(r) => max_modulus = max_modulus.max(r.norm()),
            Err(_) => {
                max_modulus = f64::INFINITY;
                break;
            }
        }
    }
    ContractivityReport {
        ok: max_modulus <= 1.0 + 1e-12,
        max_modulus,
    }
}

/// Sampled check of `|r(z)| <= 1` on the closed left half-plane.
pub fn is_a_stable_sampled(scheme: &dyn TimeStepper) -> bool {
    let radii = (-30..=60).map(|e| 10f64.powf(e as f64 / 10.0));
    for rho in radii {
        for step in 0..=64 {
            let angle = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * step as f64 / 64.0;
            let z = Complex64::from_polar(rho, angle);
            let z = Complex64::new(z.re.min(0.0), z.im);
            match scheme.eval(z) {
                Ok(r) if r.norm() <= 1.0 + 1e-12 => {}
                _ => return false,
            }
        }
    }
    true
}

/// Name-keyed catalog of time steppers.
pub struct SchemeRegistry {
    entries: BTreeMap<String, RationalScheme>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, scheme: RationalScheme) {
        self.entries.insert(scheme.name().to_string(), scheme);
    }

    /// Lookup by canonical name or the short aliases `ie` / `cn`.
    pub fn get(&self, name: &str) -> Result<RationalScheme> {
        let key = match name {
            "ie" => "implicit_euler",
            "cn" => "crank_nicolson",
            "split" | "exponential_euler" => "splitting",
            other => other,
        };
        self.entries
            .get(key)
            .cloned()
            .ok_or_else(|| Error::config("scheme", format!("unknown scheme `{name}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Splitting));
        r.register(Arc::new(ImplicitEuler::default()));
        r.register(Arc::new(CrankNicolson::default()));
        r
    }
}
