//! Generators as diagonal Fourier multipliers.
//!
//! Every model maps a frequency `k` to a complex symbol `mu_k`; the semigroup
//! acts coefficientwise by `exp(t mu_k)`. Models are looked up by name in a
//! [`GeneratorRegistry`].

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::space::{ModeGrid, StateVector};

pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    /// Symbol `mu_k` at frequency `k`.
    fn symbol(&self, k: &[i64]) -> Complex64;

    /// Order `a` of the operator, so that `|mu_k| ~ |k|^a`.
    fn operator_order(&self) -> u32;

    /// Whether the semigroup is analytic (parabolic smoothing).
    fn is_analytic(&self) -> bool {
        false
    }

    fn supports_dimension(&self, _d: usize) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Heat;

impl Generator for Heat {
    fn name(&self) -> &str {
        "heat"
    }
    fn symbol(&self, k: &[i64]) -> Complex64 {
        let k2: i64 = k.iter().map(|c| c * c).sum();
        Complex64::new(-(k2 as f64), 0.0)
    }
    fn operator_order(&self) -> u32 {
        2
    }
    fn is_analytic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Transport;

impl Generator for Transport {
    fn name(&self) -> &str {
        "transport"
    }
    fn symbol(&self, k: &[i64]) -> Complex64 {
        Complex64::new(0.0, k[0] as f64)
    }
    fn operator_order(&self) -> u32 {
        1
    }
    fn supports_dimension(&self, d: usize) -> bool {
        d == 1
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Schroedinger;

impl Generator for Schroedinger {
    fn name(&self) -> &str {
        "schroedinger"
    }
    fn symbol(&self, k: &[i64]) -> Complex64 {
        let k2: i64 = k.iter().map(|c| c * c).sum();
        Complex64::new(0.0, -(k2 as f64))
    }
    fn operator_order(&self) -> u32 {
        2
    }
}

/// Which family a [`Multiplier`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Heat,
    Transport,
    Schroedinger,
    Custom,
}

impl Model {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "heat" => Ok(Model::Heat),
            "transport" => Ok(Model::Transport),
            "schroedinger" | "schrodinger" => Ok(Model::Schroedinger),
            "custom" => Ok(Model::Custom),
            other => Err(Error::config("model", format!("unknown model `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Heat => "heat",
            Model::Transport => "transport",
            Model::Schroedinger => "schroedinger",
            Model::Custom => "custom",
        }
    }
}

/// A generator evaluated on a grid: one symbol per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    model: Model,
    symbols: Vec<Complex64>,
    operator_order: u32,
    analytic: bool,
}

impl Multiplier {
    pub fn from_generator(gen: &dyn Generator, grid: &ModeGrid) -> Result<Self> {
        if !gen.supports_dimension(grid.dimension()) {
            return Err(Error::config(
                "dimension",
                format!(
                    "model `{}` does not support d = {}",
                    gen.name(),
                    grid.dimension()
                ),
            ));
        }
        let symbols = grid.frequencies().iter().map(|k| gen.symbol(k)).collect();
        Ok(Self {
            model: Model::parse(gen.name()).unwrap_or(Model::Custom),
            symbols,
            operator_order: gen.operator_order(),
            analytic: gen.is_analytic(),
        })
    }

    pub fn heat(grid: &ModeGrid) -> Result<Self> {
        Self::from_generator(&Heat, grid)
    }

    pub fn transport(grid: &ModeGrid) -> Result<Self> {
        Self::from_generator(&Transport, grid)
    }

    pub fn schroedinger(grid: &ModeGrid) -> Result<Self> {
        Self::from_generator(&Schroedinger, grid)
    }

    /// User-supplied symbol table, one entry per grid frequency.
    pub fn custom(grid: &ModeGrid, symbols: Vec<Complex64>, operator_order: u32) -> Result<Self> {
        if symbols.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: symbols.len(),
            });
        }
        if symbols
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(Error::config("symbols", "custom symbols must be finite"));
        }
        Ok(Self {
            model: Model::Custom,
            symbols,
            operator_order: operator_order.max(1),
            analytic: false,
        })
    }

    /// The zero generator `A = 0` on a grid.
    pub fn zero(grid: &ModeGrid) -> Self {
        Self {
            model: Model::Custom,
            symbols: vec![Complex64::new(0.0, 0.0); grid.len()],
            operator_order: 1,
            analytic: false,
        }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn operator_order(&self) -> u32 {
        self.operator_order
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// `Re mu_k <= 0` for every mode, i.e. the semigroup is contractive.
    pub fn is_dissipative(&self) -> bool {
        self.symbols.iter().all(|s| s.re <= 0.0)
    }

    /// `S(t) x`, coefficientwise `exp(t mu_k) x_k`.
    pub fn semigroup_apply(&self, t: f64, state: &StateVector) -> Result<StateVector> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "semigroup time must be >= 0, got {t}"
            )));
        }
        if state.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: state.len(),
            });
        }
        let out = state
            .coefficients()
            .iter()
            .zip(&self.symbols)
            .map(|(x, mu)| (mu * t).exp() * x)
            .collect();
        Ok(StateVector::from_raw(out))
    }
}

pub fn semigroup_apply(mult: &Multiplier, t: f64, state: &StateVector) -> Result<StateVector> {
    mult.semigroup_apply(t, state)
}

/// Name-keyed catalog of generator families.
pub struct GeneratorRegistry {
    entries: BTreeMap<String, Arc<dyn Generator>>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, gen: Arc<dyn Generator>) {
        self.entries.insert(gen.name().to_string(), gen);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Generator>> {
        let key = if name == "schrodinger" {
            "schroedinger"
        } else {
            name
        };
        self.entries
            .get(key)
            .cloned()
            .ok_or_else(|| Error::config("model", format!("unknown model `{name}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Heat));
        r.register(Arc::new(Transport));
        r.register(Arc::new(Schroedinger));
        r
    }
}
