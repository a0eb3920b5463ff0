//! Named experiments with shipped default configurations.

use anyhow::{anyhow, bail, Result};
use convolve_core::generator::Model;
use convolve_core::scheme::SchemeRegistry;

use crate::config::{ExperimentSpec, Group};
use crate::experiments::{run_spec, Outcome, RunContext};

pub trait Experiment: Send + Sync {
    fn id(&self) -> &str;
    fn group(&self) -> Group;
    fn description(&self) -> &str;
    /// Shipped TOML configuration.
    fn default_config(&self) -> &'static str;
    /// Whether a parsed configuration belongs to this experiment.
    fn matches(&self, spec: &ExperimentSpec) -> bool;
    fn run(&self, spec: &ExperimentSpec, ctx: &RunContext) -> Result<Outcome> {
        if !self.matches(spec) {
            bail!(
                "configuration of kind `{}` does not belong to `{}`",
                spec.kind(),
                self.id()
            );
        }
        run_spec(spec, ctx)
    }
}

/// Rate experiment for one built-in model and scheme.
struct RatesEntry {
    id: &'static str,
    model: Model,
    scheme: &'static str,
    config: &'static str,
}

impl Experiment for RatesEntry {
    fn id(&self) -> &str {
        self.id
    }

    fn group(&self) -> Group {
        Group::Rates
    }

    fn description(&self) -> &str {
        "pathwise uniform strong error rate by Monte Carlo with a log-log fit"
    }

    fn default_config(&self) -> &'static str {
        self.config
    }

    fn matches(&self, spec: &ExperimentSpec) -> bool {
        let ExperimentSpec::Rates(c) = spec else {
            return false;
        };
        let scheme = SchemeRegistry::default()
            .get(&c.scheme)
            .map(|s| s.name().to_string());
        Model::parse(&c.model).is_ok_and(|m| m == self.model)
            && scheme.is_ok_and(|s| s == self.scheme)
    }
}

/// Rate experiment with a custom model or scheme.
struct CustomRates;

impl Experiment for CustomRates {
    fn id(&self) -> &str {
        "rates:custom"
    }

    fn group(&self) -> Group {
        Group::Rates
    }

    fn description(&self) -> &str {
        "rate experiment with user-supplied symbols or rational scheme coefficients"
    }

    fn default_config(&self) -> &'static str {
        include_str!("../configs/rates_custom.toml")
    }

    fn matches(&self, spec: &ExperimentSpec) -> bool {
        matches!(spec, ExperimentSpec::Rates(c) if c.scheme == "custom" || c.model == "custom")
    }
}

/// Experiment identified by its configuration kind alone.
struct KindEntry {
    id: &'static str,
    kind: &'static str,
    group: Group,
    description: &'static str,
    config: &'static str,
}

impl Experiment for KindEntry {
    fn id(&self) -> &str {
        self.id
    }

    fn group(&self) -> Group {
        self.group
    }

    fn description(&self) -> &str {
        self.description
    }

    fn default_config(&self) -> &'static str {
        self.config
    }

    fn matches(&self, spec: &ExperimentSpec) -> bool {
        spec.kind() == self.kind
    }
}

pub struct Registry {
    entries: Vec<Box<dyn Experiment>>,
}

macro_rules! rates {
    ($id:literal, $model:expr, $scheme:literal, $file:literal) => {
        Box::new(RatesEntry {
            id: $id,
            model: $model,
            scheme: $scheme,
            config: include_str!(concat!("../configs/", $file)),
        }) as Box<dyn Experiment>
    };
}

macro_rules! kind {
    ($id:literal, $kind:literal, $group:expr, $desc:literal, $file:literal) => {
        Box::new(KindEntry {
            id: $id,
            kind: $kind,
            group: $group,
            description: $desc,
            config: include_str!(concat!("../configs/", $file)),
        }) as Box<dyn Experiment>
    };
}

impl Default for Registry {
    fn default() -> Self {
        use Group::*;
        use Model::*;
        Self {
            entries: vec![
                Box::new(CustomRates),
                rates!(
                    "rates:heat:splitting",
                    Heat,
                    "splitting",
                    "rates_heat_splitting.toml"
                ),
                rates!(
                    "rates:heat:ie",
                    Heat,
                    "implicit_euler",
                    "rates_heat_ie.toml"
                ),
                rates!(
                    "rates:heat:cn",
                    Heat,
                    "crank_nicolson",
                    "rates_heat_cn.toml"
                ),
                rates!(
                    "rates:transport:splitting",
                    Transport,
                    "splitting",
                    "rates_transport_splitting.toml"
                ),
                rates!(
                    "rates:transport:ie",
                    Transport,
                    "implicit_euler",
                    "rates_transport_ie.toml"
                ),
                rates!(
                    "rates:transport:cn",
                    Transport,
                    "crank_nicolson",
                    "rates_transport_cn.toml"
                ),
                rates!(
                    "rates:schroedinger:splitting",
                    Schroedinger,
                    "splitting",
                    "rates_schroedinger_splitting.toml"
                ),
                rates!(
                    "rates:schroedinger:ie",
                    Schroedinger,
                    "implicit_euler",
                    "rates_schroedinger_ie.toml"
                ),
                rates!(
                    "rates:schroedinger:cn",
                    Schroedinger,
                    "crank_nicolson",
                    "rates_schroedinger_cn.toml"
                ),
                kind!(
                    "ineq:pinelis",
                    "pinelis",
                    Ineq,
                    "maximal martingale bound for p >= 2",
                    "ineq_pinelis.toml"
                ),
                kind!(
                    "ineq:lowp",
                    "low_p",
                    Ineq,
                    "maximal martingale bound for 0 < p < 2",
                    "ineq_lowp.toml"
                ),
                kind!(
                    "ineq:taillemma",
                    "tail_lemma",
                    Ineq,
                    "tail bound for bounded martingale increments",
                    "ineq_taillemma.toml"
                ),
                kind!(
                    "ineq:burkholder",
                    "burkholder",
                    Ineq,
                    "maximal inequality for the stochastic integral",
                    "ineq_burkholder.toml"
                ),
                kind!(
                    "ineq:maximal",
                    "maximal",
                    Ineq,
                    "maximal inequality for the stochastic convolution",
                    "ineq_maximal.toml"
                ),
                kind!(
                    "ineq:stability",
                    "stability",
                    Ineq,
                    "uniform stability of contractive time steppers",
                    "ineq_stability.toml"
                ),
                kind!(
                    "ineq:tail",
                    "tail",
                    Ineq,
                    "exponential tail of the stochastic convolution",
                    "ineq_tail.toml"
                ),
                kind!(
                    "ineq:linfty",
                    "linfty",
                    Ineq,
                    "maximal bound over finitely many stochastic integrals",
                    "ineq_linfty.toml"
                ),
                kind!(
                    "ineq:condsmooth",
                    "cond_smooth",
                    Ineq,
                    "two-point and conditional smoothness of l^q norms",
                    "ineq_condsmooth.toml"
                ),
                kind!(
                    "probe:order",
                    "order",
                    Probe,
                    "deterministic approximation order of a rational scheme",
                    "probe_order.toml"
                ),
                kind!(
                    "probe:contractivity",
                    "contractivity",
                    Probe,
                    "contractivity of r(h mu) on the mode grid",
                    "probe_contractivity.toml"
                ),
            ],
        }
    }
}

impl Registry {
    pub fn iter(&self) -> impl Iterator<Item = &dyn Experiment> {
        self.entries.iter().map(|e| e.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&dyn Experiment> {
        self.iter().find(|e| e.id() == id).ok_or_else(|| {
            anyhow!("unknown experiment `{id}`; run `convolve list` for the registered names")
        })
    }

    /// First experiment accepting the configuration.
    pub fn resolve(&self, spec: &ExperimentSpec) -> Result<&dyn Experiment> {
        self.iter().find(|e| e.matches(spec)).ok_or_else(|| {
            anyhow!(
                "no registered experiment accepts this `{}` configuration",
                spec.kind()
            )
        })
    }
}
