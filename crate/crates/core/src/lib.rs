//! Spectral laboratory for stochastic convolutions and their time discretisations.
//!
//! States live on a truncated Fourier grid of the torus, generators act as
//! diagonal multipliers, and rational time steppers are evaluated mode by mode.
//! Monte Carlo estimation of strong discretisation errors is coupled to an
//! exact Ornstein-Uhlenbeck reference on a dyadic fine grid.

pub mod bootstrap;
pub mod bundle;
pub mod error;
pub mod estimator;
pub mod fit;
pub mod forcing;
pub mod generator;
pub mod ou;
pub mod probe;
pub mod rng;
pub mod scheme;
pub mod simulate;
pub mod space;

pub use error::{Error, Result};
pub use estimator::{estimate_e, ExperimentConfig, RateTable};
pub use generator::{Generator, GeneratorRegistry, Model, Multiplier};
pub use scheme::{RationalScheme, SchemeRegistry, TimeStepper};
pub use space::{ModeGrid, SequenceSpace, SobolevWeight, StateVector};
