//! Checks of martingale and stochastic-convolution inequality constants.
//!
//! Each trial estimates a left-hand side by Monte Carlo (or evaluates it
//! exactly on a finite probability space) and compares it with the explicit
//! right-hand side, reporting the ratio and a one-sided verdict.

pub mod convolution;
pub mod lift;
pub mod martingale;
pub mod recursion;
pub mod report;
pub mod smoothness;

pub use convolution::{
    burkholder_trial, maximal_ratio_trial, stability_trial, tail_trial, ConvolutionSetup, McParams,
    StabilityContraction,
};
pub use lift::{linfty_lift_trial, LiftFamily, LiftReport, LiftSpec};
pub use martingale::{low_p_trial, pinelis_trial, tail_lemma_trial};
pub use recursion::{
    CoefficientRule, ContractionKind, ContractionSource, DiscreteRecursionSpec, IncrementLaw,
    PathStats,
};
pub use report::{RatioReport, TailPoint, TailReport, Verdict};
pub use smoothness::{
    conditional_smoothness_exact, conditional_smoothness_search, two_point_search, FiniteSpace,
    SearchSpec,
};
