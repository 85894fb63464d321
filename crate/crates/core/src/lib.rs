//! Finite-size extractable randomness for continuous-variable
//! source-independent quantum random number generators.
//!
//! The pipeline models a zero-mean Gaussian homodyne outcome digitized by a
//! finite ADC ([`quantizer`]), bounds the adversary's information with the
//! Gaussian-state entropy of a worst-case covariance matrix ([`security`]),
//! and corrects the variance bound for a finite number of check samples
//! ([`finite_size`]). [`monte_carlo`] checks the estimator statistics by
//! direct sampling and [`sweep`] drives parameter scans.

// Reference constants keep their published digits; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod finite_size;
pub mod format;
pub mod monte_carlo;
pub mod numerics;
pub mod quantizer;
pub mod security;
pub mod sweep;

pub use error::{Error, Result};
pub use finite_size::{
    analyze, b_moments, confidence_half_width, finite_size_randomness, lambda_max,
    variance_upper_bound, Analysis, BMoments, FiniteSizeConfig, FiniteSizeResult, MomentMode,
};
pub use monte_carlo::{
    estimate_variance, run_coverage, sample_quantized, validate_report, CoverageReport, TrialConfig,
};
pub use numerics::{erf, erf_inv, erfc, gaussian_cdf, normal_quantile, z_two_sided, Probability};
pub use quantizer::{
    discrete_distribution, make_quantizer, quantize, tail_probability, DiscreteDistribution,
    QuantizerConfig, SourceModel,
};
pub use security::{
    asymptotic_randomness, holevo_bound, randomness_budget, shannon_entropy, symplectic_eigenvalue,
    worst_case_variance, SecuritySummary,
};
pub use sweep::{Grid, Params, RateReport, Scale, SweepRow, SweepSpec, SweepVariable};
