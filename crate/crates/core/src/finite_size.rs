//! Statistical-fluctuation correction for a finite number of check samples.
//!
//! The variance estimator over `m` check samples is a mean of the i.i.d.
//! variable `b = a² + Δ|a|` plus constants, so by the CLT it is normal with
//! variance `σ_b²/m`. The worst-case variance is then raised by the
//! two-sided confidence half-width before entering the Holevo bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{z_two_sided, CompensatedSum, Probability};
use crate::quantizer::{discrete_distribution, DiscreteDistribution, QuantizerConfig, SourceModel};
use crate::security::{self, holevo_bound, SecuritySummary};

/// Below this many check samples the normal approximation is not trusted.
pub const CLT_MIN_CHECK_LENGTH: u64 = 10_000;

/// Value assigned to the two clamp levels when calibrating the moments of `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    /// Clamp levels sit at `∓(a_lim - Δ/2)`, so the outward half-bin shift
    /// lands exactly on `∓a_lim` as in the worst-case variance.
    #[default]
    ClampToAlim,
    /// Clamp levels keep their ADC value `iΔ`, which is all a sampled
    /// estimator can observe.
    LevelValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeConfig {
    check_length: u64,
    confidence_epsilon: Probability,
    moment_mode: MomentMode,
}

impl FiniteSizeConfig {
    pub fn new(
        check_length: u64,
        confidence_epsilon: Probability,
        moment_mode: MomentMode,
    ) -> Result<Self> {
        if check_length == 0 {
            return Err(Error::config("check_length", "must be at least 1"));
        }
        if confidence_epsilon.value() <= 0.0 {
            return Err(Error::config(
                "confidence_epsilon",
                "must be strictly positive",
            ));
        }
        Ok(FiniteSizeConfig {
            check_length,
            confidence_epsilon,
            moment_mode,
        })
    }

    pub fn check_length(&self) -> u64 {
        self.check_length
    }

    pub fn confidence_epsilon(&self) -> Probability {
        self.confidence_epsilon
    }

    pub fn moment_mode(&self) -> MomentMode {
        self.moment_mode
    }

    /// True when `check_length` is too short for the CLT approximation.
    pub fn clt_warning(&self) -> bool {
        self.check_length < CLT_MIN_CHECK_LENGTH
    }
}

/// Ideal moments of the level value `a` and of `b = a² + Δ|a|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BMoments {
    pub mu_a: f64,
    pub mu_b: f64,
    pub sigma_b_sq: f64,
}

impl BMoments {
    /// Predicted mean of the variance estimator, `μ_b - μ_a² + Δ²/4`.
    pub fn estimator_mean(&self, delta: f64) -> f64 {
        self.mu_b - self.mu_a * self.mu_a + 0.25 * delta * delta
    }

    /// Predicted variance of the estimator over `m` samples, `σ_b²/m`.
    pub fn estimator_variance(&self, m: u64) -> f64 {
        self.sigma_b_sq / m as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeResult {
    pub moments: BMoments,
    pub delta_v: f64,
    pub v_max: f64,
    pub lambda_max: f64,
    pub holevo_bits: f64,
    pub r_finite_bits: f64,
    pub clt_warning: bool,
}

/// Asymptotic summary and finite-size result over one shared distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub summary: SecuritySummary,
    pub finite: FiniteSizeResult,
}

impl Analysis {
    /// `r_dis - r_finite`.
    pub fn gap(&self) -> f64 {
        self.summary.r_dis_bits - self.finite.r_finite_bits
    }
}

fn moment_value(q: &QuantizerConfig, index: i32, mode: MomentMode) -> f64 {
    match mode {
        MomentMode::ClampToAlim if index == q.i_max() => q.a_lim() - 0.5 * q.delta(),
        MomentMode::ClampToAlim if index == q.i_min() => -(q.a_lim() - 0.5 * q.delta()),
        _ => q.level_value(index),
    }
}

pub fn b_moments(
    d: &DiscreteDistribution,
    q: &QuantizerConfig,
    mode: MomentMode,
) -> Result<BMoments> {
    d.ensure_aligned(q, "b_moments")?;
    let delta = q.delta();
    let b_of = |v: f64| v * v + delta * v.abs();
    let mut mu_a = CompensatedSum::new();
    let mut mu_b = CompensatedSum::new();
    for l in d.levels() {
        let v = moment_value(q, l.index, mode);
        mu_a.add(l.probability * v);
        mu_b.add(l.probability * b_of(v));
    }
    let mu_b = mu_b.value();
    let sigma_b_sq = d
        .levels()
        .map(|l| {
            let dev = b_of(moment_value(q, l.index, mode)) - mu_b;
            l.probability * dev * dev
        })
        .collect::<CompensatedSum>()
        .value();
    Ok(BMoments {
        mu_a: mu_a.value(),
        mu_b,
        sigma_b_sq: sigma_b_sq.max(0.0),
    })
}

/// `ΔV = Z_{ε/2} √(σ_b²/m)`.
pub fn confidence_half_width(moments: &BMoments, cfg: &FiniteSizeConfig) -> Result<f64> {
    let z = z_two_sided(cfg.confidence_epsilon)?;
    Ok(z * moments.estimator_variance(cfg.check_length).sqrt())
}

pub fn variance_upper_bound(v_bar: f64, delta_v: f64) -> f64 {
    debug_assert!(delta_v >= 0.0);
    v_bar + delta_v
}

/// Upper bound on the symplectic eigenvalue from per-quadrature bounds.
pub fn lambda_max(v_x_max: f64, v_p_max: f64) -> Result<f64> {
    security::symplectic_eigenvalue(v_x_max, v_p_max)
}

fn finite_from(
    d: &DiscreteDistribution,
    q: &QuantizerConfig,
    summary: &SecuritySummary,
    cfg: &FiniteSizeConfig,
) -> Result<FiniteSizeResult> {
    let moments = b_moments(d, q, cfg.moment_mode)?;
    let delta_v = confidence_half_width(&moments, cfg)?;
    let v_max = variance_upper_bound(summary.v_bar_x, delta_v);
    let lambda = lambda_max(v_max, variance_upper_bound(summary.v_bar_p, delta_v))?;
    let holevo_bits = holevo_bound(lambda)?;
    Ok(FiniteSizeResult {
        moments,
        delta_v,
        v_max,
        lambda_max: lambda,
        holevo_bits,
        r_finite_bits: summary.shannon_bits - holevo_bits,
        clt_warning: cfg.clt_warning(),
    })
}

/// Finite-size extractable randomness per sample.
pub fn finite_size_randomness(
    s: &SourceModel,
    q: &QuantizerConfig,
    cfg: &FiniteSizeConfig,
) -> Result<FiniteSizeResult> {
    Ok(analyze(s, q, cfg)?.finite)
}

/// Runs the asymptotic and finite-size analyses on one distribution.
pub fn analyze(s: &SourceModel, q: &QuantizerConfig, cfg: &FiniteSizeConfig) -> Result<Analysis> {
    let d = discrete_distribution(s, q);
    let summary = security::summarize(&d, q)?;
    let finite = finite_from(&d, q, &summary, cfg)?;
    Ok(Analysis { summary, finite })
}
