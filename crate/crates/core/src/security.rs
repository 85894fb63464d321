//! Infinite-data security quantities.
//!
//! The adversary's information is bounded by the entropy of the Gaussian
//! state sharing the measured covariance matrix. Because the digitized data
//! hides the exact variance, each quadrature variance is replaced by a
//! worst-case bound that pushes every sample to the far edge of its bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::quantizer::{discrete_distribution, DiscreteDistribution, QuantizerConfig, SourceModel};

/// Asymptotic (infinite check data) security figures, all entropies in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecuritySummary {
    pub shannon_bits: f64,
    pub v_bar_x: f64,
    pub v_bar_p: f64,
    pub lambda: f64,
    pub holevo_bits: f64,
    /// `shannon_bits - holevo_bits`; may be negative.
    pub r_dis_bits: f64,
}

/// Shannon entropy of `d` in bits.
pub fn shannon_entropy(d: &DiscreteDistribution) -> Result<f64> {
    d.ensure_normalized("shannon_entropy")?;
    let h = d
        .probabilities()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .collect::<CompensatedSum>()
        .value();
    Ok(h.max(0.0))
}

/// Upper bound on the quadrature variance from digitized data.
///
/// The two clamp levels are placed at `∓a_lim`. Interior levels with `i ≤ 0`
/// move to `iΔ - Δ/2`, levels with `i ≥ 1` to `iΔ + Δ/2`.
pub fn worst_case_variance(d: &DiscreteDistribution, q: &QuantizerConfig) -> Result<f64> {
    d.ensure_aligned(q, "worst_case_variance")?;
    let delta = q.delta();
    let mean = d
        .levels()
        .map(|l| l.probability * l.value)
        .collect::<CompensatedSum>()
        .value();
    let mut acc = CompensatedSum::new();
    for l in d.levels() {
        let shifted = if l.index == q.i_min() {
            -q.a_lim()
        } else if l.index == q.i_max() {
            q.a_lim()
        } else if l.index <= 0 {
            l.value - 0.5 * delta
        } else {
            l.value + 0.5 * delta
        };
        let dev = shifted - mean;
        acc.add(l.probability * dev * dev);
    }
    Ok(acc.value())
}

/// Symplectic eigenvalue `√(V_x V_p)` of a single-mode covariance matrix
/// with zero X–P covariance, floored at the vacuum value 1.
pub fn symplectic_eigenvalue(v_x: f64, v_p: f64) -> Result<f64> {
    if !(v_x >= 0.0) || !(v_p >= 0.0) {
        return Err(Error::domain(
            "symplectic_eigenvalue",
            format!("variances ({v_x}, {v_p}) must be non-negative"),
        ));
    }
    Ok((v_x * v_p).sqrt().max(1.0))
}

fn x_log2_x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Von Neumann entropy `g(λ)` of a single-mode Gaussian state, in bits.
pub fn holevo_bound(lambda: f64) -> Result<f64> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::domain(
            "holevo_bound",
            format!("symplectic eigenvalue {lambda} must be finite and at least 1"),
        ));
    }
    Ok(x_log2_x(0.5 * (lambda + 1.0)) - x_log2_x(0.5 * (lambda - 1.0)))
}

/// Summary from an already computed distribution.
pub(crate) fn summarize(d: &DiscreteDistribution, q: &QuantizerConfig) -> Result<SecuritySummary> {
    let shannon_bits = shannon_entropy(d)?;
    // X and P share one distribution for the sources modelled here.
    let v_bar = worst_case_variance(d, q)?;
    let lambda = symplectic_eigenvalue(v_bar, v_bar)?;
    let holevo_bits = holevo_bound(lambda)?;
    Ok(SecuritySummary {
        shannon_bits,
        v_bar_x: v_bar,
        v_bar_p: v_bar,
        lambda,
        holevo_bits,
        r_dis_bits: shannon_bits - holevo_bits,
    })
}

/// Asymptotic extractable randomness per sample.
pub fn asymptotic_randomness(s: &SourceModel, q: &QuantizerConfig) -> Result<SecuritySummary> {
    summarize(&discrete_distribution(s, q), q)
}

/// Extractable bits from a run of `n_tot` measurements, `n_c` of them spent
/// on checking and `seed_len` bits of seed consumed. Never negative.
pub fn randomness_budget(n_tot: u64, n_c: u64, seed_len: u64, r_per_sample: f64) -> Result<f64> {
    if n_c > n_tot {
        return Err(Error::domain(
            "randomness_budget",
            format!("check samples {n_c} exceed total samples {n_tot}"),
        ));
    }
    if r_per_sample.is_nan() {
        return Err(Error::domain("randomness_budget", "rate is NaN"));
    }
    let bits = (n_tot - n_c) as f64 * r_per_sample - seed_len as f64;
    Ok(bits.max(0.0))
}
