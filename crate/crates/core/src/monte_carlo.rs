//! Sampling oracle for the variance estimator.
//!
//! Samples are drawn by inverse-CDF: a ChaCha8 stream yields a uniform
//! `u ∈ (0, 1)` from 53 random bits, `σ·Φ⁻¹(u)` is quantized by the same ADC
//! model the analytics use. Trial `t` of a run reads stream `t` of the
//! generator seeded with the master seed, so every trial is reproducible on
//! its own and the run result does not depend on scheduling.

use std::io::Write;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::{b_moments, MomentMode};
use crate::format;
use crate::numerics::{normal_quantile_unchecked, z_two_sided, CompensatedSum, Probability};
use crate::quantizer::{discrete_distribution, QuantizerConfig, SourceModel};
use crate::security::worst_case_variance;

/// Coverage run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub samples_per_trial: u64,
    pub seed: u64,
    pub source: SourceModel,
    pub quantizer: QuantizerConfig,
    pub confidence_epsilon: Probability,
    pub moment_mode: MomentMode,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.samples_per_trial == 0 {
            return Err(Error::config("check_length", "must be at least 1"));
        }
        if self.confidence_epsilon.value() <= 0.0 {
            return Err(Error::config(
                "confidence_epsilon",
                "must be strictly positive",
            ));
        }
        Ok(())
    }
}

/// Aggregate of a coverage run. Field names double as CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub trials: u64,
    /// Trials whose estimate fell inside `[V̄ - ΔV, V̄ + ΔV]`.
    pub hits: u64,
    pub coverage: f64,
    pub empirical_mean: f64,
    /// `μ_b - μ_a² + Δ²/4`.
    pub predicted_mean: f64,
    pub empirical_var: f64,
    /// `σ_b²/m`.
    pub predicted_var: f64,
}

pub const REPORT_COLUMNS: [&str; 7] = [
    "trials",
    "hits",
    "coverage",
    "empirical_mean",
    "predicted_mean",
    "empirical_var",
    "predicted_var",
];

impl CoverageReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS)?;
        w.write_record([
            self.trials.to_string(),
            self.hits.to_string(),
            format::sig(self.coverage, 10),
            format::sig(self.empirical_mean, 10),
            format::sig(self.predicted_mean, 10),
            format::sig(self.empirical_var, 10),
            format::sig(self.predicted_var, 10),
        ])?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// One embedded sanity check on a coverage report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Checks a report against the CLT prediction:
/// the mean within five standard errors, the dispersion ratio in
/// `[0.9, 1.1]`, and coverage within `3·√(ε(1-ε)/trials) + 0.005` of `1 - ε`.
pub fn validate_report(report: &CoverageReport, epsilon: Probability) -> Vec<Check> {
    let trials = report.trials as f64;
    let se = (report.predicted_var / trials).sqrt();
    let mean_dev = (report.empirical_mean - report.predicted_mean).abs();
    let ratio = report.empirical_var / report.predicted_var;
    let eps = epsilon.value();
    let cov_tol = 3.0 * (eps * (1.0 - eps) / trials).sqrt() + 0.005;
    let cov_dev = (report.coverage - (1.0 - eps)).abs();
    vec![
        Check {
            name: "estimator_mean",
            passed: mean_dev <= 5.0 * se,
            detail: format!(
                "|{} - {}| = {mean_dev:.3e} vs 5 SE = {:.3e}",
                report.empirical_mean,
                report.predicted_mean,
                5.0 * se
            ),
        },
        Check {
            name: "estimator_variance",
            passed: (0.9..=1.1).contains(&ratio),
            detail: format!("empirical/predicted variance ratio {ratio:.4}"),
        },
        Check {
            name: "coverage",
            passed: cov_dev <= cov_tol,
            detail: format!(
                "coverage {} vs target {} ± {cov_tol:.4}",
                report.coverage,
                1.0 - eps
            ),
        },
    ]
}

#[inline]
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn fill_quantized(rng: &mut ChaCha8Rng, s: &SourceModel, q: &QuantizerConfig, out: &mut [i32]) {
    let sd = s.std_dev();
    for slot in out.iter_mut() {
        let x = sd * normal_quantile_unchecked(open_unit(rng));
        *slot = q.quantize_unchecked(x);
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `count` i.i.d. samples of the source, quantized.
pub fn sample_quantized(
    s: &SourceModel,
    q: &QuantizerConfig,
    count: usize,
    seed: u64,
) -> Result<Vec<i32>> {
    if count == 0 {
        return Err(Error::config("count", "must be at least 1"));
    }
    let mut out = vec![0; count];
    fill_quantized(&mut stream(seed, 0), s, q, &mut out);
    Ok(out)
}

/// Variance estimate from level indices: each level value is pushed half a
/// bin away from zero (level 0 goes down) and the empirical mean of the
/// shifted values is removed.
pub fn estimate_variance(indices: &[i32], q: &QuantizerConfig) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Data(
            "cannot estimate a variance from no samples".into(),
        ));
    }
    let half = 0.5 * q.delta();
    let shifted = |i: i32| {
        let v = q.level_value(i);
        if i > 0 {
            v + half
        } else {
            v - half
        }
    };
    let m = indices.len() as f64;
    let mean = indices
        .iter()
        .map(|&i| shifted(i))
        .collect::<CompensatedSum>()
        .value()
        / m;
    let ss = indices
        .iter()
        .map(|&i| {
            let d = shifted(i) - mean;
            d * d
        })
        .collect::<CompensatedSum>()
        .value();
    Ok(ss / m)
}

/// Repeats the check-data estimate `trials` times and tallies how often it
/// lands in the predicted confidence interval.
pub fn run_coverage(cfg: &TrialConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let m = usize::try_from(cfg.samples_per_trial)
        .map_err(|_| Error::config("check_length", "too large for this platform"))?;
    let q = &cfg.quantizer;
    let d = discrete_distribution(&cfg.source, q);
    let v_bar = worst_case_variance(&d, q)?;
    let moments = b_moments(&d, q, cfg.moment_mode)?;
    let predicted_var = moments.estimator_variance(cfg.samples_per_trial);
    let delta_v = z_two_sided(cfg.confidence_epsilon)? * predicted_var.sqrt();

    let estimates: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map_init(
            || vec![0i32; m],
            |buf, t| {
                fill_quantized(&mut stream(cfg.seed, t), &cfg.source, q, buf);
                estimate_variance(buf, q)
            },
        )
        .collect::<Result<_>>()?;

    let hits = estimates
        .iter()
        .filter(|&&v| (v - v_bar).abs() <= delta_v)
        .count() as u64;
    let n = estimates.len() as f64;
    let empirical_mean = estimates
        .iter()
        .copied()
        .collect::<CompensatedSum>()
        .value()
        / n;
    let empirical_var = if estimates.len() > 1 {
        estimates
            .iter()
            .map(|&v| (v - empirical_mean) * (v - empirical_mean))
            .collect::<CompensatedSum>()
            .value()
            / (n - 1.0)
    } else {
        0.0
    };
    Ok(CoverageReport {
        trials: cfg.trials,
        hits,
        coverage: hits as f64 / n,
        empirical_mean,
        predicted_mean: moments.estimator_mean(q.delta()),
        empirical_var,
        predicted_var,
    })
}
