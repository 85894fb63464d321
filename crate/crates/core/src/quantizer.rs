//! Gaussian source and ADC model.
//!
//! The ADC maps a real sample to one of `2^bits - 1` integer levels
//! `i ∈ [-(2^(bits-1) - 1), 2^(bits-1) - 1]` with level value `i·Δ`,
//! `Δ = range / 2^(bits-1)`. Interior level `i` collects `[iΔ - Δ/2, iΔ + Δ/2)`;
//! the two extreme levels also absorb everything beyond them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format;
use crate::numerics::{self, CompensatedSum, Probability};

/// Largest supported ADC resolution. A 24-bit distribution already holds
/// 2^24 - 1 probabilities.
pub const MAX_BITS: u32 = 24;

/// Zero-mean Gaussian quadrature in shot-noise units, `σ² = 1 + excess_noise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    excess_noise: f64,
    variance: f64,
}

impl SourceModel {
    pub fn new(excess_noise: f64) -> Result<Self> {
        if !(excess_noise >= 0.0) || !excess_noise.is_finite() {
            return Err(Error::config(
                "excess_noise",
                format!("{excess_noise} must be finite and non-negative"),
            ));
        }
        Ok(SourceModel {
            excess_noise,
            variance: 1.0 + excess_noise,
        })
    }

    /// Pure vacuum, `σ² = 1`.
    pub fn vacuum() -> Self {
        SourceModel {
            excess_noise: 0.0,
            variance: 1.0,
        }
    }

    pub fn excess_noise(&self) -> f64 {
        self.excess_noise
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn mean(&self) -> f64 {
        0.0
    }
}

/// ADC geometry: range `N`, resolution, bin width and clamp bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    range: f64,
    bits: u32,
    delta: f64,
    i_min: i32,
    i_max: i32,
    a_lim: f64,
}

/// Builds a quantizer. `range` and `a_lim` are absolute (shot-noise units).
pub fn make_quantizer(range: f64, bits: u32, a_lim: f64) -> Result<QuantizerConfig> {
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::config(
            "range",
            format!("{range} must be positive and finite"),
        ));
    }
    if !(2..=MAX_BITS).contains(&bits) {
        return Err(Error::config(
            "bits",
            format!("{bits} must lie in 2..={MAX_BITS}"),
        ));
    }
    if !(a_lim > range) || !a_lim.is_finite() {
        return Err(Error::config(
            "a_lim",
            format!("{a_lim} must be finite and exceed the range {range}"),
        ));
    }
    let half = 1_i64 << (bits - 1);
    let i_max = (half - 1) as i32;
    Ok(QuantizerConfig {
        range,
        bits,
        delta: range / half as f64,
        i_min: -i_max,
        i_max,
        a_lim,
    })
}

impl QuantizerConfig {
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn i_min(&self) -> i32 {
        self.i_min
    }

    pub fn i_max(&self) -> i32 {
        self.i_max
    }

    pub fn a_lim(&self) -> f64 {
        self.a_lim
    }

    pub fn level_count(&self) -> usize {
        (self.i_max - self.i_min + 1) as usize
    }

    pub fn level_value(&self, index: i32) -> f64 {
        index as f64 * self.delta
    }

    /// Hot-path quantizer; `sample` must not be NaN.
    #[inline]
    pub(crate) fn quantize_unchecked(&self, sample: f64) -> i32 {
        let k = (sample / self.delta + 0.5).floor();
        k.clamp(self.i_min as f64, self.i_max as f64) as i32
    }
}

/// Level index of `sample`.
pub fn quantize(q: &QuantizerConfig, sample: f64) -> Result<i32> {
    if !sample.is_finite() {
        return Err(Error::domain(
            "quantize",
            format!("sample {sample} is not finite"),
        ));
    }
    Ok(q.quantize_unchecked(sample))
}

/// One output level of the ADC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    pub index: i32,
    pub value: f64,
    pub probability: f64,
}

/// Probabilities over a contiguous run of level indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    i_min: i32,
    delta: f64,
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    /// Wraps raw probabilities for levels `i_min, i_min + 1, …`. Each entry
    /// must be a probability; normalization is checked by the consumers.
    pub fn from_probabilities(i_min: i32, delta: f64, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Data("distribution has no levels".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Data(format!("bin width {delta} must be positive")));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Data(format!("{p} is not a probability")));
        }
        Ok(DiscreteDistribution {
            i_min,
            delta,
            probabilities,
        })
    }

    pub fn i_min(&self) -> i32 {
        self.i_min
    }

    pub fn i_max(&self) -> i32 {
        self.i_min + self.probabilities.len() as i32 - 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Probability of level `index`, zero outside the support.
    pub fn probability(&self, index: i32) -> f64 {
        let offset = index as i64 - self.i_min as i64;
        if offset < 0 {
            return 0.0;
        }
        self.probabilities
            .get(offset as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn levels(&self) -> impl Iterator<Item = Level> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(move |(k, &probability)| {
                let index = self.i_min + k as i32;
                Level {
                    index,
                    value: index as f64 * self.delta,
                    probability,
                }
            })
    }

    pub fn total(&self) -> f64 {
        self.probabilities
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    pub(crate) fn ensure_normalized(&self, op: &'static str) -> Result<()> {
        let total = self.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Data(format!(
                "{op}: probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub(crate) fn ensure_aligned(&self, q: &QuantizerConfig, op: &'static str) -> Result<()> {
        if self.i_min != q.i_min || self.i_max() != q.i_max {
            return Err(Error::Data(format!(
                "{op}: distribution spans {}..={} but the quantizer spans {}..={}",
                self.i_min,
                self.i_max(),
                q.i_min,
                q.i_max
            )));
        }
        if (self.delta - q.delta).abs() > 1e-12 * q.delta {
            return Err(Error::Data(format!(
                "{op}: bin width {} does not match quantizer bin width {}",
                self.delta, q.delta
            )));
        }
        Ok(())
    }

    /// Writes `index,level,probability` rows. Floats use the shortest
    /// round-trip rendering so the rows re-sum to one at full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "level", "probability"])?;
        for level in self.levels() {
            w.write_record([
                level.index.to_string(),
                format::round_trip(level.value),
                format::round_trip(level.probability),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Probability of every ADC level under the continuous source.
pub fn discrete_distribution(s: &SourceModel, q: &QuantizerConfig) -> DiscreteDistribution {
    let sd = s.std_dev();
    let top = q.i_max as usize;
    // upper[k] = P(a ≥ (k - 1/2)Δ) for k = 1..=i_max. Positive-side bins are
    // differences of upper tails; the negative side mirrors them exactly.
    let mut upper = vec![0.0; top + 2];
    for (k, slot) in upper.iter_mut().enumerate().take(top + 1).skip(1) {
        *slot = numerics::standard_sf((k as f64 - 0.5) * q.delta / sd);
    }
    let mut probabilities = vec![0.0; 2 * top + 1];
    let centre = top;
    probabilities[centre] =
        numerics::erf_unchecked(q.delta / (2.0 * sd * std::f64::consts::SQRT_2));
    for k in 1..=top {
        let p = if k == top {
            upper[k]
        } else {
            upper[k] - upper[k + 1]
        };
        probabilities[centre + k] = p;
        probabilities[centre - k] = p;
    }
    DiscreteDistribution {
        i_min: q.i_min,
        delta: q.delta,
        probabilities,
    }
}

/// `P(|a| > a_lim)` for the continuous source.
pub fn tail_probability(s: &SourceModel, a_lim: f64) -> Result<Probability> {
    if !(a_lim >= 0.0) {
        return Err(Error::domain(
            "tail_probability",
            format!("bound {a_lim} must be non-negative"),
        ));
    }
    let z = a_lim / (s.std_dev() * std::f64::consts::SQRT_2);
    Ok(Probability::saturating(numerics::erfc_unchecked(z)))
}
