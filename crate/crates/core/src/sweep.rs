//! Parameter records, single-point reports and one-variable sweeps.
//!
//! All user-facing lengths (`range_sigma`, `alim_sigma`) are in units of the
//! source standard deviation `σ = √(1 + excess_noise)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::{analyze, Analysis, FiniteSizeConfig, MomentMode};
use crate::format;
use crate::numerics::Probability;
use crate::quantizer::{make_quantizer, QuantizerConfig, SourceModel, MAX_BITS};

/// Full parameter record for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub excess_noise: f64,
    pub bits: u32,
    pub range_sigma: f64,
    pub alim_sigma: f64,
    pub check_length: u64,
    pub confidence_epsilon: f64,
    pub moment_mode: MomentMode,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            excess_noise: 0.1,
            bits: 16,
            range_sigma: 3.0,
            alim_sigma: 10.0,
            check_length: 1_000_000,
            confidence_epsilon: 1e-10,
            moment_mode: MomentMode::ClampToAlim,
        }
    }
}

impl Params {
    pub fn source(&self) -> Result<SourceModel> {
        SourceModel::new(self.excess_noise)
    }

    /// The clamp bound actually used, in units of σ. It is never placed
    /// inside the ADC range: the floor is one bin past the range.
    pub fn effective_alim_sigma(&self) -> f64 {
        let bin = self.range_sigma / (1u64 << (self.bits.clamp(1, 63) - 1)) as f64;
        self.alim_sigma.max(self.range_sigma + bin)
    }

    pub fn quantizer(&self) -> Result<QuantizerConfig> {
        if !(self.range_sigma > 0.0) || !self.range_sigma.is_finite() {
            return Err(Error::config("range_sigma", "must be positive and finite"));
        }
        if !(self.alim_sigma > 0.0) || !self.alim_sigma.is_finite() {
            return Err(Error::config("alim_sigma", "must be positive and finite"));
        }
        if !(2..=MAX_BITS).contains(&self.bits) {
            return Err(Error::config("bits", format!("must lie in 2..={MAX_BITS}")));
        }
        let sd = self.source()?.std_dev();
        make_quantizer(
            self.range_sigma * sd,
            self.bits,
            self.effective_alim_sigma() * sd,
        )
    }

    pub fn epsilon(&self) -> Result<Probability> {
        match Probability::new(self.confidence_epsilon) {
            Ok(eps) if eps.value() > 0.0 => Ok(eps),
            _ => Err(Error::config("confidence_epsilon", "must lie in (0, 1]")),
        }
    }

    pub fn finite_config(&self) -> Result<FiniteSizeConfig> {
        FiniteSizeConfig::new(self.check_length, self.epsilon()?, self.moment_mode)
    }

    pub fn analyze(&self) -> Result<Analysis> {
        analyze(&self.source()?, &self.quantizer()?, &self.finite_config()?)
    }

    /// Copy of `self` with `variable` set to `x`.
    pub fn with(&self, variable: SweepVariable, x: f64) -> Result<Params> {
        let mut p = *self;
        match variable {
            SweepVariable::CheckLength => {
                if !(x >= 1.0) || x > u64::MAX as f64 {
                    return Err(Error::config(
                        "grid",
                        format!("check length {x} is not a positive count"),
                    ));
                }
                p.check_length = x.round() as u64;
            }
            SweepVariable::ConfidenceEpsilon => p.confidence_epsilon = x,
            SweepVariable::RangeSigma => p.range_sigma = x,
            SweepVariable::Bits => {
                if x.fract() != 0.0 || !(2.0..=MAX_BITS as f64).contains(&x) {
                    return Err(Error::config(
                        "grid",
                        format!("bits value {x} is not an integer in 2..={MAX_BITS}"),
                    ));
                }
                p.bits = x as u32;
            }
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    CheckLength,
    ConfidenceEpsilon,
    RangeSigma,
    Bits,
}

impl SweepVariable {
    /// Grid used when none is given: 200 log points for `m` and `ε`,
    /// 0.05σ steps over `[1, 10]` for the range, every resolution 2..=16.
    pub fn default_grid(self) -> Grid {
        match self {
            SweepVariable::CheckLength => Grid::Spaced {
                start: 1e3,
                stop: 1e8,
                count: 200,
                scale: Scale::Log,
            },
            SweepVariable::ConfidenceEpsilon => Grid::Spaced {
                start: 1e-10,
                stop: 1.0,
                count: 200,
                scale: Scale::Log,
            },
            SweepVariable::RangeSigma => Grid::Spaced {
                start: 1.0,
                stop: 10.0,
                count: 181,
                scale: Scale::Linear,
            },
            SweepVariable::Bits => Grid::Explicit((2..=16).map(f64::from).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Explicit(Vec<f64>),
    Spaced {
        start: f64,
        stop: f64,
        count: usize,
        scale: Scale,
    },
}

impl Grid {
    /// Grid points; nonempty and strictly increasing, or an error.
    pub fn points(&self) -> Result<Vec<f64>> {
        let points = match self {
            Grid::Explicit(v) => v.clone(),
            &Grid::Spaced {
                start,
                stop,
                count,
                scale,
            } => {
                if count == 0 {
                    return Err(Error::config("grid", "point count must be at least 1"));
                }
                if !start.is_finite() || !stop.is_finite() {
                    return Err(Error::config("grid", "endpoints must be finite"));
                }
                if count == 1 {
                    vec![start]
                } else {
                    let steps = (count - 1) as f64;
                    match scale {
                        Scale::Linear => (0..count)
                            .map(|k| start + (stop - start) * k as f64 / steps)
                            .collect(),
                        Scale::Log => {
                            if !(start > 0.0 && stop > 0.0) {
                                return Err(Error::config(
                                    "grid",
                                    "log grid endpoints must be positive",
                                ));
                            }
                            let (a, b) = (start.log10(), stop.log10());
                            (0..count)
                                .map(|k| match k {
                                    0 => start,
                                    k if k == count - 1 => stop,
                                    k => 10f64.powf(a + (b - a) * k as f64 / steps),
                                })
                                .collect()
                        }
                    }
                }
            }
        };
        if points.is_empty() {
            return Err(Error::config("grid", "must contain at least one point"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("grid", "points must be finite"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("grid", "points must be strictly increasing"));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Grid,
    pub fixed: Params,
}

/// One sweep point. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub r_ideal: f64,
    pub r_finite: f64,
    pub gap: f64,
    pub shannon: f64,
    pub holevo_ideal: f64,
    pub holevo_finite: f64,
    pub v_bar: f64,
    pub delta_v: f64,
    pub v_max: f64,
    pub warn: bool,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "x",
    "r_ideal",
    "r_finite",
    "gap",
    "shannon",
    "holevo_ideal",
    "holevo_finite",
    "v_bar",
    "delta_v",
    "v_max",
    "warn",
];

impl SweepRow {
    pub fn from_analysis(x: f64, a: &Analysis) -> Self {
        SweepRow {
            x,
            r_ideal: a.summary.r_dis_bits,
            r_finite: a.finite.r_finite_bits,
            gap: a.gap(),
            shannon: a.summary.shannon_bits,
            holevo_ideal: a.summary.holevo_bits,
            holevo_finite: a.finite.holevo_bits,
            v_bar: a.summary.v_bar_x,
            delta_v: a.finite.delta_v,
            v_max: a.finite.v_max,
            warn: a.finite.clt_warning,
        }
    }

    fn csv_record(&self) -> [String; 11] {
        let f = |v: f64| format::sig(v, 10);
        [
            f(self.x),
            f(self.r_ideal),
            f(self.r_finite),
            f(self.gap),
            f(self.shannon),
            f(self.holevo_ideal),
            f(self.holevo_finite),
            f(self.v_bar),
            f(self.delta_v),
            f(self.v_max),
            self.warn.to_string(),
        ]
    }
}

/// Evaluates every grid point. Points are independent and may run in
/// parallel; rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = spec.grid.points()?;
    // Validate the fixed record once so errors name the right field.
    spec.fixed.source()?;
    points
        .par_iter()
        .map(|&x| {
            let p = spec.fixed.with(spec.variable, x)?;
            let x = match spec.variable {
                SweepVariable::CheckLength => p.check_length as f64,
                _ => x,
            };
            Ok(SweepRow::from_analysis(x, &p.analyze()?))
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    variable: SweepVariable,
    fixed: &'a Params,
    rows: &'a [SweepRow],
}

pub fn write_sweep_json<W: Write>(spec: &SweepSpec, rows: &[SweepRow], mut out: W) -> Result<()> {
    let doc = SweepDocument {
        variable: spec.variable,
        fixed: &spec.fixed,
        rows,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Single-point report: inputs in σ units and absolute, plus all outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub params: Params,
    pub sigma: f64,
    pub variance: f64,
    pub range: f64,
    pub a_lim: f64,
    pub alim_sigma_effective: f64,
    pub delta: f64,
    pub analysis: Analysis,
    pub gap: f64,
}

impl RateReport {
    pub fn new(params: Params) -> Result<Self> {
        let source = params.source()?;
        let q = params.quantizer()?;
        let analysis = analyze(&source, &q, &params.finite_config()?)?;
        Ok(RateReport {
            params,
            sigma: source.std_dev(),
            variance: source.variance(),
            range: q.range(),
            a_lim: q.a_lim(),
            alim_sigma_effective: params.effective_alim_sigma(),
            delta: q.delta(),
            gap: analysis.gap(),
            analysis,
        })
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.params;
        let s = &self.analysis.summary;
        let f = &self.analysis.finite;
        let g = |v: f64| format::sig(v, 10);
        let mode = match p.moment_mode {
            MomentMode::ClampToAlim => "clamp_to_alim",
            MomentMode::LevelValue => "level_value",
        };
        let lines: Vec<(&str, String)> = vec![
            ("excess_noise", g(p.excess_noise)),
            ("variance", g(self.variance)),
            ("sigma", g(self.sigma)),
            ("bits", p.bits.to_string()),
            ("range_sigma", g(p.range_sigma)),
            ("range", g(self.range)),
            ("alim_sigma", g(p.alim_sigma)),
            ("alim_sigma_effective", g(self.alim_sigma_effective)),
            ("a_lim", g(self.a_lim)),
            ("delta", g(self.delta)),
            ("check_length", p.check_length.to_string()),
            ("confidence_epsilon", g(p.confidence_epsilon)),
            ("moment_mode", mode.to_string()),
            ("shannon_bits", g(s.shannon_bits)),
            ("v_bar_x", g(s.v_bar_x)),
            ("v_bar_p", g(s.v_bar_p)),
            ("lambda", g(s.lambda)),
            ("holevo_bits", g(s.holevo_bits)),
            ("r_dis_bits", g(s.r_dis_bits)),
            ("mu_a", g(f.moments.mu_a)),
            ("mu_b", g(f.moments.mu_b)),
            ("sigma_b_sq", g(f.moments.sigma_b_sq)),
            ("delta_v", g(f.delta_v)),
            ("v_max", g(f.v_max)),
            ("lambda_max", g(f.lambda_max)),
            ("holevo_finite_bits", g(f.holevo_bits)),
            ("r_finite_bits", g(f.r_finite_bits)),
            ("gap", g(self.gap)),
            ("clt_warning", f.clt_warning.to_string()),
        ];
        for (k, v) in lines {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}
