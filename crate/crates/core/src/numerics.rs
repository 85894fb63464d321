//! Special-function kernel: error function, its inverse, the Gaussian CDF
//! and quantile, and the two-sided normal quantile used for confidence
//! intervals.
//!
//! `erf`/`erfc` follow the FreeBSD msun rational approximations (SunPro,
//! 1993), which are accurate to within one ulp over the whole real line and
//! keep relative accuracy for `erfc` deep in the tail. The normal quantile is
//! Wichura's AS 241 (PPND16), about 1e-16 relative; `erf_inv` uses it as the
//! starting point and polishes with two Newton steps on `erf`/`erfc`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ONE: Probability = Probability(1.0);
    pub const ZERO: Probability = Probability(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(
                "probability",
                format!("{value} is not in [0, 1]"),
            ))
        }
    }

    /// Clamps `value` into `[0, 1]`; NaN maps to 0.
    pub(crate) fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

const ERX: f64 = 8.45062911510467529297e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

#[inline]
fn high_word(x: f64) -> u32 {
    (x.to_bits() >> 32) as u32
}

#[inline]
fn clear_low_word(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000)
}

#[inline]
fn small_ratio(z: f64) -> f64 {
    let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
    let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
    r / s
}

/// `erfc(|x|) - (1 - ERX)` correction for `|x|` in `[0.84375, 1.25)`.
#[inline]
fn near_one_ratio(ax: f64) -> f64 {
    let s = ax - 1.0;
    let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
    let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
    p / q
}

/// `erfc(ax)` for `ax` in `[1.25, 28)`.
#[inline]
fn erfc_tail(ix: u32, ax: f64) -> f64 {
    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ix < 0x4006_db6d {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    let z = clear_low_word(ax);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / big_s).exp() / ax
}

pub(crate) fn erf_unchecked(x: f64) -> f64 {
    let ix = high_word(x) & 0x7fff_ffff;
    let ax = x.abs();
    if ix < 0x3feb_0000 {
        if ix < 0x3e30_0000 {
            return 0.125 * (8.0 * x + EFX8 * x);
        }
        return x + x * small_ratio(x * x);
    }
    let y = if ix < 0x3ff4_0000 {
        ERX + near_one_ratio(ax)
    } else if ix < 0x4018_0000 {
        1.0 - erfc_tail(ix, ax)
    } else {
        1.0 - f64::MIN_POSITIVE
    };
    y.copysign(x)
}

pub(crate) fn erfc_unchecked(x: f64) -> f64 {
    let ix = high_word(x) & 0x7fff_ffff;
    let negative = x.is_sign_negative();
    let ax = x.abs();
    if ix < 0x3feb_0000 {
        if ix < 0x3c70_0000 {
            return 1.0 - x;
        }
        let y = small_ratio(x * x);
        if negative || ix < 0x3fd0_0000 {
            return 1.0 - (x + x * y);
        }
        return 0.5 - (x - 0.5 + x * y);
    }
    if ix < 0x3ff4_0000 {
        let p = near_one_ratio(ax);
        return if negative {
            1.0 + ERX + p
        } else {
            1.0 - ERX - p
        };
    }
    if ix < 0x403c_0000 {
        let t = erfc_tail(ix, ax);
        return if negative { 2.0 - t } else { t };
    }
    if negative {
        2.0
    } else {
        0.0
    }
}

fn require_finite(op: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("argument {x} is not finite")))
    }
}

/// Error function `2/√π ∫₀ˣ e^{-t²} dt`.
pub fn erf(x: f64) -> Result<f64> {
    require_finite("erf", x)?;
    Ok(erf_unchecked(x))
}

/// Complementary error function `1 - erf(x)`, evaluated without cancellation.
pub fn erfc(x: f64) -> Result<f64> {
    require_finite("erfc", x)?;
    Ok(erfc_unchecked(x))
}

// AS 241 coefficients.
const A: [f64; 8] = [
    3.387_132_872_796_366_608_0e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_90e0,
    5.769_497_221_460_691_405_50e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_40e0,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20e0,
    5.463_784_911_164_114_369_90e0,
    1.784_826_539_917_291_335_80e0,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

#[inline]
fn horner(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Standard normal quantile `Φ⁻¹(p)` for `p` strictly inside `(0, 1)`.
/// Returns ±∞ at the endpoints; callers are expected to have validated `p`.
#[inline]
pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    if tail <= 0.0 {
        return if q < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    let r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Standard normal quantile `Φ⁻¹(p)`, `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(normal_quantile_unchecked(p))
    } else {
        Err(Error::domain(
            "normal_quantile",
            format!("p = {p} is not in (0, 1)"),
        ))
    }
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !(y.abs() < 1.0) {
        return Err(Error::domain(
            "erf_inv",
            format!("argument {y} is not in (-1, 1)"),
        ));
    }
    let ay = y.abs();
    if ay >= 0.5 {
        // 1 - ay is exact here, so the complement loses nothing.
        return Ok(erfc_inv_unchecked(1.0 - ay).copysign(y));
    }
    if y == 0.0 {
        return Ok(y);
    }
    let mut x = -normal_quantile_unchecked(0.5 * (1.0 - ay)) / SQRT_2;
    for _ in 0..2 {
        let slope = FRAC_2_SQRT_PI * (-x * x).exp();
        x -= (erf_unchecked(x) - ay) / slope;
    }
    Ok(x.copysign(y))
}

/// Inverse of `erfc` for `c` in `(0, 1]`, refined against `erfc` itself.
fn erfc_inv_unchecked(c: f64) -> f64 {
    let mut x = -normal_quantile_unchecked(0.5 * c) / SQRT_2;
    for _ in 0..2 {
        let slope = FRAC_2_SQRT_PI * (-x * x).exp();
        if slope == 0.0 {
            break;
        }
        x += (erfc_unchecked(x) - c) / slope;
    }
    x
}

/// `Φ((x - mean) / sd)`.
pub fn gaussian_cdf(x: f64, mean: f64, sd: f64) -> Result<Probability> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::domain(
            "gaussian_cdf",
            format!("standard deviation {sd} must be positive and finite"),
        ));
    }
    if x.is_nan() || !mean.is_finite() {
        return Err(Error::domain("gaussian_cdf", "non-finite location"));
    }
    Ok(Probability::saturating(standard_cdf((x - mean) / sd)))
}

/// Standard normal CDF.
#[inline]
pub(crate) fn standard_cdf(z: f64) -> f64 {
    0.5 * erfc_unchecked(-z / SQRT_2)
}

/// Standard normal upper tail `1 - Φ(z)`.
#[inline]
pub(crate) fn standard_sf(z: f64) -> f64 {
    0.5 * erfc_unchecked(z / SQRT_2)
}

/// Two-sided normal quantile: the `Z ≥ 0` with `1 - erf(Z/√2) = epsilon`.
///
/// Solved as `√2·erfc⁻¹(ε)` so that tiny `ε` is never rounded through `1 - ε`.
pub fn z_two_sided(epsilon: Probability) -> Result<f64> {
    let eps = epsilon.value();
    if eps <= 0.0 {
        return Err(Error::domain(
            "z_two_sided",
            "confidence epsilon must be strictly positive",
        ));
    }
    if eps == 1.0 {
        return Ok(0.0);
    }
    Ok(SQRT_2 * erfc_inv_unchecked(eps))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}
