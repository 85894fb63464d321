//! Brute-force oracles shared by the integration suites.

#![allow(dead_code)]

use cvqrng::{discrete_distribution, MomentMode, Params, QuantizerConfig, SourceModel};

/// Double-double accumulator: an unevaluated sum `hi + lo` carrying about
/// 106 bits, built from error-free transformations.
#[derive(Clone, Copy, Default, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Bin value `iΔ` with `Δ = N / 2^(n-1)` formed in double-double.
fn level(q: &QuantizerConfig, i: i32) -> Dd {
    Dd::from(i as f64).mul(Dd::from(q.range() / (1u64 << (q.bits() - 1)) as f64))
}

/// Worst-case variance summed term by term over every bin.
pub fn brute_worst_case_variance(s: &SourceModel, q: &QuantizerConfig) -> f64 {
    let d = discrete_distribution(s, q);
    let half = Dd::from(0.5 * q.delta());
    let mut mean = Dd::default();
    for i in q.i_min()..=q.i_max() {
        mean = mean.add(Dd::from(d.probability(i)).mul(level(q, i)));
    }
    let mut acc = Dd::default();
    for i in q.i_min()..=q.i_max() {
        let v = if i == q.i_min() {
            Dd::from(-q.a_lim())
        } else if i == q.i_max() {
            Dd::from(q.a_lim())
        } else if i <= 0 {
            level(q, i).sub(half)
        } else {
            level(q, i).add(half)
        };
        let dev = v.sub(mean);
        acc = acc.add(Dd::from(d.probability(i)).mul(dev).mul(dev));
    }
    acc.value()
}

/// `(μ_a, μ_b, σ_b²)` summed term by term over every bin.
pub fn brute_b_moments(s: &SourceModel, q: &QuantizerConfig, mode: MomentMode) -> (f64, f64, f64) {
    let d = discrete_distribution(s, q);
    let delta = Dd::from(q.delta());
    let edge = Dd::from(q.a_lim()).sub(Dd::from(0.5 * q.delta()));
    let (mut ma, mut mb, mut mb2) = (Dd::default(), Dd::default(), Dd::default());
    for i in q.i_min()..=q.i_max() {
        let v = match mode {
            MomentMode::ClampToAlim if i == q.i_min() => edge.neg(),
            MomentMode::ClampToAlim if i == q.i_max() => edge,
            _ => level(q, i),
        };
        let abs_v = if v.hi < 0.0 { v.neg() } else { v };
        let b = v.mul(v).add(delta.mul(abs_v));
        let p = Dd::from(d.probability(i));
        ma = ma.add(p.mul(v));
        mb = mb.add(p.mul(b));
        mb2 = mb2.add(p.mul(b).mul(b));
    }
    (ma.value(), mb.value(), mb2.sub(mb.mul(mb)).value())
}

/// Range/resolution grid used by the oracle and property suites.
pub fn config_grid() -> Vec<Params> {
    let mut grid = Vec::new();
    for &range_sigma in &[0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 100.0] {
        for &bits in &[2, 8, 12, 16] {
            grid.push(Params {
                range_sigma,
                bits,
                ..Params::default()
            });
        }
    }
    grid
}

/// Index of the largest element; ties resolve to the first.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
