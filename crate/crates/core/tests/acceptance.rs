//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line prints even when an
//! earlier criterion fails. The process exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cvqrng::monte_carlo::{run_coverage, validate_report};
use cvqrng::sweep::run_sweep;
use cvqrng::{
    b_moments, discrete_distribution, holevo_bound, symplectic_eigenvalue, tail_probability,
    worst_case_variance, Grid, MomentMode, Params, Probability, Scale, SourceModel, SweepSpec,
    SweepVariable, TrialConfig,
};

use common::{argmax, brute_b_moments, brute_worst_case_variance, config_grid};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_time(o: Outcome, start: Instant, limit: Duration) -> Outcome {
    let took = start.elapsed();
    let passed = o.passed && took < limit;
    outcome(
        passed,
        format!("{}; {:.2?} (limit {:?})", o.detail, took, limit),
    )
}

fn short_check(range_sigma: f64) -> Params {
    Params {
        range_sigma,
        check_length: 10_000,
        ..Params::default()
    }
}

fn gap_reproduction() -> Outcome {
    let mut gaps = Vec::new();
    let mut slowest = Duration::ZERO;
    for n in [10.0, 100.0] {
        let start = Instant::now();
        gaps.push(short_check(n).analyze().unwrap().gap());
        slowest = slowest.max(start.elapsed());
    }
    let (g10, g100) = (gaps[0], gaps[1]);
    let passed = (g10 - 0.1943).abs() <= 0.01
        && (g100 - 0.1924).abs() <= 0.01
        && g100 < g10
        && slowest < Duration::from_secs(1);
    outcome(
        passed,
        format!("gap(10σ) = {g10:.6}, gap(100σ) = {g100:.6}; slowest point {slowest:.2?}"),
    )
}

fn resolution_eight_peaks() -> Outcome {
    let start = Instant::now();
    let spec = SweepSpec {
        variable: SweepVariable::RangeSigma,
        grid: Grid::Spaced {
            start: 1.0,
            stop: 10.0,
            count: 181,
            scale: Scale::Linear,
        },
        fixed: Params {
            bits: 8,
            check_length: 10_000,
            ..Params::default()
        },
    };
    let rows = run_sweep(&spec).unwrap();
    let at = |f: fn(&cvqrng::SweepRow) -> f64| {
        let col: Vec<f64> = rows.iter().map(f).collect();
        rows[argmax(&col)].x
    };
    let gap = at(|r| r.gap);
    let ideal = at(|r| r.r_ideal);
    let finite = at(|r| r.r_finite);
    let passed = (gap - 2.7).abs() <= 0.1 + 1e-9
        && (ideal - 3.4).abs() <= 0.1 + 1e-9
        && (finite - 3.7).abs() <= 0.1 + 1e-9
        && finite > ideal;
    within_time(
        outcome(
            passed,
            format!("peaks: gap {gap:.2}σ, ideal {ideal:.2}σ, finite {finite:.2}σ"),
        ),
        start,
        Duration::from_secs(30),
    )
}

fn epsilon_one_degeneracy() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for base in config_grid() {
        for m in [100, 10_000, 1_000_000] {
            for mode in [MomentMode::ClampToAlim, MomentMode::LevelValue] {
                let p = Params {
                    check_length: m,
                    confidence_epsilon: 1.0,
                    moment_mode: mode,
                    ..base
                };
                let a = p.analyze().unwrap();
                worst = worst.max((a.finite.r_finite_bits - a.summary.r_dis_bits).abs());
                points += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max |r_finite - r_dis| = {worst:.3e} over {points} configurations"),
    )
}

fn tail_bound() -> Outcome {
    let s = SourceModel::new(0.1).unwrap();
    let t = tail_probability(&s, 10.0 * s.std_dev()).unwrap().value();
    outcome(
        t < 1.5e-23,
        format!("P(|a| > 10σ) = {t:.6e}, required < 1.5e-23"),
    )
}

fn convergence_shape() -> Outcome {
    // Defaults: n = 16, N = 3σ, ε = 1e-10.
    let spec = SweepSpec {
        variable: SweepVariable::CheckLength,
        grid: Grid::Spaced {
            start: 1e4,
            stop: 1e8,
            count: 161,
            scale: Scale::Log,
        },
        fixed: Params::default(),
    };
    let rows = run_sweep(&spec).unwrap();
    let first = rows.first().unwrap().gap;
    let last = rows.last().unwrap().gap;
    let decreasing = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    outcome(
        last < first / 50.0 && decreasing,
        format!(
            "gap(1e4) = {first:.6}, gap(1e8) = {last:.6} (ratio {:.1}); strictly decreasing: {decreasing}",
            first / last
        ),
    )
}

fn resolution_stability() -> Outcome {
    let gaps: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|&bits| {
            Params {
                bits,
                ..short_check(3.0)
            }
            .analyze()
            .unwrap()
            .gap()
        })
        .collect();
    let spread = gaps.iter().cloned().fold(f64::MIN, f64::max)
        - gaps.iter().cloned().fold(f64::MAX, f64::min);
    outcome(
        spread < 0.02,
        format!("gaps at n = 8, 12, 16: {gaps:.6?}; spread {spread:.6}"),
    )
}

fn monte_carlo_validation() -> Outcome {
    let start = Instant::now();
    let p = Params {
        range_sigma: 10.0,
        check_length: 100_000,
        confidence_epsilon: 0.05,
        moment_mode: MomentMode::LevelValue,
        ..Params::default()
    };
    let eps = p.epsilon().unwrap();
    let cfg = TrialConfig {
        trials: 10_000,
        samples_per_trial: p.check_length,
        seed: 20_191_231,
        source: p.source().unwrap(),
        quantizer: p.quantizer().unwrap(),
        confidence_epsilon: eps,
        moment_mode: p.moment_mode,
    };
    let r = run_coverage(&cfg).unwrap();
    let se = (r.predicted_var / r.trials as f64).sqrt();
    let mean_ok = (r.empirical_mean - r.predicted_mean).abs() <= 5.0 * se;
    let ratio = r.empirical_var / r.predicted_var;
    let var_ok = (ratio - 1.0).abs() <= 0.1;
    let cov_ok = (0.94..=0.96).contains(&r.coverage);
    let embedded = validate_report(&r, eps).iter().all(|c| c.passed);
    within_time(
        outcome(
            mean_ok && var_ok && cov_ok && embedded,
            format!(
                "mean off by {:.2} SE, variance ratio {ratio:.4}, coverage {:.4}",
                (r.empirical_mean - r.predicted_mean).abs() / se,
                r.coverage
            ),
        ),
        start,
        Duration::from_secs(120),
    )
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

fn oracle_equivalence() -> Outcome {
    let mut worst_v: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for p in config_grid() {
        let s = p.source().unwrap();
        let q = p.quantizer().unwrap();
        let d = discrete_distribution(&s, &q);
        let v = worst_case_variance(&d, &q).unwrap();
        worst_v = worst_v.max(rel(v, brute_worst_case_variance(&s, &q), v));
        for mode in [MomentMode::ClampToAlim, MomentMode::LevelValue] {
            let m = b_moments(&d, &q, mode).unwrap();
            let (ma, mb, sb) = brute_b_moments(&s, &q, mode);
            // μ_a is zero up to rounding; compare it on the scale of √μ_b.
            let scale = mb.max(f64::MIN_POSITIVE);
            worst_b = worst_b
                .max(rel(m.mu_a, ma, scale.sqrt()))
                .max(rel(m.mu_b, mb, scale))
                .max(rel(
                    m.sigma_b_sq,
                    sb,
                    sb.max(scale * scale).max(f64::MIN_POSITIVE),
                ));
        }
    }
    outcome(
        worst_v <= 1e-12 && worst_b <= 1e-12,
        format!("max relative deviation: V̄ {worst_v:.2e}, b moments {worst_b:.2e}"),
    )
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    for p in config_grid() {
        let s = p.source().unwrap();
        let q = p.quantizer().unwrap();
        let d = discrete_distribution(&s, &q);
        check("normalization", (d.total() - 1.0).abs() <= 1e-12);
        check(
            "symmetry",
            (1..=q.i_max()).all(|i| (d.probability(i) - d.probability(-i)).abs() <= 1e-14),
        );
    }

    let base = short_check(3.0);
    let r_of = |p: Params| p.analyze().unwrap().finite.r_finite_bits;
    let by_m: Vec<f64> = [1e4, 1e5, 1e6, 1e7, 1e8]
        .iter()
        .map(|&m| {
            r_of(Params {
                check_length: m as u64,
                ..base
            })
        })
        .collect();
    check("monotone in m", by_m.windows(2).all(|w| w[0] <= w[1]));
    let by_eps: Vec<f64> = [1e-10, 1e-6, 1e-2, 0.5, 1.0]
        .iter()
        .map(|&e| {
            r_of(Params {
                confidence_epsilon: e,
                ..base
            })
        })
        .collect();
    check("monotone in ε", by_eps.windows(2).all(|w| w[0] <= w[1]));

    let lambdas: Vec<f64> = (0..=190).map(|k| 1.0 + 0.1 * k as f64).collect();
    let g: Vec<f64> = lambdas.iter().map(|&l| holevo_bound(l).unwrap()).collect();
    check("g increasing", g.windows(2).all(|w| w[1] > w[0]));
    check(
        "g concave",
        g.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] < 0.0),
    );
    check(
        "λ floor",
        symplectic_eigenvalue(0.9, 0.9).unwrap() == 1.0
            && cvqrng::lambda_max(0.5, 0.5).unwrap() == 1.0,
    );

    let grid: Vec<f64> = (0..40).map(|k| 1.0 + 0.2 * k as f64).collect();
    let fixed = Params { bits: 10, ..base };
    let forward = run_sweep(&SweepSpec {
        variable: SweepVariable::RangeSigma,
        grid: Grid::Explicit(grid.clone()),
        fixed,
    })
    .unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let threaded = pool.install(|| {
        run_sweep(&SweepSpec {
            variable: SweepVariable::RangeSigma,
            grid: Grid::Explicit(grid),
            fixed,
        })
        .unwrap()
    });
    check("sweep determinism", forward == threaded);

    let p = Params {
        range_sigma: 10.0,
        check_length: 10_000,
        confidence_epsilon: 0.05,
        moment_mode: MomentMode::LevelValue,
        ..Params::default()
    };
    let cfg = TrialConfig {
        trials: 64,
        samples_per_trial: p.check_length,
        seed: 7,
        source: p.source().unwrap(),
        quantizer: p.quantizer().unwrap(),
        confidence_epsilon: Probability::new(0.05).unwrap(),
        moment_mode: p.moment_mode,
    };
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_coverage(&cfg).unwrap());
    let parallel = pool.install(|| run_coverage(&cfg).unwrap());
    check("coverage determinism", serial == parallel);

    let detail = if failures.is_empty() {
        "normalization, symmetry, monotone m/ε, g shape, λ floor, determinism".to_string()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    within_time(
        outcome(failures.is_empty(), detail),
        start,
        Duration::from_secs(300),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 gap reproduction", gap_reproduction),
        ("2 peak locations at n = 8", resolution_eight_peaks),
        ("3 ε = 1 degeneracy", epsilon_one_degeneracy),
        ("4 tail bound", tail_bound),
        ("5 convergence shape", convergence_shape),
        ("6 resolution stability", resolution_stability),
        ("7 Monte Carlo estimator validation", monte_carlo_validation),
        ("8 oracle equivalence", oracle_equivalence),
        ("9 property suites", property_suites),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
