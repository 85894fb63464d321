use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cvqrng::finite_size::CLT_MIN_CHECK_LENGTH;
use cvqrng::monte_carlo::{run_coverage, validate_report, TrialConfig};
use cvqrng::sweep::{run_sweep, write_sweep_csv, write_sweep_json};
use cvqrng::{
    discrete_distribution, Error, Grid, MomentMode, Params, RateReport, Scale, SweepSpec,
    SweepVariable,
};

const EXIT_USAGE: u8 = 1;
const EXIT_WARNING: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cvqrng",
    version,
    about = "Finite-size extractable randomness of CV source-independent QRNGs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate asymptotic and finite-size randomness at one parameter point.
    Rate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = RateFormat::Text)]
        format: RateFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter and write one row per grid point.
    Sweep {
        #[arg(long, value_enum)]
        variable: VariableArg,
        /// Explicit comma-separated grid, e.g. `1,2.5,4`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["start", "stop", "count", "scale"])]
        grid: Option<Vec<f64>>,
        /// First point of a spaced grid.
        #[arg(long, requires = "stop", allow_negative_numbers = true)]
        start: Option<f64>,
        /// Last point of a spaced grid.
        #[arg(long, requires = "start", allow_negative_numbers = true)]
        stop: Option<f64>,
        /// Points in a spaced grid [default: 200].
        #[arg(long)]
        count: Option<usize>,
        /// Spacing of the grid; log for m and ε, linear otherwise by default.
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the ADC output distribution as `index,level,probability`.
    Distribution {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo check of the variance estimator and interval coverage.
    ///
    /// Defaults differ from the other commands: range 10σ, m = 1e5,
    /// ε = 0.05, level_value moments, 1e4 trials.
    Montecarlo {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 20_191_231)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parameter flags. Lengths are in units of σ = √(1 + excess noise).
/// Unset flags take the command's defaults (ε_excess 0.1, n 16, N 3σ,
/// a_lim 10σ, m 1e6, ε 1e-10, clamp_to_alim).
#[derive(Args)]
struct ParamArgs {
    /// Excess noise above vacuum, shot-noise units.
    #[arg(long, allow_negative_numbers = true)]
    excess_noise: Option<f64>,
    /// ADC resolution n.
    #[arg(long)]
    bits: Option<u32>,
    /// ADC range N in units of σ.
    #[arg(long, allow_negative_numbers = true)]
    range_sigma: Option<f64>,
    /// Clamp bound a_lim in units of σ.
    #[arg(long, allow_negative_numbers = true)]
    alim_sigma: Option<f64>,
    /// Check data length m; accepts `1e6`.
    #[arg(long, value_parser = parse_count)]
    check_length: Option<u64>,
    /// Confidence failure probability ε in (0, 1].
    #[arg(long, allow_negative_numbers = true)]
    confidence_epsilon: Option<f64>,
    /// Value assigned to the clamp bins when calibrating b moments.
    #[arg(long, value_enum)]
    moment_mode: Option<ModeArg>,
}

impl ParamArgs {
    fn resolve(&self, base: Params) -> Params {
        Params {
            excess_noise: self.excess_noise.unwrap_or(base.excess_noise),
            bits: self.bits.unwrap_or(base.bits),
            range_sigma: self.range_sigma.unwrap_or(base.range_sigma),
            alim_sigma: self.alim_sigma.unwrap_or(base.alim_sigma),
            check_length: self.check_length.unwrap_or(base.check_length),
            confidence_epsilon: self.confidence_epsilon.unwrap_or(base.confidence_epsilon),
            moment_mode: self.moment_mode.map(Into::into).unwrap_or(base.moment_mode),
        }
    }
}

/// Accepts plain integers and integral floats such as `1e6`.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RateFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "clamp_to_alim")]
    ClampToAlim,
    #[value(name = "level_value")]
    LevelValue,
}

impl From<ModeArg> for MomentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ClampToAlim => MomentMode::ClampToAlim,
            ModeArg::LevelValue => MomentMode::LevelValue,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariableArg {
    #[value(name = "check_length")]
    CheckLength,
    #[value(name = "confidence_epsilon")]
    ConfidenceEpsilon,
    #[value(name = "range_sigma")]
    RangeSigma,
    #[value(name = "bits")]
    Bits,
}

impl From<VariableArg> for SweepVariable {
    fn from(v: VariableArg) -> Self {
        match v {
            VariableArg::CheckLength => SweepVariable::CheckLength,
            VariableArg::ConfidenceEpsilon => SweepVariable::ConfidenceEpsilon,
            VariableArg::RangeSigma => SweepVariable::RangeSigma,
            VariableArg::Bits => SweepVariable::Bits,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

/// Failure with a message and exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = match &e {
            Error::Config { field, reason } => {
                format!("invalid --{}: {reason}", field.replace('_', "-"))
            }
            other => other.to_string(),
        };
        Failure(EXIT_USAGE, msg)
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Failure(EXIT_USAGE, format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure(EXIT_USAGE, format!("cannot write to stdout: {e}"))),
    }
}

fn clt_warning(m: u64) -> String {
    format!("warning: CLT validity requires m > 1e4 (check length {m})")
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Rate {
            params,
            format,
            out,
        } => {
            let params = params.resolve(Params::default());
            let report = RateReport::new(params)?;
            let mut buf = Vec::new();
            match format {
                RateFormat::Text => report.write_text(&mut buf)?,
                RateFormat::Json => report.write_json(&mut buf)?,
            }
            emit(out.as_ref(), &buf)?;
            if report.analysis.finite.clt_warning {
                eprintln!("{}", clt_warning(params.check_length));
                return Ok(EXIT_WARNING);
            }
            Ok(0)
        }
        Command::Sweep {
            variable,
            grid,
            start,
            stop,
            count,
            scale,
            params,
            format,
            out,
        } => {
            let variable: SweepVariable = variable.into();
            let grid = match (grid, start, stop) {
                (Some(points), _, _) => Grid::Explicit(points),
                (None, Some(start), Some(stop)) => {
                    let default_scale = match variable {
                        SweepVariable::CheckLength | SweepVariable::ConfidenceEpsilon => Scale::Log,
                        _ => Scale::Linear,
                    };
                    Grid::Spaced {
                        start,
                        stop,
                        count: count.unwrap_or(200),
                        scale: match scale {
                            Some(ScaleArg::Linear) => Scale::Linear,
                            Some(ScaleArg::Log) => Scale::Log,
                            None => default_scale,
                        },
                    }
                }
                _ => variable.default_grid(),
            };
            let spec = SweepSpec {
                variable,
                grid,
                fixed: params.resolve(Params::default()),
            };
            let rows = run_sweep(&spec)?;
            let mut buf = Vec::new();
            match format {
                TableFormat::Csv => write_sweep_csv(&rows, &mut buf)?,
                TableFormat::Json => write_sweep_json(&spec, &rows, &mut buf)?,
            }
            emit(out.as_ref(), &buf)?;
            let warned = rows.iter().filter(|r| r.warn).count();
            if warned > 0 {
                eprintln!("warning: CLT validity requires m > 1e4 ({warned} grid points flagged)");
                return Ok(EXIT_WARNING);
            }
            Ok(0)
        }
        Command::Distribution { params, out } => {
            let params = params.resolve(Params::default());
            let d = discrete_distribution(&params.source()?, &params.quantizer()?);
            let mut buf = Vec::new();
            d.write_csv(&mut buf)?;
            emit(out.as_ref(), &buf)?;
            Ok(0)
        }
        Command::Montecarlo {
            params,
            trials,
            seed,
            format,
            out,
        } => {
            let base = Params {
                range_sigma: 10.0,
                check_length: 100_000,
                confidence_epsilon: 0.05,
                moment_mode: MomentMode::LevelValue,
                ..Params::default()
            };
            let params = params.resolve(base);
            let confidence_epsilon = params.epsilon()?;
            let cfg = TrialConfig {
                trials,
                samples_per_trial: params.check_length,
                seed,
                source: params.source()?,
                quantizer: params.quantizer()?,
                confidence_epsilon,
                moment_mode: params.moment_mode,
            };
            let report = run_coverage(&cfg)?;
            let mut buf = Vec::new();
            match format {
                TableFormat::Csv => report.write_csv(&mut buf)?,
                TableFormat::Json => report.write_json(&mut buf)?,
            }
            emit(out.as_ref(), &buf)?;
            let mut code = 0;
            for check in validate_report(&report, confidence_epsilon) {
                let status = if check.passed { "ok" } else { "FAILED" };
                eprintln!("check {}: {status} ({})", check.name, check.detail);
                if !check.passed {
                    code = EXIT_VALIDATION;
                }
            }
            if code == 0 && params.check_length < CLT_MIN_CHECK_LENGTH {
                eprintln!("{}", clt_warning(params.check_length));
                code = EXIT_WARNING;
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
