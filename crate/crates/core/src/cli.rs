//! Command-line front end. Every report is wrapped with the tool version and
//! an echo of the run configuration.

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::diophant::{
    bad_approx_constant, cf_expand, convergents, verify_sqrt2_inequality, BoundCheck, ContinuedFraction,
    DiophantineConstant,
};
use crate::ergodic::{
    closed_form_integral, epsilon_sweep, quadrature_integral, weyl_average, ExclusionReport, LogKernel,
    DEFAULT_EPSILON,
};
use crate::exactnum::{
    eval_angle, parse_angle, parse_rational, rational_to_f64, AngleSpec, BoundedReal, LinearPhase,
};
use crate::liouville::{
    check_small_shifted, product_bound_witness, shifted_variant, LiouvilleSeq, ProductWitness, SmallnessCertificate,
    DIRECT_PRODUCT_CAP,
};
use crate::qpoch::{
    classify_limit, default_checkpoints, root_test_sequence, ComplexParam, LimitClassification, RootTestPoint,
    Verdict,
};
use crate::qseries::{
    empirical_radius, predicted_radius, validate_params, EmpiricalRadius, RadiusPrediction, RadiusValue,
    SeriesParams, N_MAX_CAP,
};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the default working precision in bits.
pub const PRECISION_ENV: &str = "QPHI_PRECISION_BITS";

const DEFAULT_PRECISION_BITS: u64 = 128;

/// Relative agreement required between predicted and empirical radii.
pub const RADIUS_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LiouvilleCheck {
    Small,
    Product,
    Roots,
}

#[derive(Debug, Parser)]
#[command(name = "qphi", version, about = "Convergence of r-phi-s series with base on the unit circle")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Shorthand for --format json.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Shorthand for --format csv.
    #[arg(long, global = true)]
    csv: bool,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed echoed into the report for randomized sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continued fraction, convergents and the finite-scan constant of theta.
    AnalyzeTheta {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 20)]
        terms: usize,
        #[arg(long, default_value_t = 10_000)]
        scan_limit: u64,
        /// Bits for the decimal enclosure of theta.
        #[arg(long)]
        precision_bits: Option<u64>,
    },
    /// m ||m sqrt2|| > 1/3 for all m up to the limit.
    Sqrt2Check {
        #[arg(long, default_value_t = 1_000_000)]
        max_m: u64,
    },
    /// Root test of |(a;q)_n|^{1/n} at checkpoints.
    Roottest {
        #[arg(long)]
        theta: String,
        /// Parameter `a`; defaults to q itself.
        #[arg(long, default_value = "combo:0,1")]
        param: String,
        #[arg(long, default_value_t = 100_000)]
        n_max: u64,
        /// Comma-separated checkpoints; powers of ten by default.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Predicted and empirical radius of convergence.
    Radius {
        #[arg(long)]
        theta: String,
        #[arg(long)]
        upper: Vec<String>,
        #[arg(long)]
        lower: Vec<String>,
        #[arg(long, default_value = "1")]
        base_modulus: String,
        #[arg(long, default_value_t = 10_000)]
        n_max: u64,
        /// Skip the coefficient sweep.
        #[arg(long)]
        no_empirical: bool,
    },
    /// Weyl averages of log|1 - r e^{2 pi i x}| and the exclusion-set harness.
    Weyl {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value = "1")]
        r: String,
        /// Rational part of the kernel shift.
        #[arg(long, default_value = "0")]
        shift: String,
        /// Theta coefficient of the kernel shift.
        #[arg(long, default_value = "0")]
        shift_coeff: String,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        epsilon: Vec<f64>,
        /// Run the default sweep 0.1, 0.05, 0.02, 0.01.
        #[arg(long)]
        epsilon_sweep: bool,
    },
    /// Certificates for the Liouville-type construction.
    Liouville {
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        k_seq: Vec<u8>,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value = "0")]
        shift: String,
        #[arg(long, value_enum, default_value_t = LiouvilleCheck::Small)]
        check: LiouvilleCheck,
    },
}

/// Echo of everything that determines a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub upper: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub lower: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub param: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub base_modulus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub checkpoints: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub epsilons: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shift_coeff: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_seq: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub check: Option<LiouvilleCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scan_limit: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision_bits: Option<u64>,
    pub format: Format,
    pub threads: usize,
    pub seed: u64,
}

/// Common wrapper of every JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub partial: bool,
    /// Outcome of the check the subcommand performs, when it has one.
    pub passed: Option<bool>,
    pub report: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: String,
    pub approx: BoundedReal,
    pub precision_bits: u64,
    pub quotients: Vec<String>,
    pub continued_fraction: ContinuedFraction,
    pub convergents: Vec<[String; 2]>,
    pub constant: DiophantineConstant,
    pub argmin: u64,
    pub scan_limit: u64,
    /// `bounded_quotients` for surds, `liouville` otherwise.
    pub class: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sqrt2Report {
    pub bound: String,
    pub check: BoundCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootTestReport {
    pub param: ComplexParam,
    /// `max(|a|, 1)`.
    pub predicted: f64,
    pub points: Vec<RootTestPoint>,
    /// Running maximum of `value` over the checkpoints.
    pub running_max: Vec<f64>,
    pub classification: LimitClassification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub params: SeriesParams,
    pub validation: Vec<String>,
    pub prediction: RadiusPrediction,
    pub empirical: Option<EmpiricalRadius>,
    pub diophantine: Option<DiophantineConstant>,
    /// `empirical / predicted - 1` when both are finite and positive.
    pub relative_deviation: Option<f64>,
    pub tolerance: f64,
    pub agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    #[serde(with = "crate::report::rational_string")]
    pub r: BigRational,
    pub shift: LinearPhase,
    pub n: u64,
    pub closed_form: f64,
    pub quadrature: BoundedReal,
    pub weyl_average: BoundedReal,
    /// Exclusion harness, only for `r = 1`.
    pub exclusions: Vec<ExclusionReport>,
    /// Excluded mass strictly decreasing along the epsilon list.
    pub mass_decreasing: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub k_seq: Vec<u8>,
    pub depth: usize,
    pub denominators: Vec<String>,
    #[serde(with = "crate::report::rational_string")]
    pub shift: BigRational,
    pub check: LiouvilleCheck,
    pub persistence_index: Option<usize>,
    pub certificates: Vec<SmallnessCertificate>,
    pub products: Vec<ProductWitness>,
    /// Product roots strictly decreasing in `n`.
    pub roots_decreasing: Option<bool>,
}

/// Parse `argv` (including the program name), run, and write the report to
/// `out`. Returns the exit code: 0 success, 1 a check ran and failed, 2 usage
/// or input error.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(passed) => i32::from(passed == Some(false)),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<Option<bool>> {
    let format = if cli.csv {
        Format::Csv
    } else if cli.json {
        Format::Json
    } else {
        cli.format
    };
    let mut config = RunConfig {
        format,
        threads: cli.threads.max(1),
        seed: cli.seed,
        ..Default::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let passed = pool.install(|| dispatch(cli.command, &mut config, &mut buf))?;
    out.write_all(&buf)
        .map_err(|e| Error::Precondition(format!("write failed: {e}")))?;
    Ok(passed)
}

fn envelope<T: Serialize>(config: &RunConfig, passed: Option<bool>, report: T) -> Envelope<T> {
    Envelope {
        tool: "qphi".into(),
        version: VERSION.into(),
        config: config.clone(),
        partial: false,
        passed,
        report,
    }
}

fn emit_json<T: Serialize>(out: &mut Vec<u8>, config: &RunConfig, passed: Option<bool>, report: T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &envelope(config, passed, report))
        .map_err(|e| Error::Precondition(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(())
}

fn emit_csv<R: Serialize>(out: &mut Vec<u8>, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let fail = |e: csv::Error| Error::Precondition(format!("csv: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Precondition(format!("csv: {e}")))?;
    Ok(())
}

fn emit<T: Serialize, R: Serialize>(
    out: &mut Vec<u8>,
    config: &RunConfig,
    passed: Option<bool>,
    report: &T,
    header: &[&str],
    rows: impl FnOnce(&T) -> Vec<R>,
) -> Result<()> {
    match config.format {
        Format::Json => emit_json(out, config, passed, report),
        Format::Csv => emit_csv(out, header, rows(report)),
    }
}

/// Root-test points as CSV rows `n,log_mean,value,abs_error`.
pub fn root_test_rows(points: &[RootTestPoint]) -> Vec<(u64, f64, f64, f64)> {
    points
        .iter()
        .map(|p| (p.n, p.log_mean.to_f64(), p.value, p.log_mean.abs_error()))
        .collect()
}

pub const ROOT_TEST_HEADER: [&str; 4] = ["n", "log_mean", "value", "abs_error"];

fn precision_bits(flag: Option<u64>) -> Result<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(PRECISION_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Precondition(format!("{PRECISION_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_PRECISION_BITS),
    }
}

fn check_n_max(n: u64) -> Result<()> {
    if n > N_MAX_CAP {
        return Err(Error::Precondition(format!("n_max {n} exceeds the cap {N_MAX_CAP}")));
    }
    Ok(())
}

fn parse_params(list: &[String]) -> Result<Vec<ComplexParam>> {
    list.iter().map(|s| s.parse()).collect()
}

fn dispatch(cmd: Command, config: &mut RunConfig, out: &mut Vec<u8>) -> Result<Option<bool>> {
    match cmd {
        Command::AnalyzeTheta {
            theta,
            terms,
            scan_limit,
            precision_bits: bits,
        } => {
            config.subcommand = "analyze-theta".into();
            config.theta = Some(theta.clone());
            config.terms = Some(terms);
            config.scan_limit = Some(scan_limit);
            let bits = precision_bits(bits)?;
            config.precision_bits = Some(bits);
            let spec = parse_angle(&theta)?;
            let report = analyze_theta(&spec, terms, scan_limit, bits)?;
            emit(out, config, None, &report, &["index", "quotient", "p", "q"], |r| {
                r.quotients
                    .iter()
                    .zip(r.convergents.iter())
                    .enumerate()
                    .map(|(i, (a, [p, q]))| (i, a.clone(), p.clone(), q.clone()))
                    .collect()
            })?;
            Ok(None)
        }
        Command::Sqrt2Check { max_m } => {
            config.subcommand = "sqrt2-check".into();
            config.scan_limit = Some(max_m);
            let check = verify_sqrt2_inequality(max_m)?;
            let passed = Some(check.holds);
            let report = Sqrt2Report {
                bound: "1/3".into(),
                check,
            };
            emit(
                out,
                config,
                passed,
                &report,
                &["holds", "min_margin", "argmin_m", "scan_limit"],
                |r| {
                    vec![(
                        r.check.holds,
                        r.check.min_margin.to_f64(),
                        r.check.argmin_m,
                        r.check.scan_limit,
                    )]
                },
            )?;
            Ok(passed)
        }
        Command::Roottest {
            theta,
            param,
            n_max,
            checkpoints,
        } => {
            config.subcommand = "roottest".into();
            config.theta = Some(theta.clone());
            config.param = Some(param.clone());
            check_n_max(n_max)?;
            let checkpoints = if checkpoints.is_empty() {
                default_checkpoints(n_max)
            } else {
                checkpoints
            };
            config.n_max = checkpoints.last().copied();
            config.checkpoints = checkpoints.clone();
            let spec = parse_angle(&theta)?;
            let a: ComplexParam = param.parse()?;
            let report = root_test(&a, &spec, &checkpoints)?;
            let passed = Some(report.classification.verdict != Verdict::Inconsistent);
            emit(out, config, passed, &report, &ROOT_TEST_HEADER, |r| root_test_rows(&r.points))?;
            Ok(passed)
        }
        Command::Radius {
            theta,
            upper,
            lower,
            base_modulus,
            n_max,
            no_empirical,
        } => {
            config.subcommand = "radius".into();
            config.theta = Some(theta.clone());
            config.upper = upper.clone();
            config.lower = lower.clone();
            config.base_modulus = Some(base_modulus.clone());
            config.n_max = Some(n_max);
            check_n_max(n_max)?;
            let params = SeriesParams {
                upper: parse_params(&upper)?,
                lower: parse_params(&lower)?,
                theta: parse_angle(&theta)?,
                base_modulus: parse_rational(&base_modulus)?,
            };
            let report = radius(&params, (!no_empirical).then_some(n_max))?;
            let passed = if report.validation.is_empty() {
                report.agrees
            } else {
                Some(false)
            };
            emit(out, config, passed, &report, &["n", "log_root", "abs_error"], |r| {
                r.empirical
                    .iter()
                    .flat_map(|e| e.window_values.iter().chain(e.witnesses.iter()))
                    .map(|w| (w.n, w.log_root, w.abs_error))
                    .collect()
            })?;
            Ok(passed)
        }
        Command::Weyl {
            theta,
            r,
            shift,
            shift_coeff,
            n,
            epsilon,
            epsilon_sweep: sweep,
        } => {
            config.subcommand = "weyl".into();
            config.theta = Some(theta.clone());
            config.r = Some(r.clone());
            config.shift = Some(shift.clone());
            config.shift_coeff = Some(shift_coeff.clone());
            config.n_max = Some(n);
            check_n_max(n)?;
            let eps = if sweep {
                crate::ergodic::DEFAULT_EPSILON_SWEEP.to_vec()
            } else if epsilon.is_empty() {
                vec![DEFAULT_EPSILON]
            } else {
                epsilon
            };
            config.epsilons = eps.clone();
            let spec = parse_angle(&theta)?;
            let kernel = LogKernel::new(
                parse_rational(&r)?,
                LinearPhase::new(parse_rational(&shift)?, parse_rational(&shift_coeff)?),
            )?;
            let report = weyl(&kernel, &spec, n, &eps)?;
            let passed = (!report.exclusions.is_empty()).then(|| {
                report
                    .exclusions
                    .iter()
                    .all(|e| e.envelope_holds && e.bookkeeping_holds)
                    && report.mass_decreasing != Some(false)
            });
            emit(
                out,
                config,
                passed,
                &report,
                &[
                    "epsilon",
                    "density",
                    "expected_density",
                    "excluded_mass",
                    "envelope_bound",
                    "full_avg",
                    "restricted_avg",
                ],
                |r| {
                    r.exclusions
                        .iter()
                        .map(|e| {
                            (
                                e.epsilon,
                                e.density,
                                e.expected_density,
                                e.excluded_mass.to_f64(),
                                e.envelope_bound,
                                e.full_avg.to_f64(),
                                e.restricted_avg.to_f64(),
                            )
                        })
                        .collect()
                },
            )?;
            Ok(passed)
        }
        Command::Liouville {
            k_seq,
            depth,
            shift,
            check,
        } => {
            config.subcommand = "liouville".into();
            config.k_seq = Some(k_seq.clone());
            config.depth = Some(depth);
            config.shift = Some(shift.clone());
            config.check = Some(check);
            let shift = parse_rational(&shift)?;
            let report = liouville(&k_seq, depth, &shift, check)?;
            let passed = Some(
                report.certificates.iter().all(|c| c.holds)
                    && report.products.iter().all(|p| p.holds)
                    && report.roots_decreasing != Some(false),
            );
            match (config.format, check) {
                (Format::Csv, LiouvilleCheck::Small) => emit_csv(
                    out,
                    &["n", "a_n", "scaled_distance_upper", "holds"],
                    report.certificates.iter().map(|c| {
                        (
                            c.n,
                            c.a_n.clone(),
                            c.scaled_distance_upper.as_ref().map(|d| d.decimal.clone()),
                            c.holds,
                        )
                    }),
                )?,
                (Format::Csv, _) => emit_csv(
                    out,
                    &["n", "a_n", "log_product", "log_bound", "root", "root_bound", "holds"],
                    report.products.iter().map(|p| {
                        (
                            p.n,
                            p.a_n,
                            p.log_product.to_f64(),
                            p.log_bound.to_f64(),
                            p.root.to_f64(),
                            p.root_bound,
                            p.holds,
                        )
                    }),
                )?,
                (Format::Json, _) => emit_json(out, config, passed, &report)?,
            }
            Ok(passed)
        }
    }
}

pub fn analyze_theta(spec: &AngleSpec, terms: usize, scan_limit: u64, bits: u64) -> Result<ThetaReport> {
    let cf = cf_expand(spec, terms)?;
    let n = cf.available().map_or(terms, |a| a.min(terms));
    let quotients: Vec<String> = cf.quotients(n).iter().map(|a| a.to_string()).collect();
    let conv = convergents(&cf, n)?
        .into_iter()
        .map(|(p, q)| [p.to_string(), q.to_string()])
        .collect();
    let constant = bad_approx_constant(spec, scan_limit)?;
    Ok(ThetaReport {
        theta: spec.to_string(),
        approx: eval_angle(spec, bits)?,
        precision_bits: bits,
        quotients,
        continued_fraction: cf,
        convergents: conv,
        argmin: constant.argmin_m,
        scan_limit: constant.scan_limit,
        constant,
        class: if spec.is_liouville() { "liouville" } else { "bounded_quotients" }.into(),
    })
}

pub fn root_test(a: &ComplexParam, theta: &AngleSpec, checkpoints: &[u64]) -> Result<RootTestReport> {
    let predicted = rational_to_f64(&a.modulus()).max(1.0);
    let points = root_test_sequence(a, theta, checkpoints)?;
    let running_max = points
        .iter()
        .scan(f64::NEG_INFINITY, |m, p| {
            *m = m.max(p.value);
            Some(*m)
        })
        .collect();
    let classification = if points.len() >= 2 {
        classify_limit(&points, predicted)?
    } else {
        LimitClassification {
            verdict: Verdict::Inconclusive,
            predicted,
            tolerance: crate::qpoch::default_tolerance(predicted),
            residuals: points.iter().map(|p| p.value - predicted).collect(),
        }
    };
    Ok(RootTestReport {
        param: a.clone(),
        predicted,
        points,
        running_max,
        classification,
    })
}

pub fn radius(params: &SeriesParams, n_max: Option<u64>) -> Result<RadiusReport> {
    let validation = validate_params(params);
    if !validation.is_empty() {
        return Err(Error::Violation(validation.join("; ")));
    }
    let diophantine = if params.on_unit_circle() && !params.theta.is_liouville() {
        Some(bad_approx_constant(&params.theta, 10_000)?)
    } else {
        None
    };
    let prediction = predicted_radius(params, diophantine.as_ref())?;
    let empirical = match n_max {
        Some(n) => match empirical_radius(params, n) {
            Ok(e) => Some(e),
            Err(Error::Refused(_)) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let (relative_deviation, agrees) = match (&prediction.value, &empirical) {
        (Some(RadiusValue::Finite { approx, .. }), Some(e)) if *approx > 0.0 => {
            let dev = e.estimate.map(|v| v / approx - 1.0);
            (dev, Some(dev.is_some_and(|d| d.abs() <= RADIUS_TOLERANCE)))
        }
        (Some(RadiusValue::Zero), Some(e)) => (None, Some(e.collapse)),
        (Some(RadiusValue::Infinite), Some(e)) if e.growth_diagnostic => (None, Some(e.log_estimate > 0.0)),
        _ => (None, None),
    };
    Ok(RadiusReport {
        params: params.clone(),
        validation,
        prediction,
        empirical,
        diophantine,
        relative_deviation,
        tolerance: RADIUS_TOLERANCE,
        agrees,
    })
}

pub fn weyl(kernel: &LogKernel, theta: &AngleSpec, n: u64, epsilons: &[f64]) -> Result<WeylReport> {
    let r = kernel.r().clone();
    let closed_form = closed_form_integral(rational_to_f64(&r))?;
    let quadrature = quadrature_integral(kernel, 1e-10)?;
    let avg = weyl_average(kernel, theta, n)?;
    let exclusions = match kernel.singularity() {
        Some(c) if r.is_one() => epsilon_sweep(kernel, theta, &[c], n, epsilons)?,
        _ => Vec::new(),
    };
    let mass_decreasing = (exclusions.len() >= 2).then(|| {
        exclusions
            .windows(2)
            .all(|w| w[0].epsilon <= w[1].epsilon || w[1].excluded_mass.upper() < w[0].excluded_mass.lower())
    });
    Ok(WeylReport {
        r,
        shift: kernel.shift().clone(),
        n,
        closed_form,
        quadrature,
        weyl_average: avg,
        exclusions,
        mass_decreasing,
    })
}

pub fn liouville(k_seq: &[u8], depth: usize, shift: &BigRational, check: LiouvilleCheck) -> Result<LiouvilleReport> {
    let seq = LiouvilleSeq::build(k_seq, depth)?;
    let persistence_index = if shift.is_zero() {
        Some(1)
    } else {
        Some(shifted_variant(&seq, shift)?.persistence_index)
    };
    let mut certificates = Vec::new();
    let mut products = Vec::new();
    let mut roots_decreasing = None;
    match check {
        LiouvilleCheck::Small => {
            let from = persistence_index.unwrap_or(1);
            for n in from..=depth {
                certificates.push(check_small_shifted(&seq, n, shift)?);
            }
        }
        LiouvilleCheck::Product | LiouvilleCheck::Roots => {
            if !shift.is_zero() {
                return Err(Error::Refused("product witnesses are computed for the unshifted angle".into()));
            }
            let cap = BigRational::from_integer(DIRECT_PRODUCT_CAP.into());
            for n in 1..=depth {
                if BigRational::from_integer(seq.a(n).clone().into()) > cap {
                    break;
                }
                let w = product_bound_witness(&seq, n)?;
                products.push(w);
            }
            if check == LiouvilleCheck::Roots {
                roots_decreasing = Some(
                    products
                        .windows(2)
                        .filter(|w| w[0].n >= 2)
                        .all(|w| w[1].root.upper() < w[0].root.lower()),
                );
            }
        }
    }
    Ok(LiouvilleReport {
        k_seq: k_seq.to_vec(),
        depth,
        denominators: seq.denominators().iter().map(|a| a.to_string()).collect(),
        shift: shift.clone(),
        check,
        persistence_index,
        certificates,
        products,
        roots_decreasing,
    })
}
