use std::process::Command;

use qphi::cli::{run, Envelope, LiouvilleReport, RadiusReport, RootTestReport, Sqrt2Report, ThetaReport, WeylReport};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qphi").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn parse<T: DeserializeOwned>(text: &str) -> Envelope<T> {
    serde_json::from_str(text).expect("report parses")
}

fn round_trips<T: DeserializeOwned + Serialize>(text: &str) {
    let env: Envelope<T> = parse(text);
    let again = serde_json::to_string_pretty(&env).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn radius_example() {
    let (code, out, _) = call(&[
        "radius",
        "--theta",
        "surd:sqrt2",
        "--upper",
        "polar:2@0",
        "--lower",
        "polar:3@0",
        "--n-max",
        "10000",
    ]);
    assert_eq!(code, 0);
    let env: Envelope<RadiusReport> = parse(&out);
    assert_eq!(env.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(env.config.subcommand, "radius");
    assert_eq!(env.config.upper, vec!["polar:2@0"]);
    assert!(!env.partial);
    let pred = env.report.prediction.value.unwrap();
    assert_eq!(pred.approx(), 1.5);
    let est = env.report.empirical.unwrap().estimate.unwrap();
    assert!((est / 1.5 - 1.0).abs() < 0.1);
    round_trips::<RadiusReport>(&out);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let (code, out, err) = call(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("Usage"));
}

#[test]
fn bad_input_is_usage_error() {
    assert_eq!(call(&["radius", "--theta", "surd:sqrt4"]).0, 2);
    assert_eq!(call(&["radius", "--theta", "surd:sqrt2", "--upper", "combo:0,0"]).0, 2);
    assert_eq!(call(&["roottest", "--theta", "surd:sqrt2", "--n-max", "20000000"]).0, 2);
    assert_eq!(call(&["weyl", "--theta", "surd:sqrt2", "--json", "--csv"]).0, 2);
}

#[test]
fn sqrt2_check() {
    let (code, out, _) = call(&["sqrt2-check", "--max-m", "1000000"]);
    assert_eq!(code, 0);
    let env: Envelope<Sqrt2Report> = parse(&out);
    assert!(env.report.check.holds);
    assert_eq!(env.passed, Some(true));
    // 2 ||2 sqrt2|| - 1/3
    let margin = 6.0 - 4.0 * std::f64::consts::SQRT_2 - 1.0 / 3.0;
    assert!((env.report.check.min_margin.to_f64() - margin).abs() < 1e-12);
    assert!((margin - 0.00981).abs() < 1e-5);
}

#[test]
fn roottest_csv_and_json() {
    let (code, out, _) = call(&["roottest", "--theta", "surd:sqrt2", "--n-max", "10000", "--csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,log_mean,value,abs_error"));
    assert_eq!(lines.count(), 3);

    let (code, out, _) = call(&[
        "roottest",
        "--theta",
        "surd:sqrt2",
        "--param",
        "polar:2@0",
        "--checkpoints",
        "1000,5000,20000",
    ]);
    assert_eq!(code, 0);
    let env: Envelope<RootTestReport> = parse(&out);
    assert_eq!(env.config.checkpoints, vec![1000, 5000, 20000]);
    assert_eq!(env.report.predicted, 2.0);
    assert_eq!(env.report.running_max.len(), 3);
    round_trips::<RootTestReport>(&out);
}

#[test]
fn liouville_certificates() {
    let (code, out, _) = call(&["liouville", "--k-seq", "2,2", "--depth", "3", "--check", "small"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"numerator_digits\""));
    let env: Envelope<LiouvilleReport> = parse(&out);
    assert_eq!(env.report.denominators, vec!["2", "8", "645120"]);
    assert_eq!(env.report.certificates.len(), 3);
    assert!(env.report.certificates.iter().all(|c| c.holds));
    let bound = env.report.certificates[0].bound.as_ref().unwrap();
    assert_eq!(bound.exact.as_deref(), Some("1/2"));
    round_trips::<LiouvilleReport>(&out);

    let (code, out, _) = call(&["liouville", "--check", "roots"]);
    assert_eq!(code, 0);
    let env: Envelope<LiouvilleReport> = parse(&out);
    assert_eq!(env.report.roots_decreasing, Some(true));
    assert_eq!(env.report.products.len(), 3);

    let (code, _, _) = call(&["liouville", "--shift", "1/3"]);
    assert_eq!(code, 0);
}

#[test]
fn weyl_report_fields() {
    let (code, out, _) = call(&["weyl", "--theta", "surd:sqrt2", "--n", "20000", "--epsilon-sweep"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let first = &v["report"]["exclusions"][0];
    for key in ["density", "expected_density", "envelope_bound", "excluded_mass", "scan_constant"] {
        assert!(!first[key].is_null(), "{key}");
    }
    round_trips::<WeylReport>(&out);

    let (code, out, _) = call(&["weyl", "--theta", "surd:sqrt2", "--r", "2", "--n", "1000"]);
    assert_eq!(code, 0);
    let env: Envelope<WeylReport> = parse(&out);
    assert!(env.report.exclusions.is_empty());
    assert!((env.report.closed_form - 2f64.ln()).abs() < 1e-15);
}

#[test]
fn analyze_theta_and_precision_override() {
    let (code, out, _) = call(&["analyze-theta", "--theta", "surd:sqrt7", "--terms", "9"]);
    assert_eq!(code, 0);
    let env: Envelope<ThetaReport> = parse(&out);
    assert_eq!(env.report.quotients, vec!["2", "1", "1", "1", "4", "1", "1", "1", "4"]);
    assert_eq!(env.report.class, "bounded_quotients");
    round_trips::<ThetaReport>(&out);

    let (code, out, _) = call(&["analyze-theta", "--theta", "surd:sqrt2", "--precision-bits", "300"]);
    assert_eq!(code, 0);
    let env: Envelope<ThetaReport> = parse(&out);
    assert_eq!(env.config.precision_bits, Some(300));
    assert!(env.report.approx.abs_error() < 1e-85);
}

#[test]
fn binary_reads_precision_env() {
    let exe = env!("CARGO_BIN_EXE_qphi");
    let out = Command::new(exe)
        .args(["analyze-theta", "--theta", "surd:sqrt3"])
        .env("QPHI_PRECISION_BITS", "200")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let env: Envelope<ThetaReport> = parse(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(env.report.precision_bits, 200);

    let out = Command::new(exe)
        .args(["analyze-theta", "--theta", "surd:sqrt3"])
        .env("QPHI_PRECISION_BITS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(exe).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deterministic_across_runs_and_threads() {
    let args = ["liouville", "--check", "product", "--threads"];
    let a = call(&[&args[..], &["1"]].concat()).1;
    let b = call(&[&args[..], &["1"]].concat()).1;
    assert_eq!(a, b);
    let c = call(&[&args[..], &["4"]].concat()).1;
    let ra: Envelope<LiouvilleReport> = parse(&a);
    let rc: Envelope<LiouvilleReport> = parse(&c);
    assert_eq!(ra.report, rc.report);
}
