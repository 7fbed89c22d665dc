mod common;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use qphi::diophant::{affine_transfer, bad_approx_constant, cf_expand, convergents};
use qphi::ergodic::{
    closed_form_integral, singular_average_report, weyl_average, LogKernel, SingularitySpec,
};
use qphi::exactnum::{eval_angle, frac_multiple, parse_angle, rational_to_f64, AngleSpec, QuadraticSurd};
use qphi::liouville::{check_small, LiouvilleSeq};
use qphi::qpoch::{log_abs_one_minus, log_abs_qpochhammer, root_test_sequence, ComplexParam};
use qphi::qseries::{log_abs_coefficients, predicted_radius, term_ratio, SeriesParams};

const SQUARE_FREE: [u64; 10] = [2, 3, 5, 6, 7, 10, 11, 13, 14, 15];

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn sqrt(d: u64) -> AngleSpec {
    AngleSpec::sqrt(d).unwrap()
}

fn liouville22() -> AngleSpec {
    AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap()
}

fn rational() -> impl Strategy<Value = BigRational> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| q(n, d))
}

fn off_unit_param() -> impl Strategy<Value = ComplexParam> {
    (1i64..30, 1i64..8, 0i64..12)
        .prop_filter("modulus 1", |(n, d, _)| n != d)
        .prop_map(|(n, d, a)| ComplexParam::polar(q(n, d), q(a, 12)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frac_interval_is_sound(i in 0usize..SQUARE_FREE.len(), k in 1u64..1_000_000) {
        let spec = sqrt(SQUARE_FREE[i]);
        let coarse = frac_multiple(&spec, k, 1e-12).unwrap();
        let fine = frac_multiple(&spec, k, 1e-24).unwrap();
        prop_assert!(coarse.contains(fine.value()));
        // defining congruence against an f64 reference
        let x = k as f64 * (SQUARE_FREE[i] as f64).sqrt();
        prop_assert!((coarse.to_f64() - x.fract()).abs() < 1e-9);
    }

    #[test]
    fn liouville_frac_matches_exact_sum(k in 1u64..2_000_000) {
        let spec = liouville22();
        let f = frac_multiple(&spec, k, 1e-30).unwrap();
        // k (1/2 + 1/8 + 1/645120) mod 1; the remaining tail is below 1e-3000
        let s = q(1, 2) + q(1, 8) + q(1, 645_120);
        let ks = s * BigRational::from_integer(BigInt::from(k));
        let frac = &ks - ks.floor();
        let diff = rational_to_f64(&(f.value() - &frac)).abs();
        prop_assert!(diff <= f.abs_error() + k as f64 * 1e-300);
        prop_assert!(f.contains(&frac) || diff < 1e-30);
    }

    #[test]
    fn convergents_are_good(i in 0usize..SQUARE_FREE.len()) {
        let spec = sqrt(SQUARE_FREE[i]);
        let cf = cf_expand(&spec, 30).unwrap();
        let theta = eval_angle(&spec, 256).unwrap();
        for (p, qq) in convergents(&cf, 30).unwrap() {
            let r = BigRational::new(p, qq.clone());
            let gap = rational_to_f64(&(theta.value() - r)).abs();
            let q2 = rational_to_f64(&BigRational::from_integer(&qq * &qq));
            prop_assert!(gap < 1.0 / q2 + theta.abs_error());
        }
    }

    #[test]
    fn surd_quotients_are_bounded(i in 0usize..SQUARE_FREE.len()) {
        let d = SQUARE_FREE[i];
        let cf = cf_expand(&sqrt(d), 64).unwrap();
        let a0 = (d as f64).sqrt().floor() as i64;
        prop_assert!(!cf.period.is_empty());
        prop_assert!(cf.period.iter().all(|a| *a <= BigInt::from(2 * a0)));
    }

    #[test]
    fn scan_constant_non_increasing(i in 0usize..SQUARE_FREE.len(), m1 in 1u64..5_000, extra in 0u64..5_000) {
        let spec = sqrt(SQUARE_FREE[i]);
        let a = bad_approx_constant(&spec, m1).unwrap();
        let b = bad_approx_constant(&spec, m1 + extra).unwrap();
        prop_assert!(b.min_value.lower() <= a.min_value.upper());
    }

    #[test]
    fn one_minus_symmetry_and_inversion(r in 0.01f64..50.0, x in 0.001f64..0.999) {
        let a = log_abs_one_minus(r, x).unwrap();
        let b = log_abs_one_minus(r, 1.0 - x).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        if r > 1.0 {
            let c = r.ln() + log_abs_one_minus(1.0 / r, x).unwrap();
            prop_assert!((a - c).abs() < 1e-12 * (1.0 + a.abs()));
        }
        let direct = (Complex64::new(1.0, 0.0) - Complex64::from_polar(r, std::f64::consts::TAU * x)).norm().ln();
        prop_assert!((a - direct).abs() < 1e-9);
    }

    #[test]
    fn pochhammer_is_additive(i in 0usize..SQUARE_FREE.len(), m in 1u64..3_000, n in 1u64..3_000, a in off_unit_param()) {
        let theta = sqrt(SQUARE_FREE[i]);
        let whole = log_abs_qpochhammer(&a, &theta, m + n).unwrap();
        let head = log_abs_qpochhammer(&a, &theta, m).unwrap();
        let pts = root_test_sequence(&a, &theta, &[m, m + n]).unwrap();
        let seq_whole = pts[1].log_mean.to_f64() * (m + n) as f64;
        let tol = whole.abs_error() + pts[1].log_mean.abs_error() * (m + n) as f64 + 1e-9;
        prop_assert!((seq_whole - whole.to_f64()).abs() <= tol);
        let seq_head = pts[0].log_mean.to_f64() * m as f64;
        let tol = head.abs_error() + pts[0].log_mean.abs_error() * m as f64 + 1e-9;
        prop_assert!((seq_head - head.to_f64()).abs() <= tol);
    }

    #[test]
    fn exclusion_bookkeeping(eps in 0.005f64..0.2, n in 100u64..5_000) {
        let kernel = LogKernel::plain(BigRational::one()).unwrap();
        let r = singular_average_report(&kernel, &sqrt(2), &[SingularitySpec::origin()], n, eps).unwrap();
        prop_assert!(r.bookkeeping_holds);
        prop_assert_eq!(r.excluded_count as usize, r.excluded_indices.len());
        prop_assert!(r.excluded_indices.iter().all(|&k| k >= 1 && k <= n));
    }

    #[test]
    fn predictor_max_product(
        ups in proptest::collection::vec(off_unit_param(), 0..3),
        lows in proptest::collection::vec(off_unit_param(), 0..3),
        extra in off_unit_param(),
    ) {
        let base = SeriesParams::on_circle(ups.clone(), lows.clone(), sqrt(2));
        let before = predicted_radius(&base, None).unwrap().value.unwrap().exact().cloned().unwrap();
        let mut more = lows;
        more.push(extra.clone());
        let after = predicted_radius(&SeriesParams::on_circle(ups, more, sqrt(2)), None).unwrap();
        let after = after.value.unwrap().exact().cloned().unwrap();
        let m = extra.modulus();
        if m <= BigRational::one() {
            prop_assert_eq!(after, before);
        } else {
            prop_assert_eq!(after, before * m);
        }
    }

    #[test]
    fn ratio_coefficient_consistency(
        ups in proptest::collection::vec(off_unit_param(), 0..3),
        lows in proptest::collection::vec(off_unit_param(), 0..3),
        i in 0usize..SQUARE_FREE.len(),
    ) {
        let p = SeriesParams::on_circle(ups, lows, sqrt(SQUARE_FREE[i]));
        let c = log_abs_coefficients(&p, 120).unwrap();
        for n in 0..120u64 {
            let t = term_ratio(&p, n, Complex64::new(1.0, 0.0)).unwrap();
            let d = c[n as usize + 1].to_f64() - c[n as usize].to_f64();
            let tol = c[n as usize].abs_error() + c[n as usize + 1].abs_error() + t.log_modulus_err;
            prop_assert!((d - t.log_modulus).abs() <= tol);
        }
    }

    #[test]
    fn text_forms_round_trip(a in rational(), b in rational(), i in 0usize..SQUARE_FREE.len()) {
        let combo = ComplexParam::combo(a.clone(), b.clone());
        prop_assert_eq!(combo.to_string().parse::<ComplexParam>().unwrap(), combo);
        if !a.is_zero() {
            let spec = AngleSpec::affine(a, QuadraticSurd::sqrt(SQUARE_FREE[i]).unwrap(), b).unwrap();
            prop_assert_eq!(parse_angle(&spec.to_string()).unwrap(), spec);
        }
    }
}

#[test]
fn chord_lower_bound_on_grid() {
    for i in 1..=1000 {
        let delta = i as f64 / 1000.0 / std::f64::consts::TAU;
        let chord = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, std::f64::consts::TAU * delta)).norm();
        assert!(chord >= std::f64::consts::TAU * delta / 2.0);
        assert!(chord <= std::f64::consts::TAU * delta);
    }
}

#[test]
fn liouville_phase_bound() {
    let seq = LiouvilleSeq::build(&[2, 2], 3).unwrap();
    for n in 1..=2 {
        let c = check_small(&seq, n).unwrap();
        let (_, hi) = c.scaled_distance().unwrap().clone();
        let scale = qphi::liouville::factorial(seq.a(n).try_into().unwrap());
        let dist = hi / BigRational::from_integer(scale.clone().into());
        let tau = std::f64::consts::TAU;
        let x = rational_to_f64(&dist);
        let chord = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, tau * x)).norm();
        assert!(chord <= tau * x * (1.0 + 1e-12));
        assert!(dist < BigRational::new(BigInt::one(), scale.into()));
    }
}

#[test]
fn weyl_average_converges_off_unit() {
    let kernel = LogKernel::plain(q(2, 1)).unwrap();
    let target = closed_form_integral(2.0).unwrap();
    for d in [2, 3, 5] {
        let a3 = weyl_average(&kernel, &sqrt(d), 1_000).unwrap().to_f64();
        let a5 = weyl_average(&kernel, &sqrt(d), 100_000).unwrap().to_f64();
        assert!((a5 - target).abs() < (a3 - target).abs());
    }
}

#[test]
fn affine_transfer_is_sound() {
    let affine = parse_angle("affine:1/2*sqrt2+1/3").unwrap();
    let scanned = bad_approx_constant(&affine, 10_000).unwrap();
    let base = bad_approx_constant(&sqrt(2), 1_000_000).unwrap();
    let transferred = affine_transfer(base.min_value.to_f64(), &q(1, 2), &q(1, 3)).unwrap();
    assert!(scanned.min_value.upper() >= transferred - base.min_value.abs_error());
}

#[test]
fn liouville_quotients_grow() {
    let cf = cf_expand(&liouville22(), 40).unwrap();
    assert!(cf.preperiod.iter().any(|a| *a > BigInt::from(1000)));
}

#[test]
fn qq_root_collapses_at_witnesses() {
    let pts = root_test_sequence(&ComplexParam::q(), &liouville22(), &[8, 645_120]).unwrap();
    assert!(pts[0].value_bounds().1 < 0.62);
    assert!(pts[1].value_bounds().1 < 1e-4);
}

#[test]
fn naive_oracle_agrees_with_root_test() {
    let pts = root_test_sequence(&ComplexParam::polar(q(3, 1), q(1, 7)), &sqrt(3), &[5_000]).unwrap();
    let naive = common::naive_log_poch(3.0, 1.0 / 7.0, 0.0, 3f64.sqrt(), 5_000) / 5_000.0;
    assert!((pts[0].log_mean.to_f64() - naive).abs() < 1e-10);
}
