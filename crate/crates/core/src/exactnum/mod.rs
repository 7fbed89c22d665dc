//! Exact and error-bounded arithmetic for angles `theta` with `q = e^{2 pi i theta}`.
//!
//! Quadratic surds are handled in fixed point against an exact integer square
//! root, Liouville-type angles in exact rationals with a certified tail bound.

mod angle;
mod bounded;
mod phase;
mod surd;

pub use angle::{dist_to_nearest_integer, eval_angle, frac_multiple, parse_angle, AngleSpec};
pub use bounded::BoundedReal;
pub use phase::{precision_for_index, LinearPhase, PhaseEngine, PhaseIter, PhaseSample};
pub use surd::QuadraticSurd;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational;

/// Hard ceiling on working precision for any single fixed-point evaluation.
pub const MAX_PRECISION_BITS: u64 = 4096;

pub(crate) const EPS: f64 = f64::EPSILON;

/// Parse `a`, `-a`, `a/b` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> crate::Result<BigRational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(crate::error::syntax("rational", "empty"));
    }
    let bad = || crate::error::syntax("rational", t.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(crate::error::syntax("rational", "zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_digits = ip.trim_start_matches(['-', '+']);
        let whole: BigInt = if ip_digits.is_empty() {
            BigInt::zero()
        } else {
            ip_digits.parse().map_err(|_| bad())?
        };
        let frac: BigInt = fp.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10u32), fp.len());
        let mag = BigRational::new(whole * &scale + frac, scale);
        return Ok(if neg { -mag } else { mag });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Text form `n` or `n/d` that [`parse_rational`] reads back.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Natural log of a positive big integer, relative error a few ulps.
pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 960 {
        x.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// `num / den` as f64 without overflowing for very wide operands.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let (nb, db) = (num.bits(), den.bits());
    if nb <= 960 && db <= 960 {
        return num.to_f64().unwrap() / den.to_f64().unwrap();
    }
    let ns = nb.saturating_sub(64);
    let ds = db.saturating_sub(64);
    let n = (num >> ns).to_f64().unwrap();
    let d = (den >> ds).to_f64().unwrap();
    let e = ns as i64 - ds as i64;
    let e = e.clamp(-2000, 2000) as i32;
    // split the scaling so intermediate powers stay finite
    (n / d) * 2f64.powi(e / 2) * 2f64.powi(e - e / 2)
}

/// Exact rational to f64 with a small relative error.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let mag = ratio_to_f64(r.numer().magnitude(), r.denom().magnitude());
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Round a nonnegative bound up so that the f64 result is never below it.
pub(crate) fn round_up(x: f64) -> f64 {
    if x.is_nan() {
        return f64::INFINITY;
    }
    if x <= 0.0 {
        return f64::from_bits(1);
    }
    x * (1.0 + 4.0 * EPS) + f64::from_bits(1)
}

/// `exp(ln_bound)` as an upper bound that survives underflow.
pub(crate) fn exp_upper(ln_bound: f64) -> f64 {
    round_up(ln_bound.exp())
}

/// Least common multiple of positive integers.
pub(crate) fn lcm(a: &BigUint, b: &BigUint) -> BigUint {
    a.lcm(b)
}

pub(crate) fn to_bigint(x: &BigUint) -> BigInt {
    BigInt::from_biguint(Sign::Plus, x.clone())
}

/// Denominator as a `BigUint` (always positive in a normalized `BigRational`).
pub(crate) fn denom_u(r: &BigRational) -> BigUint {
    r.denom().magnitude().clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("2/6").unwrap(), BigRational::new(1.into(), 3.into()));
        assert_eq!(parse_rational("-3").unwrap(), BigRational::from_integer((-3).into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-0.5").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn wide_ratio_and_log() {
        let big = BigUint::one() << 5000u32;
        let r = ratio_to_f64(&(&big * 3u32), &(&big * 4u32));
        assert!((r - 0.75).abs() < 1e-15);
        let ln = ln_biguint(&big);
        assert!((ln - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn round_trip_format() {
        for s in ["0", "-7", "3/8", "-1/3"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
    }
}
