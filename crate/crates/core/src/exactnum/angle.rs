use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{
    exp_upper, format_rational, parse_rational, round_up, BoundedReal, LinearPhase, PhaseEngine,
    QuadraticSurd, MAX_PRECISION_BITS,
};
use crate::error::{syntax, Error, Result};
use crate::liouville::{LiouvilleSeq, MAX_DEPTH};

/// An exactly specified irrational angle `theta`, so that `q = e^{2 pi i theta}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AngleSpec {
    Surd(QuadraticSurd),
    /// `r1 * base + r2` with `r1 != 0`.
    AffineOfSurd {
        r1: BigRational,
        base: QuadraticSurd,
        r2: BigRational,
    },
    /// `shift + sum_{n >= 1} 1/a_n` with `a_1 = 2`, `a_{n+1} = k_{n+1} a_n a_n!`.
    /// `k_seq` lists `k_2, k_3, ...`; only `a_1..a_depth` are materialized and
    /// the remaining tail is carried as a certified bound.
    LiouvilleTheta {
        k_seq: Vec<u8>,
        depth: usize,
        shift: BigRational,
    },
}

/// What the phase engines actually compute with.
pub(crate) enum ThetaForm {
    Surd(QuadraticSurd),
    /// `theta = partial + t`, `ln t in (tail_ln.0, tail_ln.1)`.
    Liouville {
        partial: BigRational,
        tail_ln: (f64, f64),
    },
}

impl AngleSpec {
    pub fn sqrt(d: u64) -> Result<Self> {
        Ok(Self::Surd(QuadraticSurd::sqrt(d)?))
    }

    pub fn affine(r1: BigRational, base: QuadraticSurd, r2: BigRational) -> Result<Self> {
        if r1.is_zero() {
            return Err(Error::RationalValue(format!(
                "0*{base}+{}",
                format_rational(&r2)
            )));
        }
        Ok(Self::AffineOfSurd { r1, base, r2 })
    }

    pub fn liouville(k_seq: Vec<u8>, depth: usize, shift: BigRational) -> Result<Self> {
        if depth == 0 {
            return Err(syntax("liouville", "depth must be at least 1"));
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthCap {
                requested: depth,
                cap: MAX_DEPTH,
            });
        }
        if let Some(k) = k_seq.iter().find(|k| !matches!(k, 2 | 3)) {
            return Err(syntax("liouville", format!("k = {k} not in {{2, 3}}")));
        }
        if k_seq.len() + 1 < depth {
            return Err(syntax(
                "liouville",
                format!("depth {depth} needs {} multipliers", depth - 1),
            ));
        }
        Ok(Self::LiouvilleTheta {
            k_seq,
            depth,
            shift,
        })
    }

    /// Surd-valued specs folded into a single `(p + m sqrt d)/c`.
    pub fn as_surd(&self) -> Option<QuadraticSurd> {
        match self {
            Self::Surd(s) => Some(s.clone()),
            Self::AffineOfSurd { r1, base, r2 } => base.affine(r1, r2).ok(),
            Self::LiouvilleTheta { .. } => None,
        }
    }

    pub fn is_liouville(&self) -> bool {
        matches!(self, Self::LiouvilleTheta { .. })
    }

    /// Denominator sequence of a Liouville spec.
    pub fn liouville_seq(&self) -> Option<Result<LiouvilleSeq>> {
        match self {
            Self::LiouvilleTheta { k_seq, depth, .. } => {
                Some(LiouvilleSeq::build(k_seq, *depth))
            }
            _ => None,
        }
    }

    pub(crate) fn form(&self) -> Result<ThetaForm> {
        match self {
            Self::Surd(_) | Self::AffineOfSurd { .. } => Ok(ThetaForm::Surd(
                self.as_surd()
                    .ok_or_else(|| Error::RationalValue(self.to_string()))?,
            )),
            Self::LiouvilleTheta {
                k_seq,
                depth,
                shift,
            } => {
                let seq = LiouvilleSeq::build(k_seq, *depth)?;
                let partial = seq.partial_sum(*depth) + shift;
                Ok(ThetaForm::Liouville {
                    partial,
                    tail_ln: seq.tail_ln_bounds(*depth),
                })
            }
        }
    }

    /// Rough f64 value for display and heuristics only.
    pub fn approx_f64(&self) -> f64 {
        match eval_angle(self, 64) {
            Ok(b) => b.to_f64(),
            Err(_) => f64::NAN,
        }
    }
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Surd(s) => write!(f, "surd:{s}"),
            Self::AffineOfSurd { r1, base, r2 } => {
                let base = if base.p().is_zero() && base.c().is_one() && base.mult().is_one() {
                    format!("sqrt{}", base.d())
                } else {
                    base.to_string()
                };
                write!(f, "affine:{}*{}", format_rational(r1), base)?;
                if r2.is_negative() {
                    write!(f, "-{}", format_rational(&-r2))
                } else {
                    write!(f, "+{}", format_rational(r2))
                }
            }
            Self::LiouvilleTheta {
                k_seq,
                depth,
                shift,
            } => {
                let ks: Vec<String> = k_seq.iter().map(|k| k.to_string()).collect();
                write!(f, "liouville:{}", ks.join(","))?;
                if *depth != k_seq.len() + 1 {
                    write!(f, ";depth={depth}")?;
                }
                if !shift.is_zero() {
                    write!(f, ";shift={}", format_rational(shift))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for AngleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_angle(s)
    }
}

impl TryFrom<String> for AngleSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        parse_angle(&s)
    }
}

impl From<AngleSpec> for String {
    fn from(a: AngleSpec) -> String {
        a.to_string()
    }
}

/// Parse `sqrt<d>`, `(<p>+<mult>*sqrt<d>)/<c>` (a `-` sign is also accepted)
/// or a bare `<mult>*sqrt<d>`.
fn parse_surd(text: &str) -> Result<QuadraticSurd> {
    let t = text.trim();
    let bad = || syntax("surd", t.to_string());
    let radicand = |s: &str| -> Result<u64> {
        s.trim()
            .strip_prefix("sqrt")
            .ok_or_else(bad)?
            .trim()
            .parse::<u64>()
            .map_err(|_| bad())
    };
    if let Some(rest) = t.strip_prefix('(') {
        let (inner, c) = rest.split_once(")/").ok_or_else(bad)?;
        let c: BigInt = c.trim().parse().map_err(|_| bad())?;
        // split at the sign that separates p from the surd term
        let pos = inner
            .char_indices()
            .skip(1)
            .find(|&(_, ch)| ch == '+' || ch == '-')
            .map(|(i, _)| i)
            .ok_or_else(bad)?;
        let (p, term) = inner.split_at(pos);
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let neg = term.starts_with('-');
        let term = &term[1..];
        let (mult, d) = match term.split_once('*') {
            Some((m, r)) => (m.trim().parse::<BigInt>().map_err(|_| bad())?, radicand(r)?),
            None => (BigInt::one(), radicand(term)?),
        };
        let mult = if neg { -mult } else { mult };
        return QuadraticSurd::new(p, mult, c, d);
    }
    match t.split_once('*') {
        Some((m, r)) => {
            let mult: BigInt = m.trim().parse().map_err(|_| bad())?;
            QuadraticSurd::new(BigInt::zero(), mult, BigInt::one(), radicand(r)?)
        }
        None => QuadraticSurd::sqrt(radicand(t)?),
    }
}

/// Parse an angle from the textual grammar:
/// `surd:sqrt<d>`, `surd:(<p>+<mult>*sqrt<d>)/<c>`, `affine:<r1>*sqrt<d>+<r2>`,
/// `liouville:<k2>,<k3>,...[;shift=<r>][;depth=<n>]`.
pub fn parse_angle(text: &str) -> Result<AngleSpec> {
    let t = text.trim();
    let (kind, body) = t
        .split_once(':')
        .ok_or_else(|| syntax("angle", format!("missing kind prefix in {t:?}")))?;
    match kind.trim() {
        "surd" => Ok(AngleSpec::Surd(parse_surd(body)?)),
        "affine" => {
            let bad = || syntax("affine", body.to_string());
            let (r1, rest) = body.split_once('*').ok_or_else(bad)?;
            let r1 = parse_rational(r1)?;
            // surd part runs to the last top-level sign
            let rest = rest.trim();
            let depth0 = |i: usize| rest[..i].matches('(').count() == rest[..i].matches(')').count();
            let pos = rest
                .char_indices()
                .rev()
                .find(|&(i, ch)| (ch == '+' || ch == '-') && i > 0 && depth0(i))
                .map(|(i, _)| i);
            let (base, r2) = match pos {
                Some(i) => {
                    let (b, r) = rest.split_at(i);
                    let r2 = if let Some(r) = r.strip_prefix('+') {
                        parse_rational(r)?
                    } else {
                        -parse_rational(&r[1..])?
                    };
                    (b, r2)
                }
                None => (rest, BigRational::zero()),
            };
            AngleSpec::affine(r1, parse_surd(base)?, r2)
        }
        "liouville" => {
            let mut parts = body.split(';');
            let ks = parts.next().unwrap_or("").trim();
            let k_seq = if ks.is_empty() {
                Vec::new()
            } else {
                ks.split(',')
                    .map(|k| {
                        k.trim()
                            .parse::<u8>()
                            .map_err(|_| syntax("liouville", format!("bad multiplier {k:?}")))
                    })
                    .collect::<Result<Vec<u8>>>()?
            };
            let mut shift = BigRational::zero();
            let mut depth = k_seq.len() + 1;
            for opt in parts {
                let (key, val) = opt
                    .split_once('=')
                    .ok_or_else(|| syntax("liouville", format!("bad option {opt:?}")))?;
                match key.trim() {
                    "shift" => shift = parse_rational(val)?,
                    "depth" => {
                        depth = val
                            .trim()
                            .parse()
                            .map_err(|_| syntax("liouville", format!("bad depth {val:?}")))?
                    }
                    other => return Err(syntax("liouville", format!("unknown option {other}"))),
                }
            }
            AngleSpec::liouville(k_seq, depth, shift)
        }
        other => Err(syntax("angle", format!("unknown kind {other:?}"))),
    }
}

/// Value of `theta` with `abs_error <= 2^(1 - precision_bits) (1 + |value|)`
/// plus, for Liouville specs, the tail bound.
pub fn eval_angle(spec: &AngleSpec, precision_bits: u64) -> Result<BoundedReal> {
    if !(8..=MAX_PRECISION_BITS).contains(&precision_bits) {
        return Err(Error::Precondition(format!(
            "precision_bits must lie in [8, {MAX_PRECISION_BITS}]"
        )));
    }
    let w = precision_bits + 8;
    match spec.form()? {
        ThetaForm::Surd(s) => {
            let guard = w + s.mult().bits();
            let root = (BigUint::from(s.d()) << (2 * guard)).sqrt();
            let scale = BigInt::one() << guard;
            // sqrt(d) 2^guard in [root, root + 1): take the midpoint
            let twice = (s.p() * &scale * 2) + s.mult() * (BigInt::from(root) * 2 + 1);
            let value = BigRational::new(twice, s.c() * &scale * 2);
            let err = super::rational_to_f64(&BigRational::new(
                s.mult().abs(),
                s.c() * &scale * 2,
            ));
            Ok(BoundedReal::new(value, round_up(err)))
        }
        ThetaForm::Liouville { partial, tail_ln } => {
            // round the exact partial sum to w bits to keep the centre small
            let scale = BigInt::one() << w;
            let scaled = (&partial * BigRational::from_integer(scale.clone())).floor();
            let value = BigRational::new(scaled.to_integer(), scale);
            let err = 2f64.powi(-(w as i32)) + exp_upper(tail_ln.1);
            Ok(BoundedReal::new(value, round_up(err)))
        }
    }
}

/// Fractional part of `k theta` in `[0, 1)` with error at most `target_error`.
pub fn frac_multiple(spec: &AngleSpec, k: u64, target_error: f64) -> Result<BoundedReal> {
    if !(target_error > 0.0 && target_error < 0.25) {
        return Err(Error::Precondition(
            "target_error must lie in (0, 1/4)".into(),
        ));
    }
    if k == 0 {
        return Ok(BoundedReal::exact(BigRational::zero()));
    }
    let engine = PhaseEngine::new(spec, &LinearPhase::zero(), k)?;
    engine.exact_frac(k, target_error)
}

/// `||k theta||`, the distance from `k theta` to the nearest integer.
pub fn dist_to_nearest_integer(spec: &AngleSpec, k: u64) -> Result<BoundedReal> {
    if k == 0 {
        return Err(Error::Precondition("k must be positive".into()));
    }
    let frac = frac_multiple(spec, k, 1e-30)
        .or_else(|_| frac_multiple(spec, k, 1e-15))?;
    let half = BigRational::new(1.into(), 2.into());
    let v = frac.value().clone();
    let d = if v > half { BigRational::one() - v } else { v };
    Ok(BoundedReal::new(d, frac.abs_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_angle("surd:sqrt2").unwrap(),
            AngleSpec::Surd(QuadraticSurd::sqrt(2).unwrap())
        );
        let a = parse_angle("affine:1/2*sqrt2+1/3").unwrap();
        assert_eq!(
            a,
            AngleSpec::AffineOfSurd {
                r1: q(1, 2),
                base: QuadraticSurd::sqrt(2).unwrap(),
                r2: q(1, 3)
            }
        );
        assert!(matches!(
            parse_angle("affine:0*sqrt2+1/3"),
            Err(Error::RationalValue(_))
        ));
        assert!(matches!(parse_angle("surd:sqrt8"), Err(Error::NotSquareFree(8))));
        assert!(matches!(parse_angle("surd:sqrt1"), Err(Error::NotSquareFree(1))));
        assert!(parse_angle("cubic:2").is_err());
        assert!(parse_angle("surd:sqrtx").is_err());
        let g = parse_angle("surd:(1+1*sqrt5)/2").unwrap();
        assert!((g.approx_f64() - 1.618033988749895).abs() < 1e-15);
        let l = parse_angle("liouville:2,2;shift=1/4").unwrap();
        assert_eq!(l, AngleSpec::liouville(vec![2, 2], 3, q(1, 4)).unwrap());
        assert!(parse_angle("liouville:2,5").is_err());
        assert!(parse_angle("liouville:2;depth=3").is_err());
    }

    #[test]
    fn display_round_trips() {
        for t in [
            "surd:sqrt2",
            "surd:(1+1*sqrt5)/2",
            "surd:(3-2*sqrt7)/5",
            "affine:1/2*sqrt2+1/3",
            "affine:-2*sqrt3-1/7",
            "affine:1*(1+1*sqrt5)/2+0",
            "liouville:2,2",
            "liouville:3;shift=-1/4",
            "liouville:2,3,2;depth=2",
        ] {
            let a = parse_angle(t).unwrap();
            assert_eq!(parse_angle(&a.to_string()).unwrap(), a, "{t}");
        }
    }

    #[test]
    fn eval_sqrt2_against_integer_root() {
        let b = eval_angle(&AngleSpec::sqrt(2).unwrap(), 64).unwrap();
        assert!(b.abs_error() <= 2f64.powi(-60));
        // oracle: isqrt(2 * 4^80) / 2^80
        let root = (BigUint::from(2u32) << 160u32).sqrt();
        let lo = BigRational::new(root.clone().into(), (BigInt::one() << 80u32).clone());
        assert!(b.contains(&lo));
        assert!((b.to_f64() - std::f64::consts::SQRT_2).abs() < 1e-16);
    }

    #[test]
    fn eval_affine_and_liouville() {
        let a = parse_angle("affine:1*sqrt2-1").unwrap();
        let b = eval_angle(&a, 64).unwrap();
        assert!((b.to_f64() - (std::f64::consts::SQRT_2 - 1.0)).abs() < 2e-16, "{}", b.to_f64());
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let b = eval_angle(&l, 64).unwrap();
        let exact = q(1, 2) + q(1, 8) + q(1, 645120);
        assert!(b.contains(&exact));
        assert!((b.to_f64() - 0.625_001_550_099_206_3).abs() < 1e-15);
    }

    #[test]
    fn frac_multiple_examples() {
        let s2 = AngleSpec::sqrt(2).unwrap();
        assert!(frac_multiple(&s2, 0, 1e-12).unwrap().value().is_zero());
        let f = frac_multiple(&s2, 2, 1e-12).unwrap();
        assert!((f.to_f64() - (2.0 * std::f64::consts::SQRT_2 - 2.0)).abs() < 1e-15);
        assert!(f.abs_error() <= 1e-12);
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let f = frac_multiple(&l, 8, 1e-12).unwrap();
        assert!(f.contains(&q(1, 80640)));
        assert!((f.to_f64() - 1.240_079_365_079_365e-5).abs() < 1e-18);
        assert!(frac_multiple(&s2, 3, 0.5).is_err());
    }

    #[test]
    fn distances() {
        let s2 = AngleSpec::sqrt(2).unwrap();
        let d5 = dist_to_nearest_integer(&s2, 5).unwrap().to_f64();
        assert!((d5 - (5.0 * std::f64::consts::SQRT_2 - 7.0)).abs() < 1e-14, "{d5}");
        let d2 = dist_to_nearest_integer(&s2, 2).unwrap().to_f64();
        assert!((d2 - (3.0 - 2.0 * std::f64::consts::SQRT_2)).abs() < 1e-15);
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let d8 = dist_to_nearest_integer(&l, 8).unwrap();
        assert!((d8.to_f64() - 1.0 / 80640.0).abs() < 1e-18);
        assert!(dist_to_nearest_integer(&s2, 0).is_err());
        let _ = d8.value().to_f64();
    }
}
