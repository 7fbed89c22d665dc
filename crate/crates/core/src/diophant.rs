//! Continued fractions, convergents and the constant `min m ||m theta||`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{
    dist_to_nearest_integer, rational_to_f64, round_up, AngleSpec, BoundedReal, LinearPhase,
    PhaseEngine,
};
use crate::liouville::{factorial, ln_factorial_bounds, LiouvilleSeq};

/// Largest `M` scanned index by index.
pub const FULL_SCAN_CAP: u64 = 1_000_000;

/// Iteration cap for the periodic surd recurrence.
const PERIOD_SEARCH_CAP: usize = 1 << 20;

const SCAN_BLOCK: u64 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    /// `a_0` always sits here, even when the expansion is purely periodic.
    pub preperiod: Vec<BigInt>,
    pub period: Vec<BigInt>,
    pub truncated: bool,
    /// Fewer quotients than requested could be certified.
    #[serde(default)]
    pub guard_limited: bool,
}

impl ContinuedFraction {
    /// The first `n` partial quotients, unrolling the period.
    pub fn quotients(&self, n: usize) -> Vec<BigInt> {
        let mut out: Vec<BigInt> = self.preperiod.iter().take(n).cloned().collect();
        if !self.period.is_empty() {
            out.extend(self.period.iter().cycle().take(n - out.len()).cloned());
        }
        out
    }

    /// Number of available quotients, `None` when unbounded.
    pub fn available(&self) -> Option<usize> {
        self.period.is_empty().then_some(self.preperiod.len())
    }
}

/// Partial quotients of `theta`.
///
/// Surd-valued angles get their exact eventually periodic expansion. For a
/// Liouville angle the quotients of the exact partial sum are emitted only
/// while the whole interval `(partial, partial + tail)` stays inside a single
/// continued-fraction cylinder, so each emitted quotient is one of `theta`'s.
pub fn cf_expand(spec: &AngleSpec, max_terms: usize) -> Result<ContinuedFraction> {
    if max_terms == 0 {
        return Err(Error::Precondition("max_terms must be positive".into()));
    }
    match spec {
        AngleSpec::LiouvilleTheta {
            k_seq,
            depth,
            shift,
        } => {
            let seq = LiouvilleSeq::build(k_seq, *depth)?;
            liouville_cf(&seq, shift, max_terms)
        }
        _ => {
            let s = spec
                .as_surd()
                .ok_or_else(|| Error::RationalValue(spec.to_string()))?;
            Ok(surd_cf(s.reduced_state(), max_terms))
        }
    }
}

/// `floor((p + sqrt(d)) / q)` for non-square `d`.
fn floor_state(p: &BigInt, root: &BigInt, q: &BigInt) -> BigInt {
    let num = p + root;
    if q.is_positive() {
        num.div_floor(q)
    } else {
        // -(p + sqrt d)/|q| is irrational, so floor = -floor((p + s)/|q|) - 1
        -(num.div_floor(&-q)) - 1
    }
}

fn surd_cf((mut p, d, mut q): (BigInt, BigInt, BigInt), max_terms: usize) -> ContinuedFraction {
    let root = d.sqrt();
    let mut quotients = Vec::new();
    let mut seen: HashMap<(BigInt, BigInt), usize> = HashMap::new();
    let cap = max_terms.max(PERIOD_SEARCH_CAP);
    for i in 0..cap {
        if i >= 1 {
            if let Some(&start) = seen.get(&(p.clone(), q.clone())) {
                let period = quotients.split_off(start);
                return ContinuedFraction {
                    preperiod: quotients,
                    period,
                    truncated: false,
                    guard_limited: false,
                };
            }
            seen.insert((p.clone(), q.clone()), i);
        }
        let a = floor_state(&p, &root, &q);
        let p_next = &a * &q - &p;
        q = (&d - &p_next * &p_next) / &q;
        p = p_next;
        quotients.push(a);
    }
    ContinuedFraction {
        preperiod: quotients,
        period: Vec::new(),
        truncated: true,
        guard_limited: false,
    }
}

/// Plain expansion of a rational.
fn rational_cf(x: &BigRational) -> Vec<BigInt> {
    let (mut n, mut d) = (x.numer().clone(), x.denom().clone());
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a);
        n = d;
        d = r;
    }
    out
}

/// Whether `gap >= 1 / (a_D a_D!)`, i.e. the gap exceeds every admissible tail.
fn gap_exceeds_tail(gap: &BigRational, a_d: &BigUint) -> bool {
    if !gap.is_positive() {
        return false;
    }
    if let Some(v) = a_d.to_u64().filter(|&v| v <= 2000) {
        let t = BigRational::new(BigInt::one(), (a_d * factorial(v)).into());
        return gap >= &t;
    }
    let ln_gap = crate::exactnum::ln_biguint(gap.numer().magnitude())
        - crate::exactnum::ln_biguint(gap.denom().magnitude());
    let (fact_lo, _) = ln_factorial_bounds(a_d);
    let ln_tail = -crate::exactnum::ln_biguint(a_d) - fact_lo;
    ln_gap > ln_tail + 1e-6 * (1.0 + ln_tail.abs())
}

fn liouville_cf(seq: &LiouvilleSeq, shift: &BigRational, max_terms: usize) -> Result<ContinuedFraction> {
    let d = seq.depth();
    let x = seq.partial_sum(d) + shift;
    let a_d = seq.a(d);
    // theta lies in (x, x + T) with T < 2/a_{D+1} <= 1/(a_D a_D!)
    let plain = rational_cf(&x);
    // x is also [.., a_last - 1, 1]; theta's expansion continues whichever
    // form makes x the endpoint of a cylinder lying above it
    let mut alt = plain.clone();
    let last = alt.pop().expect("nonempty expansion");
    if last > BigInt::one() || alt.is_empty() {
        alt.push(last - 1);
        alt.push(BigInt::one());
    } else {
        let prev = alt.pop().expect("length at least two");
        alt.push(prev + 1);
    }
    let best = [plain, alt]
        .into_iter()
        .map(|form| valid_prefix(&form, &x, a_d))
        .max_by_key(|v| v.len())
        .unwrap_or_default();
    let guard_limited = best.len() < max_terms;
    let mut preperiod = best;
    preperiod.truncate(max_terms);
    Ok(ContinuedFraction {
        preperiod,
        period: Vec::new(),
        truncated: true,
        guard_limited,
    })
}

/// Longest prefix of `form` whose cylinder contains `(x, x + T)`.
fn valid_prefix(form: &[BigInt], x: &BigRational, a_d: &BigUint) -> Vec<BigInt> {
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut out = Vec::new();
    for (j, a) in form.iter().enumerate() {
        if j > 0 && !a.is_positive() {
            break;
        }
        let p = a * &p1 + &p2;
        let q = a * &q1 + &q2;
        // cylinder of [a_0; ..., a_j] between p/q and (p + p1)/(q + q1)
        let e1 = BigRational::new(p.clone(), q.clone());
        let e2 = BigRational::new(&p + &p1, &q + &q1);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let inside = x >= &lo && gap_exceeds_tail(&(&hi - x), a_d);
        if !inside {
            break;
        }
        out.push(a.clone());
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    out
}

/// Convergents `p_k / q_k` for `k < depth`.
pub fn convergents(cf: &ContinuedFraction, depth: usize) -> Result<Vec<(BigInt, BigInt)>> {
    if let Some(avail) = cf.available() {
        if depth > avail {
            return Err(Error::InsufficientDepth {
                depth: avail,
                detail: format!("{depth} convergents requested"),
            });
        }
    }
    let mut out = Vec::with_capacity(depth);
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    for a in cf.quotients(depth) {
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        out.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
    }
    Ok(out)
}

/// Finite-scan estimate of `inf_m m ||m theta||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineConstant {
    pub scan_limit: u64,
    pub min_value: BoundedReal,
    pub argmin_m: u64,
}

/// `min_{m <= M} m ||m theta||`. Full scan up to `10^6`; beyond that only
/// convergent denominators are inspected, since `q_k <= m < q_{k+1}` gives
/// `m ||m theta|| >= q_k ||q_k theta||`.
pub fn bad_approx_constant(spec: &AngleSpec, big_m: u64) -> Result<DiophantineConstant> {
    if big_m == 0 {
        return Err(Error::Precondition("scan limit must be positive".into()));
    }
    let full = big_m.min(FULL_SCAN_CAP);
    let (mut best_v, mut best_m) = scan_min(spec, full)?;
    if big_m > full {
        for m in convergent_denominators(spec, full + 1, big_m)? {
            let v = dist_to_nearest_integer(spec, m)?.to_f64() * m as f64;
            if v < best_v {
                best_v = v;
                best_m = m;
            }
        }
    }
    let d = dist_to_nearest_integer(spec, best_m)?;
    let m_rat = BigRational::from_integer(best_m.into());
    let min_value = BoundedReal::new(d.value() * &m_rat, round_up(d.abs_error() * best_m as f64));
    Ok(DiophantineConstant {
        scan_limit: big_m,
        min_value,
        argmin_m: best_m,
    })
}

/// Deterministic parallel scan of `m ||m theta||` over `1..=limit`;
/// ties go to the smaller `m`.
fn scan_min(spec: &AngleSpec, limit: u64) -> Result<(f64, u64)> {
    let engine = PhaseEngine::new(spec, &LinearPhase::zero(), limit)?;
    let blocks: Vec<u64> = (0..limit.div_ceil(SCAN_BLOCK)).collect();
    let mins = blocks
        .par_iter()
        .map(|&b| {
            let start = 1 + b * SCAN_BLOCK;
            let end = (start + SCAN_BLOCK - 1).min(limit);
            let mut best = (f64::INFINITY, 0u64);
            for s in engine.iter(start).take((end - start + 1) as usize) {
                let s = s?;
                let v = s.dist * s.index as f64;
                if v < best.0 {
                    best = (v, s.index);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mins
        .into_iter()
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc }))
}

fn convergent_denominators(spec: &AngleSpec, lo: u64, hi: u64) -> Result<Vec<u64>> {
    let cf = cf_expand(spec, 256)?;
    let limit = BigInt::from(hi);
    let mut out = Vec::new();
    let mut depth = 1;
    loop {
        if let Some(avail) = cf.available() {
            if depth > avail {
                return Err(Error::InsufficientDepth {
                    depth: avail,
                    detail: format!("convergents stop before scan limit {hi}"),
                });
            }
        }
        let conv = convergents(&cf, depth)?;
        let q = &conv[depth - 1].1;
        if q > &limit {
            break;
        }
        let qu = q.to_u64().expect("bounded by the scan limit");
        if qu >= lo {
            out.push(qu);
        }
        depth += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    /// `min m ||m theta|| - bound`.
    pub min_margin: BoundedReal,
    pub argmin_m: u64,
    pub scan_limit: u64,
    /// Smallest `m` with `m ||m theta|| <= bound`, if any.
    pub first_failure: Option<u64>,
}

/// Checks `m ||m theta|| > bound` for all `m <= M`.
pub fn verify_lower_bound(spec: &AngleSpec, big_m: u64, bound: &BigRational) -> Result<BoundCheck> {
    let c = bad_approx_constant(spec, big_m)?;
    let margin = BoundedReal::new(c.min_value.value() - bound, c.min_value.abs_error());
    let holds = margin.lower() > 0.0;
    let first_failure = if holds {
        None
    } else {
        first_failure(spec, big_m.min(FULL_SCAN_CAP), rational_to_f64(bound))?
    };
    Ok(BoundCheck {
        holds,
        min_margin: margin,
        argmin_m: c.argmin_m,
        scan_limit: big_m,
        first_failure,
    })
}

fn first_failure(spec: &AngleSpec, limit: u64, bound: f64) -> Result<Option<u64>> {
    let engine = PhaseEngine::new(spec, &LinearPhase::zero(), limit)?;
    for s in engine.iter(1).take(limit as usize) {
        let s = s?;
        if (s.dist - s.dist_err()) * s.index as f64 <= bound {
            return Ok(Some(s.index));
        }
    }
    Ok(None)
}

/// `m ||m sqrt 2|| > 1/3` for all `m <= M`.
pub fn verify_sqrt2_inequality(big_m: u64) -> Result<BoundCheck> {
    verify_lower_bound(
        &AngleSpec::sqrt(2)?,
        big_m,
        &BigRational::new(1.into(), 3.into()),
    )
}

/// Constant for `r1 theta + r2` given a constant `c` for `theta`:
/// `c / (|k1| m1 m2^2)` with `r1 = k1/m1`, `r2 = k2/m2`.
pub fn affine_transfer(c: f64, r1: &BigRational, r2: &BigRational) -> Result<f64> {
    if r1.is_zero() {
        return Err(Error::Precondition("r1 must be nonzero".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Precondition("constant must be positive".into()));
    }
    let den = r1.numer().abs() * r1.denom() * r2.denom() * r2.denom();
    let den = rational_to_f64(&BigRational::from_integer(den));
    Ok(c / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::parse_angle;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| x.into()).collect()
    }

    #[test]
    fn surd_expansions() {
        let cf = cf_expand(&AngleSpec::sqrt(2).unwrap(), 10).unwrap();
        assert_eq!((cf.preperiod.clone(), cf.period.clone()), (ints(&[1]), ints(&[2])));
        let g = parse_angle("surd:(1+1*sqrt5)/2").unwrap();
        let cf = cf_expand(&g, 10).unwrap();
        assert_eq!((cf.preperiod, cf.period), (ints(&[1]), ints(&[1])));
        let cf = cf_expand(&AngleSpec::sqrt(7).unwrap(), 10).unwrap();
        assert_eq!((cf.preperiod, cf.period), (ints(&[2]), ints(&[1, 1, 1, 4])));
        // negative and shifted surds
        let cf = cf_expand(&parse_angle("affine:-1*sqrt2+0").unwrap(), 10).unwrap();
        assert_eq!(cf.quotients(4), ints(&[-2, 1, 1, 2]));
    }

    #[test]
    fn convergent_examples() {
        let cf = ContinuedFraction {
            preperiod: ints(&[1, 2, 2]),
            period: vec![],
            truncated: true,
            guard_limited: false,
        };
        let c = convergents(&cf, 3).unwrap();
        let c: Vec<(i64, i64)> = c.iter().map(|(p, q)| (p.to_i64().unwrap(), q.to_i64().unwrap())).collect();
        assert_eq!(c, vec![(1, 1), (3, 2), (7, 5)]);
        assert!(convergents(&cf, 4).is_err());
    }

    #[test]
    fn liouville_expansion_is_guarded() {
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let cf = cf_expand(&l, 8).unwrap();
        assert!(cf.truncated);
        assert_eq!(cf.preperiod[..5], ints(&[0, 1, 1, 1, 2])[..]);
        let all = cf_expand(&l, 100).unwrap();
        assert!(all.preperiod.iter().any(|a| a > &BigInt::from(1000)));
    }

    #[test]
    fn scan_examples() {
        let c = bad_approx_constant(&AngleSpec::sqrt(2).unwrap(), 10_000).unwrap();
        assert_eq!(c.argmin_m, 2);
        assert!((c.min_value.to_f64() - 0.343_145_750_507_619_8).abs() < 1e-12);
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let c = bad_approx_constant(&l, 10).unwrap();
        assert_eq!(c.argmin_m, 8);
        assert!((c.min_value.to_f64() - 8.0 / 80640.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt2_small_and_liouville_failure() {
        let r = verify_sqrt2_inequality(1).unwrap();
        assert!(r.holds);
        assert!((r.min_margin.to_f64() - (std::f64::consts::SQRT_2 - 1.0 - 1.0 / 3.0)).abs() < 1e-12);
        let l = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let r = verify_lower_bound(&l, 100, &BigRational::new(1.into(), 3.into())).unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_failure, Some(8));
    }

    #[test]
    fn transfer_examples() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let c = 0.3;
        assert!((affine_transfer(c, &q(1, 1), &q(0, 1)).unwrap() - c).abs() < 1e-15);
        assert!((affine_transfer(c, &q(1, 2), &q(1, 3)).unwrap() - c / 18.0).abs() < 1e-15);
        assert!((affine_transfer(c, &q(-2, 1), &q(0, 1)).unwrap() - c / 2.0).abs() < 1e-15);
        assert!(affine_transfer(c, &q(0, 1), &q(0, 1)).is_err());
    }
}
