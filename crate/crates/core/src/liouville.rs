//! Liouville-type angles `theta = sum 1/a_n` with `a_1 = 2` and
//! `a_{n+1} = k_{n+1} a_n a_n!`, `k_n in {2, 3}`.
//!
//! Every verdict here is an exact rational comparison. Quantities at the
//! scale of `1/a_n!` are handled after multiplying through by `a_n!`, so the
//! comparisons stay between small rationals even when `a_n!` itself has
//! millions of digits.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{format_rational, ln_biguint, round_up, AngleSpec, BoundedReal, EPS};
use crate::qpoch::{log_abs_qpochhammer_partitioned, ComplexParam, RootTestPoint};

/// `a_4` already has about 3.5 million digits.
pub const MAX_DEPTH: usize = 4;

/// Largest `a_n` for which `(q;q)_{a_n}` is evaluated term by term.
pub const DIRECT_PRODUCT_CAP: u64 = 1_000_000;

/// Largest `a_n` whose factorial is spelled out in certificates.
const EXPLICIT_FACTORIAL_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiouvilleSeq {
    k_seq: Vec<u8>,
    denominators: Vec<BigUint>,
}

/// Product `lo * (lo + 1) * ... * hi` by binary splitting.
fn range_product(lo: u64, hi: u64) -> BigUint {
    if lo > hi {
        return BigUint::one();
    }
    if hi - lo < 32 {
        return (lo..=hi).fold(BigUint::one(), |acc, j| acc * j);
    }
    let mid = lo + (hi - lo) / 2;
    range_product(lo, mid) * range_product(mid + 1, hi)
}

pub fn factorial(n: u64) -> BigUint {
    range_product(1, n)
}

impl LiouvilleSeq {
    /// Exact denominators `a_1, ..., a_depth`.
    pub fn build(k_seq: &[u8], depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        if depth > MAX_DEPTH {
            return Err(Error::DepthCap {
                requested: depth,
                cap: MAX_DEPTH,
            });
        }
        if k_seq.len() + 1 < depth {
            return Err(Error::InsufficientDepth {
                depth,
                detail: format!("only {} multipliers given", k_seq.len()),
            });
        }
        if let Some(k) = k_seq.iter().find(|k| !matches!(k, 2 | 3)) {
            return Err(Error::Precondition(format!("multiplier {k} not in {{2, 3}}")));
        }
        let mut denominators = vec![BigUint::from(2u32)];
        for n in 1..depth {
            let prev = &denominators[n - 1];
            let prev_u = prev.to_u64().ok_or(Error::DepthCap {
                requested: depth,
                cap: n,
            })?;
            let next = BigUint::from(k_seq[n - 1]) * prev * factorial(prev_u);
            denominators.push(next);
        }
        Ok(Self {
            k_seq: k_seq.to_vec(),
            denominators,
        })
    }

    pub fn depth(&self) -> usize {
        self.denominators.len()
    }

    pub fn k_seq(&self) -> &[u8] {
        &self.k_seq
    }

    pub fn denominators(&self) -> &[BigUint] {
        &self.denominators
    }

    /// `a_n`, 1-based.
    pub fn a(&self, n: usize) -> &BigUint {
        &self.denominators[n - 1]
    }

    /// `k_n` for `n >= 2` when specified.
    pub fn k(&self, n: usize) -> Option<u8> {
        n.checked_sub(2).and_then(|i| self.k_seq.get(i).copied())
    }

    /// Possible values of `k_n`.
    fn k_range(&self, n: usize) -> (u8, u8) {
        self.k(n).map_or((2, 3), |k| (k, k))
    }

    /// `sum_{n <= big_n} 1/a_n`, exact, over the common denominator `a_{big_n}`.
    pub fn partial_sum(&self, big_n: usize) -> BigRational {
        let top = self.a(big_n);
        let num: BigUint = self.denominators[..big_n].iter().map(|a| top / a).sum();
        BigRational::new(num.into(), top.clone().into())
    }

    /// Bounds on `ln t` for the tail `t = sum_{n > big_n} 1/a_n`:
    /// `1/a_{N+1} < t < 1/a_{N+1} + 1/a_{N+1}^2`, with `a_{N+1}` ranging over
    /// the admissible multipliers when `k_{N+1}` is unspecified.
    pub(crate) fn tail_ln_bounds(&self, big_n: usize) -> (f64, f64) {
        let a = self.a(big_n);
        let ln_a = ln_biguint(a);
        let (fact_lo, fact_hi) = ln_factorial_bounds(a);
        let (k_min, k_max) = self.k_range(big_n + 1);
        let ln_next_min = (k_min as f64).ln() + ln_a + fact_lo;
        let ln_next_max = (k_max as f64).ln() + ln_a + fact_hi;
        let lo = -ln_next_max;
        let hi = -ln_next_min + (-ln_next_min).exp().ln_1p();
        let widen = |x: f64, up: bool| {
            if !x.is_finite() {
                return x;
            }
            let m = 16.0 * EPS * (1.0 + x.abs());
            if up {
                x + m
            } else {
                x - m
            }
        };
        (widen(lo, false), widen(hi, true))
    }

    /// The smallest admissible `a_{N+1}`, computed exactly.
    fn next_denominator_min(&self, big_n: usize) -> Result<BigUint> {
        if big_n < self.depth() {
            return Ok(self.a(big_n + 1).clone());
        }
        let a = self.a(big_n);
        let a_u = a.to_u64().filter(|&v| v <= DIRECT_PRODUCT_CAP).ok_or_else(|| {
            Error::DepthCap {
                requested: big_n + 1,
                cap: MAX_DEPTH,
            }
        })?;
        let (k_min, _) = self.k_range(big_n + 1);
        Ok(BigUint::from(k_min) * a * factorial(a_u))
    }
}

/// Exact denominators through `depth`.
pub fn build_denominators(k_seq: &[u8], depth: usize) -> Result<LiouvilleSeq> {
    LiouvilleSeq::build(k_seq, depth)
}

/// `ln(n!)` enclosed in `[lo, hi]`: exact summation of `ln j` for
/// `n <= 10^6`, Stirling with Robbins' remainder bounds beyond, and
/// `[f64::MAX, inf]` once `ln(n!)` leaves the f64 range.
pub fn ln_factorial_bounds(n: &BigUint) -> (f64, f64) {
    if let Some(nu) = n.to_u64().filter(|&v| v <= DIRECT_PRODUCT_CAP) {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for j in 2..=nu {
            let v = (j as f64).ln();
            let t = sum + v;
            comp += if sum.abs() >= v.abs() {
                (sum - t) + v
            } else {
                (v - t) + sum
            };
            sum = t;
        }
        let s = sum + comp;
        let err = 4.0 * EPS * s + 1e-300;
        return (s - err, s + err);
    }
    let ln_n = ln_biguint(n);
    let nf = ratio_f64(n);
    if !nf.is_finite() || !(nf * ln_n).is_finite() {
        return (f64::MAX, f64::INFINITY);
    }
    let (lo, hi) = stirling_bounds(nf, ln_n);
    let m = 16.0 * EPS * hi.abs();
    (lo - m, hi + m)
}

fn ratio_f64(n: &BigUint) -> f64 {
    n.to_f64().unwrap_or(f64::INFINITY)
}

/// Robbins: `ln n! = n ln n - n + ln(2 pi n)/2 + r`, `1/(12n+1) < r < 1/(12n)`.
pub fn stirling_bounds(n: f64, ln_n: f64) -> (f64, f64) {
    let base = n * ln_n - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln();
    (base + 1.0 / (12.0 * n + 1.0), base + 1.0 / (12.0 * n))
}

/// Exact partial sum of `theta` and the bound `2 / a_{N+1}` on what is left.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaPartial {
    pub value: BigRational,
    /// `2 / a_{N+1}` with the smallest admissible `a_{N+1}`.
    pub tail_bound: BigRational,
}

pub fn theta_partial(seq: &LiouvilleSeq, big_n: usize, shift: &BigRational) -> Result<ThetaPartial> {
    if big_n == 0 || big_n > seq.depth() {
        return Err(Error::InsufficientDepth {
            depth: seq.depth(),
            detail: format!("partial sum to N = {big_n} requested"),
        });
    }
    let value = seq.partial_sum(big_n) + shift;
    let next = seq.next_denominator_min(big_n)?;
    // a_{N+1} is even, so 2/a_{N+1} = 1/(a_{N+1}/2) already in lowest terms
    let half = next >> 1u32;
    let tail_bound = BigRational::new_raw(BigInt::one(), half.into());
    Ok(ThetaPartial { value, tail_bound })
}

/// Exact rational rendered for reports: a decimal prefix plus digit counts,
/// and the full fraction when it is short.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalJson {
    pub decimal: String,
    pub numerator_digits: u64,
    pub denominator_digits: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact: Option<String>,
}

impl RationalJson {
    pub fn new(r: &BigRational) -> Self {
        let digits = |x: &BigInt| ((x.bits() as f64) * std::f64::consts::LOG10_2).floor() as u64 + 1;
        let short = r.numer().bits() + r.denom().bits() <= 4096;
        Self {
            decimal: decimal_prefix(r, 30),
            numerator_digits: digits(r.numer()),
            denominator_digits: digits(r.denom()),
            exact: short.then(|| format_rational(r)),
        }
    }
}

/// Scientific-notation decimal with `sig` significant digits (truncated).
pub fn decimal_prefix(r: &BigRational, sig: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let neg = r.numer().sign() == num_bigint::Sign::Minus;
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    // exponent estimate from bit lengths, corrected below
    let est = ((num.bits() as f64 - den.bits() as f64) * std::f64::consts::LOG10_2).floor() as i64;
    let mut e = est - 1;
    let ten = BigUint::from(10u32);
    let scaled = |e: i64| -> BigUint {
        let shift = sig as i64 - 1 - e;
        if shift >= 0 {
            (&num * num_traits::pow(ten.clone(), shift as usize)) / &den
        } else {
            &num / (&den * num_traits::pow(ten.clone(), (-shift) as usize))
        }
    };
    let mut digits = scaled(e);
    while digits.to_string().len() > sig {
        e += 1;
        digits = scaled(e);
    }
    let s = digits.to_string();
    let (head, tail) = s.split_at(1);
    format!("{}{}.{}e{}", if neg { "-" } else { "" }, head, tail, e)
}

/// Exact check of `min_m |a_n theta - m| < 1/a_n!`.
///
/// All intervals are stored multiplied by `a_n!` ("scaled"), so the verdict
/// is `scaled_distance_upper < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessCertificate {
    pub n: usize,
    pub a_n: String,
    /// Digits of `a_n!`, the scale factor.
    pub scale_digits: u64,
    /// `a_n! * min_m |a_n theta - m|`, open interval.
    pub scaled_distance_lower: Option<RationalJson>,
    pub scaled_distance_upper: Option<RationalJson>,
    /// `a_n! * sum_{k > n} a_n / a_k`, open interval.
    pub scaled_series_lower: RationalJson,
    pub scaled_series_upper: RationalJson,
    /// Unscaled distance interval and bound `1/a_n!` when `a_n!` is small.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distance_lower: Option<RationalJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distance_upper: Option<RationalJson>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<RationalJson>,
    /// `distance < 1/a_n!`.
    pub holds: bool,
    /// `distance <= sum_{k > n} a_n / a_k`.
    pub distance_le_series: bool,
    /// `sum_{k > n} a_n / a_k < 1/a_n!`.
    pub series_lt_bound: bool,
    #[serde(skip)]
    exact: Option<ExactScaled>,
}

#[derive(Clone, Debug, PartialEq)]
struct ExactScaled {
    dist: Option<(BigRational, BigRational)>,
    series: (BigRational, BigRational),
}

impl SmallnessCertificate {
    /// Exact scaled distance interval `(lo, hi)` when available.
    pub fn scaled_distance(&self) -> Option<&(BigRational, BigRational)> {
        self.exact.as_ref().and_then(|e| e.dist.as_ref())
    }

    pub fn scaled_series(&self) -> Option<&(BigRational, BigRational)> {
        self.exact.as_ref().map(|e| &e.series)
    }
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn biguint_rat(n: &BigUint) -> BigRational {
    BigRational::from_integer(n.clone().into())
}

/// Certificate for the smallness inequality at index `n` of
/// `theta = shift + sum 1/a_k`.
pub fn check_small(seq: &LiouvilleSeq, n: usize) -> Result<SmallnessCertificate> {
    check_small_shifted(seq, n, &BigRational::zero())
}

pub fn check_small_shifted(
    seq: &LiouvilleSeq,
    n: usize,
    shift: &BigRational,
) -> Result<SmallnessCertificate> {
    let depth = seq.depth();
    if n == 0 || n > depth {
        return Err(Error::InsufficientDepth {
            depth,
            detail: format!("certificate at n = {n} needs a_{n}"),
        });
    }
    let a_n = seq.a(n).clone();
    let a_n_u = a_n.to_u64();
    // a_n! exactly, when it is a by-product of a materialized a_{n+1}
    let fact: Option<BigUint> = if n < depth {
        let k = seq.k(n + 1).expect("multiplier of a materialized denominator");
        Some(seq.a(n + 1) / (BigUint::from(k) * &a_n))
    } else {
        None
    };
    let scale_digits = match &fact {
        Some(f) => f.to_string().len() as u64,
        None => {
            let (lo, _) = ln_factorial_bounds(&a_n);
            (lo / std::f64::consts::LN_10).floor() as u64 + 1
        }
    };

    // series S = a_n sum_{k>n} 1/a_k = known part K + unknown tail a_n t_D
    let (series_lo, series_hi) = match &fact {
        Some(f) => {
            let a_d = seq.a(depth);
            let known: BigRational = (n + 1..=depth)
                .map(|k| rat(a_n.clone(), seq.a(k).clone()))
                .sum();
            let scaled_known = &known * biguint_rat(f);
            // a_n f t_D < a_n f 2/a_{D+1} <= 2 a_n f / (k_min a_D a_D!) <= 2 a_n f / (k_min a_D^2)
            let (k_min, _) = seq.k_range(depth + 1);
            let tail_hi = rat(
                BigUint::from(2u32) * &a_n * f,
                BigUint::from(k_min) * a_d * a_d,
            );
            (scaled_known.clone(), scaled_known + tail_hi)
        }
        None => {
            // n = depth: a_n! t in (1/(k_max a_n), 1/(k_min a_n) + 1/(k_min^2 a_n^2 a_n!))
            // so a_n a_n! t lies in (1/k_max, 1/k_min + 1/(k_min^2 a_n))
            let (k_min, k_max) = seq.k_range(n + 1);
            (
                rat(1, k_max),
                rat(1, k_min) + rat(1u32, BigUint::from(k_min as u32 * k_min as u32) * &a_n),
            )
        }
    };

    // distance = || a_n shift + S ||
    let f_shift = {
        let x = shift * biguint_rat(&a_n);
        &x - x.floor()
    };
    let half = rat(1, 2);
    let one = BigRational::one();
    let mut distance_le_series = false;
    let dist_scaled: Option<(BigRational, BigRational)> = if f_shift.is_zero() {
        // the distance is the series itself while the series stays below 1/2
        let below_half = match &fact {
            Some(f) => series_hi < biguint_rat(f) * &half,
            // scaled series is below 1 and a_n!/2 >= 1
            None => series_hi <= one,
        };
        if below_half {
            distance_le_series = true;
            Some((series_lo.clone(), series_hi.clone()))
        } else {
            None
        }
    } else if let Some(f) = &fact {
        let fr = biguint_rat(f);
        let x_lo = &f_shift * &fr + &series_lo;
        let x_hi = &f_shift * &fr + &series_hi;
        let x_half = &fr * &half;
        let span = if x_hi <= x_half {
            Some((x_lo, x_hi))
        } else if x_lo >= x_half && x_hi < fr {
            Some((&fr - &x_hi, &fr - &x_lo))
        } else if x_hi < fr {
            let m = if &x_lo - BigRational::zero() < &fr - &x_hi {
                x_lo.clone()
            } else {
                &fr - &x_hi
            };
            Some((m, x_half))
        } else {
            None
        };
        if let Some((_, hi)) = &span {
            distance_le_series = hi <= &series_lo;
        }
        span
    } else {
        None
    };

    let holds = match &dist_scaled {
        Some((_, hi)) => hi < &one,
        None => {
            // shifted point at n = depth: ||f|| - 2/a_n! > 1/a_n! as soon as a_n >= 3 den
            if f_shift.is_zero() {
                false
            } else {
                let den = f_shift.denom().magnitude().clone();
                let a_big = a_n >= (den * 3u32);
                if !a_big {
                    return Err(Error::InsufficientDepth {
                        depth,
                        detail: format!("cannot separate shifted point at n = {n}"),
                    });
                }
                false
            }
        }
    };
    let series_lt_bound = series_hi < one;

    let small_fact = match (&fact, a_n_u) {
        (Some(f), Some(v)) if v <= EXPLICIT_FACTORIAL_CAP => Some(biguint_rat(f)),
        (None, Some(v)) if v <= EXPLICIT_FACTORIAL_CAP => Some(biguint_rat(&factorial(v))),
        _ => None,
    };
    let (distance_lower, distance_upper, bound) = match (&small_fact, &dist_scaled) {
        (Some(f), Some((lo, hi))) => (
            Some(RationalJson::new(&(lo / f))),
            Some(RationalJson::new(&(hi / f))),
            Some(RationalJson::new(&(BigRational::one() / f))),
        ),
        (Some(f), None) => (None, None, Some(RationalJson::new(&(BigRational::one() / f)))),
        _ => (None, None, None),
    };

    Ok(SmallnessCertificate {
        n,
        a_n: a_n.to_string(),
        scale_digits,
        scaled_distance_lower: dist_scaled.as_ref().map(|d| RationalJson::new(&d.0)),
        scaled_distance_upper: dist_scaled.as_ref().map(|d| RationalJson::new(&d.1)),
        scaled_series_lower: RationalJson::new(&series_lo),
        scaled_series_upper: RationalJson::new(&series_hi),
        distance_lower,
        distance_upper,
        bound,
        holds,
        distance_le_series,
        series_lt_bound,
        exact: Some(ExactScaled {
            dist: dist_scaled,
            series: (series_lo, series_hi),
        }),
    })
}

/// Direct product `prod_{j <= a_n} |1 - q^j|` against `2^{a_n} pi / a_n!`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductWitness {
    pub n: usize,
    pub a_n: u64,
    pub log_product: BoundedReal,
    pub log_bound: BoundedReal,
    /// `exp(log_product / a_n)`.
    pub root: BoundedReal,
    /// `exp(log_bound / a_n)`.
    pub root_bound: f64,
    /// `log_product <= log_bound`, decided on the enclosures.
    pub holds: bool,
}

pub fn product_bound_witness(seq: &LiouvilleSeq, n: usize) -> Result<ProductWitness> {
    if n == 0 || n > seq.depth() {
        return Err(Error::InsufficientDepth {
            depth: seq.depth(),
            detail: format!("product witness at n = {n} needs a_{n}"),
        });
    }
    let a_n = seq
        .a(n)
        .to_u64()
        .filter(|&v| v <= DIRECT_PRODUCT_CAP)
        .ok_or_else(|| Error::Refused(format!("a_{n} exceeds the direct-product cap")))?;
    let theta = AngleSpec::liouville(seq.k_seq().to_vec(), seq.depth(), BigRational::zero())?;
    let log_product = log_abs_qpochhammer_partitioned(&ComplexParam::q(), &theta, a_n)?;
    let (f_lo, f_hi) = ln_factorial_bounds(&BigUint::from(a_n));
    let base = a_n as f64 * std::f64::consts::LN_2 + std::f64::consts::PI.ln();
    let centre = base - 0.5 * (f_lo + f_hi);
    let log_bound = BoundedReal::from_f64(
        centre,
        round_up(0.5 * (f_hi - f_lo) + 4.0 * EPS * (base.abs() + centre.abs())),
    );
    let holds = log_product.upper() <= log_bound.lower();
    let point = RootTestPoint::new(a_n, &log_product);
    Ok(ProductWitness {
        n,
        a_n,
        root: BoundedReal::from_f64(point.value, round_up(point.value * point.log_mean.abs_error().exp_m1())),
        root_bound: (log_bound.to_f64() / a_n as f64).exp(),
        log_product,
        log_bound,
        holds,
    })
}

/// Shifted angle `theta + r` and the index `N` from which the smallness
/// inequality persists: the least `N` with `r a_n` integral for all `n >= N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedVariant {
    pub theta: AngleSpec,
    pub persistence_index: usize,
}

pub fn shifted_variant(seq: &LiouvilleSeq, r: &BigRational) -> Result<ShiftedVariant> {
    let theta = AngleSpec::liouville(seq.k_seq().to_vec(), seq.depth(), r.clone())?;
    let den = r.denom().magnitude().clone();
    // a_n | a_{n+1}, so integrality persists once reached
    if let Some(i) = seq.denominators().iter().position(|a| a.is_multiple_of(&den)) {
        return Ok(ShiftedVariant {
            theta,
            persistence_index: i + 1,
        });
    }
    // next index: den | k a_D a_D! for every admissible k
    let d = seq.depth();
    let a_d = seq.a(d);
    let (k_min, k_max) = seq.k_range(d + 1);
    let divides_next = [k_min, k_max].iter().all(|&k| {
        let rest = &den / den.gcd(&(BigUint::from(k) * a_d));
        divides_factorial(&rest, a_d)
    });
    if divides_next {
        return Ok(ShiftedVariant {
            theta,
            persistence_index: d + 1,
        });
    }
    Err(Error::InsufficientDepth {
        depth: d,
        detail: format!("denominator {den} does not divide a_{}", d + 1),
    })
}

/// Whether `m | n!`, by Legendre's formula on the factorization of `m`.
fn divides_factorial(m: &BigUint, n: &BigUint) -> bool {
    if m.is_one() {
        return true;
    }
    if m <= n {
        return true;
    }
    let Some(mut rest) = m.to_u64() else {
        return false;
    };
    let Some(n) = n.to_u64() else {
        // n! is astronomically larger; any m below 2^64 with all primes <= n divides it
        return true;
    };
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0u64;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            if legendre(n, p) < e {
                return false;
            }
        }
        p += 1;
    }
    rest == 1 || legendre(n, rest) >= 1
}

fn legendre(n: u64, p: u64) -> u64 {
    let mut e = 0;
    let mut pk = p;
    while pk <= n {
        e += n / pk;
        match pk.checked_mul(p) {
            Some(v) => pk = v,
            None => break,
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn denominators_examples() {
        let s = build_denominators(&[2, 2], 3).unwrap();
        let v: Vec<u64> = s.denominators().iter().map(|a| a.to_u64().unwrap()).collect();
        assert_eq!(v, vec![2, 8, 645120]);
        let s = build_denominators(&[3], 2).unwrap();
        assert_eq!(s.a(2).to_u64(), Some(12));
        let s = build_denominators(&[], 1).unwrap();
        assert_eq!(s.depth(), 1);
        assert!(matches!(
            build_denominators(&[2, 2, 2, 2], 5),
            Err(Error::DepthCap { .. })
        ));
        assert!(build_denominators(&[2], 3).is_err());
        assert!(build_denominators(&[4], 2).is_err());
    }

    #[test]
    fn partial_sums() {
        let s = build_denominators(&[2, 2], 3).unwrap();
        let z = BigRational::zero();
        assert_eq!(theta_partial(&s, 1, &z).unwrap().value, rat(1, 2));
        assert_eq!(theta_partial(&s, 2, &z).unwrap().value, rat(5, 8));
        let p3 = theta_partial(&s, 3, &z).unwrap();
        assert_eq!(p3.value, rat(403201, 645120));
        // 2/a_3 at N = 2
        assert_eq!(theta_partial(&s, 2, &z).unwrap().tail_bound, rat(1, 322560));
        assert!(theta_partial(&s, 4, &z).is_err());
    }

    #[test]
    fn factorial_log_against_stirling() {
        for n in [10u64, 1000, 645120] {
            let (lo, hi) = ln_factorial_bounds(&BigUint::from(n));
            let (slo, shi) = stirling_bounds(n as f64, (n as f64).ln());
            assert!(lo <= shi + 1e-6 * shi.abs() && slo <= hi + 1e-6 * hi.abs(), "n = {n}");
        }
        let (lo, hi) = ln_factorial_bounds(&BigUint::from(5u32));
        assert!(lo <= 120f64.ln() && 120f64.ln() <= hi);
    }

    #[test]
    fn small_certificates() {
        let s = build_denominators(&[2, 2], 3).unwrap();
        let c1 = check_small(&s, 1).unwrap();
        assert!(c1.holds && c1.distance_le_series && c1.series_lt_bound);
        let lo: f64 = c1.distance_lower.as_ref().unwrap().decimal.parse().unwrap();
        assert!((lo - 0.2500031).abs() < 1e-7);
        let c2 = check_small(&s, 2).unwrap();
        assert!(c2.holds);
        let lo: f64 = c2.distance_lower.as_ref().unwrap().decimal.parse().unwrap();
        assert!((lo - 1.24008e-5).abs() < 1e-9);
        let c3 = check_small(&s, 3).unwrap();
        assert!(c3.holds && c3.series_lt_bound);
        assert!(c3.distance_lower.is_none());
        assert!(check_small(&s, 4).is_err());
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_prefix(&rat(1, 3), 5), "3.3333e-1");
        assert_eq!(decimal_prefix(&rat(1, 80640), 6), "1.24007e-5");
        assert_eq!(decimal_prefix(&rat(-250, 1), 3), "-2.50e2");
    }

    #[test]
    fn shift_persistence() {
        let s = build_denominators(&[2, 2], 3).unwrap();
        assert_eq!(shifted_variant(&s, &BigRational::zero()).unwrap().persistence_index, 1);
        assert_eq!(shifted_variant(&s, &rat(1, 4)).unwrap().persistence_index, 2);
        assert_eq!(shifted_variant(&s, &rat(1, 7)).unwrap().persistence_index, 3);
        // 11 divides 645120! but no materialized a_n
        assert_eq!(shifted_variant(&s, &rat(1, 11)).unwrap().persistence_index, 4);
        assert!(divides_factorial(&BigUint::from(49u32), &BigUint::from(14u32)));
        assert!(!divides_factorial(&BigUint::from(49u32), &BigUint::from(13u32)));
    }
}
