use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// `(p + mult * sqrt(d)) / c` with `d` square-free, `c > 0`, `mult != 0`
/// and `gcd(p, mult, c) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    p: BigInt,
    mult: BigInt,
    c: BigInt,
    d: u64,
}

impl QuadraticSurd {
    pub fn new(p: BigInt, mult: BigInt, c: BigInt, d: u64) -> Result<Self> {
        if c.is_zero() {
            return Err(crate::error::syntax("surd", "zero denominator"));
        }
        if mult.is_zero() {
            return Err(Error::RationalValue(format!("({p}+0*sqrt{d})/{c}")));
        }
        if d < 2 || !is_square_free(d) {
            return Err(Error::NotSquareFree(d));
        }
        let (mut p, mut mult, mut c) = (p, mult, c);
        if c.is_negative() {
            p = -p;
            mult = -mult;
            c = -c;
        }
        let g = p.gcd(&mult).gcd(&c);
        if !g.is_one() {
            p /= &g;
            mult /= &g;
            c /= &g;
        }
        Ok(Self { p, mult, c, d })
    }

    pub fn sqrt(d: u64) -> Result<Self> {
        Self::new(BigInt::zero(), BigInt::one(), BigInt::one(), d)
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    pub fn mult(&self) -> &BigInt {
        &self.mult
    }

    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// `r1 * self + r2`, still a surd of the same radicand.
    pub fn affine(&self, r1: &BigRational, r2: &BigRational) -> Result<Self> {
        if r1.is_zero() {
            return Err(Error::RationalValue("zero coefficient on the surd".into()));
        }
        // r1 = n1/d1, r2 = n2/d2: (n1 d2 p + n2 d1 c + n1 d2 mult sqrt d) / (d1 d2 c)
        let (n1, d1) = (r1.numer(), r1.denom());
        let (n2, d2) = (r2.numer(), r2.denom());
        let p = n1 * d2 * &self.p + n2 * d1 * &self.c;
        let mult = n1 * d2 * &self.mult;
        let c = d1 * d2 * &self.c;
        Self::new(p, mult, c, self.d)
    }

    pub fn to_f64(&self) -> f64 {
        let p = super::rational_to_f64(&BigRational::from_integer(self.p.clone()));
        let m = super::rational_to_f64(&BigRational::from_integer(self.mult.clone()));
        let c = super::rational_to_f64(&BigRational::from_integer(self.c.clone()));
        (p + m * (self.d as f64).sqrt()) / c
    }

    /// Write the value as `(P + sqrt(D)) / Q` with `Q | D - P^2`, the state
    /// form used by the periodic continued-fraction recurrence.
    pub fn reduced_state(&self) -> (BigInt, BigInt, BigInt) {
        // (p + m sqrt d)/c = (s p + sqrt(m^2 d)) / (s c), s = sign(m)
        let s = if self.mult.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        };
        let mut big_p = &s * &self.p;
        let mut big_d = &self.mult * &self.mult * BigInt::from(self.d);
        let mut big_q = &s * &self.c;
        if !(&big_d - &big_p * &big_p).is_multiple_of(&big_q) {
            let k = big_q.abs();
            big_p *= &k;
            big_d *= &k * &k;
            big_q *= &k;
        }
        (big_p, big_d, big_q)
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_zero() && self.mult.is_one() && self.c.is_one() {
            write!(f, "sqrt{}", self.d)
        } else if self.mult.is_negative() {
            write!(f, "({}-{}*sqrt{})/{}", self.p, -&self.mult, self.d, self.c)
        } else {
            write!(f, "({}+{}*sqrt{})/{}", self.p, self.mult, self.d, self.c)
        }
    }
}

/// Square-free test for `d >= 1`.
///
/// Trial division by every `p <= d^(1/3)` strips small primes; the cofactor
/// then has at most two prime factors, so it is square-free unless it is a
/// perfect square.
pub fn is_square_free(d: u64) -> bool {
    if d == 0 {
        return false;
    }
    let mut n = d;
    let mut p = 2u64;
    while p.saturating_mul(p).saturating_mul(p) <= d {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n == 1 {
        return true;
    }
    let r = n.isqrt();
    r * r != n
}
