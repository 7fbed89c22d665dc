use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::angle::ThetaForm;
use super::{
    denom_u, exp_upper, lcm, ln_biguint, ratio_to_f64, round_up, to_bigint, AngleSpec,
    BoundedReal, QuadraticSurd, EPS, MAX_PRECISION_BITS,
};
use crate::error::{Error, Result};

/// Relative precision demanded of every distance before a sample is accepted
/// without escalation.
const NEAR_SINGULAR_LOG2: u64 = 40;

/// Working precision for phases with indices up to `n`:
/// `2 * ceil(log2(n + 2)) + 64` bits.
pub fn precision_for_index(n: u64) -> u64 {
    let lg = 64 - (n + 1).leading_zeros() as u64; // ceil(log2(n + 2))
    2 * lg + 64
}

/// The real number `offset + coeff * theta`.
///
/// Sampling along an orbit evaluates `offset + (coeff + k) * theta` for
/// `k = 0, 1, 2, ...`; both a parameter `a = e^{2 pi i alpha} q^beta` and a
/// singularity `c = r theta + s` are of this shape.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinearPhase {
    #[serde(with = "crate::report::rational_string")]
    pub offset: BigRational,
    #[serde(with = "crate::report::rational_string")]
    pub coeff: BigRational,
}

impl LinearPhase {
    pub fn new(offset: BigRational, coeff: BigRational) -> Self {
        Self { offset, coeff }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(offset: BigRational) -> Self {
        Self {
            offset,
            coeff: BigRational::zero(),
        }
    }
}

/// One point of the orbit, reduced mod 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSample {
    pub index: u64,
    /// Fractional part in `[0, 1)`.
    pub frac: f64,
    pub frac_err: f64,
    /// Distance to the nearest integer; may underflow to zero, in which case
    /// `ln_dist` still carries the magnitude.
    pub dist: f64,
    pub ln_dist: f64,
    pub ln_dist_err: f64,
}

impl PhaseSample {
    /// Orbit point that is exactly an integer.
    fn integer(index: u64) -> Self {
        Self {
            index,
            frac: 0.0,
            frac_err: 0.0,
            dist: 0.0,
            ln_dist: f64::NEG_INFINITY,
            ln_dist_err: 0.0,
        }
    }

    /// Certified absolute error on `dist`.
    pub fn dist_err(&self) -> f64 {
        round_up(self.dist * self.ln_dist_err.exp_m1())
    }
}

/// Evaluates `offset + (coeff + k) theta mod 1` with certified bounds.
#[derive(Clone, Debug)]
pub struct PhaseEngine {
    inner: Inner,
}

#[derive(Clone, Debug)]
enum Inner {
    Surd(SurdPhase),
    Rational(RationalPhase),
}

impl PhaseEngine {
    /// Prepare an engine whose incremental iteration stays accurate up to
    /// index `max_index`.
    pub fn new(theta: &AngleSpec, phase: &LinearPhase, max_index: u64) -> Result<Self> {
        let inner = match theta.form()? {
            ThetaForm::Surd(s) => Inner::Surd(SurdPhase::new(&s, phase, max_index)),
            ThetaForm::Liouville { partial, tail_ln } => {
                Inner::Rational(RationalPhase::new(&partial, tail_ln, phase))
            }
        };
        Ok(Self { inner })
    }

    /// Direct evaluation at index `k`.
    pub fn sample(&self, k: u64) -> Result<PhaseSample> {
        match &self.inner {
            Inner::Surd(s) => s.sample_direct(k),
            Inner::Rational(r) => r.sample(k, &r.residue(k)),
        }
    }

    /// Incremental single-pass iteration starting at index `start`.
    pub fn iter(&self, start: u64) -> PhaseIter<'_> {
        let state = match &self.inner {
            Inner::Surd(s) => {
                let (n, e) = s.numerator(start, s.bits, &s.s);
                IterState::Surd {
                    residue: n.mod_floor(&to_bigint(&s.modulus)).to_biguint().unwrap(),
                    err_coeff: e,
                }
            }
            Inner::Rational(r) => IterState::Rational {
                residue: r.residue(start),
            },
        };
        PhaseIter {
            engine: self,
            k: start,
            state,
        }
    }

    /// Fractional part at index `k` as a [`BoundedReal`] with error at most
    /// `target_error`.
    pub fn exact_frac(&self, k: u64, target_error: f64) -> Result<BoundedReal> {
        match &self.inner {
            Inner::Surd(s) => s.exact_frac(k, target_error),
            Inner::Rational(r) => r.exact_frac(k, target_error),
        }
    }
}

enum IterState {
    Surd { residue: BigUint, err_coeff: BigInt },
    Rational { residue: BigUint },
}

/// Single-pass iterator over consecutive orbit points.
pub struct PhaseIter<'a> {
    engine: &'a PhaseEngine,
    k: u64,
    state: IterState,
}

impl Iterator for PhaseIter<'_> {
    type Item = Result<PhaseSample>;

    fn next(&mut self) -> Option<Self::Item> {
        let k = self.k;
        let out = match (&self.engine.inner, &mut self.state) {
            (Inner::Surd(s), IterState::Surd { residue, err_coeff }) => {
                let out = match s.sample_from(k, residue, err_coeff, &s.modulus) {
                    Some(sample) => Ok(sample),
                    None => s.sample_direct(k),
                };
                *residue += &s.delta;
                if *residue >= s.modulus {
                    *residue -= &s.modulus;
                }
                *err_coeff += &s.b1;
                out
            }
            (Inner::Rational(r), IterState::Rational { residue }) => {
                let out = r.sample(k, residue);
                *residue += &r.step;
                if *residue >= r.modulus {
                    *residue -= &r.modulus;
                }
                out
            }
            _ => unreachable!("iterator state matches engine kind"),
        };
        self.k += 1;
        Some(out)
    }
}

/// `X_k = (a0 + k b0 + (a1 + k b1) sqrt(d)) / l`, evaluated in fixed point
/// against `s = floor(sqrt(d) 2^bits)`.
#[derive(Clone, Debug)]
struct SurdPhase {
    a0: BigInt,
    b0: BigInt,
    a1: BigInt,
    b1: BigInt,
    l: BigUint,
    d: u64,
    bits: u64,
    s: BigUint,
    modulus: BigUint,
    delta: BigUint,
}

fn scaled_sqrt(d: u64, bits: u64) -> BigUint {
    (BigUint::from(d) << (2 * bits)).sqrt()
}

impl SurdPhase {
    fn new(theta: &QuadraticSurd, phase: &LinearPhase, max_index: u64) -> Self {
        let (on, od) = (phase.offset.numer(), denom_u(&phase.offset));
        let (gn, gd) = (phase.coeff.numer(), denom_u(&phase.coeff));
        let c = theta.c().magnitude().clone();
        let l = lcm(&od, &(&gd * &c));
        let l_od = to_bigint(&(&l / &od));
        let l_gdc = to_bigint(&(&l / (&gd * &c)));
        let l_c = to_bigint(&(&l / &c));
        let a0 = on * &l_od + gn * &l_gdc * theta.p();
        let a1 = gn * &l_gdc * theta.mult();
        let b0 = &l_c * theta.p();
        let b1 = &l_c * theta.mult();
        let e_max = a1.magnitude() + b1.magnitude() * BigUint::from(max_index);
        let bits = precision_for_index(max_index) + e_max.bits();
        let s = scaled_sqrt(theta.d(), bits);
        let modulus = &l << bits;
        let step = (&b0 << bits) + &b1 * to_bigint(&s);
        let delta = step.mod_floor(&to_bigint(&modulus)).to_biguint().unwrap();
        Self {
            a0,
            b0,
            a1,
            b1,
            l,
            d: theta.d(),
            bits,
            s,
            modulus,
            delta,
        }
    }

    /// Fixed-point numerator `N` and error coefficient `E = a1 + k b1`; the
    /// exact value times `l 2^bits` lies between `N` and `N + E`.
    fn numerator(&self, k: u64, bits: u64, s: &BigUint) -> (BigInt, BigInt) {
        let k = BigInt::from(k);
        let e = &self.a1 + &k * &self.b1;
        let n = ((&self.a0 + &k * &self.b0) << bits) + &e * to_bigint(s);
        (n, e)
    }

    fn sample_from(
        &self,
        k: u64,
        residue: &BigUint,
        err_coeff: &BigInt,
        modulus: &BigUint,
    ) -> Option<PhaseSample> {
        let e = err_coeff.magnitude();
        if e.is_zero() && residue.is_zero() {
            // rational orbit point landing on an integer
            return Some(PhaseSample::integer(k));
        }
        let upward = !err_coeff.is_negative();
        // the enclosing interval must not straddle an integer
        if upward {
            if residue.is_zero() || residue + e >= *modulus {
                return None;
            }
        } else if residue <= e {
            return None;
        }
        let comp = modulus - residue;
        let dist_units = if *residue <= comp { residue } else { &comp };
        if (e << NEAR_SINGULAR_LOG2) > *dist_units {
            return None;
        }
        let frac = ratio_to_f64(residue, modulus);
        let dist = ratio_to_f64(dist_units, modulus);
        let ln_dist = if dist > 1e-300 {
            dist.ln()
        } else {
            ln_biguint(dist_units) - ln_biguint(modulus)
        };
        let rel = ratio_to_f64(e, dist_units);
        Some(PhaseSample {
            index: k,
            frac: frac.min(1.0 - EPS / 2.0),
            frac_err: round_up(ratio_to_f64(e, modulus) + 2.0 * EPS * frac),
            dist,
            ln_dist,
            ln_dist_err: round_up(rel * (1.0 + 1e-6) + 4.0 * EPS * (1.0 + ln_dist.abs())),
        })
    }

    fn sample_direct(&self, k: u64) -> Result<PhaseSample> {
        let mut bits = self.bits;
        loop {
            let s = if bits == self.bits {
                self.s.clone()
            } else {
                scaled_sqrt(self.d, bits)
            };
            let modulus = &self.l << bits;
            let (n, e) = self.numerator(k, bits, &s);
            let residue = n.mod_floor(&to_bigint(&modulus)).to_biguint().unwrap();
            if let Some(sample) = self.sample_from(k, &residue, &e, &modulus) {
                return Ok(sample);
            }
            bits += 64;
            if bits > MAX_PRECISION_BITS {
                return Err(Error::PrecisionExhausted {
                    requested: 2f64.powi(-(NEAR_SINGULAR_LOG2 as i32)),
                    max_bits: MAX_PRECISION_BITS,
                });
            }
        }
    }

    fn exact_frac(&self, k: u64, target_error: f64) -> Result<BoundedReal> {
        let mut bits = self.bits.max(precision_for_index(k));
        loop {
            let s = scaled_sqrt(self.d, bits);
            let modulus = &self.l << bits;
            let (n, e) = self.numerator(k, bits, &s);
            let residue = n.mod_floor(&to_bigint(&modulus)).to_biguint().unwrap();
            let mag = e.magnitude();
            let err = ratio_to_f64(mag, &(&modulus << 1u32));
            let safe = if e.is_negative() {
                residue > *mag
            } else {
                mag.is_zero() || &residue + mag < modulus
            };
            if safe && err <= target_error {
                // centre of [R, R + E] (or [R - |E|, R]) over 2M
                let twice = to_bigint(&(&residue << 1u32)) + &e;
                let value = BigRational::new(twice, to_bigint(&(&modulus << 1u32)));
                return Ok(BoundedReal::new(value, round_up(err)));
            }
            bits += 64;
            if bits > MAX_PRECISION_BITS {
                return Err(Error::PrecisionExhausted {
                    requested: target_error,
                    max_bits: MAX_PRECISION_BITS,
                });
            }
        }
    }
}

/// `X_k = (a + k b) / l + c_k t` where `c_k = (cn + k cd) / cd` and the
/// positive tail `t` is only known through `ln t in (tail_ln.0, tail_ln.1)`.
#[derive(Clone, Debug)]
struct RationalPhase {
    a: BigInt,
    b: BigInt,
    modulus: BigUint,
    step: BigUint,
    cn: BigInt,
    cd: BigUint,
    tail_ln: (f64, f64),
}

impl RationalPhase {
    fn new(partial: &BigRational, tail_ln: (f64, f64), phase: &LinearPhase) -> Self {
        let (on, od) = (phase.offset.numer(), denom_u(&phase.offset));
        let (gn, gd) = (phase.coeff.numer(), denom_u(&phase.coeff));
        let (rn, rd) = (partial.numer(), denom_u(partial));
        let l = lcm(&od, &(&gd * &rd));
        let a = on * to_bigint(&(&l / &od)) + gn * rn * to_bigint(&(&l / (&gd * &rd)));
        let b = rn * to_bigint(&(&l / &rd));
        let step = b.mod_floor(&to_bigint(&l)).to_biguint().unwrap();
        Self {
            a,
            b,
            modulus: l,
            step,
            cn: gn.clone(),
            cd: gd,
            tail_ln,
        }
    }

    fn residue(&self, k: u64) -> BigUint {
        (&self.a + BigInt::from(k) * &self.b)
            .mod_floor(&to_bigint(&self.modulus))
            .to_biguint()
            .unwrap()
    }

    /// Tail coefficient `c_k` as (numerator, ln|c_k|).
    fn tail_coeff(&self, k: u64) -> (BigInt, f64) {
        let num = &self.cn + BigInt::from(k) * to_bigint(&self.cd);
        let ln = if num.is_zero() {
            f64::NEG_INFINITY
        } else {
            ln_biguint(num.magnitude()) - ln_biguint(&self.cd)
        };
        (num, ln)
    }

    fn sample(&self, k: u64, residue: &BigUint) -> Result<PhaseSample> {
        let (cnum, ln_c) = self.tail_coeff(k);
        let (lo, hi) = self.tail_ln;
        let l = &self.modulus;
        if residue.is_zero() {
            if cnum.is_zero() {
                return Ok(PhaseSample::integer(k));
            }
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InsufficientDepth {
                    depth: 0,
                    detail: format!("tail of orbit point {k} is beyond floating range"),
                });
            }
            let centre = ln_c + 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let dist = centre.exp();
            let frac = if cnum.is_positive() { dist } else { 1.0 - EPS / 2.0 };
            return Ok(PhaseSample {
                index: k,
                frac,
                frac_err: round_up(exp_upper(ln_c + hi) + EPS),
                dist,
                ln_dist: centre,
                ln_dist_err: round_up(half + 4.0 * EPS * (1.0 + centre.abs())),
            });
        }
        let comp = l - residue;
        let dist_units = if *residue <= comp { residue } else { &comp };
        let dist0 = ratio_to_f64(dist_units, l);
        let ln_d0 = if dist0 > 1e-300 {
            dist0.ln()
        } else {
            ln_biguint(dist_units) - ln_biguint(l)
        };
        let frac = ratio_to_f64(residue, l);
        let (rel, shift) = if cnum.is_zero() {
            (0.0, 0.0)
        } else {
            let ln_u = ln_c + hi - ln_d0;
            if ln_u > -std::f64::consts::LN_2 {
                return Err(Error::InsufficientDepth {
                    depth: 0,
                    detail: format!("tail uncertainty swamps orbit point {k}"),
                });
            }
            let u = ln_u.exp();
            (u / (1.0 - u), exp_upper(ln_c + hi))
        };
        Ok(PhaseSample {
            index: k,
            frac: frac.min(1.0 - EPS / 2.0),
            frac_err: round_up(shift + 2.0 * EPS * frac),
            dist: dist0,
            ln_dist: ln_d0,
            ln_dist_err: round_up(rel + 4.0 * EPS * (1.0 + ln_d0.abs())),
        })
    }

    fn exact_frac(&self, k: u64, target_error: f64) -> Result<BoundedReal> {
        let residue = self.residue(k);
        let (cnum, ln_c) = self.tail_coeff(k);
        let value = BigRational::new(to_bigint(&residue), to_bigint(&self.modulus));
        if cnum.is_zero() {
            return Ok(BoundedReal::exact(value));
        }
        let err = exp_upper(ln_c + self.tail_ln.1);
        if err > target_error {
            return Err(Error::PrecisionExhausted {
                requested: target_error,
                max_bits: MAX_PRECISION_BITS,
            });
        }
        if residue.is_zero() && cnum.is_negative() {
            // orbit point sits just below an integer
            return Ok(BoundedReal::new(BigRational::one(), err));
        }
        Ok(BoundedReal::new(value, err))
    }
}
