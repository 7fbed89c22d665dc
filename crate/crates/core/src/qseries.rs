//! The series `r phi s`: parameter checks, coefficients, term ratios,
//! predicted and empirical radii of convergence, partial sums.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diophant::DiophantineConstant;
use crate::error::{Error, Result};
use crate::exactnum::{
    eval_angle, rational_to_f64, round_up, AngleSpec, BoundedReal, LinearPhase, PhaseEngine,
    PhaseIter, PhaseSample, EPS,
};
use crate::qpoch::{log_factor, ComplexParam, FactorModulus, LogSum};

/// Blow-up threshold for `log|c_n| / n` at a Liouville witness index.
pub const COLLAPSE_THRESHOLD: f64 = std::f64::consts::LN_10;

/// Largest `n_max` accepted by the coefficient sweeps.
pub const N_MAX_CAP: u64 = 10_000_000;

/// Number of window points kept in a report.
const WINDOW_SAMPLES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub upper: Vec<ComplexParam>,
    pub lower: Vec<ComplexParam>,
    pub theta: AngleSpec,
    /// `|q|`; 1 puts the base on the unit circle.
    #[serde(with = "crate::report::rational_string")]
    pub base_modulus: BigRational,
}

impl SeriesParams {
    /// Series with base `q = e^{2 pi i theta}`.
    pub fn on_circle(upper: Vec<ComplexParam>, lower: Vec<ComplexParam>, theta: AngleSpec) -> Self {
        Self {
            upper,
            lower,
            theta,
            base_modulus: BigRational::one(),
        }
    }

    pub fn r(&self) -> usize {
        self.upper.len()
    }

    pub fn s(&self) -> usize {
        self.lower.len()
    }

    pub fn on_unit_circle(&self) -> bool {
        self.base_modulus.is_one()
    }

    fn ln_rho(&self) -> f64 {
        rational_to_f64(&self.base_modulus).ln()
    }
}

/// Violations of the standing assumptions; empty when the series is valid.
///
/// A product `a q^n` equals 1 only when its modulus and phase both do; with
/// `theta` irrational the phase condition pins `n` to the `theta`
/// coefficient, so the decision is exact for every base modulus.
pub fn validate_params(p: &SeriesParams) -> Vec<String> {
    let mut out = Vec::new();
    if !p.base_modulus.is_positive() {
        out.push("base modulus must be positive".to_string());
    }
    for (role, list) in [("upper", &p.upper), ("lower", &p.lower)] {
        for (i, a) in list.iter().enumerate() {
            if a.modulus().is_zero() {
                out.push(format!("{role}[{i}] = {a} is zero"));
                continue;
            }
            if let Some(n) = hits_one_off_circle(a, &p.base_modulus) {
                out.push(format!("{role}[{i}] = {a} gives a q^{n} = 1"));
            }
        }
    }
    out
}

fn hits_one_off_circle(a: &ComplexParam, rho: &BigRational) -> Option<u64> {
    match a {
        // |e^{2 pi i alpha} q^beta q^n| = rho^{beta + n}: the same index as on the circle
        ComplexParam::UnitCombo { .. } => a.hits_one(),
        ComplexParam::Polar { .. } if rho.is_one() => a.hits_one(),
        // phase angle + n theta is an integer only at n = 0
        ComplexParam::Polar {
            modulus,
            angle_turns,
        } => (modulus.is_one() && angle_turns.is_integer()).then_some(0),
    }
}

pub fn ensure_valid(p: &SeriesParams) -> Result<()> {
    let v = validate_params(p);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Violation(v.join("; ")))
    }
}

/// One Pochhammer factor stream `1 - a q^k`, `k = 0, 1, ...`.
struct FactorStream<'a> {
    iter: PhaseIter<'a>,
    ln_abs: f64,
    ln_rho: f64,
    unit: UnitRule,
}

enum UnitRule {
    Always,
    Never,
    /// `|a q^k| = 1` exactly at `k = n`.
    AtIndex(u64),
    /// Polar modulus `m` off the circle: `m rho^k = 1`, checked exactly.
    PolarOff { modulus: BigRational, rho: BigRational },
}

struct Stream {
    engine: PhaseEngine,
    ln_abs: f64,
    unit: UnitRule,
}

impl Stream {
    /// Factors of `(a; q)_n`.
    fn param(a: &ComplexParam, p: &SeriesParams, n_max: u64) -> Result<Self> {
        let ln_rho = p.ln_rho();
        let (ln_abs, unit) = match a {
            ComplexParam::UnitCombo { beta, .. } => {
                let ln_abs = rational_to_f64(beta) * ln_rho;
                let unit = if p.on_unit_circle() {
                    UnitRule::Always
                } else {
                    let neg = -beta;
                    match (neg.is_integer() && !neg.is_negative()).then(|| neg.to_integer().to_u64()) {
                        Some(Some(k)) => UnitRule::AtIndex(k),
                        _ => UnitRule::Never,
                    }
                };
                (ln_abs, unit)
            }
            ComplexParam::Polar { modulus, .. } => {
                let ln_abs = rational_to_f64(modulus).ln();
                let unit = if p.on_unit_circle() {
                    if modulus.is_one() {
                        UnitRule::Always
                    } else {
                        UnitRule::Never
                    }
                } else {
                    UnitRule::PolarOff {
                        modulus: modulus.clone(),
                        rho: p.base_modulus.clone(),
                    }
                };
                (ln_abs, unit)
            }
        };
        Ok(Self {
            engine: PhaseEngine::new(&p.theta, &a.phase(), n_max)?,
            ln_abs,
            unit,
        })
    }

    /// Factors of `(q; q)_n`: `1 - q^{k+1}`.
    fn base(p: &SeriesParams, n_max: u64) -> Result<Self> {
        // k-th factor of q is q^{k+1}: phase (1 + k) theta, modulus rho^{1+k}
        Self::param(&ComplexParam::q(), p, n_max + 1)
    }

    fn start(&self, ln_rho: f64) -> FactorStream<'_> {
        FactorStream {
            iter: self.engine.iter(0),
            ln_abs: self.ln_abs,
            ln_rho,
            unit: match &self.unit {
                UnitRule::Always => UnitRule::Always,
                UnitRule::Never => UnitRule::Never,
                UnitRule::AtIndex(k) => UnitRule::AtIndex(*k),
                UnitRule::PolarOff { modulus, rho } => UnitRule::PolarOff {
                    modulus: modulus.clone(),
                    rho: rho.clone(),
                },
            },
        }
    }
}

impl FactorStream<'_> {
    fn is_unit(&self, k: u64, ln_r: f64) -> bool {
        match &self.unit {
            UnitRule::Always => true,
            UnitRule::Never => false,
            UnitRule::AtIndex(j) => *j == k,
            UnitRule::PolarOff { modulus, rho } => {
                ln_r.abs() < 1e-6
                    && i32::try_from(k).is_ok_and(|k| modulus * num_traits::pow(rho.clone(), k as usize) == BigRational::one())
            }
        }
    }

    /// `log|1 - a q^k|` and its error.
    fn next_factor(&mut self) -> Result<(f64, f64)> {
        let s: PhaseSample = self.iter.next().expect("unbounded orbit")?;
        let k = s.index;
        let ln_r = self.ln_abs + k as f64 * self.ln_rho;
        if self.is_unit(k, ln_r) {
            return log_factor(FactorModulus::Unit, &s);
        }
        let (v, e) = log_factor(FactorModulus::Ln(ln_r), &s)?;
        if self.ln_rho == 0.0 {
            return Ok((v, e));
        }
        // rounding in ln R = ln|a| + k ln rho, times |d value / d ln R|
        let big_r = ln_r.exp();
        let sens = if big_r < 1.0 {
            big_r * (1.0 + big_r) / ((1.0 - big_r) * (1.0 - big_r))
        } else {
            let inv = 1.0 / big_r;
            1.0 + inv * (1.0 + inv) / ((1.0 - inv) * (1.0 - inv))
        };
        let extra = 4.0 * EPS * (self.ln_abs.abs() + k as f64 * self.ln_rho.abs()) * sens;
        Ok((v, round_up(e + extra)))
    }
}

/// `log|c_n|` for `n = 0..=n_max` in one pass. `with_power` includes the
/// `|q|^{(s+1-r) n(n-1)/2}` factor.
fn sweep<F>(p: &SeriesParams, n_max: u64, with_power: bool, mut visit: F) -> Result<()>
where
    F: FnMut(u64, &BoundedReal) -> Result<()>,
{
    let ln_rho = p.ln_rho();
    let ups = p
        .upper
        .iter()
        .map(|a| Stream::param(a, p, n_max))
        .collect::<Result<Vec<_>>>()?;
    let downs = p
        .lower
        .iter()
        .map(|b| Stream::param(b, p, n_max))
        .collect::<Result<Vec<_>>>()?;
    let base = Stream::base(p, n_max)?;
    let mut up_it: Vec<_> = ups.iter().map(|s| s.start(ln_rho)).collect();
    let mut down_it: Vec<_> = downs.iter().map(|s| s.start(ln_rho)).collect();
    let mut base_it = base.start(ln_rho);

    let exponent = p.s() as f64 + 1.0 - p.r() as f64;
    let mut acc = LogSum::default();
    let zero = BoundedReal::exact(BigRational::zero());
    visit(0, &zero)?;
    for n in 1..=n_max {
        for it in up_it.iter_mut() {
            let (v, e) = it.next_factor()?;
            acc.add(v, e);
        }
        for it in down_it.iter_mut() {
            let (v, e) = it.next_factor()?;
            acc.add(-v, e);
        }
        let (v, e) = base_it.next_factor()?;
        acc.add(-v, e);
        let mut total = acc.total();
        let mut err = acc.error();
        if with_power && exponent != 0.0 && ln_rho != 0.0 {
            let pw = exponent * (n as f64) * (n as f64 - 1.0) / 2.0 * ln_rho;
            total += pw;
            err += 4.0 * EPS * pw.abs();
        }
        visit(n, &BoundedReal::from_f64(total, round_up(err)))?;
    }
    Ok(())
}

fn power_factor_allowed(p: &SeriesParams) -> bool {
    p.on_unit_circle() || p.r() == p.s() + 1
}

/// `log|c_n|` with `c_n` the coefficient of `z^n`.
pub fn log_abs_coefficient(p: &SeriesParams, n: u64) -> Result<BoundedReal> {
    Ok(log_abs_coefficients(p, n)?.pop().expect("n + 1 values"))
}

/// `log|c_0|, ..., log|c_{n_max}|`.
pub fn log_abs_coefficients(p: &SeriesParams, n_max: u64) -> Result<Vec<BoundedReal>> {
    ensure_valid(p)?;
    if !power_factor_allowed(p) {
        return Err(Error::Refused(
            "off the unit circle coefficients are only evaluated for r = s + 1".into(),
        ));
    }
    if n_max > N_MAX_CAP {
        return Err(Error::Precondition(format!("n exceeds the cap {N_MAX_CAP}")));
    }
    let mut out = Vec::with_capacity(n_max as usize + 1);
    sweep(p, n_max, true, |_, v| {
        out.push(v.clone());
        Ok(())
    })?;
    Ok(out)
}

/// `v_{n+1} / v_n` as log-modulus and phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRatio {
    pub n: u64,
    pub log_modulus: f64,
    pub log_modulus_err: f64,
    /// Argument in turns, in `[0, 1)`.
    pub phase_turns: f64,
    /// `exp(log_modulus)`; `None` when it overflows.
    pub modulus: Option<f64>,
}

impl TermRatio {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_modulus.exp(), std::f64::consts::TAU * self.phase_turns)
    }
}

/// Log-modulus and argument (radians) of a complex number.
#[derive(Clone, Copy, Debug, Default)]
struct LogComplex {
    ln_abs: f64,
    arg: f64,
    err: f64,
}

/// `1 - w` with `w = exp(ln_w + 2 pi i phase)`, evaluated by plain complex
/// arithmetic (factoring out `w` when it is large).
fn one_minus(ln_w: f64, phase: f64, phase_err: f64) -> LogComplex {
    let ang = std::f64::consts::TAU * phase;
    let (ln_abs, arg, rel) = if ln_w > 0.0 {
        // 1 - w = -w (1 - 1/w)
        let u = Complex64::from_polar((-ln_w).exp(), -ang);
        let f = Complex64::new(1.0, 0.0) - u;
        let ln_abs = ln_w + f.norm().ln();
        let arg = ang + std::f64::consts::PI + f.arg();
        (ln_abs, arg, (1.0 + u.norm()) / f.norm())
    } else {
        let w = Complex64::from_polar(ln_w.exp(), ang);
        let f = Complex64::new(1.0, 0.0) - w;
        (f.norm().ln(), f.arg(), (1.0 + w.norm()) / f.norm())
    };
    let w_abs = ln_w.min(0.0).exp();
    let err = 4.0 * EPS * rel + std::f64::consts::TAU * phase_err * rel.max(w_abs);
    LogComplex { ln_abs, arg, err }
}

/// `v_{n+1}/v_n = prod(1 - a_i q^n) / ((1 - q^{n+1}) prod(1 - b_j q^n)) (-q^n)^{1+s-r} z`.
///
/// Phases come from an exact rational reduction of `n theta` against a
/// 256-bit enclosure of `theta`, independent of the orbit engines used for
/// the coefficients.
pub fn term_ratio(p: &SeriesParams, n: u64, z: Complex64) -> Result<TermRatio> {
    ensure_valid(p)?;
    let theta = eval_angle(&p.theta, 256)?;
    let ln_rho = p.ln_rho();
    let phase_of = |lp: &LinearPhase, k: u64| -> (f64, f64) {
        let x = &lp.offset + (&lp.coeff + BigRational::from_integer(BigInt::from(k))) * theta.value();
        let frac = &x - x.floor();
        let mult = rational_to_f64(&(&lp.coeff + BigRational::from_integer(BigInt::from(k))).abs());
        (rational_to_f64(&frac), mult * theta.abs_error() + EPS)
    };
    let ln_abs_of = |a: &ComplexParam| -> f64 {
        match a {
            ComplexParam::UnitCombo { beta, .. } => rational_to_f64(beta) * ln_rho,
            ComplexParam::Polar { modulus, .. } => rational_to_f64(modulus).ln(),
        }
    };
    let mut acc = LogComplex::default();
    let mut add = |f: LogComplex, sign: f64| {
        acc.ln_abs += sign * f.ln_abs;
        acc.arg += sign * f.arg;
        acc.err += f.err;
    };
    for a in &p.upper {
        let (ph, pe) = phase_of(&a.phase(), n);
        add(one_minus(ln_abs_of(a) + n as f64 * ln_rho, ph, pe), 1.0);
    }
    for b in &p.lower {
        let (ph, pe) = phase_of(&b.phase(), n);
        add(one_minus(ln_abs_of(b) + n as f64 * ln_rho, ph, pe), -1.0);
    }
    let (ph, pe) = phase_of(&LinearPhase::new(BigRational::zero(), BigRational::one()), n);
    add(one_minus((n + 1) as f64 * ln_rho, ph, pe), -1.0);
    // (-q^n)^{1+s-r}
    let e = 1.0 + p.s() as f64 - p.r() as f64;
    let (nph, _) = phase_of(&LinearPhase::zero(), n);
    acc.ln_abs += e * n as f64 * ln_rho;
    acc.arg += e * (std::f64::consts::PI + std::f64::consts::TAU * nph);
    if z == Complex64::new(0.0, 0.0) {
        return Ok(TermRatio {
            n,
            log_modulus: f64::NEG_INFINITY,
            log_modulus_err: 0.0,
            phase_turns: 0.0,
            modulus: Some(0.0),
        });
    }
    acc.ln_abs += z.norm().ln();
    acc.arg += z.arg();
    let turns = (acc.arg / std::f64::consts::TAU).rem_euclid(1.0);
    let err = round_up(acc.err + 8.0 * EPS * (1.0 + acc.ln_abs.abs()));
    let m = acc.ln_abs.exp();
    Ok(TermRatio {
        n,
        log_modulus: acc.ln_abs,
        log_modulus_err: err,
        phase_turns: if turns >= 1.0 { 0.0 } else { turns },
        modulus: m.is_finite().then_some(m),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    QInsideRLeS,
    QInsideREqSPlus1,
    QOutside,
    UnitBadApprox,
    UnitLiouvilleZero,
    UnitUnknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusValue {
    Zero,
    Infinite,
    Finite {
        approx: f64,
        /// Exact value when every modulus involved is rational.
        #[serde(with = "crate::report::opt_rational_string", default)]
        exact: Option<BigRational>,
    },
}

impl RadiusValue {
    fn finite(exact: Option<BigRational>, approx: f64) -> Self {
        let approx = exact.as_ref().map_or(approx, rational_to_f64);
        Self::Finite { approx, exact }
    }

    pub fn approx(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Infinite => f64::INFINITY,
            Self::Finite { approx, .. } => *approx,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Self::Finite { exact, .. } => exact.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusPrediction {
    pub value: Option<RadiusValue>,
    pub case_tag: CaseTag,
}

impl RadiusPrediction {
    fn unknown() -> Self {
        Self {
            value: None,
            case_tag: CaseTag::UnitUnknown,
        }
    }
}

/// Modulus of a parameter for base modulus `rho`: exact when rational.
fn param_modulus(a: &ComplexParam, rho: &BigRational) -> (Option<BigRational>, f64) {
    match a {
        ComplexParam::Polar { modulus, .. } => (Some(modulus.clone()), rational_to_f64(modulus).ln()),
        ComplexParam::UnitCombo { beta, .. } => {
            let ln = rational_to_f64(beta) * rational_to_f64(rho).ln();
            if rho.is_one() {
                (Some(BigRational::one()), 0.0)
            } else if beta.is_integer() {
                let e = beta.to_integer();
                let exact = e.to_i32().map(|e| {
                    if e >= 0 {
                        num_traits::pow(rho.clone(), e as usize)
                    } else {
                        num_traits::pow(rho.recip(), (-e) as usize)
                    }
                });
                (exact, ln)
            } else {
                (None, ln)
            }
        }
    }
}

/// Product of moduli (each optionally clamped below at 1), exact when possible.
fn modulus_product(list: &[ComplexParam], rho: &BigRational, clamp: bool) -> (Option<BigRational>, f64) {
    let mut exact = Some(BigRational::one());
    let mut ln = 0.0;
    for a in list {
        let (e, l) = param_modulus(a, rho);
        let (e, l) = if clamp {
            match e {
                Some(v) if v < BigRational::one() => (Some(BigRational::one()), 0.0),
                Some(v) => (Some(v), l),
                None => (None, l.max(0.0)),
            }
        } else {
            (e, l)
        };
        exact = exact.zip(e).map(|(x, y)| x * y);
        ln += l;
    }
    (exact, ln)
}

/// The radius predicted by the closed-form cases.
pub fn predicted_radius(p: &SeriesParams, dio: Option<&DiophantineConstant>) -> Result<RadiusPrediction> {
    ensure_valid(p)?;
    let rho = &p.base_modulus;
    if rho < &BigRational::one() {
        return Ok(if p.r() <= p.s() {
            RadiusPrediction {
                value: Some(RadiusValue::Infinite),
                case_tag: CaseTag::QInsideRLeS,
            }
        } else if p.r() == p.s() + 1 {
            RadiusPrediction {
                value: Some(RadiusValue::finite(Some(BigRational::one()), 1.0)),
                case_tag: CaseTag::QInsideREqSPlus1,
            }
        } else {
            RadiusPrediction::unknown()
        });
    }
    if rho > &BigRational::one() {
        // |b_1 ... b_s q| / |a_1 ... a_r|
        let (be, bl) = modulus_product(&p.lower, rho, false);
        let (ae, al) = modulus_product(&p.upper, rho, false);
        let exact = be.zip(ae).map(|(b, a)| b * rho / a);
        let approx = (bl + rational_to_f64(rho).ln() - al).exp();
        return Ok(RadiusPrediction {
            value: Some(RadiusValue::finite(exact, approx)),
            case_tag: CaseTag::QOutside,
        });
    }
    if p.theta.is_liouville() {
        let off_unit = p.upper.iter().chain(p.lower.iter()).all(|a| !a.is_unit());
        return Ok(if off_unit {
            RadiusPrediction {
                value: Some(RadiusValue::Zero),
                case_tag: CaseTag::UnitLiouvilleZero,
            }
        } else {
            RadiusPrediction::unknown()
        });
    }
    // surd angles have bounded partial quotients; every parameter is either
    // off the circle or of the form e^{2 pi i alpha} q^beta (a unit Polar
    // parameter is the case beta = 0)
    if let Some(d) = dio {
        if !(d.min_value.lower() > 0.0) {
            return Ok(RadiusPrediction::unknown());
        }
    }
    let (be, bl) = modulus_product(&p.lower, rho, true);
    let (ae, al) = modulus_product(&p.upper, rho, true);
    let exact = be.zip(ae).map(|(b, a)| b / a);
    Ok(RadiusPrediction {
        value: Some(RadiusValue::finite(exact, (bl - al).exp())),
        case_tag: CaseTag::UnitBadApprox,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowValue {
    pub n: u64,
    /// `log|c_n| / n`.
    pub log_root: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRadius {
    pub n_max: u64,
    pub window_start: u64,
    pub window_end: u64,
    /// `exp(-L)`, `None` when it overflows.
    pub estimate: Option<f64>,
    /// `-L`.
    pub log_estimate: f64,
    /// `L = max log|c_n| / n` over the window and the witness indices.
    pub limsup_proxy: f64,
    pub argmax_n: u64,
    /// Least-squares slope of `log|c_n|` against `n` over the window.
    pub regression_slope: f64,
    /// Evenly spaced window samples.
    pub window_values: Vec<WindowValue>,
    /// Values at the Liouville denominators `a_k <= n_max`.
    pub witnesses: Vec<WindowValue>,
    pub collapse: bool,
    pub collapse_threshold: f64,
    /// Set off the circle for `r <= s`, where `|c_n|^{1/n}` tends to zero
    /// and only the growth of the estimate is meaningful.
    pub growth_diagnostic: bool,
}

/// Root-test estimate of the radius from the coefficients.
pub fn empirical_radius(p: &SeriesParams, n_max: u64) -> Result<EmpiricalRadius> {
    ensure_valid(p)?;
    if n_max < 100 {
        return Err(Error::Precondition("n_max must be at least 100".into()));
    }
    if n_max > N_MAX_CAP {
        return Err(Error::Precondition(format!("n_max exceeds the cap {N_MAX_CAP}")));
    }
    let growth_diagnostic = !p.on_unit_circle()
        && p.r() <= p.s()
        && p.base_modulus < BigRational::one();
    if !power_factor_allowed(p) && !growth_diagnostic {
        return Err(Error::Refused(
            "off the unit circle the root test is only run for r = s + 1, or r <= s with |q| < 1".into(),
        ));
    }
    let witnesses_idx: Vec<u64> = match p.theta.liouville_seq() {
        Some(seq) => seq?
            .denominators()
            .iter()
            .filter_map(|a| a.to_u64())
            .filter(|&a| a <= n_max)
            .collect(),
        None => Vec::new(),
    };
    let lo = n_max / 2;
    let step = ((n_max - lo) / WINDOW_SAMPLES as u64).max(1);
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut window_values = Vec::new();
    let mut witnesses = Vec::new();
    // least squares accumulators, centred on the window midpoint
    let mid = (lo + n_max) as f64 / 2.0;
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    sweep(p, n_max, true, |n, v| {
        if n == 0 {
            return Ok(());
        }
        let nf = n as f64;
        let w = WindowValue {
            n,
            log_root: v.to_f64() / nf,
            abs_error: v.abs_error() / nf,
        };
        let in_window = n >= lo;
        let witness = witnesses_idx.contains(&n);
        if (in_window || witness) && w.log_root > best.0 {
            best = (w.log_root, n);
        }
        if in_window {
            let x = nf - mid;
            let y = v.to_f64();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            cnt += 1.0;
            if (n - lo).is_multiple_of(step) || n == n_max {
                window_values.push(w.clone());
            }
        }
        if witness {
            witnesses.push(w);
        }
        Ok(())
    })?;
    let slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    let collapse = p.theta.is_liouville() && witnesses.iter().any(|w| w.log_root > COLLAPSE_THRESHOLD);
    let est = (-best.0).exp();
    Ok(EmpiricalRadius {
        n_max,
        window_start: lo,
        window_end: n_max,
        estimate: est.is_finite().then_some(est),
        log_estimate: -best.0,
        limsup_proxy: best.0,
        argmax_n: best.1,
        regression_slope: slope,
        window_values,
        witnesses,
        collapse,
        collapse_threshold: COLLAPSE_THRESHOLD,
        growth_diagnostic,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialSum {
    pub terms: u64,
    /// `sum_{n <= N} v_n` as `[re, im]`; `None` once terms overflow.
    pub sum: Option<[f64; 2]>,
    pub last_term_magnitude: Option<f64>,
    pub log_last_term_magnitude: f64,
    /// Terms left the f64 range and only the log-magnitude was tracked.
    pub overflow: bool,
}

/// `sum_{n=0}^N v_n` with `v_{n+1} = v_n * term_ratio(n, z)`.
pub fn partial_sum(p: &SeriesParams, z: Complex64, big_n: u64) -> Result<PartialSum> {
    ensure_valid(p)?;
    if big_n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    let mut ln_v = 0.0f64;
    let mut arg = 0.0f64;
    let mut sum = Complex64::new(1.0, 0.0);
    let mut overflow = false;
    for n in 0..big_n {
        let t = term_ratio(p, n, z)?;
        ln_v += t.log_modulus;
        arg += std::f64::consts::TAU * t.phase_turns;
        if ln_v == f64::NEG_INFINITY {
            break;
        }
        if ln_v > 700.0 {
            overflow = true;
        }
        if !overflow {
            sum += Complex64::from_polar(ln_v.exp(), arg);
        }
    }
    let last = ln_v.exp();
    Ok(PartialSum {
        terms: big_n + 1,
        sum: (!overflow).then_some([sum.re, sum.im]),
        last_term_magnitude: last.is_finite().then_some(last),
        log_last_term_magnitude: ln_v,
        overflow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn polar(m: i64, d: i64) -> ComplexParam {
        ComplexParam::polar(q(m, d), BigRational::zero())
    }

    fn sqrt2() -> AngleSpec {
        AngleSpec::sqrt(2).unwrap()
    }

    fn mixed() -> SeriesParams {
        SeriesParams::on_circle(
            vec![polar(2, 1), ComplexParam::combo(q(1, 5), q(1, 2))],
            vec![polar(3, 1)],
            sqrt2(),
        )
    }

    fn off(rho: BigRational, upper: Vec<ComplexParam>, lower: Vec<ComplexParam>) -> SeriesParams {
        SeriesParams {
            upper,
            lower,
            theta: sqrt2(),
            base_modulus: rho,
        }
    }

    #[test]
    fn validation() {
        let mut p = mixed();
        assert!(validate_params(&p).is_empty());
        p.upper.push(ComplexParam::polar(BigRational::zero(), BigRational::zero()));
        assert_eq!(validate_params(&p).len(), 1);
        let p = SeriesParams::on_circle(
            vec![ComplexParam::combo(BigRational::zero(), BigRational::zero())],
            vec![],
            sqrt2(),
        );
        assert!(ensure_valid(&p).is_err());
        let p = SeriesParams::on_circle(vec![ComplexParam::combo(q(1, 1), q(-3, 1))], vec![], sqrt2());
        assert!(validate_params(&p)[0].contains("q^3"));
    }

    #[test]
    fn predictions() {
        let half = off(q(1, 2), vec![polar(2, 1), polar(5, 1)], vec![polar(3, 1)]);
        let r = predicted_radius(&half, None).unwrap();
        assert_eq!(r.case_tag, CaseTag::QInsideREqSPlus1);
        assert_eq!(r.value.unwrap().exact(), Some(&q(1, 1)));

        let r = predicted_radius(&off(q(1, 2), vec![polar(2, 1)], vec![polar(3, 1)]), None).unwrap();
        assert_eq!(r.value, Some(RadiusValue::Infinite));

        let r = predicted_radius(&off(q(2, 1), vec![polar(3, 1)], vec![polar(5, 1)]), None).unwrap();
        assert_eq!(r.case_tag, CaseTag::QOutside);
        assert_eq!(r.value.unwrap().exact(), Some(&q(10, 3)));

        let r = predicted_radius(&mixed(), None).unwrap();
        assert_eq!(r.case_tag, CaseTag::UnitBadApprox);
        assert_eq!(r.value.unwrap().exact(), Some(&q(3, 2)));

        let liou = AngleSpec::liouville(vec![2, 2], 3, BigRational::zero()).unwrap();
        let p = SeriesParams::on_circle(vec![polar(2, 1)], vec![polar(3, 1)], liou.clone());
        let r = predicted_radius(&p, None).unwrap();
        assert_eq!(r.case_tag, CaseTag::UnitLiouvilleZero);
        assert_eq!(r.value, Some(RadiusValue::Zero));

        let p = SeriesParams::on_circle(vec![ComplexParam::polar(q(1, 1), q(1, 3))], vec![polar(3, 1)], liou);
        assert_eq!(predicted_radius(&p, None).unwrap().case_tag, CaseTag::UnitUnknown);
    }

    #[test]
    fn coefficients() {
        let p = mixed();
        assert_eq!(log_abs_coefficient(&p, 0).unwrap().to_f64(), 0.0);
        // c_1 = (1 - 2)(1 - a) / ((1 - q)(1 - 3)) with a = e^{2 pi i / 5} q^{1/2}
        let theta = sqrt2().approx_f64();
        let tau = std::f64::consts::TAU;
        let a = Complex64::from_polar(1.0, tau * (0.2 + theta / 2.0));
        let qq = Complex64::from_polar(1.0, tau * theta);
        let one = Complex64::new(1.0, 0.0);
        let c1 = (one - 2.0) * (one - a) / ((one - qq) * (one - 3.0));
        let v = log_abs_coefficient(&p, 1).unwrap();
        assert!((v.to_f64() - c1.norm().ln()).abs() < 1e-12);

        let p = SeriesParams::on_circle(vec![polar(2, 1), polar(3, 1)], vec![polar(4, 1)], sqrt2());
        let v = log_abs_coefficient(&p, 10_000).unwrap();
        assert!((v.to_f64() / 1e4 - (1.5f64).ln()).abs() < 0.05);

        let p = off(q(1, 2), vec![polar(2, 1), polar(3, 1)], vec![]);
        assert!(matches!(log_abs_coefficient(&p, 5), Err(Error::Refused(_))));
    }

    #[test]
    fn ratios_match_coefficients() {
        let cases = [
            mixed(),
            off(q(1, 2), vec![polar(2, 1), polar(5, 1)], vec![polar(3, 1)]),
            off(q(3, 2), vec![polar(2, 1)], vec![]),
        ];
        for p in &cases {
            let c = log_abs_coefficients(p, 200).unwrap();
            for n in 0..200u64 {
                let t = term_ratio(p, n, Complex64::new(1.0, 0.0)).unwrap();
                let d = c[n as usize + 1].to_f64() - c[n as usize].to_f64();
                let tol = c[n as usize + 1].abs_error() + c[n as usize].abs_error() + t.log_modulus_err;
                assert!((d - t.log_modulus).abs() <= tol, "n={n} d={d} t={}", t.log_modulus);
            }
        }
        let t = term_ratio(&mixed(), 3, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(t.modulus, Some(0.0));
    }

    #[test]
    fn empirical() {
        let e = empirical_radius(&mixed(), 10_000).unwrap();
        assert!((e.estimate.unwrap() / 1.5 - 1.0).abs() < 0.1);
        assert!(!e.collapse);

        let p = off(q(1, 2), vec![polar(2, 1)], vec![polar(3, 1), polar(5, 1)]);
        let e = empirical_radius(&p, 1000).unwrap();
        assert!(e.growth_diagnostic);
        assert!(e.log_estimate > 50.0);

        let p = off(q(1, 2), vec![polar(2, 1), polar(3, 1), polar(5, 1)], vec![]);
        assert!(matches!(empirical_radius(&p, 1000), Err(Error::Refused(_))));
    }

    #[test]
    fn partial_sums() {
        let p = mixed();
        let s = partial_sum(&p, Complex64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(s.sum, Some([1.0, 0.0]));
        let last = |z: f64, n| partial_sum(&p, Complex64::new(z, 0.0), n).unwrap().log_last_term_magnitude;
        assert!(last(0.5, 50) > last(0.5, 100) && last(0.5, 100) > last(0.5, 200));
        assert!(last(3.0, 50) < last(3.0, 100) && last(3.0, 100) < last(3.0, 200));
    }
}
