//! Log-magnitudes of q-Pochhammer symbols `(a; q)_n` with `q = e^{2 pi i theta}`
//! and the n-th root test built on them.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{syntax, Error, Result};
use crate::exactnum::{
    format_rational, parse_rational, round_up, AngleSpec, BoundedReal,
    LinearPhase, PhaseEngine, PhaseSample, EPS,
};

/// A parameter `a_i` or `b_j` of the series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ComplexParam {
    /// `modulus * e^{2 pi i angle_turns}`.
    Polar {
        modulus: BigRational,
        angle_turns: BigRational,
    },
    /// `e^{2 pi i alpha} q^beta = e^{2 pi i (alpha + beta theta)}`.
    UnitCombo { alpha: BigRational, beta: BigRational },
}

impl ComplexParam {
    pub fn polar(modulus: BigRational, angle_turns: BigRational) -> Self {
        Self::Polar {
            modulus,
            angle_turns,
        }
    }

    pub fn combo(alpha: BigRational, beta: BigRational) -> Self {
        Self::UnitCombo { alpha, beta }
    }

    /// The base `q` itself.
    pub fn q() -> Self {
        Self::combo(BigRational::zero(), BigRational::one())
    }

    pub fn modulus(&self) -> BigRational {
        match self {
            Self::Polar { modulus, .. } => modulus.clone(),
            Self::UnitCombo { .. } => BigRational::one(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.modulus().is_one()
    }

    /// Phase of `a` in turns, as `offset + coeff theta`.
    pub fn phase(&self) -> LinearPhase {
        match self {
            Self::Polar { angle_turns, .. } => LinearPhase::rational(angle_turns.clone()),
            Self::UnitCombo { alpha, beta } => LinearPhase::new(alpha.clone(), beta.clone()),
        }
    }

    /// Whether `a q^n = 1` for some `n >= 0` on the unit circle. Since `theta`
    /// is irrational this happens only when the `theta` coefficient of the
    /// phase of `a q^n` vanishes and the rational part is an integer.
    pub fn hits_one(&self) -> Option<u64> {
        let phase = self.phase();
        if !self.is_unit() || !phase.offset.is_integer() {
            return None;
        }
        let neg = -&phase.coeff;
        (neg.is_integer() && !neg.is_negative()).then(|| {
            let n = neg.to_integer();
            n.try_into().unwrap_or(u64::MAX)
        })
    }
}

impl fmt::Display for ComplexParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polar {
                modulus,
                angle_turns,
            } => write!(
                f,
                "polar:{}@{}",
                format_rational(modulus),
                format_rational(angle_turns)
            ),
            Self::UnitCombo { alpha, beta } => write!(
                f,
                "combo:{},{}",
                format_rational(alpha),
                format_rational(beta)
            ),
        }
    }
}

impl FromStr for ComplexParam {
    type Err = Error;

    /// `polar:<mod>@<angle_turns>` or `combo:<alpha>,<beta>`. A bare `polar:<mod>`
    /// means angle 0.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(body) = t.strip_prefix("polar:") {
            let (m, a) = body.split_once('@').unwrap_or((body, "0"));
            let modulus = parse_rational(m)?;
            if modulus.is_negative() {
                return Err(syntax("parameter", "negative modulus"));
            }
            Ok(Self::polar(modulus, parse_rational(a)?))
        } else if let Some(body) = t.strip_prefix("combo:") {
            let (a, b) = body
                .split_once(',')
                .ok_or_else(|| syntax("parameter", format!("expected combo:<alpha>,<beta> in {t:?}")))?;
            Ok(Self::combo(parse_rational(a)?, parse_rational(b)?))
        } else {
            Err(syntax("parameter", format!("unknown parameter form {t:?}")))
        }
    }
}

impl TryFrom<String> for ComplexParam {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ComplexParam> for String {
    fn from(p: ComplexParam) -> String {
        p.to_string()
    }
}

/// `log|1 - r e^{2 pi i x}|` for `r > 0`, `x in [0, 1)`.
///
/// Unit modulus goes through `log(2 |sin pi x|)`; the singular point
/// `(r, x) = (1, 0)` is an error, never a value.
pub fn log_abs_one_minus(r: f64, x: f64) -> Result<f64> {
    if !(r > 0.0) || !(0.0..1.0).contains(&x) {
        return Err(Error::Precondition(format!(
            "need r > 0 and x in [0, 1), got r = {r}, x = {x}"
        )));
    }
    let d = x.min(1.0 - x);
    if r == 1.0 {
        if d == 0.0 {
            return Err(Error::Singular("log|1 - e^{0}| = -infinity".into()));
        }
        return Ok((2.0 * sin_pi(d)).ln());
    }
    Ok(log_abs_one_minus_dist(r.ln(), d).0)
}

/// `sin(pi d)` for `d in [0, 1/2]`.
pub(crate) fn sin_pi(d: f64) -> f64 {
    (std::f64::consts::PI * d).sin()
}

/// Value and sensitivity (derivative w.r.t. `ln d`) of `log|1 - R e^{2 pi i d}|`.
pub(crate) fn log_abs_one_minus_dist(ln_r: f64, d: f64) -> (f64, f64, f64) {
    // returns (value, d value / d ln d, d value / d ln R)
    let s = sin_pi(d);
    let c = (std::f64::consts::PI * d).cos();
    let pd = std::f64::consts::PI * d;
    if ln_r > 0.0 {
        // ln R + log|1 - R^{-1} e^{2 pi i d}|
        let inv = (-ln_r).exp();
        let den = (1.0 - inv) * (1.0 - inv) + 4.0 * inv * s * s;
        let v = ln_r + 0.5 * den.ln();
        let dd = 4.0 * inv * pd * s * c / den;
        let dr = 1.0 - (inv * inv - inv * (2.0 * c * c - 1.0)) / den;
        (v, dd, dr)
    } else {
        let r = ln_r.exp();
        let den = (1.0 - r) * (1.0 - r) + 4.0 * r * s * s;
        let v = 0.5 * den.ln();
        let dd = 4.0 * r * pd * s * c / den;
        let dr = (r * r - r * (2.0 * c * c - 1.0)) / den;
        (v, dd, dr)
    }
}

/// Modulus of a factor `1 - R e^{2 pi i x}`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FactorModulus {
    Unit,
    /// `ln R`, `R != 1`.
    Ln(f64),
}

/// `log|1 - R e^{2 pi i x}|` at an orbit sample, with an error bound.
pub(crate) fn log_factor(m: FactorModulus, s: &PhaseSample) -> Result<(f64, f64)> {
    match m {
        FactorModulus::Unit => {
            if s.dist == 0.0 && !s.ln_dist.is_finite() {
                return Err(Error::Singular(format!(
                    "factor 1 - e^0 at index {}",
                    s.index
                )));
            }
            let v = if s.dist > 1e-150 {
                (2.0 * sin_pi(s.dist)).ln()
            } else {
                // sin(pi d) / (pi d) = 1 to within f64 here
                (2.0 * std::f64::consts::PI).ln() + s.ln_dist
            };
            // d/d(ln d) of ln sin(pi d) is pi d cot(pi d), which lies in [0, 1]
            let err = s.ln_dist_err + 8.0 * EPS * (1.0 + v.abs());
            Ok((v, round_up(err)))
        }
        FactorModulus::Ln(ln_r) => {
            let (v, dd, dr) = log_abs_one_minus_dist(ln_r, s.dist);
            let err = dd.abs() * s.ln_dist_err
                + dr.abs() * 4.0 * EPS * (1.0 + ln_r.abs())
                + 8.0 * EPS * (1.0 + v.abs());
            Ok((v, round_up(err)))
        }
    }
}

/// Compensated (Neumaier) accumulator with a running error bound.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct LogSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    term_err: f64,
    count: u64,
}

impl LogSum {
    pub(crate) fn add(&mut self, value: f64, err: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
        self.abs_sum += value.abs();
        self.term_err += err;
        self.count += 1;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }

    pub(crate) fn error(&self) -> f64 {
        let n = self.count as f64;
        round_up(
            self.term_err + 2.0 * EPS * self.total().abs() + 2.0 * n * EPS * EPS * self.abs_sum,
        )
    }

    pub(crate) fn count(&self) -> u64 {
        self.count
    }

    /// Pairwise combination used by the fixed reduction tree.
    pub(crate) fn merge(a: LogSum, b: LogSum) -> LogSum {
        let mut out = a;
        out.add(b.sum, 0.0);
        out.add(b.comp, 0.0);
        out.count = a.count + b.count;
        out.abs_sum = a.abs_sum + b.abs_sum;
        out.term_err = a.term_err + b.term_err;
        out
    }

    pub(crate) fn to_bounded(self) -> BoundedReal {
        BoundedReal::from_f64(self.total(), self.error())
    }
}

fn check_as1(a: &ComplexParam) -> Result<()> {
    if a.modulus().is_zero() {
        return Err(Error::Violation(format!("parameter {a} is zero")));
    }
    if let Some(n) = a.hits_one() {
        return Err(Error::Violation(format!("{a} times q^{n} equals 1")));
    }
    Ok(())
}

fn factor_modulus(a: &ComplexParam) -> FactorModulus {
    let m = a.modulus();
    if m.is_one() {
        FactorModulus::Unit
    } else {
        FactorModulus::Ln(crate::exactnum::rational_to_f64(&m).ln())
    }
}

/// `sum_{k=0}^{n-1} log|1 - a q^k|`, i.e. `log|(a; q)_n|`.
pub fn log_abs_qpochhammer(a: &ComplexParam, theta: &AngleSpec, n: u64) -> Result<BoundedReal> {
    check_as1(a)?;
    if n == 0 {
        return Ok(BoundedReal::exact(BigRational::zero()));
    }
    let engine = PhaseEngine::new(theta, &a.phase(), n)?;
    let m = factor_modulus(a);
    let mut acc = LogSum::default();
    for s in engine.iter(0).take(n as usize) {
        let (v, e) = log_factor(m, &s?)?;
        acc.add(v, e);
    }
    Ok(acc.to_bounded())
}

/// Block length of the partitioned evaluator; fixed so results never depend
/// on the number of workers.
pub const PARTITION_BLOCK: u64 = 1 << 16;

/// Same sum as [`log_abs_qpochhammer`], evaluated in fixed blocks on the
/// current rayon pool and reduced by a fixed pairwise tree. The result is
/// bit-identical for every pool size.
pub fn log_abs_qpochhammer_partitioned(
    a: &ComplexParam,
    theta: &AngleSpec,
    n: u64,
) -> Result<BoundedReal> {
    check_as1(a)?;
    if n == 0 {
        return Ok(BoundedReal::exact(BigRational::zero()));
    }
    let engine = PhaseEngine::new(theta, &a.phase(), n)?;
    let m = factor_modulus(a);
    Ok(sum_orbit(&engine, 0, n, |s| log_factor(m, s))?.to_bounded())
}

/// `sum_{k=start}^{start+n-1} f(sample_k)` in fixed blocks on the current
/// rayon pool, reduced by a fixed pairwise tree.
pub(crate) fn sum_orbit<F>(engine: &PhaseEngine, start: u64, n: u64, f: F) -> Result<LogSum>
where
    F: Fn(&PhaseSample) -> Result<(f64, f64)> + Sync,
{
    let blocks: Vec<u64> = (0..n.div_ceil(PARTITION_BLOCK)).collect();
    let partials = blocks
        .par_iter()
        .map(|&b| {
            let offset = b * PARTITION_BLOCK;
            let len = PARTITION_BLOCK.min(n - offset);
            let mut acc = LogSum::default();
            for s in engine.iter(start + offset).take(len as usize) {
                let (v, e) = f(&s?)?;
                acc.add(v, e);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<LogSum>>>()?;
    Ok(reduce_tree(partials))
}

pub(crate) fn reduce_tree(mut level: Vec<LogSum>) -> LogSum {
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|c| if c.len() == 2 { LogSum::merge(c[0], c[1]) } else { c[0] })
            .collect();
    }
    level.pop().unwrap_or_default()
}

/// One root-test checkpoint: `(1/n) log|(a;q)_n|` and its exponential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootTestPoint {
    pub n: u64,
    pub log_mean: BoundedReal,
    pub value: f64,
}

impl RootTestPoint {
    pub(crate) fn new(n: u64, log_sum: &BoundedReal) -> Self {
        let nf = n as f64;
        let lm = BoundedReal::from_f64(log_sum.to_f64() / nf, round_up(log_sum.abs_error() / nf + EPS));
        let value = lm.to_f64().exp();
        Self {
            n,
            log_mean: lm,
            value,
        }
    }

    /// Certified bounds on `value`.
    pub fn value_bounds(&self) -> (f64, f64) {
        (self.log_mean.lower().exp(), self.log_mean.upper().exp())
    }
}

/// Root-test values at increasing checkpoints, in one pass over the orbit.
pub fn root_test_sequence(
    a: &ComplexParam,
    theta: &AngleSpec,
    checkpoints: &[u64],
) -> Result<Vec<RootTestPoint>> {
    check_as1(a)?;
    if checkpoints.is_empty() || checkpoints[0] == 0 {
        return Err(Error::Precondition("checkpoints must be positive".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    let n_max = *checkpoints.last().unwrap();
    let engine = PhaseEngine::new(theta, &a.phase(), n_max)?;
    let m = factor_modulus(a);
    let mut acc = LogSum::default();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for s in engine.iter(0).take(n_max as usize) {
        let (v, e) = log_factor(m, &s?)?;
        acc.add(v, e);
        if next.peek() == Some(&&acc.count()) {
            out.push(RootTestPoint::new(acc.count(), &acc.to_bounded()));
            next.next();
        }
    }
    Ok(out)
}

/// Checkpoints `10^2, 10^3, ...` up to `n_max`.
pub fn default_checkpoints(n_max: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut c = 100u64;
    while c <= n_max {
        v.push(c);
        c *= 10;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitClassification {
    pub verdict: Verdict,
    pub predicted: f64,
    pub tolerance: f64,
    pub residuals: Vec<f64>,
}

/// Default acceptance band: 5% of `max(predicted, 1)`.
pub fn default_tolerance(predicted: f64) -> f64 {
    0.05 * predicted.max(1.0)
}

/// Decide whether root-test points approach `predicted`.
pub fn classify_limit(points: &[RootTestPoint], predicted: f64) -> Result<LimitClassification> {
    classify_limit_with(points, predicted, default_tolerance(predicted))
}

pub fn classify_limit_with(
    points: &[RootTestPoint],
    predicted: f64,
    tolerance: f64,
) -> Result<LimitClassification> {
    if points.len() < 2 {
        return Err(Error::Precondition(
            "limit classification needs at least two points".into(),
        ));
    }
    let residuals: Vec<f64> = points.iter().map(|p| (p.value - predicted).abs()).collect();
    let slack: Vec<f64> = points
        .iter()
        .map(|p| {
            let (lo, hi) = p.value_bounds();
            (hi - lo).max(0.0)
        })
        .collect();
    let monotone = residuals
        .windows(2)
        .zip(slack.windows(2))
        .all(|(r, s)| r[1] <= r[0] + s[0] + s[1]);
    let last = *residuals.last().unwrap();
    let verdict = if monotone && last < tolerance {
        Verdict::Consistent
    } else if last >= tolerance && last >= residuals[0] {
        Verdict::Inconsistent
    } else {
        Verdict::Inconclusive
    };
    Ok(LimitClassification {
        verdict,
        predicted,
        tolerance,
        residuals,
    })
}
