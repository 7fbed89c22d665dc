use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{rational_to_f64, round_up};

/// A real number known to lie within `abs_error` of `value`.
///
/// The centre is an exact rational (dyadic in practice) so it can carry more
/// precision than an `f64`; the radius is an `f64` that is always rounded up.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedReal {
    value: BigRational,
    abs_error: f64,
}

impl BoundedReal {
    pub fn new(value: BigRational, abs_error: f64) -> Self {
        assert!(
            abs_error >= 0.0 && !abs_error.is_nan(),
            "error bound must be a nonnegative number"
        );
        Self { value, abs_error }
    }

    pub fn exact(value: BigRational) -> Self {
        Self {
            value,
            abs_error: 0.0,
        }
    }

    /// Wrap an f64 computation. Non-finite values are rejected.
    pub fn from_f64(value: f64, abs_error: f64) -> Self {
        let centre = BigRational::from_float(value).expect("finite value");
        Self::new(centre, abs_error)
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }

    pub fn abs_error(&self) -> f64 {
        self.abs_error
    }

    pub fn lower(&self) -> f64 {
        self.to_f64() - round_up(self.abs_error)
    }

    pub fn upper(&self) -> f64 {
        self.to_f64() + round_up(self.abs_error)
    }

    /// True when `x` lies in the enclosing interval.
    pub fn contains(&self, x: &BigRational) -> bool {
        let d = (x - &self.value).abs();
        d.is_zero() || rational_to_f64(&d) <= self.abs_error
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        match BigRational::from_float(x) {
            Some(r) => self.contains(&r),
            None => false,
        }
    }

    /// Intervals intersect (so the two enclosures are mutually consistent).
    pub fn overlaps(&self, other: &BoundedReal) -> bool {
        let d = rational_to_f64(&(&self.value - &other.value).abs());
        d <= round_up(self.abs_error + other.abs_error)
    }

    /// Widen by an extra error term.
    pub fn widen(mut self, extra: f64) -> Self {
        self.abs_error = round_up(self.abs_error + extra.abs());
        self
    }
}

impl fmt::Display for BoundedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e} ± {:.3e}", self.to_f64(), self.abs_error)
    }
}

#[derive(Serialize, Deserialize)]
struct BoundedRealRepr {
    value: f64,
    abs_error: f64,
    exact: String,
}

impl Serialize for BoundedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BoundedRealRepr {
            value: self.to_f64(),
            abs_error: self.abs_error,
            exact: super::format_rational(&self.value),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = BoundedRealRepr::deserialize(d)?;
        let value = super::parse_rational(&repr.exact).map_err(serde::de::Error::custom)?;
        Ok(Self::new(value, repr.abs_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_and_overlap() {
        let a = BoundedReal::from_f64(1.0, 0.1);
        assert!(a.contains_f64(1.05));
        assert!(!a.contains_f64(1.2));
        let b = BoundedReal::from_f64(1.15, 0.06);
        assert!(a.overlaps(&b));
        let c = BoundedReal::from_f64(1.3, 0.1);
        assert!(!a.overlaps(&c));
    }

    #[test]
    fn json_round_trip() {
        let a = BoundedReal::new(BigRational::new(1.into(), 3.into()), 1e-20);
        let s = serde_json::to_string(&a).unwrap();
        let b: BoundedReal = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
