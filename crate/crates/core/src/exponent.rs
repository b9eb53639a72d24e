//! Lebesgue exponents with an explicit infinity tag.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

use crate::error::{Error, Result};

/// An exponent in `(0, ∞]`. Infinity is a tag, never a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p > 0.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinite)
        } else {
            Err(Error::InvalidExponent(format!("{p} is not in (0, inf]")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinite => 0.0,
        }
    }

    /// Builds an exponent from its reciprocal; `0` maps to infinity.
    pub fn from_recip(r: f64) -> Result<Self> {
        if r == 0.0 {
            Ok(Exponent::Infinite)
        } else if r > 0.0 && r.is_finite() {
            Ok(Exponent::Finite(1.0 / r))
        } else {
            Err(Error::InvalidExponent(format!("reciprocal {r} is negative or not finite")))
        }
    }

    /// Hölder conjugate `p'` with `1/p + 1/p' = 1`; requires `p >= 1`.
    pub fn conjugate(self) -> Result<Self> {
        match self {
            Exponent::Infinite => Ok(Exponent::Finite(1.0)),
            Exponent::Finite(1.0) => Ok(Exponent::Infinite),
            Exponent::Finite(p) if p > 1.0 => Ok(Exponent::Finite(p / (p - 1.0))),
            Exponent::Finite(p) => Err(Error::InvalidExponent(format!(
                "conjugate of {p} < 1 is undefined"
            ))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// The finite value, or an error naming `what`.
    pub fn expect_finite(self, what: &str) -> Result<f64> {
        match self {
            Exponent::Finite(p) => Ok(p),
            Exponent::Infinite => Err(Error::InvalidExponent(format!("{what} must be finite"))),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl From<f64> for Exponent {
    /// Panics on non-positive input; use [`Exponent::finite`] for fallible construction.
    fn from(p: f64) -> Self {
        Exponent::finite(p).expect("exponent must lie in (0, inf]")
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::finite(p).map_err(serde::de::Error::custom),
            Raw::Str(s) if s == "inf" || s == "infinity" => Ok(Exponent::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a positive number or \"inf\", found \"{s}\""
            ))),
        }
    }
}

/// `p⃗ = (p₁, …, p_n)` with derived `1/p = Σ 1/p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentTuple(pub Vec<Exponent>);

impl fmt::Display for ExponentTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl ExponentTuple {
    pub fn new(ps: Vec<Exponent>) -> Result<Self> {
        if ps.is_empty() {
            return Err(Error::InvalidExponent("empty exponent tuple".into()));
        }
        Ok(ExponentTuple(ps))
    }

    pub fn from_values(ps: &[f64]) -> Result<Self> {
        Self::new(ps.iter().map(|&p| Exponent::finite(p)).collect::<Result<_>>()?)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Exponent {
        self.0[i]
    }

    /// `1/p = Σ 1/p_i`.
    pub fn recip_sum(&self) -> f64 {
        self.0.iter().map(|p| p.recip()).sum()
    }

    /// The joint exponent `p`.
    pub fn joint(&self) -> Result<Exponent> {
        Exponent::from_recip(self.recip_sum())
    }

    /// Requires every entry to be at least one.
    pub fn check_at_least_one(&self) -> Result<()> {
        for p in &self.0 {
            if let Exponent::Finite(v) = p {
                if *v < 1.0 {
                    return Err(Error::InvalidExponent(format!("p_i = {v} < 1")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::Finite(2.0).conjugate().unwrap(), Exponent::Finite(2.0));
        assert_eq!(Exponent::Infinite.conjugate().unwrap(), Exponent::Finite(1.0));
        assert_eq!(Exponent::Finite(1.0).conjugate().unwrap(), Exponent::Infinite);
        let p = Exponent::Finite(3.0);
        let q = p.conjugate().unwrap();
        assert!((p.recip() + q.recip() - 1.0).abs() < 1e-15);
        assert!(Exponent::Finite(0.5).conjugate().is_err());
    }

    #[test]
    fn joint_exponent() {
        let t = ExponentTuple::from_values(&[2.0, 2.0]).unwrap();
        assert_eq!(t.joint().unwrap(), Exponent::Finite(1.0));
        let t = ExponentTuple::new(vec![Exponent::Infinite, Exponent::Infinite]).unwrap();
        assert_eq!(t.joint().unwrap(), Exponent::Infinite);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Exponent::finite(0.0).is_err());
        assert!(Exponent::finite(-1.0).is_err());
        assert!(Exponent::finite(f64::NAN).is_err());
    }

    #[test]
    fn serde_roundtrip() {
        let t = ExponentTuple::new(vec![Exponent::Finite(2.5), Exponent::Infinite]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "[2.5,\"inf\"]");
        let back: ExponentTuple = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
