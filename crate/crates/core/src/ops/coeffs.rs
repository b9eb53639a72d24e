//! Coefficient rules for the model operators and their normalization caps.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::grid::DyadicRectangle;
use crate::rng::{splitmix64, unit_symmetric};

/// Tolerance when comparing a coefficient against its cap.
pub(crate) const CAP_SLACK: f64 = 1.0 + 1e-12;

/// `(K, (t_i))` where slot `i` sits at the `t_i`-th descendant of `K` in each parameter.
///
/// Paraproduct families only use the offsets in the shift parameter and keep
/// the other entry at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoeffKey {
    pub k: DyadicRectangle,
    pub offsets: Vec<[u32; 2]>,
}

impl CoeffKey {
    pub fn hash_with(&self, seed: u64) -> u64 {
        let mut h = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
        let mut mix = |v: u64| h = splitmix64(h ^ v);
        mix(((self.k.i1.level as u64) << 32) | self.k.i1.index as u64);
        mix(((self.k.i2.level as u64) << 32) | self.k.i2.index as u64);
        for o in &self.offsets {
            mix(((o[0] as u64) << 32) | o[1] as u64);
        }
        h
    }

    /// Reorders the slots parameter by parameter: slot `s` takes parameter-`m`
    /// data from slot `perm[m][s]`.
    pub fn permuted(&self, perm: &[Vec<usize>; 2]) -> CoeffKey {
        let offsets = (0..self.offsets.len())
            .map(|s| [self.offsets[perm[0][s]][0], self.offsets[perm[1][s]][1]])
            .collect();
        CoeffKey { k: self.k, offsets }
    }
}

pub type CoeffFn = Arc<dyn Fn(&CoeffKey) -> f64 + Send + Sync>;

/// How coefficients are produced.
///
/// `Saturated` and `Uniform` are relative to the normalization cap of the
/// family; `Table` and `Custom` give absolute values that are validated.
#[derive(Clone)]
pub enum CoeffRule {
    /// The cap times `scale`, `|scale| ≤ 1`.
    Saturated(f64),
    /// The cap times a seeded uniform value in `[-1, 1]`.
    Uniform { seed: u64 },
    /// Explicit values; absent keys are zero.
    Table(BTreeMap<CoeffKey, f64>),
    Custom(CoeffFn),
}

impl fmt::Debug for CoeffRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffRule::Saturated(s) => write!(f, "Saturated({s})"),
            CoeffRule::Uniform { seed } => write!(f, "Uniform {{ seed: {seed} }}"),
            CoeffRule::Table(t) => write!(f, "Table({} entries)", t.len()),
            CoeffRule::Custom(_) => write!(f, "Custom(<fn>)"),
        }
    }
}

impl CoeffRule {
    pub fn zero() -> Self {
        CoeffRule::Saturated(0.0)
    }

    pub(crate) fn check_scale(&self) -> Result<()> {
        match self {
            CoeffRule::Saturated(s) if !(s.abs() <= 1.0) => Err(Error::InvalidCoefficients(format!(
                "saturation scale {s} must lie in [-1, 1]"
            ))),
            _ => Ok(()),
        }
    }

    /// The value relative to a unit cap for the rules that are relative.
    pub(crate) fn relative(&self, key: &CoeffKey) -> Option<f64> {
        match self {
            CoeffRule::Saturated(s) => Some(*s),
            CoeffRule::Uniform { seed } => Some(unit_symmetric(key.hash_with(*seed))),
            _ => None,
        }
    }

    /// The absolute value for the rules that give absolute values.
    pub(crate) fn absolute(&self, key: &CoeffKey) -> Option<f64> {
        match self {
            CoeffRule::Table(t) => Some(t.get(key).copied().unwrap_or(0.0)),
            CoeffRule::Custom(f) => Some(f(key)),
            _ => None,
        }
    }
}

/// Point-wise capped coefficients `|a_key| ≤ cap(key)` with memoized validation.
#[derive(Debug, Clone)]
pub(crate) struct CappedCoefficients {
    rule: CoeffRule,
    /// Slot permutation applied to keys before evaluation (adjoints).
    perm: Option<[Vec<usize>; 2]>,
    memo: Arc<RwLock<HashMap<CoeffKey, f64>>>,
}

impl CappedCoefficients {
    pub fn new(rule: CoeffRule) -> Result<Self> {
        rule.check_scale()?;
        Ok(CappedCoefficients { rule, perm: None, memo: Arc::default() })
    }

    /// Validates every table entry against `cap`.
    pub fn validate_table(&self, cap: impl Fn(&CoeffKey) -> Option<f64>) -> Result<()> {
        if let CoeffRule::Table(t) = &self.rule {
            for (key, &v) in t {
                let c = cap(key).ok_or_else(|| {
                    Error::InvalidCoefficients(format!("table key {key:?} is not admissible"))
                })?;
                check_cap(key, v, c)?;
            }
        }
        Ok(())
    }

    pub fn permuted(&self, perm: [Vec<usize>; 2]) -> Self {
        let perm = match &self.perm {
            Some(p) => [
                p[0].iter().map(|&s| perm[0][s]).collect(),
                p[1].iter().map(|&s| perm[1][s]).collect(),
            ],
            None => perm,
        };
        CappedCoefficients { rule: self.rule.clone(), perm: Some(perm), memo: self.memo.clone() }
    }

    pub fn value(&self, key: &CoeffKey, cap: f64) -> Result<f64> {
        let owned;
        let key = match &self.perm {
            Some(p) => {
                owned = key.permuted(p);
                &owned
            }
            None => key,
        };
        if let Some(u) = self.rule.relative(key) {
            return Ok(u * cap);
        }
        if let CoeffRule::Table(t) = &self.rule {
            return Ok(t.get(key).copied().unwrap_or(0.0));
        }
        if let Some(v) = self.memo.read().expect("memo lock poisoned").get(key) {
            return Ok(*v);
        }
        let v = self.rule.absolute(key).expect("custom rule");
        check_cap(key, v, cap)?;
        self.memo.write().expect("memo lock poisoned").insert(key.clone(), v);
        Ok(v)
    }
}

fn check_cap(key: &CoeffKey, v: f64, cap: f64) -> Result<()> {
    if !v.is_finite() || v.abs() > cap * CAP_SLACK {
        return Err(Error::InvalidCoefficients(format!(
            "|a| = {} exceeds the cap {cap} at {key:?}",
            v.abs()
        )));
    }
    Ok(())
}

/// `sup_{K₀} (|K₀|^{-1} Σ_{K ⊂ K₀} |a_K|²)^{1/2}` for a sequence indexed by the
/// one-parameter Haar index (`2^level + index`, entry 0 unused).
pub fn carleson_norm(seq: &[f64]) -> f64 {
    let len = seq.len();
    debug_assert!(len.is_power_of_two());
    let mut s: Vec<f64> = seq.iter().map(|v| v * v).collect();
    let mut best = 0.0f64;
    for b in (1..len).rev() {
        if 2 * b + 1 < len {
            s[b] += s[2 * b] + s[2 * b + 1];
        }
        let level = usize::BITS - 1 - b.leading_zeros();
        best = best.max((s[b] * (level as f64).exp2()).sqrt());
    }
    best
}
