//! Serializable operator descriptions and seeded random admissible specs.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::{DyadicRectangle, Param, ProductGrid};
use crate::rng::rng;

use super::atoms::Atom;
use super::coeffs::{CoeffKey, CoeffRule};
use super::full::FullParaproductSpec;
use super::partial::PartialParaproductSpec;
use super::shift::ShiftSpec;
use super::MultilinearOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Shift,
    PartialParaproduct,
    FullParaproduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    Zero,
    Saturated,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    /// `[level₁, index₁, level₂, index₂]` of `K`.
    pub k: [u32; 4],
    #[serde(default)]
    pub offsets: Vec<[u32; 2]>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CoeffSpec {
    Rule {
        rule: RuleId,
        #[serde(default = "unit")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
    Table {
        data: Vec<TableEntry>,
        #[serde(default)]
        seed: u64,
    },
}

fn unit() -> f64 {
    1.0
}

impl CoeffSpec {
    pub fn uniform(seed: u64) -> Self {
        CoeffSpec::Rule { rule: RuleId::Uniform, scale: 1.0, seed }
    }

    pub fn to_rule(&self) -> Result<CoeffRule> {
        Ok(match self {
            CoeffSpec::Rule { rule: RuleId::Zero, .. } => CoeffRule::zero(),
            CoeffSpec::Rule { rule: RuleId::Saturated, scale, .. } => CoeffRule::Saturated(*scale),
            CoeffSpec::Rule { rule: RuleId::Uniform, seed, .. } => CoeffRule::Uniform { seed: *seed },
            CoeffSpec::Table { data, .. } => {
                let mut t = BTreeMap::new();
                for e in data {
                    let [l1, m1, l2, m2] = e.k;
                    let k = DyadicRectangle::from_parts(l1, m1, l2, m2)
                        .map_err(|err| Error::InvalidCoefficients(format!("table key {:?}: {err}", e.k)))?;
                    t.insert(CoeffKey { k, offsets: e.offsets.clone() }, e.value);
                }
                CoeffRule::Table(t)
            }
        })
    }
}

/// Slot data for partial paraproducts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSlots {
    /// `h` or `h0` per slot in the shift parameter.
    pub kinds: Vec<Atom>,
    /// One-based slot carrying `h_{K^p}`.
    pub paraproduct_slot: usize,
    /// The parameter (1 or 2) of the paraproduct.
    pub paraproduct_param: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum OperatorSpec {
    Shift {
        n: usize,
        complexities: Vec<[u32; 2]>,
        /// Per slot, `h` or `h0` in each parameter.
        slots: Vec<[Atom; 2]>,
        coeff: CoeffSpec,
    },
    PartialParaproduct {
        n: usize,
        complexities: Vec<u32>,
        slots: PartialSlots,
        coeff: CoeffSpec,
    },
    FullParaproduct {
        n: usize,
        /// One-based Haar slot per parameter.
        slots: [usize; 2],
        coeff: CoeffSpec,
    },
}

/// A constructed model operator.
#[derive(Debug, Clone)]
pub enum Operator {
    Shift(ShiftSpec),
    Partial(PartialParaproductSpec),
    Full(FullParaproductSpec),
}

impl OperatorSpec {
    pub fn family(&self) -> Family {
        match self {
            OperatorSpec::Shift { .. } => Family::Shift,
            OperatorSpec::PartialParaproduct { .. } => Family::PartialParaproduct,
            OperatorSpec::FullParaproduct { .. } => Family::FullParaproduct,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            OperatorSpec::Shift { n, .. }
            | OperatorSpec::PartialParaproduct { n, .. }
            | OperatorSpec::FullParaproduct { n, .. } => *n,
        }
    }

    pub fn build(&self, grid: ProductGrid) -> Result<Operator> {
        let n = self.n();
        let slots_ok = |len: usize| {
            if len == n + 1 {
                Ok(())
            } else {
                Err(Error::Arity { expected: n + 1, found: len })
            }
        };
        Ok(match self {
            OperatorSpec::Shift { complexities, slots, coeff, .. } => {
                slots_ok(complexities.len())?;
                Operator::Shift(ShiftSpec::new(grid, complexities.clone(), slots.clone(), coeff.to_rule()?)?)
            }
            OperatorSpec::PartialParaproduct { complexities, slots, coeff, .. } => {
                slots_ok(complexities.len())?;
                let param = Param::from_index(slots.paraproduct_param as usize)?;
                Operator::Partial(PartialParaproductSpec::new(
                    grid,
                    param,
                    complexities.clone(),
                    slots.kinds.clone(),
                    slots.paraproduct_slot,
                    coeff.to_rule()?,
                )?)
            }
            OperatorSpec::FullParaproduct { slots, coeff, .. } => {
                Operator::Full(FullParaproductSpec::new(grid, n, *slots, coeff.to_rule()?)?)
            }
        })
    }

    /// The largest complexity in any slot and parameter.
    pub fn max_complexity(&self) -> u32 {
        match self {
            OperatorSpec::Shift { complexities, .. } => complexities.iter().flatten().copied().max().unwrap_or(0),
            OperatorSpec::PartialParaproduct { complexities, .. } => complexities.iter().copied().max().unwrap_or(0),
            OperatorSpec::FullParaproduct { .. } => 0,
        }
    }

    /// A seeded admissible spec with complexities at most `max_k` (clamped to the grid).
    pub fn random(family: Family, grid: ProductGrid, n: usize, max_k: u32, seed: u64) -> OperatorSpec {
        let mut g = rng(seed);
        let slots = n + 1;
        let coeff = CoeffSpec::uniform(g.gen());
        let pick_two = |g: &mut crate::rng::SeededRng| {
            let mut idx: Vec<usize> = (0..slots).collect();
            idx.shuffle(g);
            [idx[0], idx[1]]
        };
        match family {
            Family::Shift => {
                let cancel = [pick_two(&mut g), pick_two(&mut g)];
                let kmax = [max_k.min(grid.n1 - 1), max_k.min(grid.n2 - 1)];
                let complexities = (0..slots).map(|_| [g.gen_range(0..=kmax[0]), g.gen_range(0..=kmax[1])]).collect();
                let kinds = (0..slots)
                    .map(|s| [0, 1].map(|m| if cancel[m].contains(&s) { Atom::Haar } else { Atom::Haar0 }))
                    .collect();
                OperatorSpec::Shift { n, complexities, slots: kinds, coeff }
            }
            Family::PartialParaproduct => {
                let param: u8 = g.gen_range(1..=2);
                let depth = if param == 2 { grid.n1 } else { grid.n2 };
                let cancel = pick_two(&mut g);
                let kmax = max_k.min(depth - 1);
                let complexities = (0..slots).map(|_| g.gen_range(0..=kmax)).collect();
                let kinds = (0..slots).map(|s| if cancel.contains(&s) { Atom::Haar } else { Atom::Haar0 }).collect();
                let paraproduct_slot = g.gen_range(1..=slots);
                OperatorSpec::PartialParaproduct {
                    n,
                    complexities,
                    slots: PartialSlots { kinds, paraproduct_slot, paraproduct_param: param },
                    coeff,
                }
            }
            Family::FullParaproduct => {
                let slots = [g.gen_range(1..=n + 1), g.gen_range(1..=n + 1)];
                OperatorSpec::FullParaproduct { n, slots, coeff }
            }
        }
    }
}

impl Operator {
    pub fn family(&self) -> Family {
        match self {
            Operator::Shift(_) => Family::Shift,
            Operator::Partial(_) => Family::PartialParaproduct,
            Operator::Full(_) => Family::FullParaproduct,
        }
    }

    pub fn grid(&self) -> ProductGrid {
        match self {
            Operator::Shift(s) => s.grid(),
            Operator::Partial(s) => s.grid(),
            Operator::Full(s) => s.grid(),
        }
    }

    /// The `(j₁, j₂)`-adjoint with `j_m` acting in parameter `m`.
    pub fn adjoint(&self, j1: usize, j2: usize) -> Result<Operator> {
        Ok(match self {
            Operator::Shift(s) => Operator::Shift(s.adjoint(j1, j2)?),
            Operator::Partial(s) => Operator::Partial(match s.paraproduct_param() {
                Param::Two => s.adjoint(j1, j2)?,
                Param::One => s.adjoint(j2, j1)?,
            }),
            Operator::Full(s) => Operator::Full(s.adjoint(j1, j2)?),
        })
    }

    fn inner(&self) -> &dyn MultilinearOperator {
        match self {
            Operator::Shift(s) => s,
            Operator::Partial(s) => s,
            Operator::Full(s) => s,
        }
    }
}

impl MultilinearOperator for Operator {
    fn arity(&self) -> usize {
        self.inner().arity()
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        self.inner().apply(fs)
    }

    fn label(&self) -> String {
        self.inner().label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::uniform_function;

    #[test]
    fn json_roundtrip_and_build() {
        let g = ProductGrid::new(3, 3).unwrap();
        for (i, fam) in [Family::Shift, Family::PartialParaproduct, Family::FullParaproduct].into_iter().enumerate() {
            let spec = OperatorSpec::random(fam, g, 2, 1, i as u64);
            let json = serde_json::to_string(&spec).unwrap();
            let back: OperatorSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
            let op = back.build(g).unwrap();
            assert_eq!(op.family(), fam);
            let fs = [uniform_function(g, 1), uniform_function(g, 2)];
            assert!(op.apply(&fs).unwrap().max_abs().is_finite());
        }
    }

    #[test]
    fn table_over_cap_rejected() {
        let json = r#"{"family":"shift","n":1,"complexities":[[0,0],[0,0]],
            "slots":[["haar","haar"],["haar","haar"]],
            "coeff":{"mode":"table","data":[{"k":[0,0,0,0],"offsets":[[0,0],[0,0]],"value":2.0}]}}"#;
        let spec: OperatorSpec = serde_json::from_str(json).unwrap();
        let err = spec.build(ProductGrid::new(2, 2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InvalidCoefficients(_)));
    }
}
