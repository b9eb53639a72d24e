//! Muckenhoupt-type weight classes on the dyadic rectangles of one grid.

mod bloom;
mod cache;
mod characteristics;
mod generate;
mod lemmas;

pub use bloom::{bloom_setup, BloomCharacteristics, BloomSetup, AINFTY_FLAG};
pub use cache::{global_cache, CharacteristicCache};
pub use characteristics::{
    a1_characteristic_measure, ainfty_characteristic, ap_characteristic, astar_characteristic,
    multilinear_characteristic, sup_over_rectangles, CharacteristicReport, Factor,
};
pub use generate::{gen_weight, WeightKind};
pub use lemmas::{
    dual_tuple, duality_identity_check, lemma1_check, reverse_holder_check, reverse_holder_constant,
    LemmaReport, Violation,
};

use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::ProductGrid;

/// A strictly positive grid function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunction", into = "GridFunction")]
pub struct Weight(GridFunction);

impl Weight {
    pub fn new(f: GridFunction) -> Result<Self> {
        if !f.is_positive() {
            return Err(Error::InvalidWeight("weights must be strictly positive on every cell".into()));
        }
        Ok(Weight(f))
    }

    pub fn ones(grid: ProductGrid) -> Self {
        Weight(GridFunction::constant(grid, 1.0))
    }

    pub fn function(&self) -> &GridFunction {
        &self.0
    }

    pub fn into_function(self) -> GridFunction {
        self.0
    }

    /// `w^e`; stays a weight for every real `e`.
    pub fn pow(&self, e: f64) -> Weight {
        Weight(self.0.powf(e))
    }

    pub fn mul(&self, other: &Weight) -> Result<Weight> {
        Ok(Weight(self.0.zip_map(&other.0, |a, b| a * b)?))
    }

    pub fn div(&self, other: &Weight) -> Result<Weight> {
        Ok(Weight(self.0.zip_map(&other.0, |a, b| a / b)?))
    }

    pub fn scale(&self, c: f64) -> Result<Weight> {
        Weight::new(self.0.scale(c))
    }

    /// `w(R) = ∫_R w`.
    pub fn measure(&self, r: crate::grid::DyadicRectangle) -> f64 {
        self.0.integral_over(r)
    }

    pub fn product(ws: &[Weight]) -> Result<Weight> {
        let first = ws.first().ok_or_else(|| Error::InvalidInput("empty weight tuple".into()))?;
        ws[1..].iter().try_fold(first.clone(), |acc, w| acc.mul(w))
    }
}

impl Deref for Weight {
    type Target = GridFunction;
    fn deref(&self) -> &GridFunction {
        &self.0
    }
}

impl TryFrom<GridFunction> for Weight {
    type Error = Error;
    fn try_from(f: GridFunction) -> Result<Self> {
        Weight::new(f)
    }
}

impl From<Weight> for GridFunction {
    fn from(w: Weight) -> GridFunction {
        w.0
    }
}
