use rand::Rng;
use serde::{Deserialize, Serialize};

use super::characteristics::ainfty_characteristic;
use super::Weight;
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::{Param, ProductGrid};
use crate::haar::{haar_inverse, Basis1, HaarCoefficients};
use crate::rng::rng;

/// Recipes for test weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightKind {
    Constant {
        value: f64,
    },
    /// Two values on the halves of `[0,1)` in parameter `axis`, constant in the other.
    Step {
        values: [f64; 2],
        axis: u8,
    },
    /// `|x₁ − 1/2|^{α₁} |x₂ − 1/2|^{α₂}` at cell centers.
    PowerLike {
        alpha: [f64; 2],
    },
    /// Independent uniform values in `[lo, hi]` on the rectangles of levels `levels`.
    RandomStep {
        levels: [u32; 2],
        lo: f64,
        hi: f64,
    },
    /// `exp(c·g)` with `g` a Haar expansion up to level `depth` and coefficients
    /// decaying like `decay^{level₁+level₂}`; `c` is halved until `[w]_{A_∞} ≤ bound`.
    RandomAinfty {
        bound: f64,
        #[serde(default = "default_depth")]
        depth: u32,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_budget")]
        budget: u32,
    },
}

fn default_depth() -> u32 {
    3
}

fn default_decay() -> f64 {
    0.7
}

fn default_budget() -> u32 {
    40
}

pub fn gen_weight(grid: ProductGrid, kind: &WeightKind, seed: u64) -> Result<Weight> {
    match *kind {
        WeightKind::Constant { value } => Weight::new(GridFunction::constant(grid, value)),
        WeightKind::Step { values, axis } => {
            let param = Param::from_index(axis as usize)?;
            let half = grid.side(param) / 2;
            Weight::new(GridFunction::from_fn(grid, |c1, c2| {
                let c = if param == Param::One { c1 } else { c2 };
                if c < half {
                    values[0]
                } else {
                    values[1]
                }
            }))
        }
        WeightKind::PowerLike { alpha } => Weight::new(GridFunction::from_point_fn(grid, |x1, x2| {
            (x1 - 0.5).abs().powf(alpha[0]) * (x2 - 0.5).abs().powf(alpha[1])
        })),
        WeightKind::RandomStep { levels, lo, hi } => {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::InvalidInput(format!("random-step range [{lo}, {hi}] must be positive")));
            }
            let (l1, l2) = (levels[0].min(grid.n1), levels[1].min(grid.n2));
            let mut r = rng(seed);
            let block: Vec<f64> = (0..1usize << (l1 + l2))
                .map(|_| if hi > lo { r.gen_range(lo..=hi) } else { lo })
                .collect();
            Weight::new(GridFunction::from_fn(grid, |c1, c2| {
                let m1 = c1 >> (grid.n1 - l1);
                let m2 = c2 >> (grid.n2 - l2);
                block[(m1 << l2) | m2]
            }))
        }
        WeightKind::RandomAinfty { bound, depth, decay, budget } => {
            if !(bound >= 1.0) {
                return Err(Error::InvalidInput(format!("A_inf bound {bound} must be at least 1")));
            }
            let g = random_expansion(grid, depth, decay, seed);
            let mut c = 1.0;
            for _ in 0..budget {
                let w = Weight::new(g.map(|v| (c * v).exp()))?;
                if ainfty_characteristic(&w).value <= bound {
                    return Ok(w);
                }
                c *= 0.5;
            }
            Err(Error::GeneratorFailure(format!(
                "no weight with [w]_A_inf <= {bound} within {budget} attempts"
            )))
        }
    }
}

/// A Haar expansion with sup norm one.
fn random_expansion(grid: ProductGrid, depth: u32, decay: f64, seed: u64) -> GridFunction {
    let mut r = rng(seed);
    let mut c = HaarCoefficients::zeros(grid);
    for l1 in 0..depth.min(grid.n1) {
        for l2 in 0..depth.min(grid.n2) {
            let scale = decay.powi((l1 + l2) as i32) * ((l1 + l2) as f64 * 0.5).exp2().recip();
            for m1 in 0..1u32 << l1 {
                for m2 in 0..1u32 << l2 {
                    let b1 = Basis1::Haar(crate::grid::DyadicInterval { level: l1, index: m1 });
                    let b2 = Basis1::Haar(crate::grid::DyadicInterval { level: l2, index: m2 });
                    c.set(b1, b2, r.gen_range(-1.0..1.0) * scale);
                }
            }
        }
    }
    for l in 0..depth.min(grid.n1) {
        for m in 0..1u32 << l {
            let b = Basis1::Haar(crate::grid::DyadicInterval { level: l, index: m });
            c.set(b, Basis1::Constant, r.gen_range(-1.0..1.0) * decay.powi(l as i32));
        }
    }
    for l in 0..depth.min(grid.n2) {
        for m in 0..1u32 << l {
            let b = Basis1::Haar(crate::grid::DyadicInterval { level: l, index: m });
            c.set(Basis1::Constant, b, r.gen_range(-1.0..1.0) * decay.powi(l as i32));
        }
    }
    let g = haar_inverse(&c);
    let m = g.max_abs();
    if m > 0.0 {
        g.scale(1.0 / m)
    } else {
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_step() {
        let g = ProductGrid::new(2, 3).unwrap();
        let w = gen_weight(g, &WeightKind::Constant { value: 2.0 }, 0).unwrap();
        assert!(w.values().iter().all(|&v| v == 2.0));
        let s = gen_weight(g, &WeightKind::Step { values: [1.0, 4.0], axis: 2 }, 0).unwrap();
        assert_eq!(s.at(3, 0), 1.0);
        assert_eq!(s.at(0, 7), 4.0);
    }

    #[test]
    fn random_ainfty_respects_bound() {
        let g = ProductGrid::new(4, 4).unwrap();
        let kind = WeightKind::RandomAinfty { bound: 8.0, depth: 3, decay: 0.7, budget: 40 };
        let w = gen_weight(g, &kind, 7).unwrap();
        assert!(ainfty_characteristic(&w).value <= 8.0);
        assert_eq!(w, gen_weight(g, &kind, 7).unwrap());
    }

    #[test]
    fn random_ainfty_failure() {
        let g = ProductGrid::new(3, 3).unwrap();
        let kind = WeightKind::RandomAinfty { bound: 1.0, depth: 3, decay: 0.9, budget: 2 };
        assert!(matches!(gen_weight(g, &kind, 1), Err(Error::GeneratorFailure(_))));
    }

    #[test]
    fn kinds_roundtrip_json() {
        let k = WeightKind::RandomStep { levels: [2, 1], lo: 0.5, hi: 2.0 };
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.contains("\"kind\":\"random-step\""));
        assert_eq!(serde_json::from_str::<WeightKind>(&s).unwrap(), k);
    }
}
