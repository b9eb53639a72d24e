use serde::{Deserialize, Serialize};

use super::cases::{case1_vn, case2_vn, dual_element, select_case, Case, ChainCheck, Memberships, RectangleCheck};
use super::rdf::{rdf_prime, NormEstimate, RdfProperties, DEFAULT_K_MAX};
use super::split::{SplitCharacteristics, SplitWeights};
use crate::error::Result;
use crate::rng::{derive_seed, uniform_positive};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Test functions per sampled inequality.
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
}

fn default_k_max() -> u32 {
    DEFAULT_K_MAX
}

fn default_samples() -> usize {
    100
}

impl ExtrapolationConfig {
    pub fn new(seed: u64) -> Self {
        ExtrapolationConfig { k_max: DEFAULT_K_MAX, samples: default_samples(), seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationCharacteristics {
    #[serde(flatten)]
    pub split: SplitCharacteristics,
    pub v_n: Memberships,
    /// `[W_w]^{q_n'/p_n'}`, reported in the second case only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_shape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    pub case: Case,
    pub rho: f64,
    pub s: f64,
    pub characteristics: ExtrapolationCharacteristics,
    pub properties: RdfProperties,
    pub tail: f64,
    pub norm: NormEstimate,
    pub chain: ChainCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rectangles: Option<RectangleCheck>,
}

impl ExtrapolationReport {
    /// Every exactly checkable property holds and `v_n` has finite characteristics.
    pub fn passed(&self) -> bool {
        let p = &self.properties;
        p.h_le_h
            && p.norm_bound.ok
            && p.a1_bounds.ok
            && self.characteristics.v_n.finite
            && self.chain.ok
            && self.rectangles.is_none_or(|r| r.ok)
    }
}

/// Runs whichever construction `q_n` selects, started from a seeded positive function.
pub fn extrapolate(split: &SplitWeights, cfg: &ExtrapolationConfig) -> Result<ExtrapolationReport> {
    let (case, s) = select_case(split)?;
    let grid = split.w_hat.grid();
    let start = uniform_positive(grid, 0.05, 1.0, derive_seed(cfg.seed, 0));
    let chain_seed = derive_seed(cfg.seed, 1);
    Ok(match case {
        Case::One => {
            let rdf = rdf_prime(&start, split, cfg.k_max)?;
            let out = case1_vn(split, &rdf.big_h, cfg.samples, chain_seed)?;
            ExtrapolationReport {
                case,
                rho: split.rho,
                s,
                characteristics: ExtrapolationCharacteristics {
                    split: split.characteristics.clone(),
                    v_n: out.memberships,
                    bound_shape: None,
                },
                properties: rdf.properties,
                tail: rdf.tail,
                norm: rdf.norm,
                chain: out.chain,
                identity_gap: Some(out.identity_gap),
                rectangles: None,
            }
        }
        Case::Two => {
            let h = dual_element(&start, split)?;
            let out = case2_vn(split, &h, cfg.k_max, cfg.samples, chain_seed)?;
            ExtrapolationReport {
                case,
                rho: split.rho,
                s,
                characteristics: ExtrapolationCharacteristics {
                    split: split.characteristics.clone(),
                    v_n: out.memberships,
                    bound_shape: Some(out.bound_shape),
                },
                properties: out.rdf.properties,
                tail: out.rdf.tail,
                norm: out.rdf.norm,
                chain: out.chain,
                identity_gap: None,
                rectangles: Some(out.rectangles),
            }
        }
    })
}
