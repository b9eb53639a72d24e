use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{extrapolate, ExtrapolationConfig, ExtrapolationReport};
use super::split::split_weights;
use crate::bounds::{estimate_norm, SamplerConfig, WeightTuple};
use crate::error::{Error, Result};
use crate::exponent::ExponentTuple;
use crate::grid::ProductGrid;
use crate::ops::{square_function, MultilinearOperator, SquareKind};
use crate::rng::{derive_seed, random_haar_function};
use crate::weights::{ainfty_characteristic, gen_weight, Weight, WeightKind};

/// Input weights `w₁, …, w_n` and the Bloom replacement `λ₁` of the first one.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub ws: Vec<Weight>,
    pub lambda1: Weight,
}

impl Scenario {
    /// Multiplier `λ₁ w₂ ⋯ w_n` on the output.
    fn tuple(&self) -> Result<WeightTuple> {
        let mut out = self.ws.clone();
        out[0] = self.lambda1.clone();
        Ok(WeightTuple { inputs: self.ws.clone(), output: Weight::product(&out)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub sampler: SamplerConfig,
    pub extrapolation: ExtrapolationConfig,
    /// Exponents at which the `A_∞` pair check runs.
    pub ainfty_ps: Vec<f64>,
    pub ainfty_weights: usize,
    pub ainfty_pairs: usize,
}

impl DemoConfig {
    pub fn new(sampler: SamplerConfig) -> Self {
        DemoConfig {
            sampler,
            extrapolation: ExtrapolationConfig::new(sampler.seed),
            ainfty_ps: vec![0.5, 1.0, 2.0, 4.0],
            ainfty_weights: 4,
            ainfty_pairs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    /// Largest sampled ratio at `p⃗`.
    pub hypothesis: f64,
    /// Largest sampled ratio at `q⃗`.
    pub conclusion: f64,
    pub construction: ExtrapolationReport,
}

/// `max ∫|f|^p w / ∫(S_𝒟 f)^p w` over cancellative `f` and random `A_∞` weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AinftyPairCheck {
    pub p: f64,
    pub max_ratio: f64,
    pub max_ainfty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub operator: String,
    pub p: ExponentTuple,
    pub q: ExponentTuple,
    pub scenarios: Vec<ScenarioReport>,
    pub ainfty: Vec<AinftyPairCheck>,
}

/// Measures the operator at `p⃗` and at `q⃗`, which may differ from `p⃗` in the last slot only,
/// and builds the weight `v_n` that carries one estimate to the other.
pub fn demo_extrapolation(
    op: &dyn MultilinearOperator,
    p: &ExponentTuple,
    q: &ExponentTuple,
    scenarios: &[Scenario],
    cfg: &DemoConfig,
) -> Result<DemoReport> {
    let n = op.arity();
    if p.len() != n || q.len() != n {
        return Err(Error::Arity { expected: n, found: p.len().min(q.len()) });
    }
    if p.0[..n - 1] != q.0[..n - 1] || p.get(n - 1) == q.get(n - 1) {
        return Err(Error::Unsupported(format!(
            "only a change in the last exponent is implemented; got p = {p}, q = {q}"
        )));
    }
    let grid = scenarios
        .first()
        .map(|s| s.lambda1.grid())
        .ok_or_else(|| Error::InvalidInput("at least one weight scenario is required".into()))?;
    let q_n = q.get(n - 1);
    let scenarios = scenarios
        .par_iter()
        .map(|sc| {
            let ws = sc.tuple()?;
            let hypothesis = estimate_norm(op, &ws, p, &cfg.sampler)?.max;
            let conclusion = estimate_norm(op, &ws, q, &cfg.sampler)?.max;
            let split = split_weights(&sc.ws, &sc.lambda1, p, q_n)?;
            let construction = extrapolate(&split, &cfg.extrapolation)?;
            Ok(ScenarioReport { name: sc.name.clone(), hypothesis, conclusion, construction })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DemoReport {
        operator: op.label(),
        p: p.clone(),
        q: q.clone(),
        scenarios,
        ainfty: ainfty_pair_check(grid, cfg)?,
    })
}

/// The `A_∞` pair check on `(|f|, S_𝒟 f)`.
pub fn ainfty_pair_check(grid: ProductGrid, cfg: &DemoConfig) -> Result<Vec<AinftyPairCheck>> {
    let kind = WeightKind::RandomAinfty { bound: 4.0, depth: 3, decay: 0.7, budget: 40 };
    let seed = derive_seed(cfg.sampler.seed, 0xa1f);
    let weights = (0..cfg.ainfty_weights)
        .map(|i| gen_weight(grid, &kind, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let max_ainfty = weights.iter().map(|w| ainfty_characteristic(w).value).fold(0.0, f64::max);
    let pairs: Vec<_> = (0..cfg.ainfty_pairs)
        .map(|i| {
            let f = random_haar_function(grid, 0.7, true, derive_seed(seed, 1000 + i as u64));
            let sf = square_function(&f, SquareKind::Sd);
            (f.abs(), sf)
        })
        .collect();
    Ok(cfg
        .ainfty_ps
        .iter()
        .map(|&p| {
            let mut max_ratio: f64 = 0.0;
            for w in &weights {
                for (f, g) in &pairs {
                    let num = (&f.powf(p) * w.function()).integral();
                    let den = (&g.powf(p) * w.function()).integral();
                    if den > 0.0 {
                        max_ratio = max_ratio.max(num / den);
                    }
                }
            }
            AinftyPairCheck { p, max_ratio, max_ainfty }
        })
        .collect())
}
