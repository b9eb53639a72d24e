use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::report::RatioReport;
use crate::error::{Error, Result};
use crate::exponent::ExponentTuple;
use crate::function::GridFunction;
use crate::grid::{DyadicInterval, DyadicRectangle, ProductGrid};
use crate::haar::{basis_function, Basis1};
use crate::norms::lp_norm;
use crate::ops::MultilinearOperator;
use crate::rng::{derive_seed, random_haar_function, rng};
use crate::weights::{BloomSetup, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// Random Haar expansions with geometrically decaying coefficients.
    RandomHaar,
    /// One (possibly non-cancellative) basis function per input.
    SingleHaar,
    /// Indicators of random dyadic rectangles.
    Indicators,
    /// Greedy ascent over Haar coefficients starting from a random expansion.
    CoordinateAscent,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::RandomHaar => "random-haar",
            SamplerKind::SingleHaar => "single-haar",
            SamplerKind::Indicators => "indicators",
            SamplerKind::CoordinateAscent => "coordinate-ascent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub trials: usize,
    pub seed: u64,
    /// Operator evaluations per coordinate-ascent trial.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    40
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, trials: usize, seed: u64) -> Self {
        SamplerConfig { kind, trials, seed, budget: default_budget() }
    }
}

/// Multiplier weights `w_i` on the inputs and `w_out` on the output.
#[derive(Debug, Clone)]
pub struct WeightTuple {
    pub inputs: Vec<Weight>,
    pub output: Weight,
}

impl WeightTuple {
    /// Output weight `Π w_i`.
    pub fn new(inputs: Vec<Weight>) -> Result<Self> {
        let output = Weight::product(&inputs)?;
        Ok(WeightTuple { inputs, output })
    }

    pub fn ones(grid: ProductGrid, n: usize) -> Self {
        WeightTuple { inputs: vec![Weight::ones(grid); n], output: Weight::ones(grid) }
    }

    /// Inputs `w_i`, output `ν^{-1} w`.
    pub fn bloom(b: &BloomSetup) -> Self {
        WeightTuple { inputs: b.ws.clone(), output: b.output_weight() }
    }
}

/// Short digest of an input tuple.
pub fn tuple_digest(fs: &[GridFunction]) -> String {
    let mut h = Sha256::new();
    for f in fs {
        h.update(f.digest().as_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// `‖op(f⃗)·w_out‖_{L^p}` and `Π‖f_i w_i‖_{L^{p_i}}`.
pub(crate) fn ratio_parts(
    op: &dyn MultilinearOperator,
    ws: &WeightTuple,
    p: &ExponentTuple,
    fs: &[GridFunction],
) -> Result<(f64, f64)> {
    let mut den = 1.0;
    for ((f, w), &pi) in fs.iter().zip(&ws.inputs).zip(&p.0) {
        den *= lp_norm(f, pi, Some(w))?;
    }
    if den == 0.0 {
        return Ok((0.0, 0.0));
    }
    let num = lp_norm(&op.apply(fs)?, p.joint()?, Some(&ws.output))?;
    Ok((num, den))
}

fn random_rectangle(grid: ProductGrid, r: &mut impl Rng) -> DyadicRectangle {
    let pick = |depth: u32, r: &mut dyn rand::RngCore| {
        let l = r.gen_range(0..=depth);
        DyadicInterval::new(l, r.gen_range(0..1u32 << l)).expect("in range")
    };
    DyadicRectangle::new(pick(grid.n1, r), pick(grid.n2, r))
}

fn random_basis(grid: ProductGrid, r: &mut impl Rng) -> (Basis1, Basis1) {
    (
        Basis1::from_index(r.gen_range(0..grid.rows())),
        Basis1::from_index(r.gen_range(0..grid.cols())),
    )
}

fn draw(kind: SamplerKind, grid: ProductGrid, n: usize, seed: u64) -> Vec<GridFunction> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| match kind {
            SamplerKind::RandomHaar | SamplerKind::CoordinateAscent => {
                random_haar_function(grid, 0.7, false, derive_seed(seed, i as u64))
            }
            SamplerKind::SingleHaar => {
                let (b1, b2) = random_basis(grid, &mut r);
                basis_function(grid, b1, b2)
            }
            SamplerKind::Indicators => GridFunction::indicator(grid, random_rectangle(grid, &mut r)),
        })
        .collect()
}

/// Runs one trial: returns the tuple whose ratio is reported and its parts.
fn trial(
    op: &dyn MultilinearOperator,
    ws: &WeightTuple,
    p: &ExponentTuple,
    cfg: &SamplerConfig,
    grid: ProductGrid,
    seed: u64,
) -> Result<(Vec<GridFunction>, f64, f64)> {
    let n = op.arity();
    let mut fs = draw(cfg.kind, grid, n, seed);
    let (mut num, mut den) = ratio_parts(op, ws, p, &fs)?;
    if cfg.kind == SamplerKind::CoordinateAscent && den > 0.0 {
        let mut r = rng(derive_seed(seed, u64::MAX));
        let mut best = num / den;
        let mut step = 0.5;
        for _ in 0..cfg.budget {
            let i = r.gen_range(0..n);
            let (b1, b2) = random_basis(grid, &mut r);
            let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut cand = fs.clone();
            cand[i] = &cand[i] + &basis_function(grid, b1, b2).scale(sign * step);
            let (cn, cd) = ratio_parts(op, ws, p, &cand)?;
            if cd > 0.0 && cn / cd > best {
                best = cn / cd;
                (fs, num, den) = (cand, cn, cd);
            } else {
                step *= 0.9;
            }
        }
    }
    Ok((fs, num, den))
}

/// Largest sampled `‖op(f⃗)·w_out‖_{L^p} / Π‖f_i w_i‖_{L^{p_i}}`.
///
/// Trial `t` uses the seed `derive_seed(cfg.seed, t)`, so the samples of a run
/// with more trials extend those of a shorter run.
pub fn estimate_norm(
    op: &dyn MultilinearOperator,
    ws: &WeightTuple,
    p: &ExponentTuple,
    cfg: &SamplerConfig,
) -> Result<RatioReport> {
    let n = op.arity();
    if cfg.trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    if ws.inputs.len() != n || p.len() != n {
        return Err(Error::Arity { expected: n, found: ws.inputs.len().min(p.len()) });
    }
    let grid = ws.output.grid();
    for w in &ws.inputs {
        grid.check_same(w.grid())?;
    }
    let results: Vec<Result<(String, f64, f64)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let (fs, num, den) = trial(op, ws, p, cfg, grid, derive_seed(cfg.seed, t as u64))?;
            Ok((tuple_digest(&fs), num, den))
        })
        .collect();
    let mut report = RatioReport::new(cfg.kind.name(), cfg.seed);
    for r in results {
        let (digest, num, den) = r?;
        report.push_ratio(digest, num, den);
    }
    Ok(report)
}
