use serde::{Deserialize, Serialize};
use std::io::Write;

use super::norm::{estimate_norm, SamplerConfig, WeightTuple};
use super::report::RatioReport;
use crate::bmo::bmo_nu_norm;
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::Param;
use crate::ops::{commutator, Atom, CoeffRule, Family, MultilinearOperator, PartialParaproductSpec, ShiftSpec};
use crate::weights::BloomSetup;

struct Commutator<'a> {
    b: &'a GridFunction,
    op: &'a dyn MultilinearOperator,
    slot: usize,
}

impl MultilinearOperator for Commutator<'_> {
    fn arity(&self) -> usize {
        self.op.arity()
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        commutator(self.b, self.op, self.slot, fs)
    }

    fn label(&self) -> String {
        format!("[b, {}]_{}", self.op.label(), self.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub bmo_nu: f64,
    /// Samples of `‖[b,U]_j(f⃗)·ν^{-1}w‖_{L^p} / (‖b‖_{bmo(ν)} Π‖f_i w_i‖_{L^{p_i}})`.
    pub ratios: RatioReport,
}

/// Sampled commutator ratio in the Bloom slot of `bloom`.
pub fn verify_upper_bound(
    b: &GridFunction,
    op: &dyn MultilinearOperator,
    bloom: &BloomSetup,
    cfg: &SamplerConfig,
) -> Result<UpperBoundReport> {
    if op.arity() != bloom.n() {
        return Err(Error::Arity { expected: bloom.n(), found: op.arity() });
    }
    let bmo_nu = bmo_nu_norm(b, &bloom.nu)?.norm;
    if bmo_nu == 0.0 {
        return Err(Error::Degenerate("b is constant, so ‖b‖_bmo(ν) = 0".into()));
    }
    let c = Commutator { b, op, slot: bloom.slot };
    let raw = estimate_norm(&c, &WeightTuple::bloom(bloom), &bloom.p, cfg)?;
    let mut ratios = RatioReport::new(raw.sampler.clone(), raw.seed);
    for s in &raw.samples {
        ratios.push(s.digest.clone(), s.ratio / bmo_nu);
    }
    ratios.skipped = raw.skipped;
    Ok(UpperBoundReport { bmo_nu, ratios })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: u32,
    pub ratio: f64,
    #[serde(rename = "bound-shape")]
    pub bound_shape: f64,
    /// `(r(k)/shape(k)) / (r(k₀)/shape(k₀))` with `k₀` the first swept value.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub family: Family,
    pub beta: f64,
    pub rows: Vec<SweepRow>,
    pub shape_ok: bool,
}

impl SweepReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The swept operator: complexity `k` in the first parameter of the output slot.
pub fn sweep_operator(family: Family, bloom: &BloomSetup, k: u32, seed: u64) -> Result<Box<dyn MultilinearOperator>> {
    let grid = bloom.nu.grid();
    let n = bloom.n();
    Ok(match family {
        Family::Shift => {
            let mut ks = vec![[0, 0]; n + 1];
            ks[n] = [k, 0];
            Box::new(ShiftSpec::new(grid, ks, vec![[Atom::Haar; 2]; n + 1], CoeffRule::Uniform { seed })?)
        }
        Family::PartialParaproduct => {
            let mut ks = vec![0; n + 1];
            ks[n] = k;
            Box::new(PartialParaproductSpec::new(
                grid,
                Param::Two,
                ks,
                vec![Atom::Haar; n + 1],
                1,
                CoeffRule::Uniform { seed },
            )?)
        }
        Family::FullParaproduct => {
            return Err(Error::Unsupported("full paraproducts have no complexity to sweep".into()))
        }
    })
}

/// Max commutator ratio for each complexity in `ks`, compared with
/// `(1+k)^{1/2}` for shifts and `2^{kβ}` for partial paraproducts.
pub fn complexity_sweep(
    family: Family,
    b: &GridFunction,
    bloom: &BloomSetup,
    ks: &[u32],
    beta: f64,
    cfg: &SamplerConfig,
    coeff_seed: u64,
) -> Result<SweepReport> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("empty complexity sweep".into()));
    }
    let shape = |k: u32| match family {
        Family::PartialParaproduct => (k as f64 * beta).exp2(),
        _ => (1.0 + k as f64).sqrt(),
    };
    let mut ratios = Vec::with_capacity(ks.len());
    for &k in ks {
        let op = sweep_operator(family, bloom, k, coeff_seed)?;
        ratios.push(verify_upper_bound(b, op.as_ref(), bloom, cfg)?.ratios.max);
    }
    let base = ratios[0] / shape(ks[0]);
    let rows: Vec<SweepRow> = ks
        .iter()
        .zip(&ratios)
        .map(|(&k, &ratio)| SweepRow {
            k,
            ratio,
            bound_shape: shape(k),
            slack: if base > 0.0 { ratio / shape(k) / base } else { 0.0 },
        })
        .collect();
    let shape_ok = match family {
        Family::PartialParaproduct => rows.iter().all(|r| r.slack <= 2.0),
        _ => rows.iter().enumerate().all(|(i, a)| {
            rows[i + 1..].iter().all(|c| c.ratio / c.bound_shape <= 2.0 * a.ratio / a.bound_shape)
        }),
    };
    Ok(SweepReport { family, beta, rows, shape_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentTuple;
    use crate::grid::{DyadicRectangle, ProductGrid};
    use crate::haar::haar_rect;
    use crate::ops::identity_like_shift;
    use crate::weights::{bloom_setup, Weight};

    use super::super::norm::SamplerKind;

    fn trivial(g: ProductGrid, n: usize) -> BloomSetup {
        let ws = vec![Weight::ones(g); n];
        let p = ExponentTuple::from_values(&vec![2.0 * n as f64; n]).unwrap();
        bloom_setup(&ws, &Weight::ones(g), &p, 1).unwrap()
    }

    #[test]
    fn constant_symbol_rejected() {
        let g = ProductGrid::new(2, 2).unwrap();
        let cfg = SamplerConfig::new(SamplerKind::RandomHaar, 2, 0);
        let b = GridFunction::constant(g, 2.0);
        let err = verify_upper_bound(&b, &identity_like_shift(g), &trivial(g, 1), &cfg).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn invariant_under_adding_constants() {
        let g = ProductGrid::new(3, 3).unwrap();
        let r = DyadicRectangle::from_parts(1, 0, 1, 1).unwrap();
        let b = haar_rect(g, r);
        let cfg = SamplerConfig::new(SamplerKind::RandomHaar, 10, 4);
        let s = identity_like_shift(g);
        let one = verify_upper_bound(&b, &s, &trivial(g, 1), &cfg).unwrap();
        let two = verify_upper_bound(&b.map(|v| v + 5.0), &s, &trivial(g, 1), &cfg).unwrap();
        assert!((one.ratios.max - two.ratios.max).abs() <= 1e-12 * one.ratios.max);
        assert!((one.bmo_nu - two.bmo_nu).abs() < 1e-12);
    }

    #[test]
    fn sign_symbol_two_term_check() {
        // n = 1, k = 0: with f = h_Q for Q the root, b h_Q is the constant |Q|^{-1/2}
        // times sign(x₁ − 1/2)·h_Q, and [b, S](h_Q) = b h_Q − S(b h_Q).
        let g = ProductGrid::new(2, 2).unwrap();
        let b = GridFunction::from_point_fn(g, |x, _| if x < 0.5 { -1.0 } else { 1.0 });
        let s = identity_like_shift(g);
        let root = DyadicRectangle::from_parts(0, 0, 0, 0).unwrap();
        let f = haar_rect(g, root);
        let direct = &(&b * &s.apply(std::slice::from_ref(&f)).unwrap()) - &s.apply(&[&b * &f]).unwrap();
        let c = commutator(&b, &s, 1, &[f]).unwrap();
        assert!(c.max_abs_diff(&direct).unwrap() < 1e-14);
        let cfg = SamplerConfig::new(SamplerKind::RandomHaar, 20, 0);
        let rep = verify_upper_bound(&b, &s, &trivial(g, 1), &cfg).unwrap();
        assert!(rep.ratios.max.is_finite() && rep.ratios.max > 0.0);
        assert!((rep.bmo_nu - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_constant_symbol() {
        let g = ProductGrid::new(3, 3).unwrap();
        let h = haar_rect(g, DyadicRectangle::from_parts(1, 1, 0, 0).unwrap());
        let cfg = SamplerConfig::new(SamplerKind::RandomHaar, 10, 2);
        let s = identity_like_shift(g);
        let base = verify_upper_bound(&h, &s, &trivial(g, 1), &cfg).unwrap().ratios.max;
        let tiny = verify_upper_bound(&h.scale(1e-6).map(|v| v + 3.0), &s, &trivial(g, 1), &cfg).unwrap().ratios.max;
        assert!((base - tiny).abs() < 1e-6 * base);
    }

    #[test]
    fn sweep_rows_and_csv() {
        let g = ProductGrid::new(4, 3).unwrap();
        let b = GridFunction::from_point_fn(g, |x, y| if x + y < 1.0 { 0.0 } else { 1.0 });
        let cfg = SamplerConfig::new(SamplerKind::RandomHaar, 6, 1);
        let rep = complexity_sweep(Family::Shift, &b, &trivial(g, 1), &[0, 1, 2], 0.5, &cfg, 3).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!((rep.rows[0].slack - 1.0).abs() < 1e-12);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,ratio,bound-shape,slack\n"));
        assert!(complexity_sweep(Family::FullParaproduct, &b, &trivial(g, 1), &[0], 0.5, &cfg, 3).is_err());
    }
}
