use serde::{Deserialize, Serialize};

use super::split::SplitWeights;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::GridFunction;
use crate::grid::ProductGrid;
use crate::norms::lp_norm_measure;
use crate::ops::maximal_weighted;
use crate::rng::{derive_seed, uniform_positive};
use crate::weights::{a1_characteristic_measure, Weight};

/// Factor applied to the largest observed amplification.
pub const NORM_SAFETY: f64 = 1.5;
/// Largest admissible relative size of the first omitted series term.
pub const TAIL_THRESHOLD: f64 = 0.05;
pub const DEFAULT_K_MAX: u32 = 20;
/// Rounding slack for the pointwise comparison `h ≤ H` after `x ↦ (x^a)^{1/a}`.
const ROUNDTRIP: f64 = 8.0 * f64::EPSILON;

/// The norm estimate of a positive sublinear operator and the probes behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    /// Largest `‖Tu‖/‖u‖` seen over the probe family.
    pub amplification: f64,
    pub probe: String,
    pub probes: usize,
    /// `NORM_SAFETY · amplification`.
    pub estimate: f64,
}

/// `Σ_{k≤K} T^k g / (2^k N^k)`.
#[derive(Debug, Clone)]
pub struct Series {
    pub sum: GridFunction,
    pub norm: NormEstimate,
    pub term_norms: Vec<f64>,
    /// `‖T^{K+1}g/(2N)^{K+1}‖ / ‖g‖`.
    pub tail: f64,
    /// Largest ratio of consecutive term norms.
    pub decay: f64,
}

fn rectangle_probes(grid: ProductGrid) -> Vec<(String, GridFunction)> {
    grid.rectangles_up_to(grid.n1.min(2), grid.n2.min(2))
        .map(|r| (format!("1_{r}"), GridFunction::indicator(grid, r)))
        .collect()
}

/// Estimates `‖T‖` on `L^e(μ)` from indicators, seeded positive functions and
/// power iterates starting at `g` and at the best other probe.
pub fn estimate_operator_norm(
    t: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    e: f64,
    mu: &Weight,
    g: &GridFunction,
    seed: u64,
) -> Result<NormEstimate> {
    let grid = g.grid();
    let exp = Exponent::Finite(e);
    let amp = |u: &GridFunction| -> Result<(f64, GridFunction)> {
        let tu = t(u)?;
        let den = lp_norm_measure(u, exp, Some(mu.function()))?;
        Ok((if den > 0.0 { lp_norm_measure(&tu, exp, Some(mu.function()))? / den } else { 0.0 }, tu))
    };
    let mut probes = rectangle_probes(grid);
    for i in 0..8 {
        probes.push((format!("random#{i}"), uniform_positive(grid, 0.0, 1.0, derive_seed(seed, i))));
    }
    probes.push(("g".into(), g.clone()));
    let mut best = (0.0, String::new());
    let mut best_fn = g.clone();
    let mut count = 0;
    for (name, u) in &probes {
        let (a, _) = amp(u)?;
        count += 1;
        if a > best.0 {
            best = (a, name.clone());
            best_fn = u.clone();
        }
    }
    for (start, label) in [(g.clone(), "g"), (best_fn, "best")] {
        let mut u = start;
        for k in 1..=8 {
            let (a, tu) = amp(&u)?;
            count += 1;
            if a > best.0 {
                best = (a, format!("T^{k}({label})"));
            }
            let norm = lp_norm_measure(&tu, exp, Some(mu.function()))?;
            if norm == 0.0 {
                break;
            }
            u = tu.scale(1.0 / norm);
        }
    }
    Ok(NormEstimate { amplification: best.0, probe: best.1, probes: count, estimate: NORM_SAFETY * best.0 })
}

/// The Rubio de Francia series of `t` applied to `g` in `L^e(μ)`.
pub fn rdf_series(
    t: &dyn Fn(&GridFunction) -> Result<GridFunction>,
    e: f64,
    mu: &Weight,
    g: &GridFunction,
    k_max: u32,
    seed: u64,
) -> Result<Series> {
    if k_max < 8 {
        return Err(Error::InvalidInput(format!("K_max must be at least 8, got {k_max}")));
    }
    if g.values().iter().any(|v| *v < 0.0) || g.max_abs() == 0.0 {
        return Err(Error::Degenerate("the series needs a nonnegative input that is not identically 0".into()));
    }
    let norm = estimate_operator_norm(t, e, mu, g, seed)?;
    let exp = Exponent::Finite(e);
    let g_norm = lp_norm_measure(g, exp, Some(mu.function()))?;
    let mut term = g.clone();
    let mut sum = g.clone();
    let mut term_norms = vec![g_norm];
    for k in 1..=k_max + 1 {
        term = t(&term)?.scale(1.0 / (2.0 * norm.estimate));
        term_norms.push(lp_norm_measure(&term, exp, Some(mu.function()))?);
        if k <= k_max {
            sum = &sum + &term;
        }
    }
    let tail = term_norms[k_max as usize + 1] / g_norm;
    let decay = term_norms.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).fold(0.0, f64::max);
    if tail > TAIL_THRESHOLD {
        return Err(Error::TruncationInsufficient { tail, threshold: TAIL_THRESHOLD });
    }
    Ok(Series { sum, norm, term_norms: term_norms[..=k_max as usize].to_vec(), tail, decay })
}

/// `M'_μ g = M_μ(g V^{-q_n'}) V^{q_n'}`.
fn primed(g: &GridFunction, mu: &Weight, v_pow: &Weight) -> Result<GridFunction> {
    let inner = g.zip_map(v_pow, |a, b| a / b)?;
    Ok(&maximal_weighted(&inner, mu)? * v_pow.function())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl Bound {
    fn new(value: f64, bound: f64) -> Self {
        Bound { value, bound, ok: value <= bound }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A1Bounds {
    pub w: f64,
    pub lambda: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdfProperties {
    #[serde(rename = "h_le_H")]
    pub h_le_h: bool,
    /// `‖H‖ / ‖h‖` against `2 + tail`.
    pub norm_bound: Bound,
    pub a1_bounds: A1Bounds,
}

/// Output of either Rubio de Francia construction.
#[derive(Debug, Clone)]
pub struct RdfOutput {
    pub big_h: GridFunction,
    /// The series sum, whose `A₁`-type constants are recorded.
    pub fixed_point: GridFunction,
    pub norm: NormEstimate,
    pub tail: f64,
    pub decay: f64,
    pub term_norms: Vec<f64>,
    pub properties: RdfProperties,
}

fn dominated(h: &GridFunction, big_h: &GridFunction) -> bool {
    h.values().iter().zip(big_h.values()).all(|(a, b)| *a <= b * (1.0 + ROUNDTRIP))
}

fn a1_bounds(fixed: &GridFunction, uw: &Weight, ul: &Weight, split: &SplitWeights, n: f64, tail: f64) -> Result<A1Bounds> {
    let w = a1_characteristic_measure(&Weight::new(fixed.zip_map(uw, |a, b| a * b)?)?, &split.w_hat)?.value;
    let lambda = a1_characteristic_measure(&Weight::new(fixed.zip_map(ul, |a, b| a * b)?)?, &split.lambda_hat)?.value;
    let bound = 2.0 * n * (1.0 + tail);
    Ok(A1Bounds { w, lambda, bound, ok: w <= bound && lambda <= bound })
}

/// `r = (1 + q_n'/q)'`, the exponent of the space on which `M'_λ̂ M'_ŵ` acts.
pub fn prime_exponent(split: &SplitWeights) -> f64 {
    let t = 1.0 + split.qn_conj() / split.q;
    t / (t - 1.0)
}

/// `H = ℛ'(h^{q_n/r})^{r/q_n}` with `ℛ'` the series of `M'_λ̂ M'_ŵ` on
/// `L^r(w_n^{-q_n'})`.
pub fn rdf_prime(h: &GridFunction, split: &SplitWeights, k_max: u32) -> Result<RdfOutput> {
    let q_n = split.q_n.expect_finite("q_n in the primed algorithm")?;
    let qc = split.qn_conj();
    let r = prime_exponent(split);
    let mu = split.mu();
    let vw = split.big_w.pow(qc);
    let vl = split.big_lambda.pow(qc);
    let t = |g: &GridFunction| primed(&primed(g, &split.w_hat, &vw)?, &split.lambda_hat, &vl);
    let g = h.powf(q_n / r);
    let s = rdf_series(&t, r, &mu, &g, k_max, 0x5eed)?;
    let big_h = s.sum.powf(r / q_n);
    let qe = Exponent::Finite(q_n);
    let ratio = lp_norm_measure(&big_h, qe, Some(mu.function()))? / lp_norm_measure(h, qe, Some(mu.function()))?;
    let a1 = a1_bounds(&s.sum, &vw.pow(-1.0), &vl.pow(-1.0), split, s.norm.estimate, s.tail)?;
    Ok(RdfOutput {
        properties: RdfProperties {
            h_le_h: dominated(h, &big_h),
            norm_bound: Bound::new(ratio, 2.0 + s.tail),
            a1_bounds: a1,
        },
        big_h,
        fixed_point: s.sum,
        norm: s.norm,
        tail: s.tail,
        decay: s.decay,
        term_norms: s.term_norms,
    })
}

/// `t = 1 + q_n'/q`, the exponent on which `M_λ̂ M_ŵ` acts in the second case.
pub fn plain_exponent(split: &SplitWeights) -> f64 {
    1.0 + split.qn_conj() / split.q
}

/// The second-case construction: with `t = 1 + q_n'/q`, `θ = s/(pt)` and
/// `U = W_λ^q λ̂`, `H = ℛ(h^θ w_n^{q_n'/t} U^{1/t})^{1/θ} w_n^{-q_n'p/s} U^{-p/s}`.
pub fn rdf_plain(h: &GridFunction, split: &SplitWeights, s_exp: f64, k_max: u32) -> Result<RdfOutput> {
    let qc = split.qn_conj();
    let p = split.p_joint();
    let t_exp = plain_exponent(split);
    let mu = split.mu();
    let wn = &split.ws[split.n() - 1];
    let u = split.big_lambda.pow(split.q).mul(&split.lambda_hat)?;
    let theta = s_exp / (p * t_exp);
    let op = |g: &GridFunction| maximal_weighted(&maximal_weighted(g, &split.w_hat)?, &split.lambda_hat);
    let g = &(&h.powf(theta) * &wn.powf(qc / t_exp)) * &u.powf(1.0 / t_exp);
    let s = rdf_series(&op, t_exp, &mu, &g, k_max, 0x5eed)?;
    let big_h = &(&s.sum.powf(1.0 / theta) * &wn.powf(-qc * p / s_exp)) * &u.powf(-p / s_exp);
    let e = Exponent::Finite(s_exp / p);
    let ratio = lp_norm_measure(&big_h, e, Some(u.function()))? / lp_norm_measure(h, e, Some(u.function()))?;
    let one = Weight::ones(h.grid());
    let a1 = a1_bounds(&s.sum, &one, &one, split, s.norm.estimate, s.tail)?;
    Ok(RdfOutput {
        properties: RdfProperties {
            h_le_h: dominated(h, &big_h),
            norm_bound: Bound::new(ratio, 2.0 + s.tail),
            a1_bounds: a1,
        },
        big_h,
        fixed_point: s.sum,
        norm: s.norm,
        tail: s.tail,
        decay: s.decay,
        term_norms: s.term_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::split::split_weights;
    use crate::exponent::ExponentTuple;
    use crate::rng::uniform_positive;
    use crate::weights::{gen_weight, WeightKind};

    fn trivial(g: ProductGrid, q_n: f64) -> SplitWeights {
        let one = Weight::ones(g);
        let p = ExponentTuple::from_values(&[2.0, 2.0]).unwrap();
        split_weights(&[one.clone(), one.clone()], &one, &p, Exponent::finite(q_n).unwrap()).unwrap()
    }

    fn steps(g: ProductGrid, p: &[f64], q_n: f64) -> SplitWeights {
        let w1 = gen_weight(g, &WeightKind::Step { values: [1.0, 2.5], axis: 1 }, 0).unwrap();
        let w2 = gen_weight(g, &WeightKind::Step { values: [0.6, 1.4], axis: 2 }, 0).unwrap();
        let l1 = gen_weight(g, &WeightKind::Step { values: [1.5, 0.8], axis: 2 }, 0).unwrap();
        split_weights(&[w1, w2], &l1, &ExponentTuple::from_values(p).unwrap(), Exponent::finite(q_n).unwrap()).unwrap()
    }

    #[test]
    fn constant_input_trivial_weights() {
        let g = ProductGrid::new(3, 3).unwrap();
        let s = trivial(g, 4.0);
        let out = rdf_prime(&GridFunction::constant(g, 1.0), &s, DEFAULT_K_MAX).unwrap();
        // M'M' fixes constants, so every series term is a constant
        assert!(out.norm.amplification >= 1.0);
        let v = out.big_h.values()[0];
        assert!(out.big_h.values().iter().all(|x| (x - v).abs() < 1e-12 * v));
        assert!(out.properties.h_le_h && out.properties.norm_bound.ok && out.properties.a1_bounds.ok);
    }

    #[test]
    fn spike_is_dominated() {
        let g = ProductGrid::new(3, 3).unwrap();
        let mut h = GridFunction::zeros(g);
        h.values_mut()[17] = 5.0;
        let out = rdf_prime(&h, &trivial(g, 4.0), DEFAULT_K_MAX).unwrap();
        assert!(out.properties.h_le_h);
        assert!(out.big_h.values()[17] >= 5.0 * (1.0 - 1e-15));
    }

    #[test]
    fn random_input_step_weights() {
        let g = ProductGrid::new(4, 4).unwrap();
        let s = steps(g, &[2.0, 4.0], 2.0);
        let h = uniform_positive(g, 0.0, 1.0, 3);
        let out = rdf_prime(&h, &s, DEFAULT_K_MAX).unwrap();
        let p = &out.properties;
        assert!(p.h_le_h);
        assert!(p.norm_bound.ok, "{:?}", p.norm_bound);
        assert!(p.a1_bounds.ok, "{:?}", p.a1_bounds);
        assert!(out.tail <= 2f64.powi(-(DEFAULT_K_MAX as i32)) * 2.0);
    }

    #[test]
    fn plain_series_properties() {
        let g = ProductGrid::new(4, 4).unwrap();
        let s = steps(g, &[2.0, 2.0], 4.0);
        let sexp = 1.0 / (1.0 / s.p_joint() - 1.0 / s.q);
        let h = uniform_positive(g, 0.1, 1.0, 5);
        let out = rdf_plain(&h, &s, sexp, DEFAULT_K_MAX).unwrap();
        assert!(out.properties.h_le_h);
        assert!(out.properties.norm_bound.ok, "{:?}", out.properties.norm_bound);
        assert!(out.properties.a1_bounds.ok, "{:?}", out.properties.a1_bounds);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = ProductGrid::new(2, 2).unwrap();
        let s = trivial(g, 4.0);
        assert!(rdf_prime(&GridFunction::zeros(g), &s, 20).is_err());
        assert!(rdf_prime(&GridFunction::constant(g, 1.0), &s, 5).is_err());
    }
}
