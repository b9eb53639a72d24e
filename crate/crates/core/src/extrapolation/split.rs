use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentTuple};
use crate::weights::{ap_characteristic, multilinear_characteristic, sup_over_rectangles, Factor, Weight};

/// `[W]_{A_{r,s}(μ)} = sup_Q (μ(Q)^{-1}∫_Q W^s μ)^{1/s} (μ(Q)^{-1}∫_Q W^{-r'} μ)^{1/r'}`,
/// the second factor read as `ess sup_Q W^{-1}` when `r = 1`.
///
/// With `μ = ŵ` and `W = w_n ŵ^{1/p_n'}` this is the class that the splitting
/// lemma trades for `A_p⃗` membership of `(w₁, …, w_n)`.
pub fn two_index_characteristic(w: &Weight, r: Exponent, s: f64, mu: &Weight) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidExponent(format!("outer exponent {s} must be positive and finite")));
    }
    let grid = w.grid();
    grid.check_same(mu.grid())?;
    let mut factors = vec![Factor::avg(&(&w.powf(s) * mu.function()), 1.0 / s), Factor::avg(mu, -1.0 / s)];
    match r.conjugate()? {
        Exponent::Infinite => factors.push(Factor::max(&w.recip(), 1.0)),
        Exponent::Finite(rc) => {
            factors.push(Factor::avg(&(&w.powf(-rc) * mu.function()), 1.0 / rc));
            factors.push(Factor::avg(mu, -1.0 / rc));
        }
    }
    Ok(sup_over_rectangles(grid, &factors).value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCharacteristics {
    /// `[(w₁, …, w_n)]` at `(p₁, …, p_{n−1}, q_n)`.
    pub w_tuple: f64,
    /// `[(λ₁, w₂, …, w_n)]` at `(p₁, …, p_{n−1}, q_n)`.
    pub lambda_tuple: f64,
    pub w_hat: f64,
    pub lambda_hat: f64,
    /// `[W_w]_{A_{q_n,q}(ŵ)}`.
    pub w_w: f64,
    /// `[W_λ]_{A_{q_n,q}(λ̂)}`.
    pub w_lambda: f64,
}

/// Derived weights for moving the last exponent from `p_n` to `q_n`.
#[derive(Debug, Clone)]
pub struct SplitWeights {
    pub ws: Vec<Weight>,
    pub lambda1: Weight,
    /// Exponents at which the hypothesis holds.
    pub p: ExponentTuple,
    pub q_n: Exponent,
    /// `1/q = Σ_{i<n} 1/p_i + 1/q_n`.
    pub q: f64,
    pub rho: f64,
    pub w_hat: Weight,
    pub lambda_hat: Weight,
    pub big_w: Weight,
    pub big_lambda: Weight,
    pub characteristics: SplitCharacteristics,
}

pub(crate) fn conj(e: Exponent) -> Result<f64> {
    Ok(e.conjugate()?.value())
}

impl SplitWeights {
    pub fn n(&self) -> usize {
        self.ws.len()
    }

    /// `q_n'`, equal to 1 when `q_n = ∞`.
    pub fn qn_conj(&self) -> f64 {
        conj(self.q_n).expect("validated on construction")
    }

    pub fn p_joint(&self) -> f64 {
        1.0 / self.p.recip_sum()
    }

    pub fn p_n(&self) -> Exponent {
        self.p.get(self.n() - 1)
    }

    /// `w_n^{-q_n'}`.
    pub fn mu(&self) -> Weight {
        self.ws[self.n() - 1].pow(-self.qn_conj())
    }

    /// `p⃗` with the last entry replaced by `q_n`.
    pub fn target(&self) -> ExponentTuple {
        let mut t = self.p.clone();
        t.0[self.n() - 1] = self.q_n;
        t
    }

    /// `(λ₁, w₂, …, w_n)` with the last weight replaced by `v`.
    pub fn with_last(&self, v: &Weight, lambda: bool) -> Vec<Weight> {
        let mut t = self.ws.clone();
        if lambda {
            t[0] = self.lambda1.clone();
        }
        *t.last_mut().expect("n >= 2") = v.clone();
        t
    }
}

/// Builds `ŵ`, `λ̂`, `W_w`, `W_λ` and every characteristic involved.
pub fn split_weights(ws: &[Weight], lambda1: &Weight, p: &ExponentTuple, q_n: Exponent) -> Result<SplitWeights> {
    let n = ws.len();
    if n < 2 {
        return Err(Error::InvalidInput("the splitting needs n >= 2".into()));
    }
    if p.len() != n {
        return Err(Error::Arity { expected: n, found: p.len() });
    }
    p.check_at_least_one()?;
    if q_n != Exponent::Infinite && q_n.value() <= 1.0 {
        return Err(Error::InvalidExponent(format!("q_n = {q_n} must exceed 1")));
    }
    let grid = ws[0].grid();
    grid.check_same(lambda1.grid())?;
    let head: f64 = p.0[..n - 1].iter().map(|e| e.recip()).sum();
    let q_recip = head + q_n.recip();
    if q_recip <= 0.0 {
        return Err(Error::InvalidExponent("1/q must be positive".into()));
    }
    let q = 1.0 / q_recip;
    let rho = 1.0 / (1.0 + head);
    let w_hat = Weight::product(&ws[..n - 1])?.pow(rho);
    let mut lt = ws[..n - 1].to_vec();
    lt[0] = lambda1.clone();
    let lambda_hat = Weight::product(&lt)?.pow(rho);
    let qc = conj(q_n)?;
    let wn = &ws[n - 1];
    let big_w = wn.mul(&w_hat.pow(1.0 / qc))?;
    let big_lambda = wn.mul(&lambda_hat.pow(1.0 / qc))?;

    let mut target = p.clone();
    target.0[n - 1] = q_n;
    let mut lambda_ws = ws.to_vec();
    lambda_ws[0] = lambda1.clone();
    let w_tuple = multilinear_characteristic(ws, &target)?;
    let lambda_tuple = multilinear_characteristic(&lambda_ws, &target)?;
    if w_tuple.infinite || lambda_tuple.infinite {
        return Err(Error::InvalidWeight("input tuples must have finite A_q⃗ characteristics".into()));
    }
    let nr = Exponent::Finite(n as f64 * rho);
    let characteristics = SplitCharacteristics {
        w_tuple: w_tuple.value,
        lambda_tuple: lambda_tuple.value,
        w_hat: ap_characteristic(&w_hat, nr)?.value,
        lambda_hat: ap_characteristic(&lambda_hat, nr)?.value,
        w_w: two_index_characteristic(&big_w, q_n, q, &w_hat)?,
        w_lambda: two_index_characteristic(&big_lambda, q_n, q, &lambda_hat)?,
    };
    Ok(SplitWeights {
        ws: ws.to_vec(),
        lambda1: lambda1.clone(),
        p: p.clone(),
        q_n,
        q,
        rho,
        w_hat,
        lambda_hat,
        big_w,
        big_lambda,
        characteristics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::GridFunction;
    use crate::grid::ProductGrid;
    use crate::rng::uniform_positive;
    use crate::weights::{gen_weight, WeightKind};

    #[test]
    fn trivial_weights_split_trivially() {
        let g = ProductGrid::new(3, 3).unwrap();
        let one = Weight::ones(g);
        let p = ExponentTuple::from_values(&[2.0, 2.0]).unwrap();
        let s = split_weights(&[one.clone(), one.clone()], &one, &p, Exponent::Finite(4.0)).unwrap();
        assert!((s.rho - 2.0 / 3.0).abs() < 1e-15);
        for w in [&s.w_hat, &s.lambda_hat, &s.big_w, &s.big_lambda] {
            assert!(w.max_abs_diff(&GridFunction::constant(g, 1.0)).unwrap() < 1e-15);
        }
        let c = &s.characteristics;
        for v in [c.w_tuple, c.lambda_tuple, c.w_hat, c.lambda_hat, c.w_w, c.w_lambda] {
            assert!((v - 1.0).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn step_weights_per_cell() {
        let g = ProductGrid::new(3, 3).unwrap();
        let w1 = gen_weight(g, &WeightKind::Step { values: [1.0, 3.0], axis: 1 }, 0).unwrap();
        let w2 = gen_weight(g, &WeightKind::Step { values: [2.0, 0.5], axis: 2 }, 0).unwrap();
        let l1 = gen_weight(g, &WeightKind::Step { values: [0.5, 1.5], axis: 1 }, 0).unwrap();
        let p = ExponentTuple::from_values(&[2.0, 2.0]).unwrap();
        let s = split_weights(&[w1.clone(), w2.clone()], &l1, &p, Exponent::Finite(4.0)).unwrap();
        let rho = 2.0 / 3.0;
        let qc = 4.0 / 3.0;
        for c in 0..g.cell_count() {
            let (a, b, l) = (w1.values()[c], w2.values()[c], l1.values()[c]);
            assert!((s.w_hat.values()[c] - a.powf(rho)).abs() < 1e-14);
            assert!((s.big_w.values()[c] - b * a.powf(rho / qc)).abs() < 1e-14);
            assert!((s.big_lambda.values()[c] - b * l.powf(rho / qc)).abs() < 1e-14);
        }
        let ch = &s.characteristics;
        assert!(ch.w_w >= 1.0 && ch.w_w.is_finite() && ch.w_hat >= 1.0);
    }

    #[test]
    fn two_index_class_is_dominated_by_the_multilinear_one() {
        // For n = 2, [W]_{A_{q_2,q}(ŵ)} = sup_Q ⟨w^q⟩^{1/q}⟨w_2^{-q_2'}⟩^{1/q_2'} / ⟨w_1^ρ⟩^{1/ρ}
        // and Hölder gives ⟨w_1^ρ⟩^{1/ρ} ⟨w_1^{-p_1'}⟩^{1/p_1'} ≥ 1.
        let g = ProductGrid::new(3, 3).unwrap();
        let p = ExponentTuple::from_values(&[3.0, 2.0]).unwrap();
        for seed in 0..10 {
            let ws = [Weight::new(uniform_positive(g, 0.2, 5.0, seed)).unwrap(), Weight::new(uniform_positive(g, 0.2, 5.0, seed + 50)).unwrap()];
            let s = split_weights(&ws, &ws[0], &p, Exponent::Finite(2.5)).unwrap();
            let c = &s.characteristics;
            assert!(c.w_w <= c.w_tuple * (1.0 + 1e-12), "{} > {}", c.w_w, c.w_tuple);
            assert!(c.w_tuple <= c.w_w * c.w_hat.powf(1.0 / s.rho) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejections() {
        let g = ProductGrid::new(2, 2).unwrap();
        let one = Weight::ones(g);
        let p = ExponentTuple::from_values(&[2.0, 2.0]).unwrap();
        assert!(split_weights(std::slice::from_ref(&one), &one, &ExponentTuple::from_values(&[2.0]).unwrap(), Exponent::Finite(3.0)).is_err());
        assert!(split_weights(&[one.clone(), one.clone()], &one, &p, Exponent::Finite(1.0)).is_err());
        assert!(split_weights(&[one.clone(), one.clone()], &one, &p, Exponent::Infinite).is_ok());
    }
}
