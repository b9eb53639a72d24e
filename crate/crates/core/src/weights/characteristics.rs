use serde::{Deserialize, Serialize};

use super::Weight;
use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentTuple};
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::grid::{DyadicRectangle, ProductGrid};

/// The supremum of a rectangle functional together with a maximizing rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub value: f64,
    pub infinite: bool,
    pub argmax: DyadicRectangle,
}

impl CharacteristicReport {
    pub fn is_finite(&self) -> bool {
        !self.infinite
    }
}

/// One multiplicative piece of a rectangle functional.
#[derive(Debug, Clone)]
pub enum Factor {
    /// `⟨g⟩_R^e`.
    Avg { sums: Pyramid, exponent: f64 },
    /// `(max_R g)^e`.
    Max { maxs: Pyramid, exponent: f64 },
    /// `exp(e·⟨g⟩_R)`.
    ExpAvg { sums: Pyramid, exponent: f64 },
}

impl Factor {
    pub fn avg(g: &GridFunction, exponent: f64) -> Self {
        Factor::Avg { sums: integral_pyramid(g), exponent }
    }

    pub fn max(g: &GridFunction, exponent: f64) -> Self {
        Factor::Max { maxs: Pyramid::build(g.grid(), g.values(), f64::max), exponent }
    }

    pub fn exp_avg(g: &GridFunction, exponent: f64) -> Self {
        Factor::ExpAvg { sums: integral_pyramid(g), exponent }
    }

    #[inline]
    pub fn eval(&self, r: DyadicRectangle) -> f64 {
        match self {
            Factor::Avg { sums, exponent } => (sums.get(r) / r.measure()).powf(*exponent),
            Factor::Max { maxs, exponent } => maxs.get(r).powf(*exponent),
            Factor::ExpAvg { sums, exponent } => (exponent * sums.get(r) / r.measure()).exp(),
        }
    }
}

/// `max_R Π factors(R)` over every dyadic rectangle; ties keep the first maximizer
/// in enumeration order.
pub fn sup_over_rectangles(grid: ProductGrid, factors: &[Factor]) -> CharacteristicReport {
    let mut best = f64::NEG_INFINITY;
    let mut arg = DyadicRectangle::ROOT;
    for r in grid.rectangles() {
        let v: f64 = factors.iter().map(|f| f.eval(r)).product();
        if v > best || (v.is_nan() && !best.is_nan()) {
            best = v;
            arg = r;
        }
    }
    CharacteristicReport { value: best, infinite: !best.is_finite(), argmax: arg }
}

fn same_grid(ws: &[&Weight]) -> Result<ProductGrid> {
    let grid = ws
        .first()
        .ok_or_else(|| Error::InvalidInput("empty weight tuple".into()))?
        .grid();
    for w in ws {
        grid.check_same(w.grid())?;
    }
    Ok(grid)
}

/// `[w]_{A_p}`, with `p = 1` read as `⟨w⟩_R ess sup_R w^{-1}`.
pub fn ap_characteristic(w: &Weight, p: Exponent) -> Result<CharacteristicReport> {
    let factors = match p {
        Exponent::Finite(1.0) => {
            vec![Factor::avg(w, 1.0), Factor::max(&w.recip(), 1.0)]
        }
        Exponent::Finite(p) if p > 1.0 => {
            vec![Factor::avg(w, 1.0), Factor::avg(&w.powf(-1.0 / (p - 1.0)), p - 1.0)]
        }
        _ => return Err(Error::InvalidExponent(format!("A_p needs 1 <= p < inf, found {p}"))),
    };
    Ok(sup_over_rectangles(w.grid(), &factors))
}

/// `[w]_{A_∞} = sup_R ⟨w⟩_R exp(⟨log w^{-1}⟩_R)`.
pub fn ainfty_characteristic(w: &Weight) -> CharacteristicReport {
    let factors = [Factor::avg(w, 1.0), Factor::exp_avg(&w.map(f64::ln), -1.0)];
    sup_over_rectangles(w.grid(), &factors)
}

/// `[g]_{A_1(μ)} = sup_R ⟨g⟩^μ_R ess sup_R g^{-1}`.
pub fn a1_characteristic_measure(g: &Weight, mu: &Weight) -> Result<CharacteristicReport> {
    let grid = same_grid(&[g, mu])?;
    let gmu = g.mul(mu)?;
    let factors = [Factor::avg(&gmu, 1.0), Factor::avg(mu, -1.0), Factor::max(&g.recip(), 1.0)];
    Ok(sup_over_rectangles(grid, &factors))
}

/// `⟨w_i^{-p_i'}⟩_R^{1/p_i'}`, or `ess sup_R w_i^{-1}` when `p_i = 1`.
pub(crate) fn dual_factor(w: &Weight, p: Exponent) -> Result<Factor> {
    Ok(match p {
        Exponent::Finite(v) if v < 1.0 => {
            return Err(Error::InvalidExponent(format!("p_i = {v} < 1")))
        }
        Exponent::Finite(1.0) => Factor::max(&w.recip(), 1.0),
        Exponent::Infinite => Factor::avg(&w.recip(), 1.0),
        Exponent::Finite(_) => {
            let pc = p.conjugate()?.value();
            Factor::avg(&w.powf(-pc), 1.0 / pc)
        }
    })
}

/// `[w⃗]_{A_p⃗} = sup_R ⟨w^p⟩_R^{1/p} Π⟨w_i^{-p_i'}⟩_R^{1/p_i'}`.
pub fn multilinear_characteristic(ws: &[Weight], p: &ExponentTuple) -> Result<CharacteristicReport> {
    if ws.len() != p.len() {
        return Err(Error::Arity { expected: p.len(), found: ws.len() });
    }
    let grid = same_grid(&ws.iter().collect::<Vec<_>>())?;
    p.check_at_least_one()?;
    let w = Weight::product(ws)?;
    let mut factors = Vec::with_capacity(ws.len() + 1);
    match p.joint()? {
        Exponent::Infinite => factors.push(Factor::max(&w, 1.0)),
        Exponent::Finite(pj) => factors.push(Factor::avg(&w.powf(pj), 1.0 / pj)),
    }
    for (wi, &pi) in ws.iter().zip(&p.0) {
        factors.push(dual_factor(wi, pi)?);
    }
    Ok(sup_over_rectangles(grid, &factors))
}

/// `[w⃗]_{A*_p⃗} = sup_R ⟨w⟩_R ⟨w_{n+1}^{-p}⟩_R^{1/p} Π⟨w_i^{-p_i'}⟩_R^{1/p_i'}`
/// with `w = Π_{i≤n+1} w_i`; for `p = ∞` the middle factor is `ess sup_R w_{n+1}^{-1}`.
pub fn astar_characteristic(ws: &[Weight], p: &ExponentTuple) -> Result<CharacteristicReport> {
    if ws.len() != p.len() + 1 {
        return Err(Error::Arity { expected: p.len() + 1, found: ws.len() });
    }
    let grid = same_grid(&ws.iter().collect::<Vec<_>>())?;
    p.check_at_least_one()?;
    let w = Weight::product(ws)?;
    let last = &ws[p.len()];
    let mut factors = vec![Factor::avg(&w, 1.0)];
    match p.joint()? {
        Exponent::Infinite => factors.push(Factor::max(&last.recip(), 1.0)),
        Exponent::Finite(pj) => factors.push(Factor::avg(&last.powf(-pj), 1.0 / pj)),
    }
    for (wi, &pi) in ws.iter().zip(&p.0) {
        factors.push(dual_factor(wi, pi)?);
    }
    Ok(sup_over_rectangles(grid, &factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Param;

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 2).unwrap()
    }

    fn step(a: f64, b: f64) -> Weight {
        let g = grid();
        Weight::new(GridFunction::from_fn(g, |c1, _| if c1 < g.side(Param::One) / 2 { a } else { b }))
            .unwrap()
    }

    #[test]
    fn constants_have_unit_characteristics() {
        let w = Weight::new(GridFunction::constant(grid(), 3.7)).unwrap();
        for p in [1.0, 1.5, 2.0, 5.0] {
            assert!((ap_characteristic(&w, Exponent::Finite(p)).unwrap().value - 1.0).abs() < 1e-12);
        }
        assert!((ainfty_characteristic(&w).value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_weight_values() {
        let w = step(1.0, 4.0);
        let a2 = ap_characteristic(&w, Exponent::Finite(2.0)).unwrap();
        assert!((a2.value - 25.0 / 16.0).abs() < 1e-12);
        assert_eq!(a2.argmax, DyadicRectangle::ROOT);
        let a1 = ap_characteristic(&w, Exponent::Finite(1.0)).unwrap();
        assert!((a1.value - 2.5).abs() < 1e-12);
        let ai = ainfty_characteristic(&w);
        assert!((ai.value - 1.25).abs() < 1e-12);
        assert!(ap_characteristic(&w, Exponent::Finite(0.5)).is_err());
        assert!(ap_characteristic(&w, Exponent::Infinite).is_err());
    }

    #[test]
    fn one_slot_multilinear_matches_ap() {
        let w = step(1.0, 4.0);
        for p in [1.5, 2.0, 3.0] {
            let m = multilinear_characteristic(std::slice::from_ref(&w), &ExponentTuple::from_values(&[p]).unwrap())
                .unwrap();
            let a = ap_characteristic(&w.pow(p), Exponent::Finite(p)).unwrap();
            assert!((m.value - a.value.powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn astar_of_ones_is_one() {
        let ones = Weight::ones(grid());
        let p = ExponentTuple::from_values(&[2.0, 3.0]).unwrap();
        let r = astar_characteristic(&[ones.clone(), ones.clone(), ones], &p).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn astar_arity_is_checked() {
        let ones = Weight::ones(grid());
        let p = ExponentTuple::from_values(&[2.0, 3.0]).unwrap();
        assert!(matches!(
            astar_characteristic(&[ones.clone(), ones], &p),
            Err(Error::Arity { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn scale_invariance() {
        let w = step(1.0, 4.0);
        let w3 = w.scale(3.0).unwrap();
        let p = Exponent::Finite(2.5);
        let a = ap_characteristic(&w, p).unwrap().value;
        let b = ap_characteristic(&w3, p).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }
}
