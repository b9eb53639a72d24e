use serde::{Deserialize, Serialize};

use super::characteristics::{
    ap_characteristic, multilinear_characteristic, sup_over_rectangles, Factor,
};
use super::Weight;
use crate::bounds::RatioReport;
use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentTuple};
use crate::function::integral_pyramid;

const SLACK: f64 = 1.0 + 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of checking a family of inequalities `lhs ≤ rhs`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<Violation>,
    pub violations: Vec<Violation>,
    pub skipped: Vec<String>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let v = Violation { name: name.into(), lhs, rhs };
        if !(lhs <= rhs * SLACK) {
            self.violations.push(v.clone());
        }
        self.checks.push(v);
    }

    fn eq_rel(&mut self, name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) {
        let v = Violation { name: name.into(), lhs, rhs };
        if !((lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs())) {
            self.violations.push(v.clone());
        }
        self.checks.push(v);
    }
}

/// The one-weight consequences of `w⃗ ∈ A_p⃗` and the converse product bound.
pub fn lemma1_check(ws: &[Weight], p: &ExponentTuple) -> Result<LemmaReport> {
    let a = multilinear_characteristic(ws, p)?.value;
    let n = ws.len() as f64;
    let mut rep = LemmaReport::default();
    let mut converse_rhs = 1.0;
    let mut converse_ok = true;

    for (i, (wi, &pi)) in ws.iter().zip(&p.0).enumerate() {
        if pi == Exponent::Finite(1.0) {
            let lhs = ap_characteristic(&wi.pow(1.0 / n), Exponent::Finite(1.0))?.value;
            rep.le(format!("w{}^(1/n) in A_1", i + 1), lhs, a.powf(1.0 / n));
            converse_ok = false;
        } else {
            let pc = pi.conjugate()?.value();
            let c = ap_characteristic(&wi.pow(-pc), Exponent::Finite(n * pc))?.value;
            rep.le(format!("w{}^(-p'_{}) in A_(n p'_{})", i + 1, i + 1, i + 1), c, a.powf(pc));
            converse_rhs *= c.powf(1.0 / pc);
        }
    }

    let w = Weight::product(ws)?;
    match p.joint()? {
        Exponent::Infinite => {
            let lhs = ap_characteristic(&w.pow(-1.0 / n), Exponent::Finite(1.0))?.value;
            rep.le("w^(-1/n) in A_1", lhs, a.powf(1.0 / n));
            converse_ok = false;
        }
        Exponent::Finite(pj) => {
            let c = ap_characteristic(&w.pow(pj), Exponent::Finite(n * pj))?.value;
            rep.le("w^p in A_(np)", c, a.powf(pj));
            converse_rhs *= c.powf(1.0 / pj);
        }
    }

    if converse_ok {
        rep.le("converse product bound", a, converse_rhs);
    } else {
        rep.skipped.push("converse product bound (some p_i = 1 or p = inf)".into());
    }
    Ok(rep)
}

/// `[w⃗^i]_{A_{p⃗^i}} = [w⃗]_{A_p⃗}` where slot `i` (zero-based) becomes `(w^{-1}, p')`.
pub fn duality_identity_check(ws: &[Weight], p: &ExponentTuple, i: usize) -> Result<LemmaReport> {
    if i >= ws.len() {
        return Err(Error::Arity { expected: ws.len(), found: i + 1 });
    }
    for &pj in &p.0 {
        match pj {
            Exponent::Finite(v) if v > 1.0 => {}
            _ => {
                return Err(Error::InvalidExponent(format!(
                    "duality identity needs 1 < p_i < inf, found {pj}"
                )))
            }
        }
    }
    let rp = p.recip_sum();
    if !(rp > 0.0 && rp < 1.0) {
        return Err(Error::InvalidExponent(format!("1/p = {rp} must lie in (0, 1)")));
    }
    let (ws_i, p_i) = dual_tuple(ws, p, i)?;
    let lhs = multilinear_characteristic(&ws_i, &p_i)?.value;
    let rhs = multilinear_characteristic(ws, p)?.value;
    let mut rep = LemmaReport::default();
    rep.eq_rel(format!("dual tuple at slot {}", i + 1), lhs, rhs, 1e-10);
    Ok(rep)
}

/// `(w⃗^i, p⃗^i)`.
pub fn dual_tuple(ws: &[Weight], p: &ExponentTuple, i: usize) -> Result<(Vec<Weight>, ExponentTuple)> {
    let w = Weight::product(ws)?;
    let mut ws_i = ws.to_vec();
    ws_i[i] = w.pow(-1.0);
    let mut p_i = p.clone();
    p_i.0[i] = p.joint()?.conjugate()?;
    Ok((ws_i, p_i))
}

/// Per-rectangle ratios `Π⟨w_i⟩_R^{u_i} / ⟨Π w_i^{u_i}⟩_R`.
pub fn reverse_holder_check(ws: &[Weight], u: &[f64]) -> Result<RatioReport> {
    if ws.len() != u.len() {
        return Err(Error::Arity { expected: ws.len(), found: u.len() });
    }
    if u.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidExponent("reverse Hölder exponents must be positive".into()));
    }
    let grid = ws[0].grid();
    let mut num: Vec<Factor> = Vec::new();
    let mut joint = Weight::ones(grid);
    for (w, &e) in ws.iter().zip(u) {
        grid.check_same(w.grid())?;
        num.push(Factor::avg(w, e));
        joint = joint.mul(&w.pow(e))?;
    }
    let den = integral_pyramid(&joint);
    let mut rep = RatioReport::new("rectangles", 0);
    for r in grid.rectangles() {
        let n: f64 = num.iter().map(|f| f.eval(r)).product();
        rep.push_ratio(r.to_string(), n, den.get(r) / r.measure());
    }
    Ok(rep)
}

/// `sup_R Π⟨w_i⟩_R^{u_i} / ⟨Πw_i^{u_i}⟩_R`, the measured reverse Hölder constant.
pub fn reverse_holder_constant(ws: &[Weight], u: &[f64]) -> Result<f64> {
    let grid = ws[0].grid();
    let mut factors: Vec<Factor> = ws.iter().zip(u).map(|(w, &e)| Factor::avg(w, e)).collect();
    let mut joint = Weight::ones(grid);
    for (w, &e) in ws.iter().zip(u) {
        joint = joint.mul(&w.pow(e))?;
    }
    factors.push(Factor::avg(&joint, -1.0));
    Ok(sup_over_rectangles(grid, &factors).value)
}
