//! Exact Lebesgue and weak Lebesgue norms of grid functions.

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::GridFunction;

fn check_weight(f: &GridFunction, w: Option<&GridFunction>) -> Result<()> {
    if let Some(w) = w {
        f.grid().check_same(w.grid())?;
        if !w.is_positive() {
            return Err(Error::InvalidWeight("weight must be strictly positive".into()));
        }
    }
    Ok(())
}

/// `‖f·w‖_{L^p}` with `w` acting as a multiplier (`w ≡ 1` when absent).
pub fn lp_norm(f: &GridFunction, p: Exponent, w: Option<&GridFunction>) -> Result<f64> {
    check_weight(f, w)?;
    let fw = |k: usize| f.values()[k].abs() * w.map_or(1.0, |w| w.values()[k]);
    let n = f.values().len();
    match p {
        Exponent::Infinite => Ok((0..n).fold(0.0, |m, k| m.max(fw(k)))),
        Exponent::Finite(p) if p > 0.0 => {
            let s: f64 = (0..n).map(|k| fw(k).powf(p)).sum::<f64>() * f.grid().cell_measure();
            Ok(s.powf(1.0 / p))
        }
        Exponent::Finite(p) => Err(Error::InvalidExponent(format!("p = {p} must be positive"))),
    }
}

/// `‖f‖_{L^p(μ)} = (∫|f|^p dμ)^{1/p}` with `μ` a density (Lebesgue when absent).
pub fn lp_norm_measure(f: &GridFunction, p: Exponent, mu: Option<&GridFunction>) -> Result<f64> {
    check_weight(f, mu)?;
    match (p, mu) {
        (Exponent::Infinite, _) => lp_norm(f, p, None),
        (Exponent::Finite(q), Some(mu)) => lp_norm(f, p, Some(&mu.powf(1.0 / q))),
        (Exponent::Finite(_), None) => lp_norm(f, p, None),
    }
}

/// `sup_{t>0} t·μ({|f|>t})^{1/p}` with `μ` a density (Lebesgue when absent).
///
/// On a simple function the supremum is `max_v v·μ({|f| ≥ v})^{1/p}` over the
/// distinct values `v` of `|f|`.
pub fn weak_lp_norm(f: &GridFunction, p: Exponent, mu: Option<&GridFunction>) -> Result<f64> {
    check_weight(f, mu)?;
    let p = match p {
        Exponent::Infinite => return Ok(f.max_abs()),
        Exponent::Finite(p) if p > 0.0 => p,
        Exponent::Finite(p) => {
            return Err(Error::InvalidExponent(format!("p = {p} must be positive")))
        }
    };
    let cm = f.grid().cell_measure();
    let mut cells: Vec<(f64, f64)> = f
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| (v.abs(), cm * mu.map_or(1.0, |m| m.values()[k])))
        .collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut mass = 0.0;
    let mut k = 0;
    while k < cells.len() {
        let v = cells[k].0;
        while k < cells.len() && cells[k].0 == v {
            mass += cells[k].1;
            k += 1;
        }
        best = best.max(v * mass.powf(1.0 / p));
    }
    Ok(best)
}
