use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A modulus of continuity: `ω(0) = 0`, increasing and subadditive.
#[derive(Clone)]
pub struct DiniModulus {
    name: String,
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for DiniModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiniModulus({})", self.name)
    }
}

/// Points `i/64`, `i = 0..=64`, on which the modulus axioms are spot-checked.
const LATTICE: usize = 64;

impl DiniModulus {
    pub fn new(name: impl Into<String>, omega: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let m = DiniModulus { name: name.into(), omega: Arc::new(omega) };
        m.validate()?;
        Ok(m)
    }

    /// `t ↦ t^γ`, `0 < γ ≤ 1`.
    pub fn power(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidInput(format!("power modulus needs 0 < γ ≤ 1, got {gamma}")));
        }
        Self::new(format!("t^{gamma}"), move |t: f64| t.powf(gamma))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.omega)(t)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("{}: {what}", self.name)));
        if self.eval(0.0) != 0.0 {
            return bad("ω(0) ≠ 0");
        }
        let pts: Vec<f64> = (0..=LATTICE).map(|i| i as f64 / LATTICE as f64).collect();
        let vals: Vec<f64> = pts.iter().map(|&t| self.eval(t)).collect();
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("values must be finite and nonnegative");
        }
        if vals.windows(2).any(|w| w[1] < w[0]) {
            return bad("not increasing on the sample lattice");
        }
        for i in 0..=LATTICE {
            for j in 0..=LATTICE - i {
                if vals[i + j] > (vals[i] + vals[j]) * (1.0 + 1e-12) {
                    return bad("not subadditive on the sample lattice");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniReport {
    /// `Σ_{k=1}^{K} ω(2^{-k}) k^α`.
    pub sum: f64,
    /// `∫₀¹ ω(t)(1 + log(1/t))^α dt/t`.
    pub integral: f64,
    /// The comparison constant `(1/log 2)^{1+α}`.
    pub constant: f64,
    /// `sum ≤ constant · integral`.
    pub holds: bool,
    /// False when the last summand is still a noticeable part of the sum or
    /// the integral did not settle.
    pub converged: bool,
}

/// Partial Dini sum against its integral bound.
pub fn dini_alpha(omega: &DiniModulus, alpha: f64, k_max: u32) -> Result<DiniReport> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("α must be finite and nonnegative, got {alpha}")));
    }
    if k_max < 10 {
        return Err(Error::InvalidInput(format!("K_max must be at least 10, got {k_max}")));
    }
    let term = |k: u32| omega.eval((-(k as f64)).exp2()) * (k as f64).powf(alpha);
    let sum: f64 = (1..=k_max).map(term).sum();
    let last = term(k_max);

    // t = e^{-u}: ∫₀^∞ ω(e^{-u}) (1 + u)^α du
    let g = |u: f64| omega.eval((-u).exp()) * (1.0 + u).powf(alpha);
    let mut integral = 0.0;
    let mut settled = false;
    let mut a = 0.0;
    while a < 740.0 {
        let piece = simpson(&g, a, a + 1.0, 1e-13, 40);
        integral += piece;
        a += 1.0;
        if a > 8.0 && piece.abs() <= 1e-15 * integral.abs().max(f64::MIN_POSITIVE) {
            settled = true;
            break;
        }
    }
    let constant = std::f64::consts::LN_2.recip().powf(1.0 + alpha);
    Ok(DiniReport {
        sum,
        integral,
        constant,
        holds: sum <= constant * integral * (1.0 + 1e-9),
        converged: settled && last <= 1e-3 * sum.max(f64::MIN_POSITIVE),
    })
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adapt(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_modulus() {
        let r = dini_alpha(&DiniModulus::power(1.0).unwrap(), 0.0, 60).unwrap();
        assert!((r.sum - 1.0).abs() < 1e-15);
        assert!((r.integral - 1.0).abs() < 1e-10);
        assert!(r.holds && r.converged);
    }

    #[test]
    fn square_root_modulus() {
        let r = dini_alpha(&DiniModulus::power(0.5).unwrap(), 0.0, 120).unwrap();
        assert!((r.sum - 1.0 / (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((r.integral - 2.0).abs() < 1e-9);
        assert!(r.holds);
    }

    #[test]
    fn alpha_three_halves() {
        let r = dini_alpha(&DiniModulus::power(1.0).unwrap(), 1.5, 20).unwrap();
        assert!(r.sum.is_finite() && r.integral.is_finite() && r.holds);
        // ∫₀^∞ e^{-u}(1+u)^{3/2} du = e Γ(5/2, 1)
        assert!(r.integral > 2.0 && r.integral < 4.0);
    }

    #[test]
    fn rejects_invalid_moduli() {
        assert!(DiniModulus::new("t^2", |t: f64| t * t).is_err());
        assert!(DiniModulus::new("1+t", |t: f64| 1.0 + t).is_err());
        assert!(DiniModulus::new("-t", |t: f64| -t).is_err());
        assert!(dini_alpha(&DiniModulus::power(1.0).unwrap(), 0.0, 5).is_err());
    }
}
