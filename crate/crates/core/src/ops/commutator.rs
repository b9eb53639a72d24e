use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::GridFunction;

use super::maximal::maximal_multilinear;
use super::MultilinearOperator;

/// `[b, U]_j(f⃗) = b U(f⃗) − U(f₁, …, b f_j, …, f_n)` with `j` one-based.
pub fn commutator(b: &GridFunction, op: &dyn MultilinearOperator, j: usize, fs: &[GridFunction]) -> Result<GridFunction> {
    let n = op.arity();
    if j == 0 || j > n {
        return Err(Error::InvalidSlots(format!("commutator slot {j} outside 1..={n}")));
    }
    if fs.len() != n {
        return Err(Error::Arity { expected: n, found: fs.len() });
    }
    b.grid().check_same(fs[j - 1].grid())?;
    let plain = op.apply(fs)?;
    let mut moved = fs.to_vec();
    moved[j - 1] = b * &fs[j - 1];
    let inner = op.apply(&moved)?;
    Ok(&(b * &plain) - &inner)
}

/// A commutator packaged as an operator of the same arity.
#[derive(Clone)]
pub struct CommutatorOp {
    pub b: GridFunction,
    pub inner: Arc<dyn MultilinearOperator>,
    pub slot: usize,
}

impl CommutatorOp {
    pub fn new(b: GridFunction, inner: Arc<dyn MultilinearOperator>, slot: usize) -> Result<Self> {
        if slot == 0 || slot > inner.arity() {
            return Err(Error::InvalidSlots(format!("commutator slot {slot} outside 1..={}", inner.arity())));
        }
        Ok(CommutatorOp { b, inner, slot })
    }
}

impl MultilinearOperator for CommutatorOp {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        commutator(&self.b, self.inner.as_ref(), self.slot, fs)
    }

    fn label(&self) -> String {
        format!("[b, {}]_{}", self.inner.label(), self.slot)
    }
}

/// The operator returning zero for every input.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOperator {
    pub n: usize,
}

impl MultilinearOperator for ZeroOperator {
    fn arity(&self) -> usize {
        self.n
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        let first = fs.first().ok_or(Error::Arity { expected: self.n, found: 0 })?;
        if fs.len() != self.n {
            return Err(Error::Arity { expected: self.n, found: fs.len() });
        }
        Ok(GridFunction::zeros(first.grid()))
    }

    fn label(&self) -> String {
        format!("zero(n={})", self.n)
    }
}

/// The multilinear dyadic maximal function as an operator.
#[derive(Debug, Clone, Copy)]
pub struct MaximalOperator {
    pub n: usize,
}

impl MultilinearOperator for MaximalOperator {
    fn arity(&self) -> usize {
        self.n
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        if fs.len() != self.n {
            return Err(Error::Arity { expected: self.n, found: fs.len() });
        }
        maximal_multilinear(fs)
    }

    fn label(&self) -> String {
        format!("maximal(n={})", self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DyadicRectangle, ProductGrid};
    use crate::haar::haar_rect;
    use crate::ops::expand::{expand_product, ExpansionMode};
    use crate::ops::shift::identity_like_shift;
    use crate::rng::uniform_function;

    #[test]
    fn constant_symbol_and_homogeneity() {
        let g = ProductGrid::new(3, 3).unwrap();
        let s = identity_like_shift(g);
        let f = uniform_function(g, 1);
        let c = commutator(&GridFunction::constant(g, 3.0), &s, 1, std::slice::from_ref(&f)).unwrap();
        assert!(c.max_abs() < 1e-12);
        let b = uniform_function(g, 2);
        let one = commutator(&b, &s, 1, std::slice::from_ref(&f)).unwrap();
        let two = commutator(&b.scale(2.0), &s, 1, std::slice::from_ref(&f)).unwrap();
        assert!(two.max_abs_diff(&one.scale(2.0)).unwrap() < 1e-12);
        let shifted = commutator(&b.map(|v| v + 1.0), &s, 1, &[f]).unwrap();
        assert!(shifted.max_abs_diff(&one).unwrap() < 1e-12);
    }

    #[test]
    fn haar_symbol_on_constant_input() {
        // [b, S](1) = −S(b) for b = h_R since S(1) = 0, and S(h_R) = h_R
        let g = ProductGrid::new(2, 2).unwrap();
        let r = DyadicRectangle::from_parts(1, 1, 0, 0).unwrap();
        let b = haar_rect(g, r);
        let one = GridFunction::constant(g, 1.0);
        let s = identity_like_shift(g);
        let out = commutator(&b, &s, 1, std::slice::from_ref(&one)).unwrap();
        assert!(out.max_abs_diff(&b.scale(-1.0)).unwrap() < 1e-13);
        // the product b·1 expands into its bi-cancellative part only
        let e = expand_product(&b, &one, ExpansionMode::BiParameter).unwrap();
        let bi = e.term([2, 2]).unwrap();
        assert!(bi.max_abs_diff(&b).unwrap() < 1e-13);
    }

    #[test]
    fn slot_gate() {
        let g = ProductGrid::new(2, 2).unwrap();
        let s = identity_like_shift(g);
        let f = GridFunction::constant(g, 1.0);
        assert!(commutator(&f, &s, 2, std::slice::from_ref(&f)).is_err());
        assert!(commutator(&f, &ZeroOperator { n: 1 }, 1, std::slice::from_ref(&f)).unwrap().max_abs() == 0.0);
    }
}
