//! Model operators, maximal and square functions, and commutators.

pub mod atoms;
pub mod coeffs;
pub mod commutator;
pub mod dini;
pub mod expand;
pub mod full;
pub mod maximal;
pub mod partial;
pub mod shift;
pub mod spec;
pub mod square;
pub mod weighted;

pub use atoms::Atom;
pub use commutator::{commutator, CommutatorOp, MaximalOperator, ZeroOperator};
pub use dini::{dini_alpha, DiniModulus, DiniReport};
pub use expand::{expand_product, Expansion, ExpansionMode, ExpansionTerm};
pub use coeffs::{carleson_norm, CoeffFn, CoeffKey, CoeffRule};
pub use full::{FullParaproductSpec, SymbolParaproduct};
pub use maximal::{maximal_multilinear, maximal_weighted};
pub use partial::PartialParaproductSpec;
pub use spec::{CoeffSpec, Family, Operator, OperatorSpec, PartialSlots, RuleId, TableEntry};
pub use shift::{identity_like_shift, ShiftSpec};
pub use weighted::{weighted_paraproduct, WeightedVariant};
pub use square::{a_square_function, block_square_function, square_function, AFamily, BlockAssignment, SquareKind};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::ProductGrid;

/// An `n`-linear operator on grid functions.
pub trait MultilinearOperator: Send + Sync {
    fn arity(&self) -> usize;
    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction>;
    fn label(&self) -> String;
}

pub(crate) fn check_inputs(grid: ProductGrid, n: usize, fs: &[GridFunction]) -> Result<()> {
    if fs.len() != n {
        return Err(Error::Arity { expected: n, found: fs.len() });
    }
    fs.iter().try_for_each(|f| grid.check_same(f.grid()))
}

/// Slot permutation for the adjoint that trades slot `j` (1-based) with the
/// output slot `n`; `j = 0` is the identity.
pub(crate) fn swap_perm(n: usize, j: usize) -> Result<Vec<usize>> {
    if j > n {
        return Err(Error::InvalidSlots(format!("adjoint index {j} exceeds arity {n}")));
    }
    let mut p: Vec<usize> = (0..=n).collect();
    if j > 0 {
        p.swap(j - 1, n);
    }
    Ok(p)
}
