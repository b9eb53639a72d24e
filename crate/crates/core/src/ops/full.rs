use crate::bmo::{product_bmo_norm_with, CoefficientFamily, ProductBmoConfig};
use crate::error::{Error, Result};
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::grid::{DyadicRectangle, ProductGrid};

use super::atoms::{accumulate_parallel, pair, Atom};
use super::coeffs::{CoeffKey, CoeffRule, CAP_SLACK};
use super::{check_inputs, swap_perm, MultilinearOperator};

/// An `n`-linear full paraproduct: in each parameter exactly one slot carries
/// `h_{K^m}` and the others carry `1_{K^m}/|K^m|`.
#[derive(Debug, Clone)]
pub struct FullParaproductSpec {
    grid: ProductGrid,
    n: usize,
    /// Zero-based slot with the Haar function, per parameter.
    haar_slots: [usize; 2],
    coeffs: CoefficientFamily,
    product_bmo: f64,
}

impl FullParaproductSpec {
    /// `haar_slots` are one-based in `1..=n+1`.
    ///
    /// `Saturated` and `Uniform` rules draw `|K|^{1/2}` times a scale and are
    /// then divided by their test-family product BMO norm. Tables and custom
    /// rules must already have norm at most one; table keys carry no offsets.
    pub fn new(grid: ProductGrid, n: usize, haar_slots: [usize; 2], rule: CoeffRule) -> Result<Self> {
        if n == 0 {
            return Err(Error::Arity { expected: 1, found: 0 });
        }
        if haar_slots.iter().any(|&s| s == 0 || s > n + 1) {
            return Err(Error::InvalidSlots(format!("haar slots {haar_slots:?} outside 1..={}", n + 1)));
        }
        rule.check_scale()?;
        let seed = match &rule {
            CoeffRule::Uniform { seed } => *seed,
            _ => 0,
        };
        let cfg = ProductBmoConfig { seed, ..ProductBmoConfig::default() };
        let mut coeffs = CoefficientFamily::new(grid);
        let key = |k: DyadicRectangle| CoeffKey { k, offsets: Vec::new() };
        if let CoeffRule::Table(t) = &rule {
            for (k, v) in t {
                if !k.offsets.iter().all(|o| *o == [0, 0]) || !is_haar_rect(grid, k.k) {
                    return Err(Error::InvalidCoefficients(format!("table key {k:?} is not admissible")));
                }
                coeffs.insert(k.k, *v)?;
            }
        } else {
            for k in grid.haar_rectangles() {
                let v = match rule.relative(&key(k)) {
                    Some(u) => u * k.measure().sqrt(),
                    None => rule.absolute(&key(k)).expect("absolute rule"),
                };
                if !v.is_finite() {
                    return Err(Error::InvalidCoefficients(format!("non-finite coefficient at {k}")));
                }
                if v != 0.0 {
                    coeffs.insert(k, v)?;
                }
            }
        }
        let mut product_bmo = product_bmo_norm_with(&coeffs, &cfg).value;
        let target = match rule {
            CoeffRule::Saturated(s) => Some(s.abs()),
            CoeffRule::Uniform { .. } => Some(1.0),
            _ => None,
        };
        match target {
            Some(t) if product_bmo > 0.0 => {
                coeffs.scale(t / product_bmo);
                product_bmo = t;
            }
            Some(_) => {}
            None if product_bmo > CAP_SLACK => {
                return Err(Error::InvalidCoefficients(format!(
                    "product BMO norm {product_bmo} exceeds 1 on the test family"
                )));
            }
            None => {}
        }
        Ok(FullParaproductSpec { grid, n, haar_slots: [haar_slots[0] - 1, haar_slots[1] - 1], coeffs, product_bmo })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    /// One-based Haar slot per parameter.
    pub fn haar_slots(&self) -> [usize; 2] {
        self.haar_slots.map(|s| s + 1)
    }

    pub fn coefficients(&self) -> &CoefficientFamily {
        &self.coeffs
    }

    /// The test-family product BMO norm of the stored coefficients.
    pub fn product_bmo(&self) -> f64 {
        self.product_bmo
    }

    fn atoms(&self, slot: usize) -> [Atom; 2] {
        [0, 1].map(|m| if self.haar_slots[m] == slot { Atom::Haar } else { Atom::Avg })
    }

    pub fn adjoint(&self, j1: usize, j2: usize) -> Result<FullParaproductSpec> {
        let p = [swap_perm(self.n, j1)?, swap_perm(self.n, j2)?];
        let mut out = self.clone();
        for m in 0..2 {
            out.haar_slots[m] = p[m][self.haar_slots[m]];
        }
        Ok(out)
    }

    pub fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        check_inputs(self.grid, self.n, fs)?;
        let sums: Vec<Pyramid> = fs.iter().map(integral_pyramid).collect();
        let terms: Vec<(DyadicRectangle, f64)> = self.coeffs.coeffs.iter().map(|(k, v)| (*k, *v)).collect();
        let atoms: Vec<[Atom; 2]> = (0..=self.n).map(|s| self.atoms(s)).collect();
        accumulate_parallel(self.grid, &terms, |&(k, a), acc| {
            let mut c = a;
            for (i, s) in sums.iter().enumerate() {
                c *= pair(s, k.i1, atoms[i][0], k.i2, atoms[i][1]);
                if c == 0.0 {
                    return Ok(());
                }
            }
            acc.add(k.i1, atoms[self.n][0], k.i2, atoms[self.n][1], c);
            Ok(())
        })
    }
}

fn is_haar_rect(grid: ProductGrid, k: DyadicRectangle) -> bool {
    grid.fits(k) && k.i1.level < grid.n1 && k.i2.level < grid.n2
}

impl MultilinearOperator for FullParaproductSpec {
    fn arity(&self) -> usize {
        self.n
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        FullParaproductSpec::apply(self, fs)
    }

    fn label(&self) -> String {
        format!("full-paraproduct(n={}, haar={:?})", self.n, self.haar_slots.map(|s| s + 1))
    }
}

/// The paraproduct `Π_b` with the symbol in slot 0: in each parameter two
/// distinct slots of `0..=n+1` carry `h_{K^m}` and the rest `1_{K^m}/|K^m|`,
/// and the symbol is cancellative in at least one parameter.
#[derive(Debug, Clone)]
pub struct SymbolParaproduct {
    b: GridFunction,
    b_sums: Pyramid,
    n: usize,
    haar: [[usize; 2]; 2],
}

impl SymbolParaproduct {
    pub fn new(b: GridFunction, n: usize, haar: [[usize; 2]; 2]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Arity { expected: 1, found: 0 });
        }
        for pair in haar {
            if pair[0] == pair[1] || pair.iter().any(|&s| s > n + 1) {
                return Err(Error::InvalidSlots(format!("haar slots {pair:?} must be distinct in 0..={}", n + 1)));
            }
        }
        if !haar.iter().any(|p| p.contains(&0)) {
            return Err(Error::InvalidSlots("the symbol must be cancellative in some parameter".into()));
        }
        let b_sums = integral_pyramid(&b);
        Ok(SymbolParaproduct { b, b_sums, n, haar })
    }

    /// `Π_{j₁,j₂}` of a product expansion with one input.
    pub fn expansion_type(b: GridFunction, j: [u8; 2]) -> Result<Self> {
        let pick = |j: u8| match j {
            1 => Ok([0, 1]),
            2 => Ok([0, 2]),
            3 => Ok([1, 2]),
            _ => Err(Error::InvalidSlots(format!("expansion index {j} is not in 1..=3"))),
        };
        Self::new(b, 1, [pick(j[0])?, pick(j[1])?])
    }

    pub fn symbol(&self) -> &GridFunction {
        &self.b
    }

    fn atom(&self, slot: usize, m: usize) -> Atom {
        if self.haar[m].contains(&slot) {
            Atom::Haar
        } else {
            Atom::Avg
        }
    }

    pub fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        let grid = self.b.grid();
        check_inputs(grid, self.n, fs)?;
        let sums: Vec<Pyramid> = fs.iter().map(integral_pyramid).collect();
        let ks: Vec<DyadicRectangle> = grid.haar_rectangles().collect();
        accumulate_parallel(grid, &ks, |&k, acc| {
            let mut c = pair(&self.b_sums, k.i1, self.atom(0, 0), k.i2, self.atom(0, 1));
            for (i, s) in sums.iter().enumerate() {
                if c == 0.0 {
                    return Ok(());
                }
                c *= pair(s, k.i1, self.atom(i + 1, 0), k.i2, self.atom(i + 1, 1));
            }
            let o = self.n + 1;
            acc.add(k.i1, self.atom(o, 0), k.i2, self.atom(o, 1), c);
            Ok(())
        })
    }
}

impl MultilinearOperator for SymbolParaproduct {
    fn arity(&self) -> usize {
        self.n
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        SymbolParaproduct::apply(self, fs)
    }

    fn label(&self) -> String {
        format!("symbol-paraproduct(n={}, haar={:?})", self.n, self.haar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::uniform_function;
    use std::sync::Arc;

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 3).unwrap()
    }

    #[test]
    fn zero_and_single_coefficient() {
        let g = grid();
        let z = FullParaproductSpec::new(g, 1, [1, 2], CoeffRule::zero()).unwrap();
        assert_eq!(z.apply(&[uniform_function(g, 1)]).unwrap().max_abs(), 0.0);

        let k = DyadicRectangle::from_parts(1, 1, 0, 0).unwrap();
        let key = CoeffKey { k, offsets: vec![] };
        let a = 0.5 * k.measure().sqrt();
        let spec = FullParaproductSpec::new(g, 1, [1, 2], CoeffRule::Table([(key, a)].into_iter().collect()))
            .unwrap();
        assert!((spec.product_bmo() - 0.5).abs() < 1e-14);
        let f = uniform_function(g, 2);
        // a ⟨f, h_{K¹} ⊗ 1_{K²}/|K²|⟩ (1_{K¹}/|K¹| ⊗ h_{K²})
        let h = |d: u32, i, c: usize| crate::function::LineFunction::haar(d, i).values()[c];
        let inside = |c: usize, i: crate::grid::DyadicInterval| i.cell_range(3).contains(&c);
        let probe = GridFunction::from_fn(g, |c1, c2| {
            h(3, k.i1, c1) * if inside(c2, k.i2) { 1.0 / k.i2.side_length() } else { 0.0 }
        });
        let pairing = f.inner(&probe).unwrap();
        let out_shape = GridFunction::from_fn(g, |c1, c2| {
            let a1 = if inside(c1, k.i1) { 1.0 / k.i1.side_length() } else { 0.0 };
            a1 * h(3, k.i2, c2)
        });
        let want = out_shape.scale(a * pairing);
        assert!(spec.apply(&[f]).unwrap().max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn uniform_rule_is_normalized_and_table_gate() {
        let g = grid();
        let s = FullParaproductSpec::new(g, 2, [1, 3], CoeffRule::Uniform { seed: 4 }).unwrap();
        assert!((s.product_bmo() - 1.0).abs() < 1e-12);
        let k = DyadicRectangle::from_parts(2, 0, 2, 0).unwrap();
        let over = CoeffRule::Table([(CoeffKey { k, offsets: vec![] }, 1.0)].into_iter().collect());
        assert!(matches!(FullParaproductSpec::new(g, 1, [1, 1], over), Err(Error::InvalidCoefficients(_))));
        let custom = CoeffRule::Custom(Arc::new(|_: &CoeffKey| 10.0));
        assert!(FullParaproductSpec::new(g, 1, [1, 1], custom).is_err());
    }

    #[test]
    fn symbol_paraproduct_needs_cancellative_symbol() {
        let g = grid();
        let b = uniform_function(g, 1);
        assert!(SymbolParaproduct::expansion_type(b.clone(), [3, 3]).is_err());
        let p = SymbolParaproduct::expansion_type(b.clone(), [1, 1]).unwrap();
        assert!(p.apply(&[GridFunction::constant(g, 1.0)]).unwrap().max_abs() < 1e-14);
        let c = SymbolParaproduct::expansion_type(GridFunction::constant(g, 2.0), [2, 3]).unwrap();
        assert!(c.apply(&[uniform_function(g, 3)]).unwrap().max_abs() < 1e-14);
    }
}
