//! Piecewise-constant functions on leaf cells and rectangle statistics.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};

/// A real function constant on each leaf cell of a [`ProductGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: ProductGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: ProductGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} cell values, found {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at cell {pos}")));
        }
        Ok(GridFunction { grid, values })
    }

    /// Trusted constructor for values produced by finite arithmetic.
    pub(crate) fn from_raw(grid: ProductGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count());
        GridFunction { grid, values }
    }

    pub fn zeros(grid: ProductGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: ProductGrid, c: f64) -> Self {
        GridFunction { grid, values: vec![c; grid.cell_count()] }
    }

    /// `f(c₁, c₂)` evaluated on leaf coordinates.
    pub fn from_fn(grid: ProductGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.cell_count());
        for c1 in 0..grid.rows() {
            for c2 in 0..grid.cols() {
                values.push(f(c1, c2));
            }
        }
        GridFunction { grid, values }
    }

    /// `f(x₁, x₂)` evaluated at cell centers.
    pub fn from_point_fn(grid: ProductGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |c1, c2| {
            f(grid.cell_center(Param::One, c1), grid.cell_center(Param::Two, c2))
        })
    }

    pub fn indicator(grid: ProductGrid, r: DyadicRectangle) -> Self {
        let mut out = Self::zeros(grid);
        for c in grid.cells_of(r) {
            out.values[c] = 1.0;
        }
        out
    }

    /// `g₁ ⊗ g₂`.
    pub fn tensor(g1: &LineFunction, g2: &LineFunction) -> Result<Self> {
        let grid = ProductGrid::new(g1.depth(), g2.depth())?;
        Ok(Self::from_fn(grid, |c1, c2| g1.values()[c1] * g2.values()[c2]))
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, c1: usize, c2: usize) -> f64 {
        self.values[self.grid.cell(c1, c2)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(other.grid)?;
        Ok(GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn powf(&self, e: f64) -> Self {
        self.map(|v| v.powf(e))
    }

    pub fn recip(&self) -> Self {
        self.map(|v| 1.0 / v)
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    pub fn integral_over(&self, r: DyadicRectangle) -> f64 {
        self.grid.cells_of(r).map(|c| self.values[c]).sum::<f64>() * self.grid.cell_measure()
    }

    /// `⟨f⟩_R`.
    pub fn average(&self, r: DyadicRectangle) -> f64 {
        self.integral_over(r) / r.measure()
    }

    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_measure())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.grid.check_same(other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    /// The row `x₁ = c₁` as a function of `x₂`.
    pub fn row(&self, c1: usize) -> LineFunction {
        let cols = self.grid.cols();
        LineFunction::from_raw(self.grid.n2, self.values[c1 * cols..(c1 + 1) * cols].to_vec())
    }

    /// The column `x₂ = c₂` as a function of `x₁`.
    pub fn column(&self, c2: usize) -> LineFunction {
        let values = (0..self.grid.rows()).map(|c1| self.at(c1, c2)).collect();
        LineFunction::from_raw(self.grid.n1, values)
    }

    /// `(x₁, x₂) ↦ f(x₂, x₁)` on the transposed grid.
    pub fn transpose(&self) -> GridFunction {
        let g = self.grid;
        let t = ProductGrid { n1: g.n2, n2: g.n1 };
        GridFunction::from_fn(t, |c1, c2| self.at(c2, c1))
    }

    /// Slice with `param` frozen at leaf coordinate `c`; a function of the other variable.
    pub fn slice(&self, param: Param, c: usize) -> LineFunction {
        match param {
            Param::One => self.row(c),
            Param::Two => self.column(c),
        }
    }

    pub fn stats(&self) -> RectStats {
        RectStats::new(self)
    }

    /// Digest of the grid and the exact bit patterns of the values.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.grid.n1.to_le_bytes());
        h.update(self.grid.n2.to_le_bytes());
        for v in &self.values {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

macro_rules! pointwise {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&GridFunction> for &GridFunction {
            type Output = GridFunction;
            /// Panics on grid mismatch; use [`GridFunction::zip_map`] for a fallible version.
            fn $m(self, rhs: &GridFunction) -> GridFunction {
                self.zip_map(rhs, |a, b| a $op b).expect("grid mismatch in pointwise operation")
            }
        }
    };
}

pointwise!(Add, add, +);
pointwise!(Sub, sub, -);
pointwise!(Mul, mul, *);

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

/// A function of one variable on a dyadic lattice of the given depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFunction {
    depth: u32,
    values: Vec<f64>,
}

impl LineFunction {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << depth {
            return Err(Error::InvalidInput(format!(
                "expected {} values at depth {depth}, found {}",
                1usize << depth,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite line value".into()));
        }
        Ok(LineFunction { depth, values })
    }

    pub(crate) fn from_raw(depth: u32, values: Vec<f64>) -> Self {
        LineFunction { depth, values }
    }

    pub fn constant(depth: u32, c: f64) -> Self {
        LineFunction { depth, values: vec![c; 1 << depth] }
    }

    pub fn from_fn(depth: u32, f: impl Fn(usize) -> f64) -> Self {
        LineFunction { depth, values: (0..1usize << depth).map(f).collect() }
    }

    pub fn indicator(depth: u32, i: DyadicInterval) -> Self {
        let r = i.cell_range(depth);
        Self::from_fn(depth, |c| if r.contains(&c) { 1.0 } else { 0.0 })
    }

    /// `h_I`, positive on the left half.
    pub fn haar(depth: u32, i: DyadicInterval) -> Self {
        let r = i.cell_range(depth);
        let mid = (r.start + r.end) / 2;
        let a = i.side_length().powf(-0.5);
        Self::from_fn(depth, |c| {
            if c < r.start || c >= r.end {
                0.0
            } else if c < mid {
                a
            } else {
                -a
            }
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn integral_over(&self, i: DyadicInterval) -> f64 {
        self.values[i.cell_range(self.depth)].iter().sum::<f64>() * self.cell_measure()
    }

    pub fn average(&self, i: DyadicInterval) -> f64 {
        self.integral_over(i) / i.side_length()
    }

    pub fn inner(&self, other: &LineFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.cell_measure()
    }

    pub fn scale(&self, c: f64) -> Self {
        LineFunction { depth: self.depth, values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn max_abs_diff(&self, other: &LineFunction) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A value for every dyadic rectangle of a grid, laid out level block by
/// level block in the order of [`ProductGrid::rectangles`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    grid: ProductGrid,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl Pyramid {
    pub fn zeros(grid: ProductGrid) -> Self {
        let mut offsets = Vec::with_capacity(((grid.n1 + 1) * (grid.n2 + 1)) as usize);
        let mut total = 0usize;
        for l1 in 0..=grid.n1 {
            for l2 in 0..=grid.n2 {
                offsets.push(total);
                total += 1usize << (l1 + l2);
            }
        }
        Pyramid { grid, offsets, data: vec![0.0; total] }
    }

    /// Builds every rectangle's value from the leaf values by pairwise
    /// reduction, first along `x₁`, then along `x₂`.
    pub fn build(grid: ProductGrid, leaves: &[f64], op: impl Fn(f64, f64) -> f64) -> Self {
        let mut p = Self::zeros(grid);
        let (n1, n2) = grid.depths();
        p.block_mut(n1, n2).copy_from_slice(leaves);
        for l1 in (0..n1).rev() {
            let (src, dst) = p.two_blocks(l1 + 1, n2, l1, n2);
            let cols = 1usize << n2;
            for m1 in 0..(1usize << l1) {
                for m2 in 0..cols {
                    dst[m1 * cols + m2] = op(src[2 * m1 * cols + m2], src[(2 * m1 + 1) * cols + m2]);
                }
            }
        }
        for l1 in 0..=n1 {
            for l2 in (0..n2).rev() {
                let (src, dst) = p.two_blocks(l1, l2 + 1, l1, l2);
                let cols = 1usize << l2;
                for m1 in 0..(1usize << l1) {
                    for m2 in 0..cols {
                        let s = m1 * 2 * cols + 2 * m2;
                        dst[m1 * cols + m2] = op(src[s], src[s + 1]);
                    }
                }
            }
        }
        p
    }

    fn slot(&self, l1: u32, l2: u32) -> usize {
        (l1 * (self.grid.n2 + 1) + l2) as usize
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    pub fn block(&self, l1: u32, l2: u32) -> &[f64] {
        let o = self.offsets[self.slot(l1, l2)];
        &self.data[o..o + (1usize << (l1 + l2))]
    }

    pub fn block_mut(&mut self, l1: u32, l2: u32) -> &mut [f64] {
        let o = self.offsets[self.slot(l1, l2)];
        &mut self.data[o..o + (1usize << (l1 + l2))]
    }

    /// Disjoint borrows of the source block `(a1, a2)` and destination block `(b1, b2)`.
    fn two_blocks(&mut self, a1: u32, a2: u32, b1: u32, b2: u32) -> (&[f64], &mut [f64]) {
        let oa = self.offsets[self.slot(a1, a2)];
        let ob = self.offsets[self.slot(b1, b2)];
        let la = 1usize << (a1 + a2);
        let lb = 1usize << (b1 + b2);
        if oa < ob {
            let (x, y) = self.data.split_at_mut(ob);
            (&x[oa..oa + la], &mut y[..lb])
        } else {
            let (x, y) = self.data.split_at_mut(oa);
            (&y[..la], &mut x[ob..ob + lb])
        }
    }

    #[inline]
    pub fn index(&self, r: DyadicRectangle) -> usize {
        self.offsets[self.slot(r.i1.level, r.i2.level)]
            + ((r.i1.index as usize) << r.i2.level)
            + r.i2.index as usize
    }

    #[inline]
    pub fn get(&self, r: DyadicRectangle) -> f64 {
        self.data[self.index(r)]
    }

    #[inline]
    pub fn add(&mut self, r: DyadicRectangle, v: f64) {
        let i = self.index(r);
        self.data[i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn add_assign(&mut self, other: &Pyramid) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Treats each entry as the coefficient of `1_R` and returns `Σ_R c_R 1_R`.
    pub fn synthesize_boxes(self) -> GridFunction {
        self.push_down(|a, b| a + b)
    }

    /// `x ↦ max_{R ∋ x} v_R`.
    pub fn synthesize_max(self) -> GridFunction {
        self.push_down(f64::max)
    }

    /// Folds every rectangle's value into the leaves it contains.
    fn push_down(mut self, op: impl Fn(f64, f64) -> f64) -> GridFunction {
        let (n1, n2) = self.grid.depths();
        for l1 in 0..n1 {
            for l2 in 0..=n2 {
                let cols = 1usize << l2;
                let (src, dst) = self.two_blocks(l1, l2, l1 + 1, l2);
                for m1 in 0..(1usize << l1) {
                    for m2 in 0..cols {
                        let v = src[m1 * cols + m2];
                        let a = 2 * m1 * cols + m2;
                        let b = (2 * m1 + 1) * cols + m2;
                        dst[a] = op(dst[a], v);
                        dst[b] = op(dst[b], v);
                    }
                }
            }
        }
        for l2 in 0..n2 {
            let cols = 1usize << l2;
            let (src, dst) = self.two_blocks(n1, l2, n1, l2 + 1);
            for m1 in 0..(1usize << n1) {
                for m2 in 0..cols {
                    let v = src[m1 * cols + m2];
                    let a = m1 * 2 * cols + 2 * m2;
                    dst[a] = op(dst[a], v);
                    dst[a + 1] = op(dst[a + 1], v);
                }
            }
        }
        let leaves = self.block(n1, n2).to_vec();
        GridFunction::from_raw(self.grid, leaves)
    }

    pub fn from_fn(grid: ProductGrid, f: impl Fn(DyadicRectangle) -> f64) -> Self {
        let mut p = Self::zeros(grid);
        for r in grid.rectangles() {
            let i = p.index(r);
            p.data[i] = f(r);
        }
        p
    }
}

/// Integrals, minima and maxima of a function over every dyadic rectangle.
#[derive(Debug, Clone)]
pub struct RectStats {
    sums: Pyramid,
    mins: Pyramid,
    maxs: Pyramid,
}

impl RectStats {
    pub fn new(f: &GridFunction) -> Self {
        let grid = f.grid();
        let cm = grid.cell_measure();
        let leaf_int: Vec<f64> = f.values().iter().map(|v| v * cm).collect();
        RectStats {
            sums: Pyramid::build(grid, &leaf_int, |a, b| a + b),
            mins: Pyramid::build(grid, f.values(), f64::min),
            maxs: Pyramid::build(grid, f.values(), f64::max),
        }
    }

    pub fn grid(&self) -> ProductGrid {
        self.sums.grid
    }

    /// `∫_R f`.
    #[inline]
    pub fn integral(&self, r: DyadicRectangle) -> f64 {
        self.sums.get(r)
    }

    /// `⟨f⟩_R`.
    #[inline]
    pub fn average(&self, r: DyadicRectangle) -> f64 {
        self.sums.get(r) / r.measure()
    }

    #[inline]
    pub fn min(&self, r: DyadicRectangle) -> f64 {
        self.mins.get(r)
    }

    #[inline]
    pub fn max(&self, r: DyadicRectangle) -> f64 {
        self.maxs.get(r)
    }

    pub fn sums(&self) -> &Pyramid {
        &self.sums
    }
}

/// Integrals only; cheaper than [`RectStats`] when extrema are not needed.
pub fn integral_pyramid(f: &GridFunction) -> Pyramid {
    let cm = f.grid().cell_measure();
    let leaf_int: Vec<f64> = f.values().iter().map(|v| v * cm).collect();
    Pyramid::build(f.grid(), &leaf_int, |a, b| a + b)
}
