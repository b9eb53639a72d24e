//! Tensor Haar basis, fast transforms, martingale differences and partial pairings.
//!
//! The one-parameter basis at depth `N` has `2^N` elements: index `0` is the
//! constant `1`, and `h_I` for `I = (j, m)` with `j < N` sits at `2^j + m`.
//! Two-parameter coefficients are stored as `b₁·2^{N₂} + b₂`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{GridFunction, LineFunction};
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};

/// An element of the one-parameter basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis1 {
    Constant,
    Haar(DyadicInterval),
}

impl Basis1 {
    pub fn index(self) -> usize {
        match self {
            Basis1::Constant => 0,
            Basis1::Haar(i) => (1usize << i.level) + i.index as usize,
        }
    }

    pub fn from_index(b: usize) -> Self {
        if b == 0 {
            Basis1::Constant
        } else {
            let level = usize::BITS - 1 - b.leading_zeros();
            Basis1::Haar(DyadicInterval { level, index: (b - (1usize << level)) as u32 })
        }
    }

    pub fn line(self, depth: u32) -> LineFunction {
        match self {
            Basis1::Constant => LineFunction::constant(depth, 1.0),
            Basis1::Haar(i) => LineFunction::haar(depth, i),
        }
    }
}

/// Coefficients in the tensor basis `{u ⊗ v}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarCoefficients {
    grid: ProductGrid,
    data: Vec<f64>,
}

impl HaarCoefficients {
    pub fn zeros(grid: ProductGrid) -> Self {
        HaarCoefficients { grid, data: vec![0.0; grid.cell_count()] }
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, b1: Basis1, b2: Basis1) -> f64 {
        self.data[(b1.index() << self.grid.n2) | b2.index()]
    }

    pub fn set(&mut self, b1: Basis1, b2: Basis1, v: f64) {
        let i = (b1.index() << self.grid.n2) | b2.index();
        self.data[i] = v;
    }

    /// `⟨f, h_R⟩` for a rectangle with both levels below the depths.
    pub fn rect(&self, r: DyadicRectangle) -> f64 {
        self.get(Basis1::Haar(r.i1), Basis1::Haar(r.i2))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Basis1, Basis1, f64)> + '_ {
        let n2 = self.grid.n2;
        self.data.iter().enumerate().map(move |(k, &v)| {
            (Basis1::from_index(k >> n2), Basis1::from_index(k & ((1 << n2) - 1)), v)
        })
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|c| c * c).sum()
    }
}

/// One-parameter analysis of leaf values on `[0,1)` at the given depth; in place.
fn forward_1d(v: &mut [f64], scratch: &mut Vec<f64>) {
    let n = v.len();
    let depth = n.trailing_zeros();
    let cm = 1.0 / n as f64;
    scratch.clear();
    scratch.extend(v.iter().map(|x| x * cm));
    let mut len = n;
    for j in (0..depth).rev() {
        let half = len / 2;
        let s = (j as f64 * 0.5).exp2();
        for m in 0..half {
            let l = scratch[2 * m];
            let r = scratch[2 * m + 1];
            v[half + m] = s * (l - r);
            scratch[m] = l + r;
        }
        len = half;
    }
    v[0] = scratch[0];
}

fn inverse_1d(v: &mut [f64], scratch: &mut Vec<f64>) {
    let n = v.len();
    let depth = n.trailing_zeros();
    scratch.clear();
    scratch.resize(n, 0.0);
    scratch[0] = v[0];
    let mut tmp = vec![0.0; n];
    for j in 0..depth {
        let len = 1usize << j;
        let s = (j as f64 * 0.5).exp2();
        for m in 0..len {
            let a = scratch[m];
            let c = v[len + m] * s;
            tmp[2 * m] = a + c;
            tmp[2 * m + 1] = a - c;
        }
        scratch[..2 * len].copy_from_slice(&tmp[..2 * len]);
    }
    v.copy_from_slice(&scratch[..n]);
}

/// Applies `op` to every line of `data` (row-major `rows × cols`) along `param`.
fn along(grid: ProductGrid, data: &mut [f64], param: Param, mut op: impl FnMut(&mut [f64])) {
    let (rows, cols) = (grid.rows(), grid.cols());
    match param {
        Param::Two => {
            for r in data.chunks_mut(cols) {
                op(r);
            }
        }
        Param::One => {
            let mut line = vec![0.0; rows];
            for c2 in 0..cols {
                for c1 in 0..rows {
                    line[c1] = data[c1 * cols + c2];
                }
                op(&mut line);
                for c1 in 0..rows {
                    data[c1 * cols + c2] = line[c1];
                }
            }
        }
    }
}

pub fn haar_forward(f: &GridFunction) -> HaarCoefficients {
    let grid = f.grid();
    let mut data = f.values().to_vec();
    let mut scratch = Vec::new();
    along(grid, &mut data, Param::Two, |l| forward_1d(l, &mut scratch));
    along(grid, &mut data, Param::One, |l| forward_1d(l, &mut scratch));
    HaarCoefficients { grid, data }
}

pub fn haar_inverse(c: &HaarCoefficients) -> GridFunction {
    let grid = c.grid;
    let mut data = c.data.clone();
    let mut scratch = Vec::new();
    along(grid, &mut data, Param::One, |l| inverse_1d(l, &mut scratch));
    along(grid, &mut data, Param::Two, |l| inverse_1d(l, &mut scratch));
    GridFunction::from_raw(grid, data)
}

/// Checks `f` against the grid owning a coefficient system.
pub fn haar_forward_on(grid: ProductGrid, f: &GridFunction) -> Result<HaarCoefficients> {
    grid.check_same(f.grid())?;
    Ok(haar_forward(f))
}

/// `E_j` on one line: replace values by their averages over level-`level` intervals.
fn expect_line(v: &mut [f64], level: u32) {
    let span = v.len() >> level;
    for chunk in v.chunks_mut(span) {
        let a = chunk.iter().sum::<f64>() / span as f64;
        chunk.fill(a);
    }
}

/// One-parameter martingale block `Δ_{K,k}` on a line, restricted to `K`.
fn block_line(v: &mut [f64], k_int: DyadicInterval, k: u32) {
    let depth = v.len().trailing_zeros();
    let level = k_int.level + k;
    let range = k_int.cell_range(depth);
    let mut fine = v[range.clone()].to_vec();
    let mut coarse = fine.clone();
    expect_line(&mut fine, level + 1 - k_int.level);
    expect_line(&mut coarse, level - k_int.level);
    v.fill(0.0);
    for (t, c) in range.enumerate() {
        v[c] = fine[t] - coarse[t];
    }
}

/// The martingale operators of the bi-parameter calculus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Martingale {
    /// `Δ_R = Δ¹_{I¹} Δ²_{I²}`.
    Rect(DyadicRectangle),
    /// `Δ^m_I` acting in one parameter.
    Partial(Param, DyadicInterval),
    /// `Δ_{K,k} = Δ¹_{K¹,k₁} Δ²_{K²,k₂}`.
    Block(DyadicRectangle, (u32, u32)),
    /// `Δ^m_{K,k}` acting in one parameter.
    PartialBlock(Param, DyadicInterval, u32),
    /// `E_R f = ⟨f⟩_R 1_R`.
    Expect(DyadicRectangle),
}

fn check_block(grid: ProductGrid, param: Param, i: DyadicInterval, k: u32) -> Result<()> {
    if i.level + k >= grid.depth(param) {
        return Err(Error::InvalidComplexity(format!(
            "block at level {} with offset {k} exceeds depth {} in parameter {}",
            i.level,
            grid.depth(param),
            param.index() + 1
        )));
    }
    Ok(())
}

pub fn martingale(f: &GridFunction, op: Martingale) -> Result<GridFunction> {
    let grid = f.grid();
    let mut data = f.values().to_vec();
    let block = |data: &mut Vec<f64>, param: Param, i: DyadicInterval, k: u32| -> Result<()> {
        check_block(grid, param, i, k)?;
        along(grid, data, param, |l| block_line(l, i, k));
        Ok(())
    };
    match op {
        Martingale::Rect(r) => {
            block(&mut data, Param::One, r.i1, 0)?;
            block(&mut data, Param::Two, r.i2, 0)?;
        }
        Martingale::Partial(param, i) => block(&mut data, param, i, 0)?,
        Martingale::Block(r, (k1, k2)) => {
            block(&mut data, Param::One, r.i1, k1)?;
            block(&mut data, Param::Two, r.i2, k2)?;
        }
        Martingale::PartialBlock(param, i, k) => block(&mut data, param, i, k)?,
        Martingale::Expect(r) => {
            if !grid.fits(r) {
                return Err(Error::InvalidComplexity(format!("{r} does not fit the grid")));
            }
            let a = f.average(r);
            let mut out = GridFunction::zeros(grid);
            for c in grid.cells_of(r) {
                out.values_mut()[c] = a;
            }
            return Ok(out);
        }
    }
    Ok(GridFunction::from_raw(grid, data))
}

/// `E^1_{l₁} E^2_{l₂} f`: averages over the rectangles of levels `(l₁, l₂)`.
pub fn conditional_expectation(f: &GridFunction, l1: u32, l2: u32) -> GridFunction {
    let grid = f.grid();
    let mut data = f.values().to_vec();
    if l1 < grid.n1 {
        along(grid, &mut data, Param::One, |l| expect_line(l, l1));
    }
    if l2 < grid.n2 {
        along(grid, &mut data, Param::Two, |l| expect_line(l, l2));
    }
    GridFunction::from_raw(grid, data)
}

/// One-parameter conditional expectation `E^m_l` along `param` only.
pub fn partial_expectation(f: &GridFunction, param: Param, level: u32) -> GridFunction {
    let grid = f.grid();
    let mut data = f.values().to_vec();
    if level < grid.depth(param) {
        along(grid, &mut data, param, |l| expect_line(l, level));
    }
    GridFunction::from_raw(grid, data)
}

/// `Σ_{ℓ(I)=2^{-level}} Δ^m_I f = (E_{level+1} − E_level) f` along `param`.
pub fn level_difference(f: &GridFunction, param: Param, level: u32) -> GridFunction {
    let fine = partial_expectation(f, param, level + 1);
    let coarse = partial_expectation(f, param, level);
    &fine - &coarse
}

/// Sum of all `Δ_R f` with `R` at levels `(l₁, l₂)`.
pub fn rect_level_difference(f: &GridFunction, l1: u32, l2: u32) -> GridFunction {
    let g = level_difference(f, Param::One, l1);
    level_difference(&g, Param::Two, l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingKind {
    Haar,
    Average,
}

/// `⟨f, h_I⟩_m` or `⟨f⟩_{I,m}` as a function of the other variable.
pub fn partial_pairing(
    f: &GridFunction,
    i: DyadicInterval,
    param: Param,
    kind: PairingKind,
) -> Result<LineFunction> {
    let grid = f.grid();
    let depth = grid.depth(param);
    if i.level > depth || (kind == PairingKind::Haar && i.level >= depth) {
        return Err(Error::WrongParameter(format!(
            "interval {i} does not live in parameter {} at depth {depth}",
            param.index() + 1
        )));
    }
    let weights: Vec<f64> = match kind {
        PairingKind::Haar => LineFunction::haar(depth, i).values().to_vec(),
        PairingKind::Average => {
            LineFunction::indicator(depth, i).scale(1.0 / i.side_length()).values().to_vec()
        }
    };
    let range = i.cell_range(depth);
    let cm = (-(depth as f64)).exp2();
    let other = grid.depth(param.other());
    let out = (0..1usize << other)
        .map(|c| {
            range
                .clone()
                .map(|t| {
                    let v = match param {
                        Param::One => f.at(t, c),
                        Param::Two => f.at(c, t),
                    };
                    v * weights[t]
                })
                .sum::<f64>()
                * cm
        })
        .collect();
    Ok(LineFunction::from_raw(other, out))
}

/// `h_{I¹} ⊗ h_{I²}` as a grid function.
pub fn haar_rect(grid: ProductGrid, r: DyadicRectangle) -> GridFunction {
    GridFunction::tensor(&LineFunction::haar(grid.n1, r.i1), &LineFunction::haar(grid.n2, r.i2))
        .expect("grid depths are valid")
}

/// `u ⊗ v` for arbitrary basis elements.
pub fn basis_function(grid: ProductGrid, b1: Basis1, b2: Basis1) -> GridFunction {
    GridFunction::tensor(&b1.line(grid.n1), &b2.line(grid.n2)).expect("grid depths are valid")
}
