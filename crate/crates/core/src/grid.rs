//! Finite dyadic product lattices on `[0,1)²`.
//!
//! A [`ProductGrid`] of depths `(N₁, N₂)` has `2^{N₁}·2^{N₂}` leaf cells. Leaf
//! cells are stored row-major with the `x₂` index running fastest, so cell
//! `(c₁, c₂)` sits at flat position `c₁·2^{N₂} + c₂`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Which of the two parameters an object lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl Param {
    pub fn other(self) -> Param {
        match self {
            Param::One => Param::Two,
            Param::Two => Param::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Param::One => 0,
            Param::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Param> {
        match i {
            1 => Ok(Param::One),
            2 => Ok(Param::Two),
            _ => Err(Error::WrongParameter(format!("parameter {i} is not 1 or 2"))),
        }
    }
}

/// `[m·2^{-j}, (m+1)·2^{-j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: u32,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval { level: 0, index: 0 };

    pub fn new(level: u32, index: u32) -> Result<Self> {
        if level >= 31 || (index as u64) >= (1u64 << level) {
            return Err(Error::InvalidInput(format!(
                "interval index {index} out of range at level {level}"
            )));
        }
        Ok(DyadicInterval { level, index })
    }

    pub fn side_length(self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn left(self) -> f64 {
        self.index as f64 * self.side_length()
    }

    /// `I^{(k)}`; `None` when `k` exceeds the level.
    pub fn ancestor(self, k: u32) -> Option<DyadicInterval> {
        (k <= self.level).then(|| DyadicInterval {
            level: self.level - k,
            index: self.index >> k,
        })
    }

    pub fn parent(self) -> Option<DyadicInterval> {
        self.ancestor(1)
    }

    pub fn children(self) -> [DyadicInterval; 2] {
        let level = self.level + 1;
        [
            DyadicInterval { level, index: 2 * self.index },
            DyadicInterval { level, index: 2 * self.index + 1 },
        ]
    }

    /// All `J` with `J^{(k)} = self`, left to right.
    pub fn descendants(self, k: u32) -> impl Iterator<Item = DyadicInterval> {
        let level = self.level + k;
        let base = self.index << k;
        (0..(1u32 << k)).map(move |t| DyadicInterval { level, index: base + t })
    }

    pub fn contains(self, other: DyadicInterval) -> bool {
        other.level >= self.level && (other.index >> (other.level - self.level)) == self.index
    }

    /// Leaf cells `[lo, hi)` covered by this interval in a lattice of depth `depth`.
    pub fn cell_range(self, depth: u32) -> std::ops::Range<usize> {
        debug_assert!(self.level <= depth);
        let span = 1usize << (depth - self.level);
        let lo = self.index as usize * span;
        lo..lo + span
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.index)
    }
}

/// `R = I¹ × I²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicRectangle {
    pub i1: DyadicInterval,
    pub i2: DyadicInterval,
}

impl DyadicRectangle {
    pub const ROOT: DyadicRectangle = DyadicRectangle {
        i1: DyadicInterval::ROOT,
        i2: DyadicInterval::ROOT,
    };

    pub fn new(i1: DyadicInterval, i2: DyadicInterval) -> Self {
        DyadicRectangle { i1, i2 }
    }

    pub fn from_parts(l1: u32, m1: u32, l2: u32, m2: u32) -> Result<Self> {
        Ok(DyadicRectangle {
            i1: DyadicInterval::new(l1, m1)?,
            i2: DyadicInterval::new(l2, m2)?,
        })
    }

    pub fn levels(self) -> (u32, u32) {
        (self.i1.level, self.i2.level)
    }

    pub fn indices(self) -> (u32, u32) {
        (self.i1.index, self.i2.index)
    }

    pub fn interval(self, param: Param) -> DyadicInterval {
        match param {
            Param::One => self.i1,
            Param::Two => self.i2,
        }
    }

    pub fn measure(self) -> f64 {
        (-((self.i1.level + self.i2.level) as f64)).exp2()
    }

    /// `R^{(k)}` with `k = (k₁, k₂)` applied per parameter.
    pub fn ancestor(self, k: (u32, u32)) -> Option<DyadicRectangle> {
        Some(DyadicRectangle {
            i1: self.i1.ancestor(k.0)?,
            i2: self.i2.ancestor(k.1)?,
        })
    }

    pub fn descendants(self, k: (u32, u32)) -> impl Iterator<Item = DyadicRectangle> {
        let d2: Vec<DyadicInterval> = self.i2.descendants(k.1).collect();
        self.i1
            .descendants(k.0)
            .flat_map(move |a| d2.clone().into_iter().map(move |b| DyadicRectangle::new(a, b)))
    }

    pub fn contains(self, other: DyadicRectangle) -> bool {
        self.i1.contains(other.i1) && self.i2.contains(other.i2)
    }
}

impl fmt::Display for DyadicRectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.i1, self.i2)
    }
}

/// The depth-`(N₁, N₂)` lattice 𝒟 = 𝒟¹ × 𝒟².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductGrid {
    pub n1: u32,
    pub n2: u32,
}

/// Deepest supported depth per parameter; keeps leaf counts addressable and
/// exhaustive rectangle sweeps tractable.
pub const MAX_DEPTH: u32 = 12;

impl ProductGrid {
    pub fn new(n1: u32, n2: u32) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n1 > MAX_DEPTH || n2 > MAX_DEPTH {
            return Err(Error::InvalidInput(format!(
                "grid depths ({n1},{n2}) must lie in 1..={MAX_DEPTH}"
            )));
        }
        Ok(ProductGrid { n1, n2 })
    }

    pub fn depths(self) -> (u32, u32) {
        (self.n1, self.n2)
    }

    pub fn depth(self, param: Param) -> u32 {
        match param {
            Param::One => self.n1,
            Param::Two => self.n2,
        }
    }

    pub fn side(self, param: Param) -> usize {
        1usize << self.depth(param)
    }

    pub fn rows(self) -> usize {
        1usize << self.n1
    }

    pub fn cols(self) -> usize {
        1usize << self.n2
    }

    pub fn cell_count(self) -> usize {
        self.rows() * self.cols()
    }

    pub fn cell_measure(self) -> f64 {
        (-((self.n1 + self.n2) as f64)).exp2()
    }

    #[inline]
    pub fn cell(self, c1: usize, c2: usize) -> usize {
        (c1 << self.n2) | c2
    }

    #[inline]
    pub fn cell_coords(self, idx: usize) -> (usize, usize) {
        (idx >> self.n2, idx & (self.cols() - 1))
    }

    pub fn check_same(self, other: ProductGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.depths(),
                found: other.depths(),
            })
        }
    }

    pub fn fits(self, r: DyadicRectangle) -> bool {
        r.i1.level <= self.n1 && r.i2.level <= self.n2
    }

    /// Every dyadic rectangle with levels `≤ (N₁, N₂)`, ordered by
    /// `(level₁, level₂, index₁, index₂)`.
    pub fn rectangles(self) -> impl Iterator<Item = DyadicRectangle> {
        self.rectangles_up_to(self.n1, self.n2)
    }

    /// Rectangles with `level₁ ≤ max1` and `level₂ ≤ max2`.
    pub fn rectangles_up_to(self, max1: u32, max2: u32) -> impl Iterator<Item = DyadicRectangle> {
        (0..=max1).flat_map(move |l1| {
            (0..=max2).flat_map(move |l2| {
                (0..(1u32 << l1)).flat_map(move |m1| {
                    (0..(1u32 << l2)).map(move |m2| DyadicRectangle {
                        i1: DyadicInterval { level: l1, index: m1 },
                        i2: DyadicInterval { level: l2, index: m2 },
                    })
                })
            })
        })
    }

    /// Rectangles carrying cancellative Haar functions in both parameters
    /// (levels strictly below the depths).
    pub fn haar_rectangles(self) -> impl Iterator<Item = DyadicRectangle> {
        self.rectangles_up_to(self.n1 - 1, self.n2 - 1)
    }

    /// Intervals of parameter `param` with level `≤ max_level`.
    pub fn intervals(self, param: Param, max_level: u32) -> impl Iterator<Item = DyadicInterval> {
        let max_level = max_level.min(self.depth(param));
        (0..=max_level)
            .flat_map(|l| (0..(1u32 << l)).map(move |m| DyadicInterval { level: l, index: m }))
    }

    /// Flat cell indices covered by `r`.
    pub fn cells_of(self, r: DyadicRectangle) -> impl Iterator<Item = usize> {
        let r1 = r.i1.cell_range(self.n1);
        let r2 = r.i2.cell_range(self.n2);
        let n2 = self.n2;
        r1.flat_map(move |c1| r2.clone().map(move |c2| (c1 << n2) | c2))
    }

    /// The interval of level `level` in parameter `param` containing leaf coordinate `c`.
    #[inline]
    pub fn ancestor_of_cell(self, param: Param, c: usize, level: u32) -> DyadicInterval {
        DyadicInterval {
            level,
            index: (c >> (self.depth(param) - level)) as u32,
        }
    }

    /// Center of leaf coordinate `c` in parameter `param`.
    pub fn cell_center(self, param: Param, c: usize) -> f64 {
        (c as f64 + 0.5) / self.side(param) as f64
    }

    /// Stable dense id of a rectangle: position in the level-major enumeration.
    pub fn rect_id(self, r: DyadicRectangle) -> usize {
        let (l1, l2) = r.levels();
        // rectangles of levels (a, b) with (a, b) before (l1, l2) in lexicographic order
        let mut offset = 0usize;
        let per_l2 = |b: u32| 1usize << b;
        let total_l2: usize = (0..=self.n2).map(per_l2).sum();
        for a in 0..l1 {
            offset += (1usize << a) * total_l2;
        }
        for b in 0..l2 {
            offset += (1usize << l1) * per_l2(b);
        }
        offset + ((r.i1.index as usize) << l2) + r.i2.index as usize
    }

    pub fn rect_count(self) -> usize {
        ((1usize << (self.n1 + 1)) - 1) * ((1usize << (self.n2 + 1)) - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parents_and_children() {
        let i = DyadicInterval::new(3, 5).unwrap();
        assert_eq!(i.parent().unwrap(), DyadicInterval::new(2, 2).unwrap());
        assert_eq!(i.ancestor(3).unwrap(), DyadicInterval::ROOT);
        assert!(i.ancestor(4).is_none());
        for c in i.children() {
            assert_eq!(c.parent().unwrap(), i);
        }
        assert_eq!(i.descendants(2).count(), 4);
        assert!(i.descendants(2).all(|d| d.ancestor(2) == Some(i)));
        assert_eq!(i.side_length(), 0.125);
        assert_eq!(i.left(), 0.625);
    }

    #[test]
    fn rejects_out_of_range_index() {
        assert!(DyadicInterval::new(2, 4).is_err());
    }

    #[test]
    fn rectangle_measure_and_ancestor() {
        let r = DyadicRectangle::from_parts(2, 3, 1, 0).unwrap();
        assert_eq!(r.measure(), 0.125);
        let a = r.ancestor((1, 1)).unwrap();
        assert_eq!(a, DyadicRectangle::from_parts(1, 1, 0, 0).unwrap());
        assert!(a.contains(r));
    }

    #[test]
    fn rectangle_enumeration_and_ids() {
        let g = ProductGrid::new(2, 3).unwrap();
        let rects: Vec<_> = g.rectangles().collect();
        assert_eq!(rects.len(), g.rect_count());
        for (k, r) in rects.iter().enumerate() {
            assert_eq!(g.rect_id(*r), k);
        }
    }

    #[test]
    fn every_rectangle_is_a_union_of_cells() {
        let g = ProductGrid::new(3, 2).unwrap();
        for r in g.rectangles() {
            let n = g.cells_of(r).count() as f64;
            assert!((n * g.cell_measure() - r.measure()).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_indexing() {
        let g = ProductGrid::new(2, 3).unwrap();
        assert_eq!(g.cell(1, 2), 10);
        assert_eq!(g.cell_coords(10), (1, 2));
    }
}
