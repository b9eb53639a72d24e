//! One-parameter building blocks of the model operators and a box accumulator
//! that turns sums of tensor atoms back into grid functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function::{GridFunction, Pyramid};
use crate::grid::{DyadicInterval, DyadicRectangle, ProductGrid};

/// A function of one variable attached to a dyadic interval `I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Atom {
    /// `h_I`, positive on the left half.
    Haar,
    /// `h⁰_I = 1_I / |I|^{1/2}`.
    Haar0,
    /// `1_I / |I|`.
    Avg,
    /// `1_I`.
    Box,
}

impl Atom {
    pub fn is_cancellative(self) -> bool {
        self == Atom::Haar
    }

    /// `(J, c)` pairs with `atom_I = Σ c·1_J`.
    #[inline]
    fn boxes(self, i: DyadicInterval) -> ([(DyadicInterval, f64); 2], usize) {
        let side = i.side_length();
        match self {
            Atom::Haar => {
                let c = side.sqrt().recip();
                let [l, r] = i.children();
                ([(l, c), (r, -c)], 2)
            }
            Atom::Haar0 => ([(i, side.sqrt().recip()), (i, 0.0)], 1),
            Atom::Avg => ([(i, side.recip()), (i, 0.0)], 1),
            Atom::Box => ([(i, 1.0), (i, 0.0)], 1),
        }
    }
}

/// `⟨f, a₁_{I¹} ⊗ a₂_{I²}⟩` read off the integral pyramid of `f`.
#[inline]
pub fn pair(sums: &Pyramid, i1: DyadicInterval, a1: Atom, i2: DyadicInterval, a2: Atom) -> f64 {
    let (b1, n1) = a1.boxes(i1);
    let (b2, n2) = a2.boxes(i2);
    let mut s = 0.0;
    for &(j1, c1) in &b1[..n1] {
        for &(j2, c2) in &b2[..n2] {
            s += c1 * c2 * sums.get(DyadicRectangle::new(j1, j2));
        }
    }
    s
}

/// Collects `Σ c · a₁_{I¹} ⊗ a₂_{I²}` as box coefficients.
#[derive(Debug, Clone)]
pub struct AtomAccumulator {
    boxes: Pyramid,
}

impl AtomAccumulator {
    pub fn new(grid: ProductGrid) -> Self {
        AtomAccumulator { boxes: Pyramid::zeros(grid) }
    }

    #[inline]
    pub fn add(&mut self, i1: DyadicInterval, a1: Atom, i2: DyadicInterval, a2: Atom, c: f64) {
        if c == 0.0 {
            return;
        }
        let (b1, n1) = a1.boxes(i1);
        let (b2, n2) = a2.boxes(i2);
        for &(j1, c1) in &b1[..n1] {
            for &(j2, c2) in &b2[..n2] {
                self.boxes.add(DyadicRectangle::new(j1, j2), c * c1 * c2);
            }
        }
    }

    pub fn merge(&mut self, other: &AtomAccumulator) {
        self.boxes.add_assign(&other.boxes);
    }

    pub fn finish(self) -> GridFunction {
        self.boxes.synthesize_boxes()
    }
}

/// Number of independent partial sums; fixed so the reduction order does not
/// depend on the thread count.
const CHUNKS: usize = 16;

/// Runs `body` over `items` in fixed chunks, each with its own accumulator,
/// and adds the chunk results in a fixed pairwise tree.
pub fn accumulate_parallel<T, F>(grid: ProductGrid, items: &[T], body: F) -> Result<GridFunction>
where
    T: Sync,
    F: Fn(&T, &mut AtomAccumulator) -> Result<()> + Sync,
{
    if items.is_empty() {
        return Ok(GridFunction::zeros(grid));
    }
    let size = items.len().div_ceil(CHUNKS);
    let mut parts: Vec<AtomAccumulator> = items
        .par_chunks(size)
        .map(|chunk| {
            let mut acc = AtomAccumulator::new(grid);
            for item in chunk {
                body(item, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(&b);
            }
            next.push(a);
        }
        parts = next;
    }
    Ok(parts.pop().expect("at least one chunk").finish())
}

/// Every rectangle with `level₁ ≤ max1`, `level₂ ≤ max2`; empty if either bound is negative.
pub fn rectangles_below(max1: i64, max2: i64) -> Vec<DyadicRectangle> {
    if max1 < 0 || max2 < 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for l1 in 0..=max1 as u32 {
        for l2 in 0..=max2 as u32 {
            for m1 in 0..1u32 << l1 {
                for m2 in 0..1u32 << l2 {
                    out.push(DyadicRectangle::new(
                        DyadicInterval { level: l1, index: m1 },
                        DyadicInterval { level: l2, index: m2 },
                    ));
                }
            }
        }
    }
    out
}

/// The `t`-th descendant of `i` at relative depth `k`.
#[inline]
pub fn descendant(i: DyadicInterval, k: u32, t: u32) -> DyadicInterval {
    DyadicInterval { level: i.level + k, index: (i.index << k) + t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{integral_pyramid, LineFunction};
    use crate::rng::uniform_function;

    fn line(depth: u32, i: DyadicInterval, a: Atom) -> LineFunction {
        match a {
            Atom::Haar => LineFunction::haar(depth, i),
            Atom::Haar0 => LineFunction::indicator(depth, i).scale(i.side_length().sqrt().recip()),
            Atom::Avg => LineFunction::indicator(depth, i).scale(i.side_length().recip()),
            Atom::Box => LineFunction::indicator(depth, i),
        }
    }

    #[test]
    fn pairing_and_accumulation_match_tensors() {
        let g = ProductGrid::new(3, 3).unwrap();
        let f = uniform_function(g, 5);
        let sums = integral_pyramid(&f);
        let i1 = DyadicInterval::new(1, 1).unwrap();
        let i2 = DyadicInterval::new(2, 2).unwrap();
        for a1 in [Atom::Haar, Atom::Haar0, Atom::Avg, Atom::Box] {
            for a2 in [Atom::Haar, Atom::Haar0, Atom::Avg, Atom::Box] {
                let t = GridFunction::tensor(&line(3, i1, a1), &line(3, i2, a2)).unwrap();
                assert!((pair(&sums, i1, a1, i2, a2) - f.inner(&t).unwrap()).abs() < 1e-14);
                let mut acc = AtomAccumulator::new(g);
                acc.add(i1, a1, i2, a2, 2.5);
                assert!(acc.finish().max_abs_diff(&t.scale(2.5)).unwrap() < 1e-13);
            }
        }
    }

    #[test]
    fn parallel_sum_is_order_stable() {
        let g = ProductGrid::new(3, 2).unwrap();
        let ks = rectangles_below(2, 1);
        let run = || {
            accumulate_parallel(g, &ks, |k, acc| {
                acc.add(k.i1, Atom::Haar, k.i2, Atom::Avg, 1.0 + k.i1.index as f64);
                Ok(())
            })
            .unwrap()
        };
        assert_eq!(run().digest(), run().digest());
    }
}
