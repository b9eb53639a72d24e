//! Dyadic square functions and the multilinear families `A_{1,k}`, `A_{2,k}`, `A_{3,k}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::{DyadicInterval, DyadicRectangle, Param};
use crate::haar::{
    conditional_expectation, level_difference, martingale, Martingale,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SquareKind {
    /// `S_𝒟 f = (Σ_R |Δ_R f|²)^{1/2}`.
    Sd,
    /// `S¹ f = (Σ_{I¹} |Δ¹_{I¹} f|²)^{1/2}`.
    S1,
    /// `S² f = (Σ_{I²} |Δ²_{I²} f|²)^{1/2}`.
    S2,
}

pub fn square_function(f: &GridFunction, kind: SquareKind) -> GridFunction {
    let grid = f.grid();
    let mut acc = GridFunction::zeros(grid);
    let mut add_sq = |d: GridFunction| {
        for (a, v) in acc.values_mut().iter_mut().zip(d.values()) {
            *a += v * v;
        }
    };
    match kind {
        SquareKind::Sd => {
            for l1 in 0..grid.n1 {
                let g = level_difference(f, Param::One, l1);
                for l2 in 0..grid.n2 {
                    add_sq(level_difference(&g, Param::Two, l2));
                }
            }
        }
        SquareKind::S1 => (0..grid.n1).for_each(|l| add_sq(level_difference(f, Param::One, l))),
        SquareKind::S2 => (0..grid.n2).for_each(|l| add_sq(level_difference(f, Param::Two, l))),
    }
    acc.map(f64::sqrt)
}

/// `(Σ_K |Δ_{K,k} f|²)^{1/2}` summed block by block.
///
/// On the unit square the levels coarser than `k` have no parent `K` inside
/// the grid; they are attached to the root as the blocks `Δ_{[0,1)², (l₁,l₂)}`.
pub fn block_square_function(f: &GridFunction, k: (u32, u32)) -> Result<GridFunction> {
    let grid = f.grid();
    let mut acc = vec![0.0; grid.cell_count()];
    let mut add_sq = |d: GridFunction| {
        for (a, v) in acc.iter_mut().zip(d.values()) {
            *a += v * v;
        }
    };
    // blocks per parameter: (K, offset) pairs covering every level exactly once
    let blocks = |param: Param, k: u32| -> Vec<(DyadicInterval, u32)> {
        let n = grid.depth(param);
        let mut out: Vec<(DyadicInterval, u32)> =
            (0..k.min(n)).map(|l| (DyadicInterval::ROOT, l)).collect();
        if k < n {
            for j in 0..n - k {
                for m in 0..1u32 << j {
                    out.push((DyadicInterval { level: j, index: m }, k));
                }
            }
        }
        out
    };
    for (i1, k1) in blocks(Param::One, k.0) {
        for &(i2, k2) in &blocks(Param::Two, k.1) {
            add_sq(martingale(f, Martingale::Block(DyadicRectangle::new(i1, i2), (k1, k2)))?);
        }
    }
    Ok(GridFunction::from_raw(grid, acc.into_iter().map(f64::sqrt).collect()))
}

/// Which families of the multilinear square functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AFamily {
    /// `(Σ_K Π_i ⟨|G_i|⟩_K² 1_K)^{1/2}`, one block per parameter.
    A1,
    /// `(Σ_{K^o} (Σ_{K^i} Π_i ⟨|G_i|⟩_K 1_K)²)^{1/2}`: one block in the outer
    /// parameter `outer`, two in the inner one.
    A2 { outer: u8 },
    /// `Σ_K Π_i ⟨|G_i|⟩_K 1_K`, two blocks per parameter.
    A3,
}

/// Per slot, the block offset applied in each parameter (`None` for no block).
///
/// `G_i = Δ¹_{K¹,k¹} Δ²_{K²,k²} f_i` with the absent factors omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAssignment(pub Vec<[Option<u32>; 2]>);

impl BlockAssignment {
    fn count(&self, param: Param) -> usize {
        self.0.iter().filter(|s| s[param.index()].is_some()).count()
    }

    fn max_offset(&self, param: Param) -> Option<u32> {
        self.0.iter().filter_map(|s| s[param.index()]).max()
    }

    pub fn validate(&self, family: AFamily) -> Result<()> {
        let (c1, c2) = (self.count(Param::One), self.count(Param::Two));
        let ok = match family {
            AFamily::A1 => c1 == 1 && c2 == 1,
            AFamily::A2 { outer: 1 } => c1 == 1 && c2 == 2,
            AFamily::A2 { outer: 2 } => c2 == 1 && c1 == 2,
            AFamily::A2 { outer } => {
                return Err(Error::InvalidSlots(format!("outer parameter {outer} is not 1 or 2")))
            }
            AFamily::A3 => c1 == 2 && c2 == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSlots(format!(
                "{family:?} does not admit {c1} blocks in parameter 1 and {c2} in parameter 2"
            )))
        }
    }
}

pub fn a_square_function(
    family: AFamily,
    blocks: &BlockAssignment,
    fs: &[GridFunction],
) -> Result<GridFunction> {
    if fs.is_empty() || blocks.0.len() != fs.len() {
        return Err(Error::Arity { expected: blocks.0.len(), found: fs.len() });
    }
    blocks.validate(family)?;
    let grid = fs[0].grid();
    for f in fs {
        grid.check_same(f.grid())?;
    }
    let top = |param: Param| -> Result<i64> {
        let n = grid.depth(param) as i64;
        let k = blocks.max_offset(param).map_or(0, |k| k as i64 + 1);
        let top = n - k;
        if top < 0 {
            return Err(Error::InvalidComplexity(format!(
                "block offset exceeds depth {n} in parameter {}",
                param.index() + 1
            )));
        }
        Ok(if blocks.max_offset(param).is_some() { top } else { n })
    };
    let (t1, t2) = (top(Param::One)?, top(Param::Two)?);
    let abs: Vec<GridFunction> = fs.iter().map(GridFunction::abs).collect();

    // P_{j₁,j₂} = Σ_{K at levels (j₁,j₂)} Π_i ⟨|G_i|⟩_K 1_K
    let term = |j1: u32, j2: u32| -> GridFunction {
        let mut prod = GridFunction::constant(grid, 1.0);
        for (i, f) in fs.iter().enumerate() {
            let [b1, b2] = blocks.0[i];
            let g = match (b1, b2) {
                (None, None) => abs[i].clone(),
                _ => {
                    let mut g = f.clone();
                    if let Some(k) = b1 {
                        g = level_difference(&g, Param::One, j1 + k);
                    }
                    if let Some(k) = b2 {
                        g = level_difference(&g, Param::Two, j2 + k);
                    }
                    g.abs()
                }
            };
            prod = &prod * &conditional_expectation(&g, j1, j2);
        }
        prod
    };

    let mut out = vec![0.0; grid.cell_count()];
    match family {
        AFamily::A1 | AFamily::A3 => {
            let square = family == AFamily::A1;
            for j1 in 0..=t1 as u32 {
                for j2 in 0..=t2 as u32 {
                    for (o, v) in out.iter_mut().zip(term(j1, j2).values()) {
                        *o += if square { v * v } else { *v };
                    }
                }
            }
            if square {
                out.iter_mut().for_each(|v| *v = v.sqrt());
            }
        }
        AFamily::A2 { outer } => {
            let (to, ti) = if outer == 1 { (t1, t2) } else { (t2, t1) };
            for jo in 0..=to as u32 {
                let mut inner = vec![0.0; grid.cell_count()];
                for ji in 0..=ti as u32 {
                    let (j1, j2) = if outer == 1 { (jo, ji) } else { (ji, jo) };
                    for (o, v) in inner.iter_mut().zip(term(j1, j2).values()) {
                        *o += v;
                    }
                }
                for (o, v) in out.iter_mut().zip(&inner) {
                    *o += v * v;
                }
            }
            out.iter_mut().for_each(|v| *v = v.sqrt());
        }
    }
    Ok(GridFunction::from_raw(grid, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ProductGrid;
    use crate::haar::haar_rect;
    use crate::rng::uniform_function;

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 3).unwrap()
    }

    #[test]
    fn single_term_and_constants() {
        let r = DyadicRectangle::from_parts(1, 0, 2, 3).unwrap();
        let h = haar_rect(grid(), r).scale(-3.0);
        let s = square_function(&h, SquareKind::Sd);
        assert!(s.max_abs_diff(&h.abs()).unwrap() < 1e-12);
        let one = GridFunction::constant(grid(), 1.0);
        for kind in [SquareKind::Sd, SquareKind::S1, SquareKind::S2] {
            assert!(square_function(&one, kind).max_abs() < 1e-14);
        }
    }

    #[test]
    fn block_partition_matches_sd() {
        let f = uniform_function(grid(), 2);
        let sd = square_function(&f, SquareKind::Sd);
        for k in [(0, 0), (1, 0), (2, 1), (3, 3)] {
            let b = block_square_function(&f, k).unwrap();
            assert!(b.max_abs_diff(&sd).unwrap() < 1e-12, "k = {k:?}");
        }
    }

    #[test]
    fn s1_matches_partial_differences() {
        let f = uniform_function(grid(), 3);
        let s1 = square_function(&f, SquareKind::S1);
        let mut acc = GridFunction::zeros(grid());
        for l in 0..3 {
            for m in 0..1u32 << l {
                let d = martingale(&f, Martingale::Partial(Param::One, DyadicInterval::new(l, m).unwrap()))
                    .unwrap();
                acc = &acc + &(&d * &d);
            }
        }
        assert!(s1.max_abs_diff(&acc.map(f64::sqrt)).unwrap() < 1e-12);
    }

    #[test]
    fn a1_brute_force() {
        let g = ProductGrid::new(2, 3).unwrap();
        let fs = [uniform_function(g, 1), uniform_function(g, 2)];
        let blocks = BlockAssignment(vec![[Some(1), None], [None, Some(0)]]);
        let out = a_square_function(AFamily::A1, &blocks, &fs).unwrap();
        let mut acc = GridFunction::zeros(g);
        for k in g.rectangles_up_to(0, 2) {
            let g1 = martingale(&fs[0], Martingale::PartialBlock(Param::One, k.i1, 1)).unwrap();
            let g2 = martingale(&fs[1], Martingale::PartialBlock(Param::Two, k.i2, 0)).unwrap();
            let v = g1.abs().average(k) * g2.abs().average(k);
            acc = &acc + &GridFunction::indicator(g, k).scale(v * v);
        }
        assert!(out.max_abs_diff(&acc.map(f64::sqrt)).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_wrong_assignment() {
        let fs = [uniform_function(grid(), 1), uniform_function(grid(), 2)];
        let blocks = BlockAssignment(vec![[Some(0), Some(0)], [Some(0), None]]);
        assert!(matches!(
            a_square_function(AFamily::A1, &blocks, &fs),
            Err(Error::InvalidSlots(_))
        ));
        let deep = BlockAssignment(vec![[Some(3), None], [None, Some(0)]]);
        assert!(matches!(
            a_square_function(AFamily::A1, &deep, &fs),
            Err(Error::InvalidComplexity(_))
        ));
    }
}
