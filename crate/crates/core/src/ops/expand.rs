//! Paraproduct decomposition of a pointwise product `b f`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::grid::{DyadicInterval, DyadicRectangle, ProductGrid};

use super::atoms::{accumulate_parallel, pair, Atom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionMode {
    /// Expand in `x₁` only.
    Param1,
    /// Expand in `x₂` only.
    Param2,
    BiParameter,
}

/// The role of one parameter in a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    /// `⟨b,h_I⟩⟨f,h_I⟩ 1_I/|I|`.
    Both,
    /// `⟨b,h_I⟩⟨f⟩_I h_I`.
    SymbolHaar,
    /// `⟨b⟩_I⟨f,h_I⟩ h_I`.
    InputHaar,
    /// `⟨b⟩⟨f⟩` over the whole interval.
    Root,
    /// `⟨b⟩_J⟨f⟩_J 1_J` over the leaves: the parameter is not expanded.
    Leaf,
}

impl Class {
    fn from_index(j: u8) -> Class {
        match j {
            1 => Class::Both,
            2 => Class::SymbolHaar,
            _ => Class::InputHaar,
        }
    }

    /// Atoms for `(b, f, output)`.
    fn atoms(self) -> [Atom; 3] {
        match self {
            Class::Both => [Atom::Haar, Atom::Haar, Atom::Avg],
            Class::SymbolHaar => [Atom::Haar, Atom::Avg, Atom::Haar],
            Class::InputHaar => [Atom::Avg, Atom::Haar, Atom::Haar],
            Class::Root | Class::Leaf => [Atom::Avg, Atom::Avg, Atom::Box],
        }
    }

    fn intervals(self, depth: u32) -> Vec<DyadicInterval> {
        let levels = match self {
            Class::Root => 0..=0,
            Class::Leaf => depth..=depth,
            _ if depth == 0 => return Vec::new(),
            _ => 0..=depth - 1,
        };
        levels
            .flat_map(|l| (0..1u32 << l).map(move |m| DyadicInterval { level: l, index: m }))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    /// `(j₁, j₂)` with `0` for a parameter that is not expanded.
    pub index: [u8; 2],
    pub value: GridFunction,
}

/// `b f = Σ terms + boundary`.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub terms: Vec<ExpansionTerm>,
    /// The terms carrying the full averages `⟨b⟩⟨f⟩` over `[0,1)` in some parameter.
    pub boundary: GridFunction,
}

impl Expansion {
    pub fn term(&self, index: [u8; 2]) -> Option<&GridFunction> {
        self.terms.iter().find(|t| t.index == index).map(|t| &t.value)
    }

    pub fn sum(&self) -> GridFunction {
        self.terms.iter().fold(self.boundary.clone(), |acc, t| &acc + &t.value)
    }
}

fn term(grid: ProductGrid, bs: &Pyramid, fs: &Pyramid, c: [Class; 2]) -> Result<GridFunction> {
    let (a1, a2) = (c[0].atoms(), c[1].atoms());
    let rects: Vec<DyadicRectangle> = c[0]
        .intervals(grid.n1)
        .into_iter()
        .flat_map(|i1| c[1].intervals(grid.n2).into_iter().map(move |i2| DyadicRectangle::new(i1, i2)))
        .collect();
    accumulate_parallel(grid, &rects, |&k, acc| {
        let v = pair(bs, k.i1, a1[0], k.i2, a2[0]) * pair(fs, k.i1, a1[1], k.i2, a2[1]);
        if v != 0.0 {
            acc.add(k.i1, a1[2], k.i2, a2[2], v);
        }
        Ok(())
    })
}

/// Three terms `Π_j` for a one-parameter expansion, nine terms `Π_{j₁,j₂}` for
/// the bi-parameter one; the index convention follows [`super::full::SymbolParaproduct::expansion_type`].
pub fn expand_product(b: &GridFunction, f: &GridFunction, mode: ExpansionMode) -> Result<Expansion> {
    let grid = b.grid();
    grid.check_same(f.grid())?;
    let (bs, fs) = (integral_pyramid(b), integral_pyramid(f));
    let expanded = [1u8, 2, 3];
    let (indices, boundary): (Vec<[u8; 2]>, Vec<[Class; 2]>) = match mode {
        ExpansionMode::Param1 => (expanded.map(|j| [j, 0]).to_vec(), vec![[Class::Root, Class::Leaf]]),
        ExpansionMode::Param2 => (expanded.map(|j| [0, j]).to_vec(), vec![[Class::Leaf, Class::Root]]),
        ExpansionMode::BiParameter => {
            let all = [Class::Both, Class::SymbolHaar, Class::InputHaar, Class::Root];
            let boundary = all
                .iter()
                .flat_map(|&x| all.iter().map(move |&y| [x, y]))
                .filter(|c| c.contains(&Class::Root))
                .collect();
            (expanded.iter().flat_map(|&x| expanded.map(|y| [x, y])).collect(), boundary)
        }
    };
    let class = |j: u8| if j == 0 { Class::Leaf } else { Class::from_index(j) };
    let terms = indices
        .into_iter()
        .map(|index| Ok(ExpansionTerm { index, value: term(grid, &bs, &fs, [class(index[0]), class(index[1])])? }))
        .collect::<Result<Vec<_>>>()?;
    let mut rest = GridFunction::zeros(grid);
    for c in boundary {
        rest = &rest + &term(grid, &bs, &fs, c)?;
    }
    Ok(Expansion { terms, boundary: rest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::full::SymbolParaproduct;
    use crate::rng::uniform_function;

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 2).unwrap()
    }

    #[test]
    fn sums_reproduce_product() {
        let g = grid();
        let (b, f) = (uniform_function(g, 1), uniform_function(g, 2));
        let bf = &b * &f;
        for mode in [ExpansionMode::Param1, ExpansionMode::Param2, ExpansionMode::BiParameter] {
            let e = expand_product(&b, &f, mode).unwrap();
            let want = if mode == ExpansionMode::BiParameter { 9 } else { 3 };
            assert_eq!(e.terms.len(), want);
            assert!(e.sum().max_abs_diff(&bf).unwrap() < 1e-12, "{mode:?}");
        }
    }

    #[test]
    fn constant_symbol_keeps_average_terms() {
        let g = grid();
        let f = uniform_function(g, 3);
        let e = expand_product(&GridFunction::constant(g, 2.0), &f, ExpansionMode::BiParameter).unwrap();
        for t in &e.terms {
            if t.index != [3, 3] {
                assert!(t.value.max_abs() < 1e-13, "{:?}", t.index);
            }
        }
        let kept = &e.boundary + e.term([3, 3]).unwrap();
        assert!(kept.max_abs_diff(&f.scale(2.0)).unwrap() < 1e-12);
    }

    #[test]
    fn terms_agree_with_symbol_paraproducts() {
        let g = grid();
        let (b, f) = (uniform_function(g, 4), uniform_function(g, 5));
        let e = expand_product(&b, &f, ExpansionMode::BiParameter).unwrap();
        for j in [[1, 1], [1, 2], [2, 3], [3, 1]] {
            let p = SymbolParaproduct::expansion_type(b.clone(), j).unwrap();
            let direct = p.apply(std::slice::from_ref(&f)).unwrap();
            assert!(direct.max_abs_diff(e.term(j).unwrap()).unwrap() < 1e-12, "{j:?}");
        }
    }
}
