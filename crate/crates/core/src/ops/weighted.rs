//! Paraproducts whose output averages are taken against a weight `η`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::function::{integral_pyramid, GridFunction, LineFunction};
use crate::grid::ProductGrid;
use crate::weights::Weight;

use super::atoms::{pair, Atom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightedVariant {
    /// `Σ_K ⟨b,h_K⟩⟨f,h_K⟩ η 1_K / η(K)`.
    Full,
    /// Symbol cancellative in `x₁` only; the output carries `h_{K²}` and the
    /// slice weight `x₁ ↦ ∫_{K²} η(x₁, ·)`.
    Mixed1,
    /// The same with the parameters exchanged.
    Mixed2,
    /// Symbol `h_K`, input `h_{K¹} ⊗ 1_{K²}/|K²|`, output as in `Mixed1`.
    DoubleMixed,
}

/// `Π_{b,η} f` defined through `⟨Π_{b,η} f, g⟩ = Σ_K β_K φ_K ⟨g⟩`-type weighted averages.
pub fn weighted_paraproduct(
    b: &GridFunction,
    eta: &Weight,
    f: &GridFunction,
    variant: WeightedVariant,
) -> Result<GridFunction> {
    let grid = b.grid();
    grid.check_same(eta.grid())?;
    grid.check_same(f.grid())?;
    match variant {
        WeightedVariant::Full => Ok(full(b, eta, f)),
        WeightedVariant::Mixed1 => Ok(mixed(b, eta.function(), f, [Atom::Haar, Atom::Avg], [Atom::Haar; 2])),
        WeightedVariant::DoubleMixed => {
            Ok(mixed(b, eta.function(), f, [Atom::Haar; 2], [Atom::Haar, Atom::Avg]))
        }
        WeightedVariant::Mixed2 => {
            let t = mixed(
                &b.transpose(),
                &eta.function().transpose(),
                &f.transpose(),
                [Atom::Haar, Atom::Avg],
                [Atom::Haar; 2],
            );
            Ok(t.transpose())
        }
    }
}

fn full(b: &GridFunction, eta: &Weight, f: &GridFunction) -> GridFunction {
    let grid = b.grid();
    let (bs, fs, es) = (integral_pyramid(b), integral_pyramid(f), integral_pyramid(eta));
    let mut boxes = crate::function::Pyramid::zeros(grid);
    for k in grid.haar_rectangles() {
        let c = pair(&bs, k.i1, Atom::Haar, k.i2, Atom::Haar) * pair(&fs, k.i1, Atom::Haar, k.i2, Atom::Haar);
        if c != 0.0 {
            boxes.add(k, c / es.get(k));
        }
    }
    &boxes.synthesize_boxes() * eta.function()
}

/// Output `Σ_K c_K 1_{K¹}(x₁) μ_{K²}(x₁) h_{K²}(x₂) / μ_{K²}(K¹)` with
/// `μ_{K²}(x₁) = ∫_{K²} η(x₁, z) dz` and `c_K = ⟨b, sym⟩⟨f, inp⟩`.
fn mixed(b: &GridFunction, eta: &GridFunction, f: &GridFunction, sym: [Atom; 2], inp: [Atom; 2]) -> GridFunction {
    let grid: ProductGrid = b.grid();
    let (bs, fs) = (integral_pyramid(b), integral_pyramid(f));
    let (d1, d2) = grid.depths();
    let mut out = vec![0.0; grid.cell_count()];
    for k in grid.haar_rectangles() {
        let c = pair(&bs, k.i1, sym[0], k.i2, sym[1]) * pair(&fs, k.i1, inp[0], k.i2, inp[1]);
        if c == 0.0 {
            continue;
        }
        let cols = k.i2.cell_range(d2);
        let rows = k.i1.cell_range(d1);
        let mu: Vec<f64> = rows
            .clone()
            .map(|c1| cols.clone().map(|c2| eta.at(c1, c2)).sum::<f64>() * grid.cell_measure() * grid.rows() as f64)
            .collect();
        let mass: f64 = mu.iter().sum::<f64>() / grid.rows() as f64;
        let h = LineFunction::haar(d2, k.i2);
        for (r, c1) in rows.enumerate() {
            let a = c * mu[r] / mass;
            for c2 in cols.clone() {
                out[grid.cell(c1, c2)] += a * h.values()[c2];
            }
        }
    }
    GridFunction::from_raw(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicRectangle;
    use crate::haar::haar_rect;
    use crate::ops::full::SymbolParaproduct;
    use crate::rng::{uniform_function, uniform_positive};

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 3).unwrap()
    }

    #[test]
    fn unit_weight_reduces_to_symbol_paraproduct() {
        let g = grid();
        let (b, f) = (uniform_function(g, 1), uniform_function(g, 2));
        let one = Weight::ones(g);
        let plain = SymbolParaproduct::expansion_type(b.clone(), [1, 1]).unwrap().apply(std::slice::from_ref(&f)).unwrap();
        let w = weighted_paraproduct(&b, &one, &f, WeightedVariant::Full).unwrap();
        assert!(w.max_abs_diff(&plain).unwrap() < 1e-12);
        // mixed-1 with η ≡ 1: symbol h ⊗ avg, input h ⊗ h, output avg ⊗ h
        let m = weighted_paraproduct(&b, &one, &f, WeightedVariant::Mixed1).unwrap();
        let direct = SymbolParaproduct::new(b.clone(), 1, [[0, 1], [1, 2]]).unwrap().apply(&[f]).unwrap();
        assert!(m.max_abs_diff(&direct).unwrap() < 1e-12);
    }

    #[test]
    fn constant_symbol_gives_zero() {
        let g = grid();
        let eta = Weight::new(uniform_positive(g, 0.5, 3.0, 3)).unwrap();
        let f = uniform_function(g, 4);
        for v in [WeightedVariant::Full, WeightedVariant::Mixed1, WeightedVariant::Mixed2, WeightedVariant::DoubleMixed] {
            let out = weighted_paraproduct(&GridFunction::constant(g, 5.0), &eta, &f, v).unwrap();
            assert!(out.max_abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn single_coefficient_symbol() {
        let g = grid();
        let k = DyadicRectangle::from_parts(1, 0, 1, 1).unwrap();
        let b = haar_rect(g, k);
        let f = uniform_function(g, 6);
        let eta = Weight::new(GridFunction::from_point_fn(g, |x1, _| if x1 < 0.5 { 1.0 } else { 3.0 })).unwrap();
        let out = weighted_paraproduct(&b, &eta, &f, WeightedVariant::Full).unwrap();
        let want = (&GridFunction::indicator(g, k) * eta.function()).scale(f.inner(&b).unwrap() / eta.measure(k));
        assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
    }
}
