//! Dyadic maximal functions over rectangles.

use crate::error::{Error, Result};
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::weights::Weight;

/// `M_𝒟(f₁, …, f_n)(x) = max_{R ∋ x} Π_i ⟨|f_i|⟩_R`.
pub fn maximal_multilinear(fs: &[GridFunction]) -> Result<GridFunction> {
    let first = fs.first().ok_or(Error::Arity { expected: 1, found: 0 })?;
    let grid = first.grid();
    let sums = fs
        .iter()
        .map(|f| {
            grid.check_same(f.grid())?;
            Ok(integral_pyramid(&f.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let products = Pyramid::from_fn(grid, |r| {
        let m = r.measure();
        sums.iter().map(|s| s.get(r) / m).product()
    });
    Ok(products.synthesize_max())
}

/// `M^μ_𝒟 f(x) = max_{R ∋ x} μ(R)^{-1} ∫_R |f| dμ`.
pub fn maximal_weighted(f: &GridFunction, mu: &Weight) -> Result<GridFunction> {
    let grid = f.grid();
    grid.check_same(mu.grid())?;
    let num = integral_pyramid(&(&f.abs() * mu.function()));
    let den = integral_pyramid(mu.function());
    Ok(Pyramid::from_fn(grid, |r| num.get(r) / den.get(r)).synthesize_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ProductGrid;
    use crate::rng::{uniform_function, uniform_positive};

    #[test]
    fn constants_are_fixed() {
        let g = ProductGrid::new(3, 2).unwrap();
        let one = GridFunction::constant(g, 1.0);
        let m = maximal_multilinear(&[one.clone(), one.clone()]).unwrap();
        assert!(m.max_abs_diff(&one).unwrap() < 1e-15);
        let mu = Weight::new(uniform_positive(g, 0.5, 2.0, 1)).unwrap();
        let c = GridFunction::constant(g, -2.0);
        assert!(maximal_weighted(&c, &mu).unwrap().max_abs_diff(&c.abs()).unwrap() < 1e-14);
    }

    #[test]
    fn leaf_indicator_brute_force() {
        let g = ProductGrid::new(2, 2).unwrap();
        let mut f1 = GridFunction::zeros(g);
        f1.values_mut()[g.cell(1, 2)] = 1.0;
        let f2 = GridFunction::constant(g, 1.0);
        let m = maximal_multilinear(&[f1.clone(), f2]).unwrap();
        for c in 0..g.cell_count() {
            let best = g
                .rectangles()
                .filter(|r| g.cells_of(*r).any(|x| x == c))
                .map(|r| f1.average(r))
                .fold(0.0, f64::max);
            assert!((m.values()[c] - best).abs() < 1e-15);
        }
        // the leaf itself, then its half-rectangles
        assert_eq!(m.at(1, 2), 1.0);
        assert_eq!(m.at(0, 2), 0.5);
        assert_eq!(m.at(3, 3), 0.125);
    }

    #[test]
    fn dominates_absolute_value() {
        let g = ProductGrid::new(3, 3).unwrap();
        let f = uniform_function(g, 4);
        let m = maximal_multilinear(std::slice::from_ref(&f)).unwrap();
        assert!(m.values().iter().zip(f.values()).all(|(a, b)| *a >= b.abs() - 1e-15));
    }
}
