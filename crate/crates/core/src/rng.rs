//! Seeded randomness. Every random object in the crate is a pure function of a `u64` seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::function::GridFunction;
use crate::grid::ProductGrid;
use crate::haar::{haar_inverse, HaarCoefficients};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; a cheap bijective hash on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for the `index`-th sub-task of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Maps a hash to `[-1, 1]`.
pub fn unit_symmetric(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Independent uniform cell values in `[-1, 1)`.
pub fn uniform_function(grid: ProductGrid, seed: u64) -> GridFunction {
    let mut r = rng(seed);
    GridFunction::from_fn(grid, |_, _| r.gen_range(-1.0..1.0))
}

/// Uniform cell values in `[lo, hi)`.
pub fn uniform_positive(grid: ProductGrid, lo: f64, hi: f64, seed: u64) -> GridFunction {
    let mut r = rng(seed);
    GridFunction::from_fn(grid, |_, _| r.gen_range(lo..hi))
}

/// A random function whose Haar coefficients `⟨f, h_R⟩` are uniform in `[-1,1]`
/// scaled by `decay^{level₁+level₂}`; only bi-cancellative terms when `cancellative` is set.
pub fn random_haar_function(grid: ProductGrid, decay: f64, cancellative: bool, seed: u64) -> GridFunction {
    let mut r = rng(seed);
    let mut c = HaarCoefficients::zeros(grid);
    let n2 = grid.n2;
    let cols = grid.cols();
    let mut data = vec![0.0; grid.cell_count()];
    for (k, slot) in data.iter_mut().enumerate() {
        let (b1, b2) = (k >> n2, k & (cols - 1));
        if cancellative && (b1 == 0 || b2 == 0) {
            continue;
        }
        let level = |b: usize| if b == 0 { 0 } else { usize::BITS - 1 - b.leading_zeros() };
        *slot = r.gen_range(-1.0..1.0) * decay.powi((level(b1) + level(b2)) as i32);
    }
    for (k, v) in data.into_iter().enumerate() {
        let (b1, b2) = (k >> n2, k & (cols - 1));
        c.set(crate::haar::Basis1::from_index(b1), crate::haar::Basis1::from_index(b2), v);
    }
    haar_inverse(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let g = ProductGrid::new(3, 3).unwrap();
        assert_eq!(uniform_function(g, 9), uniform_function(g, 9));
        assert_ne!(uniform_function(g, 9), uniform_function(g, 10));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn unit_symmetric_range() {
        for k in 0..1000u64 {
            let u = unit_symmetric(splitmix64(k));
            assert!((-1.0..=1.0).contains(&u));
        }
    }

    #[test]
    fn cancellative_functions_have_zero_marginals() {
        let g = ProductGrid::new(3, 4).unwrap();
        let f = random_haar_function(g, 0.7, true, 5);
        for c1 in 0..g.rows() {
            assert!(f.row(c1).values().iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
