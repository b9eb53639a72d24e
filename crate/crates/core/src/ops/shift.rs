use crate::error::{Error, Result};
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::grid::{DyadicRectangle, Param, ProductGrid};

use super::atoms::{accumulate_parallel, descendant, pair, rectangles_below, Atom};
use super::coeffs::{CappedCoefficients, CoeffKey, CoeffRule};
use super::{check_inputs, swap_perm, MultilinearOperator};

/// An `n`-linear bi-parameter dyadic shift `S_k`.
///
/// Slot `i` (zero-based, `0..=n`, the last one being the output) carries
/// `h̃_{I¹} ⊗ h̃_{I²}` with `kinds[i]` and `R_i^{(k_i)} = K`.
#[derive(Debug, Clone)]
pub struct ShiftSpec {
    grid: ProductGrid,
    complexities: Vec<[u32; 2]>,
    kinds: Vec<[Atom; 2]>,
    coeffs: CappedCoefficients,
}

impl ShiftSpec {
    pub fn new(
        grid: ProductGrid,
        complexities: Vec<[u32; 2]>,
        kinds: Vec<[Atom; 2]>,
        rule: CoeffRule,
    ) -> Result<Self> {
        if complexities.len() < 2 || kinds.len() != complexities.len() {
            return Err(Error::Arity { expected: complexities.len(), found: kinds.len() });
        }
        for param in [Param::One, Param::Two] {
            let m = param.index();
            if kinds.iter().any(|k| !matches!(k[m], Atom::Haar | Atom::Haar0)) {
                return Err(Error::InvalidSlots("shift slots carry h or h0 only".into()));
            }
            let cancellative = kinds.iter().filter(|k| k[m] == Atom::Haar).count();
            if cancellative < 2 {
                return Err(Error::InvalidSlots(format!(
                    "parameter {} needs two cancellative slots, found {cancellative}",
                    m + 1
                )));
            }
            let kmax = complexities.iter().map(|k| k[m]).max().unwrap_or(0);
            if kmax >= grid.depth(param) {
                return Err(Error::InvalidComplexity(format!(
                    "complexity {kmax} does not fit depth {} in parameter {}",
                    grid.depth(param),
                    m + 1
                )));
            }
        }
        let spec = ShiftSpec { grid, complexities, kinds, coeffs: CappedCoefficients::new(rule)? };
        spec.coeffs.validate_table(|key| spec.admissible_cap(key))?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.complexities.len() - 1
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    pub fn complexities(&self) -> &[[u32; 2]] {
        &self.complexities
    }

    pub fn kinds(&self) -> &[[Atom; 2]] {
        &self.kinds
    }

    pub fn max_complexity(&self) -> u32 {
        self.complexities.iter().flat_map(|k| k.iter().copied()).max().unwrap_or(0)
    }

    /// `Π|R_i|^{1/2} / |K|^n`.
    pub fn cap(&self, k: DyadicRectangle) -> f64 {
        let n = self.n() as f64;
        let sum: u32 = self.complexities.iter().map(|c| c[0] + c[1]).sum();
        k.measure().powf((1.0 - n) / 2.0) * (-(sum as f64) / 2.0).exp2()
    }

    fn admissible_cap(&self, key: &CoeffKey) -> Option<f64> {
        let (l1, l2) = key.k.levels();
        let fits = key.offsets.len() == self.complexities.len()
            && self.top(Param::One) >= l1 as i64
            && self.top(Param::Two) >= l2 as i64
            && key.offsets.iter().zip(&self.complexities).all(|(t, c)| t[0] >> c[0] == 0 && t[1] >> c[1] == 0);
        fits.then(|| self.cap(key.k))
    }

    /// Deepest admissible level of `K` in `param`.
    fn top(&self, param: Param) -> i64 {
        let m = param.index();
        let kmax = self.complexities.iter().map(|k| k[m]).max().unwrap_or(0);
        self.grid.depth(param) as i64 - 1 - kmax as i64
    }

    pub fn coefficient(&self, key: &CoeffKey) -> Result<f64> {
        self.coeffs.value(key, self.cap(key.k))
    }

    /// The outer rectangles `K` of the sum.
    pub fn outer_rectangles(&self) -> Vec<DyadicRectangle> {
        rectangles_below(self.top(Param::One), self.top(Param::Two))
    }

    /// The `(j₁, j₂)`-adjoint: slot `j₁` trades its parameter-1 data with the
    /// output slot and `j₂` its parameter-2 data; `0` leaves a parameter alone.
    pub fn adjoint(&self, j1: usize, j2: usize) -> Result<ShiftSpec> {
        let n = self.n();
        let perm = [swap_perm(n, j1)?, swap_perm(n, j2)?];
        let pick = |s: usize| -> ([u32; 2], [Atom; 2]) {
            let (a, b) = (perm[0][s], perm[1][s]);
            (
                [self.complexities[a][0], self.complexities[b][1]],
                [self.kinds[a][0], self.kinds[b][1]],
            )
        };
        let (complexities, kinds) = (0..=n).map(pick).unzip();
        Ok(ShiftSpec { grid: self.grid, complexities, kinds, coeffs: self.coeffs.permuted(perm) })
    }

    pub fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        check_inputs(self.grid, self.n(), fs)?;
        let sums: Vec<Pyramid> = fs.iter().map(integral_pyramid).collect();
        let n = self.n();
        let radix: Vec<usize> = self.complexities.iter().map(|c| 1usize << (c[0] + c[1])).collect();
        let ks = self.outer_rectangles();
        accumulate_parallel(self.grid, &ks, |&k, acc| {
            let at = |slot: usize, d: usize| {
                let [k1, k2] = self.complexities[slot];
                let t = [(d >> k2) as u32, (d & ((1 << k2) - 1)) as u32];
                (t, descendant(k.i1, k1, t[0]), descendant(k.i2, k2, t[1]))
            };
            // ⟨f_i, h̃_{R_i}⟩ for every admissible R_i
            let pairings: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..radix[i])
                        .map(|d| {
                            let (_, j1, j2) = at(i, d);
                            pair(&sums[i], j1, self.kinds[i][0], j2, self.kinds[i][1])
                        })
                        .collect()
                })
                .collect();
            if pairings.iter().any(|p| p.iter().all(|&v| v == 0.0)) {
                return Ok(());
            }
            let cap = self.cap(k);
            let mut digits = vec![0usize; n + 1];
            let mut key = CoeffKey { k, offsets: vec![[0, 0]; n + 1] };
            loop {
                let prod: f64 = (0..n).map(|i| pairings[i][digits[i]]).product();
                if prod != 0.0 {
                    for (slot, &d) in digits.iter().enumerate() {
                        key.offsets[slot] = at(slot, d).0;
                    }
                    let a = self.coeffs.value(&key, cap)?;
                    let (_, j1, j2) = at(n, digits[n]);
                    acc.add(j1, self.kinds[n][0], j2, self.kinds[n][1], a * prod);
                }
                // mixed-radix increment over all slots
                let mut s = 0;
                loop {
                    if s > n {
                        return Ok(());
                    }
                    digits[s] += 1;
                    if digits[s] < radix[s] {
                        break;
                    }
                    digits[s] = 0;
                    s += 1;
                }
            }
        })
    }
}

impl MultilinearOperator for ShiftSpec {
    fn arity(&self) -> usize {
        self.n()
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        ShiftSpec::apply(self, fs)
    }

    fn label(&self) -> String {
        format!("shift(n={}, k={:?})", self.n(), self.complexities)
    }
}

/// The one-term shift `Σ_K ⟨f, h_K⟩ h_K`.
pub fn identity_like_shift(grid: ProductGrid) -> ShiftSpec {
    ShiftSpec::new(grid, vec![[0, 0]; 2], vec![[Atom::Haar; 2]; 2], CoeffRule::Saturated(1.0))
        .expect("identity-like shift is admissible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{haar_forward, haar_inverse, haar_rect, HaarCoefficients};
    use crate::rng::uniform_function;

    #[test]
    fn identity_like_projects_onto_haar_rectangles() {
        let g = ProductGrid::new(3, 2).unwrap();
        let s = identity_like_shift(g);
        let r = DyadicRectangle::from_parts(1, 1, 1, 0).unwrap();
        let h = haar_rect(g, r);
        assert!(s.apply(std::slice::from_ref(&h)).unwrap().max_abs_diff(&h).unwrap() < 1e-13);

        let f = uniform_function(g, 8);
        let c = haar_forward(&f);
        let mut bi = HaarCoefficients::zeros(g);
        for (b1, b2, v) in c.iter() {
            if b1.index() > 0 && b2.index() > 0 {
                bi.set(b1, b2, v);
            }
        }
        let out = s.apply(&[f]).unwrap();
        assert!(out.max_abs_diff(&haar_inverse(&bi)).unwrap() < 1e-13);
    }

    #[test]
    fn constant_in_cancellative_slot_gives_zero() {
        let g = ProductGrid::new(3, 3).unwrap();
        let kinds = vec![[Atom::Haar, Atom::Haar0], [Atom::Haar, Atom::Haar], [Atom::Haar0, Atom::Haar]];
        let s = ShiftSpec::new(g, vec![[1, 0], [0, 1], [0, 0]], kinds, CoeffRule::Uniform { seed: 1 })
            .unwrap();
        let one = GridFunction::constant(g, 1.0);
        let out = s.apply(&[one, uniform_function(g, 2)]).unwrap();
        assert!(out.max_abs() < 1e-14);
    }

    #[test]
    fn gates() {
        let g = ProductGrid::new(2, 2).unwrap();
        let kinds = vec![[Atom::Haar; 2], [Atom::Haar0, Atom::Haar]];
        assert!(matches!(
            ShiftSpec::new(g, vec![[0, 0]; 2], kinds, CoeffRule::zero()),
            Err(Error::InvalidSlots(_))
        ));
        assert!(matches!(
            ShiftSpec::new(g, vec![[2, 0], [0, 0]], vec![[Atom::Haar; 2]; 2], CoeffRule::zero()),
            Err(Error::InvalidComplexity(_))
        ));
        let key = CoeffKey { k: DyadicRectangle::ROOT, offsets: vec![[0, 0]; 2] };
        let over = CoeffRule::Table([(key.clone(), 1.5)].into_iter().collect());
        assert!(matches!(
            ShiftSpec::new(g, vec![[0, 0]; 2], vec![[Atom::Haar; 2]; 2], over),
            Err(Error::InvalidCoefficients(_))
        ));
        let ok = CoeffRule::Table([(key, 1.0)].into_iter().collect());
        assert!(ShiftSpec::new(g, vec![[0, 0]; 2], vec![[Atom::Haar; 2]; 2], ok).is_ok());
    }
}
