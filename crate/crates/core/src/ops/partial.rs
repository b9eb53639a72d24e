use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::function::{integral_pyramid, GridFunction, Pyramid};
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};

use super::atoms::{accumulate_parallel, descendant, pair, rectangles_below, Atom};
use super::coeffs::{carleson_norm, CoeffKey, CoeffRule, CAP_SLACK};
use super::{check_inputs, swap_perm, MultilinearOperator};

type GroupKey = (DyadicInterval, Vec<u32>);

/// An `n`-linear partial paraproduct: a shift in one parameter and a
/// paraproduct in the other.
///
/// Internally the shift parameter is always the first one; when the
/// paraproduct sits in parameter 1 the inputs are transposed on the way in
/// and the output on the way out. Coefficient keys use the same internal
/// frame: `key.k.i1` is the shift interval `K^s`, `key.k.i2` the paraproduct
/// interval, and only `offsets[i][0]` is read.
#[derive(Debug, Clone)]
pub struct PartialParaproductSpec {
    grid: ProductGrid,
    paraproduct_param: Param,
    complexities: Vec<u32>,
    kinds: Vec<Atom>,
    /// Zero-based slot carrying `h_{K^p}`.
    slot: usize,
    /// `(K^s, (t_i))` to the sequence over `K^p`, indexed by `2^level + index`.
    groups: HashMap<GroupKey, Vec<f64>>,
}

impl PartialParaproductSpec {
    /// `paraproduct_slot` is one-based in `1..=n+1`.
    pub fn new(
        grid: ProductGrid,
        paraproduct_param: Param,
        complexities: Vec<u32>,
        kinds: Vec<Atom>,
        paraproduct_slot: usize,
        rule: CoeffRule,
    ) -> Result<Self> {
        let slots = complexities.len();
        if slots < 2 || kinds.len() != slots {
            return Err(Error::Arity { expected: slots, found: kinds.len() });
        }
        if kinds.iter().any(|k| !matches!(k, Atom::Haar | Atom::Haar0)) {
            return Err(Error::InvalidSlots("shift-parameter slots carry h or h0 only".into()));
        }
        let cancellative = kinds.iter().filter(|&&k| k == Atom::Haar).count();
        if cancellative < 2 {
            return Err(Error::InvalidSlots(format!(
                "the shift parameter needs two cancellative slots, found {cancellative}"
            )));
        }
        if paraproduct_slot == 0 || paraproduct_slot > slots {
            return Err(Error::InvalidSlots(format!(
                "paraproduct slot {paraproduct_slot} outside 1..={slots}"
            )));
        }
        rule.check_scale()?;
        let mut spec = PartialParaproductSpec {
            grid,
            paraproduct_param,
            complexities,
            kinds,
            slot: paraproduct_slot - 1,
            groups: HashMap::new(),
        };
        let cg = spec.internal_grid();
        let kmax = spec.max_complexity();
        if kmax >= cg.n1 {
            return Err(Error::InvalidComplexity(format!(
                "complexity {kmax} does not fit depth {} of the shift parameter",
                cg.n1
            )));
        }
        spec.groups = spec.build_groups(&rule)?;
        Ok(spec)
    }

    fn internal_grid(&self) -> ProductGrid {
        match self.paraproduct_param {
            Param::Two => self.grid,
            Param::One => ProductGrid { n1: self.grid.n2, n2: self.grid.n1 },
        }
    }

    pub fn n(&self) -> usize {
        self.complexities.len() - 1
    }

    pub fn grid(&self) -> ProductGrid {
        self.grid
    }

    pub fn complexities(&self) -> &[u32] {
        &self.complexities
    }

    pub fn kinds(&self) -> &[Atom] {
        &self.kinds
    }

    pub fn paraproduct_param(&self) -> Param {
        self.paraproduct_param
    }

    /// One-based slot carrying `h_{K^p}`.
    pub fn paraproduct_slot(&self) -> usize {
        self.slot + 1
    }

    pub fn max_complexity(&self) -> u32 {
        self.complexities.iter().copied().max().unwrap_or(0)
    }

    /// `Π|I_i|^{1/2} / |K^s|^n`.
    pub fn cap(&self, ks: DyadicInterval) -> f64 {
        let n = self.n() as f64;
        let sum: u32 = self.complexities.iter().sum();
        ks.side_length().powf((1.0 - n) / 2.0) * (-(sum as f64) / 2.0).exp2()
    }

    fn top(&self) -> i64 {
        self.internal_grid().n1 as i64 - 1 - self.max_complexity() as i64
    }

    fn offset_tuples(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new()];
        for &k in &self.complexities {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (0..1u32 << k).map(move |x| {
                        let mut t = t.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
        }
        out
    }

    fn build_groups(&self, rule: &CoeffRule) -> Result<HashMap<GroupKey, Vec<f64>>> {
        let cg = self.internal_grid();
        let len = 1usize << cg.n2;
        let mut groups = HashMap::new();
        let tuples = self.offset_tuples();
        let mut table_hits = 0usize;
        for l in 0..=self.top() as u32 {
            for m in 0..1u32 << l {
                let ks = DyadicInterval { level: l, index: m };
                let cap = self.cap(ks);
                for t in &tuples {
                    let mut seq = vec![0.0; len];
                    for (b, slot) in seq.iter_mut().enumerate().skip(1) {
                        let kp = interval_of(b);
                        let key = CoeffKey {
                            k: DyadicRectangle::new(ks, kp),
                            offsets: t.iter().map(|&x| [x, 0]).collect(),
                        };
                        *slot = match rule {
                            CoeffRule::Saturated(_) => kp.side_length().sqrt(),
                            CoeffRule::Uniform { seed } => {
                                crate::rng::unit_symmetric(key.hash_with(*seed)) * kp.side_length().sqrt()
                            }
                            CoeffRule::Table(tab) => match tab.get(&key) {
                                Some(&v) => {
                                    table_hits += 1;
                                    v
                                }
                                None => 0.0,
                            },
                            CoeffRule::Custom(f) => f(&key),
                        };
                    }
                    if seq.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidCoefficients(format!(
                            "non-finite coefficient in group {ks} {t:?}"
                        )));
                    }
                    let norm = carleson_norm(&seq);
                    match rule {
                        CoeffRule::Saturated(s) => scale(&mut seq, s * cap / norm),
                        CoeffRule::Uniform { .. } if norm > 0.0 => scale(&mut seq, cap / norm),
                        CoeffRule::Uniform { .. } => {}
                        CoeffRule::Table(_) | CoeffRule::Custom(_) => {
                            if norm > cap * CAP_SLACK {
                                return Err(Error::InvalidCoefficients(format!(
                                    "BMO norm {norm} of the sequence at {ks} {t:?} exceeds the cap {cap}"
                                )));
                            }
                        }
                    }
                    groups.insert((ks, t.clone()), seq);
                }
            }
        }
        if let CoeffRule::Table(tab) = rule {
            if table_hits != tab.len() {
                return Err(Error::InvalidCoefficients(format!(
                    "{} table entries do not index an admissible (K, I) tuple",
                    tab.len() - table_hits
                )));
            }
        }
        Ok(groups)
    }

    /// The coefficient sequence over the paraproduct intervals for `(K^s, (t_i))`.
    pub fn sequence(&self, ks: DyadicInterval, offsets: &[u32]) -> Option<&[f64]> {
        self.groups.get(&(ks, offsets.to_vec())).map(Vec::as_slice)
    }

    /// The largest ratio of a sequence's BMO norm to its cap.
    pub fn normalization_ratio(&self) -> f64 {
        self.groups
            .iter()
            .map(|((ks, _), seq)| carleson_norm(seq) / self.cap(*ks))
            .fold(0.0, f64::max)
    }

    /// The `(j₁, j₂)`-adjoint, `j₁` acting in the shift parameter and `j₂` in the
    /// paraproduct parameter; `0` leaves a parameter alone.
    pub fn adjoint(&self, j1: usize, j2: usize) -> Result<PartialParaproductSpec> {
        let n = self.n();
        let p1 = swap_perm(n, j1)?;
        let p2 = swap_perm(n, j2)?;
        let groups = self
            .groups
            .iter()
            .map(|((ks, t), seq)| ((*ks, (0..=n).map(|s| t[p1[s]]).collect()), seq.clone()))
            .collect();
        Ok(PartialParaproductSpec {
            grid: self.grid,
            paraproduct_param: self.paraproduct_param,
            complexities: (0..=n).map(|s| self.complexities[p1[s]]).collect(),
            kinds: (0..=n).map(|s| self.kinds[p1[s]]).collect(),
            slot: p2[self.slot],
            groups,
        })
    }

    pub fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        check_inputs(self.grid, self.n(), fs)?;
        match self.paraproduct_param {
            Param::Two => self.apply_internal(fs),
            Param::One => {
                let t: Vec<GridFunction> = fs.iter().map(GridFunction::transpose).collect();
                Ok(self.apply_internal(&t)?.transpose())
            }
        }
    }

    fn apply_internal(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        let cg = self.internal_grid();
        let n = self.n();
        let sums: Vec<Pyramid> = fs.iter().map(integral_pyramid).collect();
        let u = |slot: usize| if slot == self.slot { Atom::Haar } else { Atom::Avg };
        let ks = rectangles_below(self.top(), cg.n2 as i64 - 1);
        accumulate_parallel(cg, &ks, |&k, acc| {
            let pairings: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..1u32 << self.complexities[i])
                        .map(|t| {
                            let j = descendant(k.i1, self.complexities[i], t);
                            pair(&sums[i], j, self.kinds[i], k.i2, u(i))
                        })
                        .collect()
                })
                .collect();
            if pairings.iter().any(|p| p.iter().all(|&v| v == 0.0)) {
                return Ok(());
            }
            let b = (1usize << k.i2.level) + k.i2.index as usize;
            let mut digits = vec![0u32; n + 1];
            loop {
                let prod: f64 = (0..n).map(|i| pairings[i][digits[i] as usize]).product();
                if prod != 0.0 {
                    let seq = &self.groups[&(k.i1, digits.clone())];
                    let a = seq[b];
                    let j = descendant(k.i1, self.complexities[n], digits[n]);
                    acc.add(j, self.kinds[n], k.i2, u(n), a * prod);
                }
                let mut s = 0;
                loop {
                    if s > n {
                        return Ok(());
                    }
                    digits[s] += 1;
                    if digits[s] < 1 << self.complexities[s] {
                        break;
                    }
                    digits[s] = 0;
                    s += 1;
                }
            }
        })
    }
}

fn scale(seq: &mut [f64], c: f64) {
    seq.iter_mut().for_each(|v| *v *= c);
}

/// The interval with one-parameter Haar index `b ≥ 1`.
fn interval_of(b: usize) -> DyadicInterval {
    let level = usize::BITS - 1 - b.leading_zeros();
    DyadicInterval { level, index: (b - (1 << level)) as u32 }
}

impl MultilinearOperator for PartialParaproductSpec {
    fn arity(&self) -> usize {
        self.n()
    }

    fn apply(&self, fs: &[GridFunction]) -> Result<GridFunction> {
        PartialParaproductSpec::apply(self, fs)
    }

    fn label(&self) -> String {
        format!("partial-paraproduct(n={}, k={:?})", self.n(), self.complexities)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::LineFunction;
    use crate::rng::uniform_function;

    fn grid() -> ProductGrid {
        ProductGrid::new(3, 3).unwrap()
    }

    #[test]
    fn normalization_is_saturated() {
        let s = PartialParaproductSpec::new(
            grid(),
            Param::Two,
            vec![1, 0, 0],
            vec![Atom::Haar, Atom::Haar, Atom::Haar0],
            3,
            CoeffRule::Uniform { seed: 4 },
        )
        .unwrap();
        assert!((s.normalization_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_in_x2_at_paraproduct_slot() {
        let g = grid();
        let s = PartialParaproductSpec::new(
            g,
            Param::Two,
            vec![0, 1],
            vec![Atom::Haar, Atom::Haar],
            1,
            CoeffRule::Uniform { seed: 5 },
        )
        .unwrap();
        let a = LineFunction::from_fn(3, |c| (c as f64 * 1.3).sin());
        let f = GridFunction::tensor(&a, &LineFunction::constant(3, 1.0)).unwrap();
        assert!(s.apply(&[f]).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn single_coefficient_rank_one() {
        let g = grid();
        let ks = DyadicInterval::new(1, 0).unwrap();
        let kp = DyadicInterval::new(2, 3).unwrap();
        let key = CoeffKey { k: DyadicRectangle::new(ks, kp), offsets: vec![[0, 0], [1, 0]] };
        // BMO of a single entry at level 2 is |a|·2, the cap is 2^{-1/2}
        let a = 0.25;
        let rule = CoeffRule::Table([(key, a)].into_iter().collect());
        let s = PartialParaproductSpec::new(g, Param::Two, vec![0, 1], vec![Atom::Haar, Atom::Haar], 2, rule)
            .unwrap();
        let f = uniform_function(g, 6);
        let out = s.apply(std::slice::from_ref(&f)).unwrap();
        // a ⟨f, h_{K^s} ⊗ 1_{K^p}/|K^p|⟩ h_{(K^s)_1} ⊗ h_{K^p}
        let test = GridFunction::tensor(
            &LineFunction::haar(3, ks),
            &LineFunction::indicator(3, kp).scale(4.0),
        )
        .unwrap();
        let c = a * f.inner(&test).unwrap();
        let expect = GridFunction::tensor(
            &LineFunction::haar(3, ks.children()[1]),
            &LineFunction::haar(3, kp),
        )
        .unwrap()
        .scale(c);
        assert!(out.max_abs_diff(&expect).unwrap() < 1e-13);
    }

    #[test]
    fn table_over_cap_is_rejected() {
        let key = CoeffKey { k: DyadicRectangle::from_parts(0, 0, 0, 0).unwrap(), offsets: vec![[0, 0]; 2] };
        let rule = CoeffRule::Table([(key, 1.5)].into_iter().collect());
        let r = PartialParaproductSpec::new(grid(), Param::Two, vec![0, 0], vec![Atom::Haar; 2], 1, rule);
        assert!(matches!(r, Err(Error::InvalidCoefficients(_))));
    }

    #[test]
    fn first_parameter_variant_is_the_transpose() {
        let g = ProductGrid::new(3, 2).unwrap();
        let rule = CoeffRule::Uniform { seed: 9 };
        let s1 = PartialParaproductSpec::new(g, Param::One, vec![1, 0], vec![Atom::Haar; 2], 2, rule.clone())
            .unwrap();
        let gt = ProductGrid::new(2, 3).unwrap();
        let s2 = PartialParaproductSpec::new(gt, Param::Two, vec![1, 0], vec![Atom::Haar; 2], 2, rule).unwrap();
        let f = uniform_function(g, 1);
        let a = s1.apply(std::slice::from_ref(&f)).unwrap();
        let b = s2.apply(&[f.transpose()]).unwrap().transpose();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-14);
    }
}
