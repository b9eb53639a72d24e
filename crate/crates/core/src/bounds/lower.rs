use serde::{Deserialize, Serialize};

use crate::bmo::{bmo_sigma_nu_norm, RectRef};
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};
use crate::norms::{lp_norm_measure, weak_lp_norm};
use crate::weights::{BloomSetup, Weight};

/// Relative slack in the "at least half the mass" comparisons of [`median`].
const HALF_TOL: f64 = 1e-12;

/// The lower median of `b` on `region` with respect to `measure` (Lebesgue
/// when absent): the smallest cell value `m` with `μ({b ≤ m}) ≥ μ/2` and
/// `μ({b ≥ m}) ≥ μ/2`.
pub fn median(b: &GridFunction, region: DyadicRectangle, measure: Option<&Weight>) -> Result<f64> {
    let grid = b.grid();
    if !grid.fits(region) {
        return Err(Error::InvalidInput(format!("{region} does not fit the grid")));
    }
    if let Some(m) = measure {
        grid.check_same(m.grid())?;
    }
    let mut cells: Vec<(f64, f64)> = grid
        .cells_of(region)
        .map(|c| (b.values()[c], measure.map_or(1.0, |m| m.values()[c])))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = cells.iter().map(|c| c.1).sum();
    let half = 0.5 * total * (1.0 - HALF_TOL);
    let mut below = 0.0;
    let mut k = 0;
    while k < cells.len() {
        let v = cells[k].0;
        let above = total - below;
        while k < cells.len() && cells[k].0 == v {
            below += cells[k].1;
            k += 1;
        }
        if below >= half && above >= half {
            return Ok(v);
        }
    }
    unreachable!("the largest value always satisfies both conditions")
}

/// `K(x, y⃗) = Π_{m=1,2} (Σ_i |x^m − y_i^m| + τ)^{-n}` evaluated at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonDegenerateKernel {
    pub n: usize,
    pub tau: f64,
    pub grid: ProductGrid,
}

impl NonDegenerateKernel {
    /// `τ` is the leaf side length (the smaller one when the depths differ).
    pub fn new(grid: ProductGrid, n: usize) -> Self {
        let tau = (-(grid.n1.max(grid.n2) as f64)).exp2();
        NonDegenerateKernel { n, tau, grid }
    }

    pub fn eval(&self, x: [f64; 2], ys: &[[f64; 2]]) -> f64 {
        (0..2)
            .map(|m| {
                let d: f64 = ys.iter().map(|y| (x[m] - y[m]).abs()).sum();
                (d + self.tau).powi(-(self.n as i32))
            })
            .product()
    }

    /// Same-size interval two side lengths away, reflected to the other side
    /// near the boundary; at level 1 the sibling, at level 0 the interval itself.
    pub fn partner_interval(i: DyadicInterval) -> DyadicInterval {
        let count = 1u32 << i.level;
        let index = if i.index + 2 < count {
            i.index + 2
        } else if i.index >= 2 {
            i.index - 2
        } else {
            i.index ^ (count > 1) as u32
        };
        DyadicInterval::new(i.level, index).expect("index in range")
    }

    pub fn partner(&self, r: DyadicRectangle) -> DyadicRectangle {
        DyadicRectangle::new(Self::partner_interval(r.i1), Self::partner_interval(r.i2))
    }

    /// `min K · |R|^n` over cell centers `x ∈ R̃`, `y_i ∈ R`.
    pub fn constant(&self, r: DyadicRectangle) -> f64 {
        let rt = self.partner(r);
        let mut k = 1.0;
        for param in [Param::One, Param::Two] {
            let h = 0.5 / self.grid.side(param) as f64;
            let (a, b) = (r.interval(param), rt.interval(param));
            let (a0, a1) = (a.left() + h, a.left() + a.side_length() - h);
            let (b0, b1) = (b.left() + h, b.left() + b.side_length() - h);
            let far = (b1 - a0).abs().max((a1 - b0).abs());
            k *= (self.n as f64 * far + self.tau).powi(-(self.n as i32));
        }
        k * r.measure().powi(self.n as i32)
    }
}

/// `C_b^K(σ₁,…,σ_n)` on the whole grid and its norms against `σ_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub weak: f64,
    pub strong: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianReport {
    pub rect: RectRef,
    pub partner: RectRef,
    pub alpha: f64,
    /// `(νσ_j(R))^{-1} ∫_R (α − b)₊ σ_j`.
    pub below: f64,
    /// `(νσ_j(R))^{-1} ∫_R (b − α)₊ σ_j`.
    pub above: f64,
    pub recovered: f64,
    pub kernel_constant: f64,
    /// `σ_{n+1}(R̃ ∩ {b ≥ α}) / σ_{n+1}(R̃)`.
    pub sigma_last_ratio: Option<f64>,
    pub functional: Option<FunctionalValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub rects: Vec<MedianReport>,
    pub recovered: f64,
    pub argmax: Option<RectRef>,
    /// `‖b‖_{bmo_σ(ν)}` with `σ = σ_j`.
    pub bmo_sigma: f64,
    /// `recovered / bmo_sigma`, absent when `b` is constant.
    pub ratio: Option<f64>,
    pub min_kernel_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundConfig {
    /// Rectangles with levels up to these are swept.
    pub max_levels: [u32; 2],
    /// Largest number of kernel evaluations spent on one `C_b^K`.
    pub kernel_budget: u64,
}

impl Default for LowerBoundConfig {
    fn default() -> Self {
        LowerBoundConfig { max_levels: [2, 2], kernel_budget: 1 << 24 }
    }
}

fn centers(grid: ProductGrid, c: usize) -> [f64; 2] {
    let (c1, c2) = grid.cell_coords(c);
    [grid.cell_center(Param::One, c1), grid.cell_center(Param::Two, c2)]
}

/// Exact cell sums for `C_b^K`; `None` once the budget is exceeded.
fn functional(
    b: &GridFunction,
    bloom: &BloomSetup,
    kernel: &NonDegenerateKernel,
    r: DyadicRectangle,
    rt: DyadicRectangle,
    alpha: f64,
    budget: u64,
) -> Result<Option<FunctionalValue>> {
    let grid = b.grid();
    let n = bloom.n();
    let j = bloom.slot - 1;
    let in_r: Vec<usize> = grid.cells_of(r).collect();
    let xs: Vec<usize> = grid.cells_of(rt).filter(|&c| b.values()[c] >= alpha).collect();
    let cost = (xs.len() as u64).saturating_mul((in_r.len() as u64).saturating_pow(n as u32));
    if cost > budget {
        return Ok(None);
    }
    let cm = grid.cell_measure();
    let sigma = |i: usize, c: usize| bloom.sigma[i].as_ref().map_or(1.0, |s| s.values()[c]);
    let ypts: Vec<[f64; 2]> = in_r.iter().map(|&c| centers(grid, c)).collect();
    let mut out = GridFunction::zeros(grid);
    let mut idx = vec![0usize; n];
    for &x in &xs {
        let xp = centers(grid, x);
        let bx = b.values()[x];
        let mut total = 0.0;
        idx.iter_mut().for_each(|v| *v = 0);
        let mut ys = vec![[0.0; 2]; n];
        'tuples: loop {
            let yj = in_r[idx[j]];
            if b.values()[yj] <= alpha {
                let mut weight = bx - b.values()[yj];
                for i in 0..n {
                    ys[i] = ypts[idx[i]];
                    weight *= sigma(i, in_r[idx[i]]) * cm;
                }
                total += weight * kernel.eval(xp, &ys);
            }
            for digit in idx.iter_mut() {
                *digit += 1;
                if *digit < in_r.len() {
                    continue 'tuples;
                }
                *digit = 0;
            }
            break;
        }
        out.values_mut()[x] = total;
    }
    let p = bloom.p.joint()?;
    let mu = bloom.sigma_last.as_ref().map(|s| s.function());
    Ok(Some(FunctionalValue { weak: weak_lp_norm(&out, p, mu)?, strong: lp_norm_measure(&out, p, mu)? }))
}

/// Median-method quantities on every rectangle with levels up to `cfg.max_levels`.
pub fn lower_bound_recover(
    b: &GridFunction,
    bloom: &BloomSetup,
    kernel: &NonDegenerateKernel,
    cfg: &LowerBoundConfig,
) -> Result<LowerBoundReport> {
    let grid = b.grid();
    if kernel.n != bloom.n() {
        return Err(Error::Arity { expected: bloom.n(), found: kernel.n });
    }
    grid.check_same(kernel.grid)?;
    grid.check_same(bloom.nu.grid())?;
    let sigma_j = bloom.sigma[bloom.slot - 1]
        .clone()
        .ok_or_else(|| Error::Unsupported("the median method needs p_j > 1".into()))?;
    let nu_sigma = bloom.nu.mul(&sigma_j)?;
    let [m1, m2] = cfg.max_levels;
    let mut rects = Vec::new();
    for r in grid.rectangles_up_to(m1.min(grid.n1), m2.min(grid.n2)) {
        let rt = kernel.partner(r);
        let alpha = median(b, rt, None)?;
        let norm = nu_sigma.measure(r);
        let (mut below, mut above) = (0.0, 0.0);
        for c in grid.cells_of(r) {
            let d = b.values()[c] - alpha;
            let s = sigma_j.values()[c];
            below += (-d).max(0.0) * s;
            above += d.max(0.0) * s;
        }
        let cm = grid.cell_measure();
        let (below, above) = (below * cm / norm, above * cm / norm);
        let sigma_last_ratio = bloom.sigma_last.as_ref().map(|s| {
            let hit: f64 = grid.cells_of(rt).filter(|&c| b.values()[c] >= alpha).map(|c| s.values()[c]).sum();
            hit * cm / s.measure(rt)
        });
        rects.push(MedianReport {
            rect: r.into(),
            partner: rt.into(),
            alpha,
            below,
            above,
            recovered: below.max(above),
            kernel_constant: kernel.constant(r),
            sigma_last_ratio,
            functional: functional(b, bloom, kernel, r, rt, alpha, cfg.kernel_budget)?,
        });
    }
    let best = rects.iter().max_by(|a, b| a.recovered.total_cmp(&b.recovered));
    let recovered = best.map_or(0.0, |m| m.recovered);
    let argmax = best.filter(|m| m.recovered > 0.0).map(|m| m.rect);
    let bmo_sigma = bmo_sigma_nu_norm(b, &bloom.nu, &sigma_j)?.report.norm;
    let min_kernel_constant = rects.iter().map(|m| m.kernel_constant).fold(f64::INFINITY, f64::min);
    Ok(LowerBoundReport {
        ratio: (bmo_sigma > 0.0).then(|| recovered / bmo_sigma),
        rects,
        recovered,
        argmax,
        bmo_sigma,
        min_kernel_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ExponentTuple;
    use crate::weights::bloom_setup;

    fn trivial(g: ProductGrid, n: usize) -> BloomSetup {
        let ws = vec![Weight::ones(g); n];
        let p = ExponentTuple::from_values(&vec![2.0 * n as f64; n]).unwrap();
        bloom_setup(&ws, &Weight::ones(g), &p, 1).unwrap()
    }

    #[test]
    fn median_examples() {
        let g = ProductGrid::new(1, 1).unwrap();
        let root = DyadicRectangle::from_parts(0, 0, 0, 0).unwrap();
        let b = GridFunction::from_values(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(median(&b, root, None).unwrap(), 2.0);
        assert_eq!(median(&GridFunction::constant(g, 7.5), root, None).unwrap(), 7.5);
        let anti = GridFunction::from_values(g, vec![-3.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(median(&anti, root, None).unwrap(), 0.0);
        // a heavy cell pulls the weighted median
        let w = Weight::new(GridFunction::from_values(g, vec![1.0, 1.0, 1.0, 5.0]).unwrap()).unwrap();
        assert_eq!(median(&b, root, Some(&w)).unwrap(), 4.0);
    }

    #[test]
    fn kernel_positive_and_partners() {
        let g = ProductGrid::new(4, 4).unwrap();
        let k = NonDegenerateKernel::new(g, 2);
        for r in g.rectangles() {
            let rt = k.partner(r);
            assert_eq!(rt.levels(), r.levels());
            assert!(k.constant(r) > 0.0);
        }
        let i = DyadicInterval::new(3, 6).unwrap();
        assert_eq!(NonDegenerateKernel::partner_interval(i).index, 4);
        assert_eq!(NonDegenerateKernel::partner_interval(DyadicInterval::new(1, 0).unwrap()).index, 1);
        assert!(k.eval([0.1, 0.2], &[[0.1, 0.2], [0.1, 0.2]]) > 0.0);
    }

    #[test]
    fn constant_symbol_recovers_zero() {
        let g = ProductGrid::new(3, 3).unwrap();
        let rep = lower_bound_recover(
            &GridFunction::constant(g, 2.0),
            &trivial(g, 1),
            &NonDegenerateKernel::new(g, 1),
            &LowerBoundConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.recovered, 0.0);
        assert!(rep.ratio.is_none());
    }

    #[test]
    fn sign_symbol_recovers_one_at_root() {
        let g = ProductGrid::new(3, 3).unwrap();
        let b = GridFunction::from_point_fn(g, |x, _| if x < 0.5 { -1.0 } else { 1.0 });
        let rep = lower_bound_recover(&b, &trivial(g, 1), &NonDegenerateKernel::new(g, 1), &LowerBoundConfig::default())
            .unwrap();
        let root = &rep.rects[0];
        assert_eq!(root.rect.levels, [0, 0]);
        assert!((root.recovered - 1.0).abs() < 1e-12);
        assert!(root.kernel_constant > 0.0);
        let f = root.functional.as_ref().unwrap();
        assert!(f.weak <= f.strong * (1.0 + 1e-12));
        assert!(rep.ratio.unwrap() > 0.0);
    }

    #[test]
    fn homogeneous_in_b() {
        let g = ProductGrid::new(3, 3).unwrap();
        let b = GridFunction::from_point_fn(g, |x, y| (x - 0.3) * (y + 0.1));
        let run = |b: &GridFunction| {
            lower_bound_recover(b, &trivial(g, 1), &NonDegenerateKernel::new(g, 1), &LowerBoundConfig::default())
                .unwrap()
                .recovered
        };
        assert!((run(&b.scale(2.0)) - 2.0 * run(&b)).abs() < 1e-12);
    }

    #[test]
    fn arity_mismatch() {
        let g = ProductGrid::new(2, 2).unwrap();
        let b = GridFunction::constant(g, 0.0);
        let cfg = LowerBoundConfig::default();
        assert!(lower_bound_recover(&b, &trivial(g, 1), &NonDegenerateKernel::new(g, 2), &cfg).is_err());
    }
}
