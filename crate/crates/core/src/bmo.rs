//! Weighted little BMO, its slice characterization, the `σ`-weighted variant,
//! product BMO of coefficient families, and duality-type ratio checks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::bounds::RatioReport;
use crate::error::{Error, Result};
use crate::function::{integral_pyramid, GridFunction, LineFunction, Pyramid, RectStats};
use crate::grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};
use crate::haar::haar_forward;
use crate::ops::atoms::{pair, Atom};
use crate::ops::square::{square_function, SquareKind};
use crate::rng::rng;
use crate::weights::{ainfty_characteristic, Weight, AINFTY_FLAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectRef {
    pub levels: [u32; 2],
    pub indices: [u32; 2],
}

impl From<DyadicRectangle> for RectRef {
    fn from(r: DyadicRectangle) -> Self {
        RectRef { levels: [r.i1.level, r.i2.level], indices: [r.i1.index, r.i2.index] }
    }
}

/// The one-parameter norm of `b` restricted to a line where the other variable is frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceNorm {
    /// The variable the slice depends on (1 or 2).
    pub variable: u8,
    /// Leaf coordinate of the frozen variable.
    pub at: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoReport {
    pub norm: f64,
    pub argmax: RectRef,
    pub slices: Vec<SliceNorm>,
}

impl BmoReport {
    pub fn max_slice(&self, variable: u8) -> f64 {
        self.slices
            .iter()
            .filter(|s| s.variable == variable)
            .fold(0.0, |m, s| m.max(s.norm))
    }
}

/// `sup_R (1/(νσ)(R)) ∫_R |b − ⟨b⟩^σ_R| σ`, with `σ ≡ 1` when absent.
fn oscillation_norm(b: &GridFunction, nu: &GridFunction, sigma: Option<&GridFunction>) -> (f64, DyadicRectangle) {
    let grid = b.grid();
    let cm = grid.cell_measure();
    let s = sigma.cloned().unwrap_or_else(|| GridFunction::constant(grid, 1.0));
    let bs = integral_pyramid(&(b * &s));
    let ss = integral_pyramid(&s);
    let nus = integral_pyramid(&(nu * &s));
    let spread = RectStats::new(b);
    let mut best = (0.0, DyadicRectangle::ROOT);
    for r in grid.rectangles() {
        // exact zero on rectangles where b is constant
        if spread.min(r) == spread.max(r) {
            continue;
        }
        let avg = bs.get(r) / ss.get(r);
        let osc: f64 = grid
            .cells_of(r)
            .map(|c| (b.values()[c] - avg).abs() * s.values()[c])
            .sum::<f64>()
            * cm;
        let v = osc / nus.get(r);
        if v > best.0 {
            best = (v, r);
        }
    }
    best
}

/// The same quantity for a function of one variable.
fn line_oscillation_norm(b: &LineFunction, nu: &LineFunction, sigma: Option<&LineFunction>) -> f64 {
    let depth = b.depth();
    let len = 1usize << depth;
    let cm = (-(depth as f64)).exp2();
    let mut best = 0.0f64;
    for l in 0..=depth {
        for m in 0..1u32 << l {
            let range = DyadicInterval { level: l, index: m }.cell_range(depth);
            debug_assert!(range.end <= len);
            let s = |c: usize| sigma.map_or(1.0, |s| s.values()[c]);
            let (mut bs, mut ss, mut nus) = (0.0, 0.0, 0.0);
            for c in range.clone() {
                bs += b.values()[c] * s(c);
                ss += s(c);
                nus += nu.values()[c] * s(c);
            }
            let vals = &b.values()[range.clone()];
            if vals.iter().all(|v| *v == vals[0]) {
                continue;
            }
            let avg = bs / ss;
            let osc: f64 = range.map(|c| (b.values()[c] - avg).abs() * s(c)).sum();
            best = best.max(osc * cm / (nus * cm));
        }
    }
    best
}

fn slices(b: &GridFunction, nu: &GridFunction, sigma: Option<&GridFunction>) -> Vec<SliceNorm> {
    let grid = b.grid();
    let mut out = Vec::with_capacity(grid.rows() + grid.cols());
    // free variable x₂: rows with x₁ frozen
    for c1 in 0..grid.rows() {
        let norm = line_oscillation_norm(&b.row(c1), &nu.row(c1), sigma.map(|s| s.row(c1)).as_ref());
        out.push(SliceNorm { variable: 2, at: c1, norm });
    }
    for c2 in 0..grid.cols() {
        let norm =
            line_oscillation_norm(&b.column(c2), &nu.column(c2), sigma.map(|s| s.column(c2)).as_ref());
        out.push(SliceNorm { variable: 1, at: c2, norm });
    }
    out
}

/// `‖b‖_{bmo(ν)} = sup_R ν(R)^{-1} ∫_R |b − ⟨b⟩_R|`.
pub fn bmo_nu_norm(b: &GridFunction, nu: &Weight) -> Result<BmoReport> {
    b.grid().check_same(nu.grid())?;
    let (norm, r) = oscillation_norm(b, nu.function(), None);
    Ok(BmoReport { norm, argmax: r.into(), slices: slices(b, nu.function(), None) })
}

/// Rectangle norm against the largest slice norms in each variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceComparison {
    pub rect_norm: f64,
    /// Largest one-parameter norm among slices depending on `x₁`.
    pub slice_x1: f64,
    /// Largest one-parameter norm among slices depending on `x₂`.
    pub slice_x2: f64,
    /// `max(slice_x1, slice_x2) / rect_norm`; 1 when both vanish.
    pub slice_over_rect: f64,
    /// `rect_norm / max(slice_x1, slice_x2)`; 1 when both vanish.
    pub rect_over_slice: f64,
}

pub fn slice_bmo_check(b: &GridFunction, nu: &Weight) -> Result<SliceComparison> {
    let rep = bmo_nu_norm(b, nu)?;
    let (s1, s2) = (rep.max_slice(1), rep.max_slice(2));
    let s = s1.max(s2);
    let ratio = |a: f64, c: f64| if a == 0.0 && c == 0.0 { 1.0 } else { a / c };
    Ok(SliceComparison {
        rect_norm: rep.norm,
        slice_x1: s1,
        slice_x2: s2,
        slice_over_rect: ratio(s, rep.norm),
        rect_over_slice: ratio(rep.norm, s),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaBmoReport {
    pub report: BmoReport,
    /// `‖b‖_{bmo(ν)}` for comparison.
    pub bmo_nu: f64,
    /// `report.norm / bmo_nu`; 1 when both vanish.
    pub ratio: f64,
    pub nu_ainfty: f64,
    pub sigma_ainfty: f64,
    pub nu_sigma_ainfty: f64,
    /// Set when one of the `A_∞` characteristics is effectively infinite.
    pub hypothesis_flagged: bool,
}

/// `sup_R (νσ)(R)^{-1} ∫_R |b − ⟨b⟩^σ_R| σ` with `⟨b⟩^σ_R = σ(R)^{-1}∫_R bσ`.
pub fn bmo_sigma_nu_norm(b: &GridFunction, nu: &Weight, sigma: &Weight) -> Result<SigmaBmoReport> {
    let grid = b.grid();
    grid.check_same(nu.grid())?;
    grid.check_same(sigma.grid())?;
    let (norm, r) = oscillation_norm(b, nu.function(), Some(sigma.function()));
    let report = BmoReport {
        norm,
        argmax: r.into(),
        slices: slices(b, nu.function(), Some(sigma.function())),
    };
    let bmo_nu = oscillation_norm(b, nu.function(), None).0;
    let nu_ainfty = ainfty_characteristic(nu).value;
    let sigma_ainfty = ainfty_characteristic(sigma).value;
    let nu_sigma_ainfty = ainfty_characteristic(&nu.mul(sigma)?).value;
    let flagged = [nu_ainfty, sigma_ainfty, nu_sigma_ainfty].iter().any(|&a| !(a <= AINFTY_FLAG));
    Ok(SigmaBmoReport {
        ratio: if norm == 0.0 && bmo_nu == 0.0 { 1.0 } else { norm / bmo_nu },
        report,
        bmo_nu,
        nu_ainfty,
        sigma_ainfty,
        nu_sigma_ainfty,
        hypothesis_flagged: flagged,
    })
}

/// Finitely many coefficients indexed by dyadic rectangles of one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFamily {
    pub grid: ProductGrid,
    pub coeffs: BTreeMap<DyadicRectangle, f64>,
}

impl CoefficientFamily {
    pub fn new(grid: ProductGrid) -> Self {
        CoefficientFamily { grid, coeffs: BTreeMap::new() }
    }

    pub fn insert(&mut self, r: DyadicRectangle, v: f64) -> Result<()> {
        if !self.grid.fits(r) {
            return Err(Error::InvalidInput(format!("{r} does not fit the grid")));
        }
        self.coeffs.insert(r, v);
        Ok(())
    }

    pub fn get(&self, r: DyadicRectangle) -> f64 {
        self.coeffs.get(&r).copied().unwrap_or(0.0)
    }

    pub fn scale(&mut self, c: f64) {
        self.coeffs.values_mut().for_each(|v| *v *= c);
    }
}

/// The test family of open sets for [`product_bmo_norm_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductBmoConfig {
    /// Number of sampled unions beyond the single rectangles.
    pub unions: usize,
    /// Largest number of rectangles in a sampled union.
    pub max_parts: usize,
    pub seed: u64,
}

impl Default for ProductBmoConfig {
    fn default() -> Self {
        ProductBmoConfig { unions: 10_000, max_parts: 4, seed: 0 }
    }
}

/// A lower bound for the product BMO norm: the supremum over the test family only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBmoReport {
    pub value: f64,
    pub family_size: usize,
    /// The maximizing set as a list of rectangles.
    pub argmax: Vec<RectRef>,
}

pub fn product_bmo_norm(a: &CoefficientFamily) -> ProductBmoReport {
    product_bmo_norm_with(a, &ProductBmoConfig::default())
}

/// `sup_Ω (|Ω|^{-1} Σ_{K ⊂ Ω} |a_K|²)^{1/2}` over all dyadic rectangles and
/// seeded unions of up to `max_parts` rectangles.
pub fn product_bmo_norm_with(a: &CoefficientFamily, cfg: &ProductBmoConfig) -> ProductBmoReport {
    let grid = a.grid;
    let (n1, n2) = grid.depths();
    // S(I × J) = Σ_{I' ⊂ I, J' ⊂ J} |a|², built one parameter at a time
    let mut s = Pyramid::from_fn(grid, |r| a.get(r).powi(2));
    for l1 in (0..n1).rev() {
        for r in grid.rectangles().filter(|r| r.i1.level == l1) {
            let [c0, c1] = r.i1.children();
            let v = s.get(DyadicRectangle::new(c0, r.i2)) + s.get(DyadicRectangle::new(c1, r.i2));
            s.add(r, v);
        }
    }
    for l2 in (0..n2).rev() {
        for r in grid.rectangles().filter(|r| r.i2.level == l2) {
            let [c0, c1] = r.i2.children();
            let v = s.get(DyadicRectangle::new(r.i1, c0)) + s.get(DyadicRectangle::new(r.i1, c1));
            s.add(r, v);
        }
    }
    let mut best = (0.0f64, vec![RectRef::from(DyadicRectangle::ROOT)]);
    for r in grid.rectangles() {
        let v = (s.get(r) / r.measure()).sqrt();
        if v > best.0 {
            best = (v, vec![r.into()]);
        }
    }

    let support: Vec<DyadicRectangle> =
        a.coeffs.iter().filter(|(_, v)| **v != 0.0).map(|(r, _)| *r).collect();
    let mut g = rng(cfg.seed);
    let cm = grid.cell_measure();
    for _ in 0..cfg.unions {
        let parts = g.gen_range(2..=cfg.max_parts.max(2));
        let rects: Vec<DyadicRectangle> = (0..parts)
            .map(|_| {
                if !support.is_empty() && g.gen_bool(0.5) {
                    let k = support[g.gen_range(0..support.len())];
                    let up = (g.gen_range(0..=k.i1.level), g.gen_range(0..=k.i2.level));
                    k.ancestor(up).expect("within levels")
                } else {
                    let (l1, l2) = (g.gen_range(0..=n1), g.gen_range(0..=n2));
                    DyadicRectangle::new(
                        DyadicInterval { level: l1, index: g.gen_range(0..1u32 << l1) },
                        DyadicInterval { level: l2, index: g.gen_range(0..1u32 << l2) },
                    )
                }
            })
            .collect();
        let mut mask = vec![0.0; grid.cell_count()];
        for r in &rects {
            for c in grid.cells_of(*r) {
                mask[c] = 1.0;
            }
        }
        let measure = mask.iter().sum::<f64>() * cm;
        let covered = Pyramid::build(grid, &mask, f64::min);
        let total: f64 = support
            .iter()
            .filter(|k| covered.get(**k) == 1.0)
            .map(|k| a.get(*k).powi(2))
            .sum();
        let v = (total / measure).sqrt();
        if v > best.0 {
            best = (v, rects.iter().map(|r| RectRef::from(*r)).collect());
        }
    }
    ProductBmoReport { value: best.0, family_size: grid.rect_count() + cfg.unions, argmax: best.1 }
}

/// `|⟨b, f⟩| / (‖b‖_{bmo(ν)} ‖S f‖_{L¹(ν)})` for each square function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub bmo: f64,
    pub s1: RatioReport,
    pub s2: RatioReport,
    pub sd: RatioReport,
}

pub fn h1_bmo_pairing_check(b: &GridFunction, nu: &Weight, fs: &[GridFunction]) -> Result<PairingReport> {
    let bmo = bmo_nu_norm(b, nu)?.norm;
    if bmo == 0.0 {
        return Err(Error::Degenerate("b is constant on the grid".into()));
    }
    let mut rep = PairingReport {
        bmo,
        s1: RatioReport::new("given", 0),
        s2: RatioReport::new("given", 0),
        sd: RatioReport::new("given", 0),
    };
    for f in fs {
        let num = b.inner(f)?.abs();
        let d = f.digest();
        for (kind, r) in [
            (SquareKind::S1, &mut rep.s1),
            (SquareKind::S2, &mut rep.s2),
            (SquareKind::Sd, &mut rep.sd),
        ] {
            let l1 = (&square_function(f, kind) * nu.function()).integral();
            r.push_ratio(d.clone(), num, bmo * l1);
        }
    }
    Ok(rep)
}

/// Which duality estimate [`mw_estimate_check`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MwVariant {
    /// `Σ_R ⟨b,h_R⟩⟨σ⟩_R φ_R`.
    Full,
    /// Cancellation in parameter 1 only: `⟨b, h_{R¹} ⊗ 1_{R²}/|R²|⟩`.
    Partial1,
    /// Cancellation in parameter 2 only.
    Partial2,
    /// One-parameter sums along `x₂` for each frozen `x₁`; `φ` is keyed by `[0,1) × R²`.
    Sliced,
}

pub type PhiFamily = BTreeMap<DyadicRectangle, f64>;

/// Left side over right side for each `φ` family; the right side includes `‖b‖_{bmo(ν)}`.
pub fn mw_estimate_check(
    b: &GridFunction,
    nu: &Weight,
    sigma: &Weight,
    phis: &[PhiFamily],
    variant: MwVariant,
) -> Result<RatioReport> {
    let grid = b.grid();
    grid.check_same(nu.grid())?;
    grid.check_same(sigma.grid())?;
    let bmo = bmo_nu_norm(b, nu)?.norm;
    let sn = sigma.mul(nu)?;
    let sig = integral_pyramid(sigma.function());
    let bsum = integral_pyramid(b);
    let haar = haar_forward(b);
    let mut rep = RatioReport::new(format!("{variant:?}"), 0);
    for (idx, phi) in phis.iter().enumerate() {
        for r in phi.keys() {
            if !grid.fits(*r) {
                return Err(Error::InvalidInput(format!("{r} does not fit the grid")));
            }
        }
        let digest = format!("phi#{idx}");
        match variant {
            MwVariant::Full => {
                let mut lhs = 0.0;
                let mut sq = Pyramid::zeros(grid);
                for (&r, &p) in phi {
                    if r.i1.level < grid.n1 && r.i2.level < grid.n2 {
                        lhs += haar.rect(r) * sig.get(r) / r.measure() * p;
                        sq.add(r, p * p / r.measure());
                    }
                }
                let rhs = (&sq.synthesize_boxes().map(f64::sqrt) * sn.function()).integral();
                rep.push_ratio(digest, lhs.abs(), bmo * rhs);
            }
            MwVariant::Partial1 | MwVariant::Partial2 => {
                let (m, o) = if variant == MwVariant::Partial1 {
                    (Param::One, Param::Two)
                } else {
                    (Param::Two, Param::One)
                };
                let mut lhs = 0.0;
                // per outer interval, Σ φ² 1/|R^m| along the cancellative parameter
                let mut inner: BTreeMap<DyadicInterval, Pyramid> = BTreeMap::new();
                for (&r, &p) in phi {
                    let (im, io) = (r.interval(m), r.interval(o));
                    if im.level >= grid.depth(m) {
                        continue;
                    }
                    let coef = if m == Param::One {
                        pair(&bsum, im, Atom::Haar, io, Atom::Avg)
                    } else {
                        pair(&bsum, io, Atom::Avg, im, Atom::Haar)
                    };
                    lhs += coef * sig.get(r) / r.measure() * p;
                    let box_r = if m == Param::One {
                        DyadicRectangle::new(im, DyadicInterval::ROOT)
                    } else {
                        DyadicRectangle::new(DyadicInterval::ROOT, im)
                    };
                    inner
                        .entry(io)
                        .or_insert_with(|| Pyramid::zeros(grid))
                        .add(box_r, p * p / im.side_length());
                }
                let mut total = GridFunction::zeros(grid);
                for (io, pyr) in inner {
                    let g = pyr.synthesize_boxes().map(f64::sqrt);
                    let ind = if o == Param::Two {
                        DyadicRectangle::new(DyadicInterval::ROOT, io)
                    } else {
                        DyadicRectangle::new(io, DyadicInterval::ROOT)
                    };
                    let cut = &g * &GridFunction::indicator(grid, ind).scale(1.0 / io.side_length());
                    total = &total + &cut;
                }
                let rhs = (&total * sn.function()).integral();
                rep.push_ratio(digest, lhs.abs(), bmo * rhs);
            }
            MwVariant::Sliced => {
                let mut worst: Option<(f64, f64)> = None;
                for c1 in 0..grid.rows() {
                    let bx = b.row(c1);
                    let sx = sigma.row(c1);
                    let snx = sn.row(c1);
                    let mut lhs = 0.0;
                    let mut sq = vec![0.0; grid.cols()];
                    for (&r, &p) in phi {
                        let i = r.i2;
                        if r.i1 != DyadicInterval::ROOT || i.level >= grid.n2 {
                            continue;
                        }
                        let h = LineFunction::haar(grid.n2, i);
                        lhs += bx.inner(&h) * sx.average(i) * p;
                        for c in i.cell_range(grid.n2) {
                            sq[c] += p * p / i.side_length();
                        }
                    }
                    let rhs: f64 = sq
                        .iter()
                        .zip(snx.values())
                        .map(|(q, w)| q.sqrt() * w)
                        .sum::<f64>()
                        / grid.cols() as f64;
                    let den = bmo * rhs;
                    if den > 0.0 {
                        let ratio = lhs.abs() / den;
                        if worst.is_none_or(|(r, _)| ratio > r) {
                            worst = Some((ratio, den));
                        }
                    }
                }
                match worst {
                    Some((ratio, _)) => rep.push(digest, ratio),
                    None => rep.skip(),
                }
            }
        }
    }
    Ok(rep)
}
