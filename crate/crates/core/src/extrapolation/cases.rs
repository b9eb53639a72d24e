use serde::{Deserialize, Serialize};

use super::rdf::{plain_exponent, rdf_plain, RdfOutput};
use super::split::{conj, two_index_characteristic, SplitWeights};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::{integral_pyramid, GridFunction, RectStats};
use crate::norms::{lp_norm, lp_norm_measure};
use crate::rng::{derive_seed, rng, uniform_positive};
use crate::weights::{multilinear_characteristic, Weight};

/// Relative slack allowed in inequalities that hold exactly in real arithmetic.
pub const CHAIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `q_n < p_n`, handled by the primed algorithm.
    #[serde(rename = "1")]
    One,
    /// `q_n > p_n`, including `q_n = ∞`.
    #[serde(rename = "2")]
    Two,
}

/// `1/s = |1/q_n − 1/p_n|` together with the case it selects.
pub fn select_case(split: &SplitWeights) -> Result<(Case, f64)> {
    let d = split.q_n.recip() - split.p_n().recip();
    if d.abs() < 1e-15 {
        return Err(Error::WrongCase("q_n = p_n leaves nothing to extrapolate".into()));
    }
    Ok(if d > 0.0 { (Case::One, 1.0 / d) } else { (Case::Two, -1.0 / d) })
}

fn expect_case(split: &SplitWeights, want: Case) -> Result<f64> {
    let (case, s) = select_case(split)?;
    if case != want {
        let msg = match want {
            Case::One => "this construction needs q_n < p_n",
            Case::Two => "this construction needs q_n > p_n",
        };
        return Err(Error::WrongCase(msg.into()));
    }
    Ok(s)
}

/// Characteristics of the tuples with `v_n` in the last slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Memberships {
    /// `[(w₁, …, w_{n−1}, v_n)]_{A_p⃗}`.
    pub w_tuple: f64,
    /// `[(λ₁, w₂, …, w_{n−1}, v_n)]_{A_p⃗}`.
    pub lambda_tuple: f64,
    /// `[v_n ŵ^{1/p_n'}]_{A_{p_n,p}(ŵ)}`.
    pub two_index_w: f64,
    /// `[v_n λ̂^{1/p_n'}]_{A_{p_n,p}(λ̂)}`.
    pub two_index_lambda: f64,
    pub finite: bool,
}

fn memberships(split: &SplitWeights, v: &Weight) -> Result<Memberships> {
    let w = multilinear_characteristic(&split.with_last(v, false), &split.p)?;
    let l = multilinear_characteristic(&split.with_last(v, true), &split.p)?;
    let pn_conj = conj(split.p_n())?;
    let p = split.p_joint();
    let tw = two_index_characteristic(&v.mul(&split.w_hat.pow(1.0 / pn_conj))?, split.p_n(), p, &split.w_hat)?;
    let tl =
        two_index_characteristic(&v.mul(&split.lambda_hat.pow(1.0 / pn_conj))?, split.p_n(), p, &split.lambda_hat)?;
    let finite = !w.infinite && !l.infinite && [w.value, l.value, tw, tl].iter().all(|x| x.is_finite());
    Ok(Memberships { w_tuple: w.value, lambda_tuple: l.value, two_index_w: tw, two_index_lambda: tl, finite })
}

/// Worst `lhs / rhs` of an inequality over sampled inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub samples: usize,
    pub max_ratio: f64,
    pub ok: bool,
}

impl ChainCheck {
    fn run(samples: usize, mut pair: impl FnMut(usize) -> Result<(f64, f64)>) -> Result<Self> {
        let mut max_ratio: f64 = 0.0;
        for i in 0..samples {
            let (lhs, rhs) = pair(i)?;
            if rhs > 0.0 {
                max_ratio = max_ratio.max(lhs / rhs);
            } else if lhs > 0.0 {
                max_ratio = f64::INFINITY;
            }
        }
        Ok(ChainCheck { samples, max_ratio, ok: max_ratio <= 1.0 + CHAIN_TOL })
    }
}

/// Positive test functions: random levels mixed with rectangle indicators.
fn sample_input(grid: crate::grid::ProductGrid, seed: u64, i: usize) -> GridFunction {
    use rand::Rng;
    let s = derive_seed(seed, i as u64);
    if i % 4 == 3 {
        let mut r = rng(s);
        let rect = grid.rectangles().nth(r.gen_range(0..grid.rect_count())).expect("in range");
        GridFunction::indicator(grid, rect)
    } else {
        uniform_positive(grid, 0.0, 1.0, s)
    }
}

#[derive(Debug, Clone)]
pub struct Case1Output {
    pub v_n: Weight,
    pub memberships: Memberships,
    /// `‖fW_λ‖_{L^q(λ̂)} ≤ ‖f v_n λ̂^{1/p+1/p_n'}‖_{L^p}·‖H^{q_n/s} w_n^{−q_n'/s}‖_{L^s}`.
    pub chain: ChainCheck,
    /// Largest relative cell gap in `H^{1−q_n/s} w_n^{1−q_n'+q_n'/s} = H^{q_n/p_n} w_n^{−q_n'/p_n}`.
    pub identity_gap: f64,
    /// `‖H^{q_n/s} w_n^{−q_n'/s}‖_{L^s}`.
    pub h_factor: f64,
}

/// `v_n = H^{−q_n/s} w_n^{1+q_n'/s}` for `1/s = 1/q_n − 1/p_n > 0`.
pub fn case1_vn(split: &SplitWeights, big_h: &GridFunction, samples: usize, seed: u64) -> Result<Case1Output> {
    let s = expect_case(split, Case::One)?;
    let q_n = split.q_n.expect_finite("q_n")?;
    let qc = split.qn_conj();
    let wn = &split.ws[split.n() - 1];
    let big_h = Weight::new(big_h.clone())?;
    let v_n = big_h.pow(-q_n / s).mul(&wn.pow(1.0 + qc / s))?;
    let memberships = memberships(split, &v_n)?;

    let identity_gap = match split.p_n() {
        Exponent::Finite(pn) => {
            let lhs = &big_h.powf(1.0 - q_n / s) * &wn.powf(1.0 - qc + qc / s);
            let rhs = &big_h.powf(q_n / pn) * &wn.powf(-qc / pn);
            lhs.values().iter().zip(rhs.values()).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max)
        }
        // p_n = ∞: 1/s = 1/q_n and both sides are w_n^0 H^0 = 1
        Exponent::Infinite => {
            let lhs = &big_h.powf(1.0 - q_n / s) * &wn.powf(1.0 - qc + qc / s);
            lhs.values().iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max)
        }
    };

    let p = split.p_joint();
    let h_factor = lp_norm(&(&big_h.powf(q_n / s) * &wn.powf(-qc / s)), Exponent::Finite(s), None)?;
    let lw = split.big_lambda.function() * &split.lambda_hat.powf(1.0 / split.q);
    let lv = v_n.function() * &split.lambda_hat.powf(1.0 / p + 1.0 / conj(split.p_n())?);
    let grid = wn.grid();
    let chain = ChainCheck::run(samples, |i| {
        let f = sample_input(grid, seed, i);
        let lhs = lp_norm(&f, Exponent::Finite(split.q), Some(&lw))?;
        let rhs = lp_norm(&f, Exponent::Finite(p), Some(&lv))? * h_factor;
        Ok((lhs, rhs))
    })?;
    Ok(Case1Output { v_n, memberships, chain, identity_gap, h_factor })
}

/// `h = F^{a−1} / ‖F‖^{a−1}_{L^a(U)}` with `F = f^p`, `a = q/p` and `U = W_λ^q λ̂`,
/// so that `‖h‖_{L^{s/p}(U)} = 1` and `∫F h U = ‖F‖_{L^a(U)}`.
pub fn dual_element(f: &GridFunction, split: &SplitWeights) -> Result<GridFunction> {
    expect_case(split, Case::Two)?;
    let p = split.p_joint();
    let a = split.q / p;
    let u = split.big_lambda.pow(split.q).mul(&split.lambda_hat)?;
    let big_f = f.abs().powf(p);
    let norm = lp_norm_measure(&big_f, Exponent::Finite(a), Some(u.function()))?;
    if norm == 0.0 {
        return Err(Error::Degenerate("dual element of the zero function".into()));
    }
    Ok(big_f.powf(a - 1.0).scale(norm.powf(1.0 - a)))
}

/// Per-rectangle check of the Hölder step `⟨Y⟩ ≤ ⟨ℛg⟩^θ ⟨X^{1/(1−θ)}⟩^{1−θ}`
/// in `L^1(ŵ)`-averages, where `Y = v_n^p ŵ^{p/p_n'}` and `X = Y / (ℛg)^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleCheck {
    pub theta: f64,
    pub rectangles: usize,
    pub max_ratio: f64,
    pub ok: bool,
    /// Largest relative gap between `X^{1/(1−θ)}` and `W_λ^q λ̂^{−q/q_n'} ŵ^{q/q_n'}`.
    pub closed_form_gap: f64,
}

#[derive(Debug, Clone)]
pub struct Case2Output {
    pub h: GridFunction,
    pub rdf: RdfOutput,
    pub v_n: Weight,
    pub memberships: Memberships,
    pub rectangles: RectangleCheck,
    /// `[W_w]_{A_{q_n,q}(ŵ)}^{q_n'/p_n'}`.
    pub bound_shape: f64,
    /// `(∫f^p h W_λ^q λ̂)^{1/p} ≤ ‖f v_n λ̂^{1/p_n'}‖_{L^p(λ̂)}`.
    pub chain: ChainCheck,
    /// `‖v_n w_n^{−1}‖_{L^s}` against `‖H‖^{1/p}_{L^{s/p}(W_λ^q λ̂)}`.
    pub last_factor: (f64, f64),
}

/// `v_n = H^{1/p} W_λ^{q/p} λ̂^{−1/p_n'}` with `H` from the plain algorithm
/// started at the dual element `h`.
pub fn case2_vn(split: &SplitWeights, h: &GridFunction, k_max: u32, samples: usize, seed: u64) -> Result<Case2Output> {
    let s = expect_case(split, Case::Two)?;
    let p = split.p_joint();
    let q = split.q;
    let qc = split.qn_conj();
    let pn_conj = conj(split.p_n())?;
    let u = split.big_lambda.pow(q).mul(&split.lambda_hat)?;
    let rdf = rdf_plain(h, split, s, k_max)?;
    let big_h = Weight::new(rdf.big_h.clone())?;
    let v_n = big_h.pow(1.0 / p).mul(&split.big_lambda.pow(q / p))?.mul(&split.lambda_hat.pow(-1.0 / pn_conj))?;
    let memberships = memberships(split, &v_n)?;

    let theta = p * plain_exponent(split) / s;
    let y = &v_n.powf(p) * &split.w_hat.powf(p / pn_conj);
    let x = y.zip_map(&rdf.fixed_point.powf(theta), |a, b| a / b)?;
    let grid = h.grid();
    let mu = split.w_hat.function();
    let den = integral_pyramid(mu);
    let sy = integral_pyramid(&(&y * mu));
    let sg = integral_pyramid(&(&rdf.fixed_point * mu));
    let degenerate = 1.0 - theta < 1e-12;
    let xe = if degenerate { x.clone() } else { x.powf(1.0 / (1.0 - theta)) };
    let sx = integral_pyramid(&(&xe * mu));
    let xmax = RectStats::new(&x);
    let mut max_ratio: f64 = 0.0;
    let mut count = 0;
    for r in grid.rectangles() {
        let m = den.get(r);
        let a = (sy.get(r) / m).powf(1.0 / p);
        let second = if degenerate { xmax.max(r) } else { (sx.get(r) / m).powf(1.0 - theta) };
        let b = ((sg.get(r) / m).powf(theta) * second).powf(1.0 / p);
        max_ratio = max_ratio.max(a / b);
        count += 1;
    }
    let closed = &(&split.big_lambda.powf(q) * &split.lambda_hat.powf(-q / qc)) * &split.w_hat.powf(q / qc);
    let closed_form_gap = if degenerate {
        0.0
    } else {
        xe.values().iter().zip(closed.values()).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max)
    };
    let rectangles = RectangleCheck { theta, rectangles: count, max_ratio, ok: max_ratio <= 1.0 + CHAIN_TOL, closed_form_gap };

    let bound_shape = split.characteristics.w_w.powf(qc / pn_conj);
    let lv = v_n.function() * &split.lambda_hat.powf(1.0 / pn_conj + 1.0 / p);
    let hu = h * u.function();
    let chain = ChainCheck::run(samples, |i| {
        let f = sample_input(grid, seed, i);
        let lhs = (&f.powf(p) * &hu).integral().powf(1.0 / p);
        let rhs = lp_norm(&f, Exponent::Finite(p), Some(&lv))?;
        Ok((lhs, rhs))
    })?;
    let wn = &split.ws[split.n() - 1];
    let last = lp_norm(v_n.div(wn)?.function(), Exponent::Finite(s), None)?;
    let via_h = lp_norm_measure(&big_h, Exponent::Finite(s / p), Some(u.function()))?.powf(1.0 / p);
    Ok(Case2Output {
        h: h.clone(),
        rdf,
        v_n,
        memberships,
        rectangles,
        bound_shape,
        chain,
        last_factor: (last, via_h),
    })
}
