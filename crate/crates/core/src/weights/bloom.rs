use serde::{Deserialize, Serialize};

use super::characteristics::{
    ainfty_characteristic, astar_characteristic, dual_factor, multilinear_characteristic,
    sup_over_rectangles, CharacteristicReport, Factor,
};
use super::Weight;
use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentTuple};

/// `A_∞` characteristics above this are reported as effectively infinite.
pub const AINFTY_FLAG: f64 = 1e8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BloomCharacteristics {
    pub w_tuple: CharacteristicReport,
    pub lambda_tuple: CharacteristicReport,
    pub nu_ainfty: CharacteristicReport,
    pub astar: CharacteristicReport,
    /// `sup_R ⟨ν⟩_R / (⟨η_j⟩^{1/p_j'} Π_{i≠j}⟨σ_i⟩^{1/p_i'} ⟨w^p⟩^{1/p})`; absent when `p_j = 1` or `p = ∞`.
    pub factorization_constant: Option<f64>,
    /// `[w⃗]·[λ⃗]·factorization_constant`, the bound the joint class inherits.
    pub implied_bound: Option<f64>,
    pub nu_flagged: bool,
}

/// Weights of a two-weight commutator problem with Bloom weight `ν = w_j λ_j^{-1}`.
#[derive(Debug, Clone)]
pub struct BloomSetup {
    /// One-based slot `j`.
    pub slot: usize,
    pub p: ExponentTuple,
    pub ws: Vec<Weight>,
    pub lambda: Weight,
    pub nu: Weight,
    /// `σ_i = w_i^{-p_i'}`; `None` when `p_i = 1`.
    pub sigma: Vec<Option<Weight>>,
    /// `σ_{n+1} = (ν^{-1}w)^p`; `None` when `p = ∞`.
    pub sigma_last: Option<Weight>,
    /// `η_j = λ_j^{-p_j'}`; `None` when `p_j = 1`.
    pub eta: Option<Weight>,
    pub characteristics: BloomCharacteristics,
}

impl BloomSetup {
    pub fn n(&self) -> usize {
        self.ws.len()
    }

    pub fn w(&self) -> Weight {
        Weight::product(&self.ws).expect("tuple is non-empty")
    }

    /// `ν^{-1} w`, the output weight of the commutator estimate.
    pub fn output_weight(&self) -> Weight {
        self.w().div(&self.nu).expect("same grid")
    }

    /// `(w₁, …, w_n, ν w^{-1})`.
    pub fn astar_tuple(&self) -> Vec<Weight> {
        let mut t = self.ws.clone();
        t.push(self.nu.div(&self.w()).expect("same grid"));
        t
    }

    /// `(w₁, …, λ_j, …, w_n)`.
    pub fn lambda_tuple(&self) -> Vec<Weight> {
        let mut t = self.ws.clone();
        t[self.slot - 1] = self.lambda.clone();
        t
    }

    /// Max over cells of `|σ_{n+1}ν − w·σ_{n+1}^{1/p'}|`, relative to the left side.
    pub fn sigma_identity_error(&self) -> Option<f64> {
        let s = self.sigma_last.as_ref()?;
        let pj = self.p.joint().ok()?.value();
        let pc = if pj > 1.0 { 1.0 - 1.0 / pj } else { 0.0 };
        let w = self.w();
        let lhs = s.mul(&self.nu).ok()?;
        let rhs = w.mul(&s.pow(pc)).ok()?;
        Some(
            lhs.values()
                .iter()
                .zip(rhs.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / a.abs())),
        )
    }
}

pub fn bloom_setup(ws: &[Weight], lambda: &Weight, p: &ExponentTuple, slot: usize) -> Result<BloomSetup> {
    let n = ws.len();
    if p.len() != n {
        return Err(Error::Arity { expected: n, found: p.len() });
    }
    if slot == 0 || slot > n {
        return Err(Error::InvalidInput(format!("Bloom slot {slot} outside 1..={n}")));
    }
    let grid = ws[0].grid();
    grid.check_same(lambda.grid())?;
    let nu = ws[slot - 1].div(lambda)?;
    let w = Weight::product(ws)?;

    let sigma = ws
        .iter()
        .zip(&p.0)
        .map(|(wi, &pi)| match pi {
            Exponent::Finite(1.0) => Ok(None),
            _ => Ok(Some(wi.pow(-pi.conjugate()?.value()))),
        })
        .collect::<Result<Vec<_>>>()?;
    let pj = p.joint()?;
    let sigma_last = match pj {
        Exponent::Infinite => None,
        Exponent::Finite(v) => Some(w.div(&nu)?.pow(v)),
    };
    let eta = match p.get(slot - 1) {
        Exponent::Finite(1.0) => None,
        q => Some(lambda.pow(-q.conjugate()?.value())),
    };

    let mut lt = ws.to_vec();
    lt[slot - 1] = lambda.clone();
    let w_tuple = multilinear_characteristic(ws, p)?;
    let lambda_tuple = multilinear_characteristic(&lt, p)?;
    let nu_ainfty = ainfty_characteristic(&nu);
    let mut at = ws.to_vec();
    at.push(nu.div(&w)?);
    let astar = astar_characteristic(&at, p)?;

    let factorization_constant = match (pj, p.get(slot - 1)) {
        (Exponent::Finite(pv), pslot) if pslot != Exponent::Finite(1.0) => {
            let mut factors = vec![Factor::avg(&nu, 1.0), Factor::avg(&w.pow(pv), -1.0 / pv)];
            for (wi, &pi) in lt.iter().zip(&p.0) {
                factors.push(invert(dual_factor(wi, pi)?));
            }
            Some(sup_over_rectangles(grid, &factors).value)
        }
        _ => None,
    };
    let implied_bound = factorization_constant.map(|c| c * w_tuple.value * lambda_tuple.value);

    Ok(BloomSetup {
        slot,
        p: p.clone(),
        ws: ws.to_vec(),
        lambda: lambda.clone(),
        nu,
        sigma,
        sigma_last,
        eta,
        characteristics: BloomCharacteristics {
            w_tuple,
            lambda_tuple,
            nu_flagged: nu_ainfty.value > AINFTY_FLAG || !nu_ainfty.is_finite(),
            nu_ainfty,
            astar,
            factorization_constant,
            implied_bound,
        },
    })
}

fn invert(f: Factor) -> Factor {
    match f {
        Factor::Avg { sums, exponent } => Factor::Avg { sums, exponent: -exponent },
        Factor::Max { maxs, exponent } => Factor::Max { maxs, exponent: -exponent },
        Factor::ExpAvg { sums, exponent } => Factor::ExpAvg { sums, exponent: -exponent },
    }
}
