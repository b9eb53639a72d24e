//! Execution of configured tasks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use dyadic_core::bmo::{bmo_nu_norm, bmo_sigma_nu_norm, slice_bmo_check};
use dyadic_core::bounds::{
    complexity_sweep, estimate_norm, lower_bound_recover, sweep_operator, verify_upper_bound, NonDegenerateKernel,
    SamplerConfig, WeightTuple,
};
use dyadic_core::extrapolation::{
    demo_extrapolation, extrapolate, split_weights, DemoConfig, ExtrapolationConfig, Scenario,
};
use dyadic_core::haar::haar_rect;
use dyadic_core::io::{load_function, load_tuple};
use dyadic_core::ops::{
    commutator, identity_like_shift, Family, MaximalOperator, MultilinearOperator, Operator, OperatorSpec,
    ZeroOperator,
};
use dyadic_core::reference;
use dyadic_core::rng::{derive_seed, random_haar_function, uniform_function};
use dyadic_core::weights::{
    bloom_setup, duality_identity_check, gen_weight, lemma1_check, multilinear_characteristic,
    BloomSetup, Weight,
};
use dyadic_core::{DyadicRectangle, Error, Exponent, ExponentTuple, GridFunction, ProductGrid, Result};

use crate::config::{Builtin, ExperimentConfig, OperatorChoice, ScenarioSpec, SymbolSpec, Task, WeightSource};
use crate::report::{CheckEntry, RunReport};

/// Tolerance for comparisons that hold exactly up to rounding.
pub const EXACT_TOL: f64 = 1e-12;
/// Slack on the geometric-series bounds of the extrapolation algorithms.
pub const SERIES_SLACK: f64 = 2.05;

pub struct Runner<'a> {
    pub config: &'a ExperimentConfig,
    pub grid: ProductGrid,
    pub out: PathBuf,
}

/// A weight tuple with its exponents, Bloom slot and `λ_j`.
pub struct Resolved {
    pub p: ExponentTuple,
    pub slot: usize,
    pub ws: Vec<Weight>,
    pub lambda: Weight,
}

impl Resolved {
    fn bloom(&self) -> Result<BloomSetup> {
        bloom_setup(&self.ws, &self.lambda, &self.p, self.slot)
    }
}

impl<'a> Runner<'a> {
    pub fn new(config: &'a ExperimentConfig, out: &Path) -> Result<Self> {
        let grid = ProductGrid::new(config.depths[0], config.depths[1])?;
        Ok(Runner { config, grid, out: out.to_path_buf() })
    }

    fn seed(&self, s: u64) -> u64 {
        derive_seed(self.config.seed, s)
    }

    fn sampler(&self, s: &SamplerConfig) -> SamplerConfig {
        SamplerConfig { seed: self.seed(s.seed), ..*s }
    }

    fn weight(&self, w: &WeightSource) -> Result<Weight> {
        let w = match w {
            WeightSource::Generate { weight, seed } => gen_weight(self.grid, weight, self.seed(*seed))?,
            WeightSource::File { path } => Weight::new(load_function(path)?.1)?,
        };
        self.grid.check_same(w.grid())?;
        Ok(w)
    }

    pub fn scenario(&self, name: &str) -> Result<Resolved> {
        let spec: &ScenarioSpec = &self.config.scenarios[name];
        if let Some(m) = &spec.manifest {
            let t = load_tuple(m)?;
            for w in &t.ws {
                self.grid.check_same(w.grid())?;
            }
            let lambda = t.lambda.unwrap_or_else(|| t.ws[t.slot - 1].clone());
            self.grid.check_same(lambda.grid())?;
            return Ok(Resolved { p: t.p, slot: t.slot, ws: t.ws, lambda });
        }
        let ws = spec.weights.iter().map(|w| self.weight(w)).collect::<Result<Vec<_>>>()?;
        let slot = spec.slot.unwrap_or(1);
        let lambda = match &spec.lambda {
            Some(l) => self.weight(l)?,
            None => ws[slot - 1].clone(),
        };
        Ok(Resolved { p: spec.p.clone().expect("validated"), slot, ws, lambda })
    }

    pub fn symbol(&self, s: &SymbolSpec) -> Result<GridFunction> {
        let g = self.grid;
        let sign = |x: f64| if x < 0.5 { -1.0 } else { 1.0 };
        let b = match s {
            SymbolSpec::Constant { value } => GridFunction::constant(g, *value),
            SymbolSpec::Sign { axis: 1 } => GridFunction::from_point_fn(g, |x, _| sign(x)),
            SymbolSpec::Sign { axis: 2 } => GridFunction::from_point_fn(g, |_, y| sign(y)),
            SymbolSpec::Sign { axis } => return Err(Error::InvalidInput(format!("axis {axis} is not 1 or 2"))),
            SymbolSpec::SignProduct => GridFunction::from_point_fn(g, |x, y| sign(x) * sign(y)),
            SymbolSpec::Haar { rect } => {
                let r = DyadicRectangle::from_parts(rect[0], rect[1], rect[2], rect[3])?;
                if !g.fits(r) {
                    return Err(Error::InvalidInput(format!("{r} does not fit the grid")));
                }
                haar_rect(g, r)
            }
            SymbolSpec::Random { seed } => uniform_function(g, self.seed(*seed)),
            SymbolSpec::File { path } => load_function(path)?.1,
        };
        g.check_same(b.grid())?;
        Ok(b)
    }

    fn operator(&self, c: &OperatorChoice) -> Result<Box<dyn MultilinearOperator>> {
        if let Some(spec) = &c.model {
            return Ok(Box::new(spec.build(self.grid)?));
        }
        let n = c.n.expect("validated");
        Ok(match c.builtin.expect("validated") {
            Builtin::Zero => Box::new(ZeroOperator { n }),
            Builtin::Maximal => Box::new(MaximalOperator { n }),
            Builtin::IdentityShift if n == 1 => Box::new(identity_like_shift(self.grid)),
            Builtin::IdentityShift => {
                return Err(Error::Unsupported("the identity-like shift is linear; use n = 1".into()))
            }
        })
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        fs::write(self.out.join(format!("{name}.json")), serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    /// Runs one task, turning errors into a failed check.
    pub fn run_task(&self, task: &Task, report: &mut RunReport) {
        let id = task.id().to_string();
        let mut checks = Vec::new();
        if let Err(e) = self.dispatch(task, &mut checks) {
            let name = match (&e, task) {
                (Error::InvalidCoefficients(_), Task::OpApply { operator, .. }) => normalization_id(operator),
                _ => "error".to_string(),
            };
            checks.push((name, CheckEntry::outcome(false).with_detail(e.to_string())));
        }
        for (name, c) in checks {
            report.insert(format!("{id}/{name}"), c);
        }
    }

    fn dispatch(&self, task: &Task, checks: &mut Vec<(String, CheckEntry)>) -> Result<()> {
        let mut push = |name: &str, c: CheckEntry| checks.push((name.to_string(), c));
        match task {
            Task::WeightsCheck { id, scenario } => {
                let s = self.scenario(scenario)?;
                let a = multilinear_characteristic(&s.ws, &s.p)?;
                push("a-p", CheckEntry::outcome(a.is_finite()).with_value(a.value));
                let lemma = lemma1_check(&s.ws, &s.p)?;
                push(
                    "one-weight",
                    CheckEntry::outcome(lemma.passed())
                        .with_detail(format!("{} checks, {} violations", lemma.checks.len(), lemma.violations.len())),
                );
                let mut duality = Vec::new();
                let dual_ok = s.p.0.iter().all(|e| matches!(e, Exponent::Finite(v) if *v > 1.0)) && s.p.recip_sum() < 1.0;
                if dual_ok {
                    for i in 0..s.ws.len() {
                        let d = duality_identity_check(&s.ws, &s.p, i)?;
                        push(&format!("duality-{}", i + 1), CheckEntry::outcome(d.passed()));
                        duality.push(d);
                    }
                }
                let bloom = s.bloom()?;
                let ch = &bloom.characteristics;
                let star = &ch.astar;
                push("a-star", CheckEntry::outcome(star.is_finite()).with_value(star.value));
                push("bloom-lambda", CheckEntry::outcome(ch.lambda_tuple.is_finite()).with_value(ch.lambda_tuple.value));
                push("nu-ainfty", CheckEntry::measured(ch.nu_ainfty.value));
                #[derive(Serialize)]
                struct Out<'a> {
                    a_p: f64,
                    a_star: f64,
                    one_weight: &'a dyadic_core::weights::LemmaReport,
                    duality: &'a [dyadic_core::weights::LemmaReport],
                    bloom: &'a dyadic_core::weights::BloomCharacteristics,
                }
                self.write_json(id, &Out { a_p: a.value, a_star: star.value, one_weight: &lemma, duality: &duality, bloom: ch })?;
            }
            Task::Bmo { id, scenario, symbol } => {
                let s = self.scenario(scenario)?;
                let b = self.symbol(symbol)?;
                let bloom = s.bloom()?;
                let nu = bmo_nu_norm(&b, &bloom.nu)?;
                push("bmo-nu", CheckEntry::measured(nu.norm));
                let sl = slice_bmo_check(&b, &bloom.nu)?;
                push(
                    "slices",
                    CheckEntry::outcome(sl.slice_over_rect.is_finite() && sl.rect_over_slice.is_finite())
                        .with_value(sl.slice_over_rect),
                );
                let sigma = match &bloom.sigma[bloom.slot - 1] {
                    Some(sg) => {
                        let r = bmo_sigma_nu_norm(&b, &bloom.nu, sg)?;
                        push("bmo-sigma", CheckEntry::measured(r.report.norm));
                        Some(r)
                    }
                    None => None,
                };
                #[derive(Serialize)]
                struct Out<'a> {
                    bmo_nu: &'a dyadic_core::bmo::BmoReport,
                    slices: &'a dyadic_core::bmo::SliceComparison,
                    bmo_sigma: Option<&'a dyadic_core::bmo::SigmaBmoReport>,
                }
                self.write_json(id, &Out { bmo_nu: &nu, slices: &sl, bmo_sigma: sigma.as_ref() })?;
            }
            Task::OpApply { id, operator, trials, seed } => {
                let op = operator.build(self.grid)?;
                push(&normalization_id(operator), CheckEntry::outcome(true));
                let n = op.arity();
                let mut worst: f64 = 0.0;
                let mut annihilation: f64 = 0.0;
                let c = GridFunction::constant(self.grid, 1.7);
                for t in 0..*trials {
                    let s = derive_seed(self.seed(*seed), t as u64);
                    let fs: Vec<_> = (0..n)
                        .map(|i| random_haar_function(self.grid, 0.7, false, derive_seed(s, i as u64)))
                        .collect();
                    let fast = op.apply(&fs)?;
                    let slow = match &op {
                        Operator::Shift(x) => reference::shift(x, &fs),
                        Operator::Partial(x) => reference::partial(x, &fs),
                        Operator::Full(x) => reference::full(x, &fs),
                    };
                    let scale = slow.max_abs().max(1.0);
                    worst = worst.max(fast.max_abs_diff(&slow)? / scale);
                    for j in 1..=n {
                        annihilation = annihilation.max(commutator(&c, &op, j, &fs)?.max_abs());
                    }
                }
                push("oracle", CheckEntry::at_most(worst, EXACT_TOL));
                push("annihilation", CheckEntry::at_most(annihilation, EXACT_TOL));
                #[derive(Serialize)]
                struct Out<'a> {
                    operator: &'a OperatorSpec,
                    label: String,
                    trials: usize,
                    oracle_max_rel_diff: f64,
                    constant_commutator_max: f64,
                }
                self.write_json(
                    id,
                    &Out {
                        operator,
                        label: op.label(),
                        trials: *trials,
                        oracle_max_rel_diff: worst,
                        constant_commutator_max: annihilation,
                    },
                )?;
            }
            Task::NormEstimate { id, scenario, operator, sampler } => {
                let s = self.scenario(scenario)?;
                let op = self.operator(operator)?;
                let rep = estimate_norm(op.as_ref(), &WeightTuple::new(s.ws.clone())?, &s.p, &self.sampler(sampler))?;
                push("ratio", CheckEntry::outcome(rep.is_finite()).with_value(rep.max).with_ratios(rep.clone()));
                self.write_json(id, &rep)?;
            }
            Task::CommutatorVerify { id, scenario, symbol, operator, sampler, sweep } => {
                let s = self.scenario(scenario)?;
                let b = self.symbol(symbol)?;
                let bloom = s.bloom()?;
                let op: Box<dyn MultilinearOperator> = match operator {
                    Some(c) => self.operator(c)?,
                    None => sweep_operator(Family::Shift, &bloom, 0, self.seed(0))?,
                };
                let sampler = self.sampler(sampler);
                let rep = verify_upper_bound(&b, op.as_ref(), &bloom, &sampler)?;
                push(
                    "ratio",
                    CheckEntry::outcome(rep.ratios.is_finite()).with_value(rep.ratios.max).with_ratios(rep.ratios.clone()),
                );
                let sweep_rep = match sweep {
                    Some(sw) => {
                        let r = complexity_sweep(sw.family, &b, &bloom, &sw.ks, sw.beta, &sampler, self.seed(sw.coeff_seed))?;
                        r.write_csv(fs::File::create(self.out.join(format!("{id}-sweep.csv")))?)?;
                        let worst = r.rows.iter().map(|x| x.slack).fold(0.0, f64::max);
                        push("sweep-shape", CheckEntry::outcome(r.shape_ok).with_value(worst));
                        Some(r)
                    }
                    None => None,
                };
                #[derive(Serialize)]
                struct Out<'a> {
                    operator: String,
                    upper: &'a dyadic_core::bounds::UpperBoundReport,
                    sweep: Option<&'a dyadic_core::bounds::SweepReport>,
                }
                self.write_json(id, &Out { operator: op.label(), upper: &rep, sweep: sweep_rep.as_ref() })?;
            }
            Task::LowerBound { id, scenario, symbol, config } => {
                let s = self.scenario(scenario)?;
                let b = self.symbol(symbol)?;
                let bloom = s.bloom()?;
                let kernel = NonDegenerateKernel::new(self.grid, bloom.n());
                let rep = lower_bound_recover(&b, &bloom, &kernel, &config.unwrap_or_default())?;
                push("recovered", CheckEntry::outcome(rep.recovered > 0.0).with_value(rep.recovered));
                if let Some(r) = rep.ratio {
                    push("ratio", CheckEntry::measured(r));
                }
                self.write_json(id, &rep)?;
            }
            Task::Extrapolate { id, scenario, q_n, k_max, samples, seed, demo } => {
                let s = self.scenario(scenario)?;
                if s.slot != 1 {
                    return Err(Error::Unsupported("extrapolation is implemented for the Bloom slot j = 1".into()));
                }
                let split = split_weights(&s.ws, &s.lambda, &s.p, *q_n)?;
                let cfg = ExtrapolationConfig { k_max: *k_max, samples: *samples, seed: self.seed(*seed) };
                let rep = extrapolate(&split, &cfg)?;
                let pr = &rep.properties;
                let n_est = rep.norm.estimate;
                push("h-le-H", CheckEntry::outcome(pr.h_le_h));
                push("norm-bound", CheckEntry::at_most(pr.norm_bound.value, SERIES_SLACK));
                push(
                    "a1-bounds",
                    CheckEntry::at_most(pr.a1_bounds.w.max(pr.a1_bounds.lambda), SERIES_SLACK * n_est),
                );
                let m = &rep.characteristics.v_n;
                push(
                    "memberships",
                    CheckEntry::outcome(m.finite).with_value(m.w_tuple.max(m.lambda_tuple)),
                );
                push("chain", CheckEntry::at_most(rep.chain.max_ratio, 1.0 + dyadic_core::extrapolation::CHAIN_TOL));
                if let Some(r) = &rep.rectangles {
                    push("rectangles", CheckEntry::at_most(r.max_ratio, 1.0 + dyadic_core::extrapolation::CHAIN_TOL));
                }
                push("tail", CheckEntry::measured(rep.tail));
                let demo_rep = match demo {
                    Some(d) => {
                        let op = self.operator(&d.operator)?;
                        let mut q = s.p.clone();
                        let last = q.len() - 1;
                        q.0[last] = *q_n;
                        let mut dc = DemoConfig::new(self.sampler(&d.sampler));
                        dc.extrapolation = cfg;
                        dc.ainfty_ps = d.ainfty_ps.clone();
                        let sc = Scenario { name: scenario.clone(), ws: s.ws.clone(), lambda1: s.lambda.clone() };
                        let r = demo_extrapolation(op.as_ref(), &s.p, &q, &[sc], &dc)?;
                        let sr = &r.scenarios[0];
                        push("demo-hypothesis", CheckEntry::measured(sr.hypothesis));
                        push("demo-conclusion", CheckEntry::outcome(sr.conclusion.is_finite()).with_value(sr.conclusion));
                        let worst = r.ainfty.iter().map(|a| a.max_ratio).fold(0.0, f64::max);
                        push("ainfty-pairs", CheckEntry::outcome(worst.is_finite()).with_value(worst));
                        Some(r)
                    }
                    None => None,
                };
                #[derive(Serialize)]
                struct Out<'a> {
                    #[serde(flatten)]
                    report: &'a dyadic_core::extrapolation::ExtrapolationReport,
                    #[serde(skip_serializing_if = "Option::is_none")]
                    demo: Option<&'a dyadic_core::extrapolation::DemoReport>,
                }
                self.write_json(id, &Out { report: &rep, demo: demo_rep.as_ref() })?;
            }
        }
        Ok(())
    }
}

fn normalization_id(spec: &OperatorSpec) -> String {
    match spec.family() {
        Family::Shift => "shift-normalization",
        Family::PartialParaproduct => "partial-normalization",
        Family::FullParaproduct => "full-normalization",
    }
    .to_string()
}
