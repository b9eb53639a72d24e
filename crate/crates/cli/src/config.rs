//! Experiment configuration, schema version `dyadic-lab/1`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dyadic_core::bounds::{LowerBoundConfig, SamplerConfig};
use dyadic_core::ops::{Family, OperatorSpec};
use dyadic_core::weights::WeightKind;
use dyadic_core::{Exponent, ExponentTuple};

pub const SCHEMA: &str = "dyadic-lab/1";

/// A configuration that failed validation, with the path of the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    /// `[N₁, N₂]`.
    pub depths: [u32; 2],
    /// Base seed; every seeded element mixes its own seed into this one.
    pub seed: u64,
    #[serde(default)]
    pub scenarios: BTreeMap<String, ScenarioSpec>,
    pub tasks: Vec<Task>,
}

/// A weight tuple, given inline or through a tuple manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<ExponentTuple>,
    /// One-based Bloom slot `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<WeightSource>,
    /// `λ_j`; defaults to `w_j`, which makes `ν ≡ 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<WeightSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSource {
    Generate { weight: WeightKind, seed: u64 },
    File { path: PathBuf },
}

/// The symbol `b` of a commutator or BMO computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    Constant { value: f64 },
    /// `sign(x_axis − 1/2)`.
    Sign { axis: u8 },
    /// `sign(x₁ − 1/2)·sign(x₂ − 1/2)`.
    SignProduct,
    /// `h_R` for `R = [level₁, index₁, level₂, index₂]`.
    Haar { rect: [u32; 4] },
    /// Uniform values in `[-1, 1]`.
    Random { seed: u64 },
    File { path: PathBuf },
}

/// Operators that are not model operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    Zero,
    Maximal,
    IdentityShift,
}

/// Either a model operator or a built-in one; exactly one must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorChoice {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    /// Arity of a built-in operator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: Family,
    pub ks: Vec<u32>,
    #[serde(default = "half")]
    pub beta: f64,
    pub coeff_seed: u64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSpec {
    pub operator: OperatorChoice,
    pub sampler: SamplerConfig,
    #[serde(default = "default_ainfty_ps")]
    pub ainfty_ps: Vec<f64>,
}

fn default_ainfty_ps() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0]
}

fn default_trials() -> usize {
    20
}

fn default_k_max() -> u32 {
    dyadic_core::extrapolation::DEFAULT_K_MAX
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    WeightsCheck {
        id: String,
        scenario: String,
    },
    Bmo {
        id: String,
        scenario: String,
        symbol: SymbolSpec,
    },
    OpApply {
        id: String,
        operator: OperatorSpec,
        #[serde(default = "default_trials")]
        trials: usize,
        seed: u64,
    },
    NormEstimate {
        id: String,
        scenario: String,
        operator: OperatorChoice,
        sampler: SamplerConfig,
    },
    CommutatorVerify {
        id: String,
        scenario: String,
        symbol: SymbolSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        operator: Option<OperatorChoice>,
        sampler: SamplerConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sweep: Option<SweepSpec>,
    },
    LowerBound {
        id: String,
        scenario: String,
        symbol: SymbolSpec,
        #[serde(default)]
        config: Option<LowerBoundConfig>,
    },
    Extrapolate {
        id: String,
        scenario: String,
        q_n: Exponent,
        #[serde(default = "default_k_max")]
        k_max: u32,
        #[serde(default = "default_samples")]
        samples: usize,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        demo: Option<DemoSpec>,
    },
}

impl Task {
    pub fn id(&self) -> &str {
        match self {
            Task::WeightsCheck { id, .. }
            | Task::Bmo { id, .. }
            | Task::OpApply { id, .. }
            | Task::NormEstimate { id, .. }
            | Task::CommutatorVerify { id, .. }
            | Task::LowerBound { id, .. }
            | Task::Extrapolate { id, .. } => id,
        }
    }

    pub fn command(&self) -> &'static str {
        match self {
            Task::WeightsCheck { .. } => "weights-check",
            Task::Bmo { .. } => "bmo",
            Task::OpApply { .. } => "op-apply",
            Task::NormEstimate { .. } => "norm-estimate",
            Task::CommutatorVerify { .. } => "commutator-verify",
            Task::LowerBound { .. } => "lower-bound",
            Task::Extrapolate { .. } => "extrapolate",
        }
    }

    fn scenario(&self) -> Option<&str> {
        match self {
            Task::OpApply { .. } => None,
            Task::WeightsCheck { scenario, .. }
            | Task::Bmo { scenario, .. }
            | Task::NormEstimate { scenario, .. }
            | Task::CommutatorVerify { scenario, .. }
            | Task::LowerBound { scenario, .. }
            | Task::Extrapolate { scenario, .. } => Some(scenario),
        }
    }
}

fn check_choice(path: &str, c: &OperatorChoice) -> Result<(), SchemaError> {
    match (&c.model, &c.builtin) {
        (Some(_), Some(_)) | (None, None) => {
            Err(schema_err(path, "exactly one of \"model\" and \"builtin\" is required"))
        }
        (None, Some(_)) if c.n.is_none() => Err(schema_err(format!("{path}.n"), "built-in operators need an arity")),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    /// Parses and validates; every failure carries a path into the document.
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| schema_err(e.path().to_string(), e.inner().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SchemaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| schema_err("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.schema != SCHEMA {
            return Err(schema_err("schema", format!("expected \"{SCHEMA}\", found \"{}\"", self.schema)));
        }
        for (name, s) in &self.scenarios {
            let path = format!("scenarios.{name}");
            match &s.manifest {
                Some(_) if s.p.is_some() || !s.weights.is_empty() || s.slot.is_some() => {
                    return Err(schema_err(path, "a manifest scenario takes no inline p, slot or weights"));
                }
                Some(_) => {}
                None => {
                    let p = s.p.as_ref().ok_or_else(|| schema_err(format!("{path}.p"), "missing field"))?;
                    if p.len() != s.weights.len() {
                        return Err(schema_err(
                            format!("{path}.weights"),
                            format!("{} weights for {} exponents", s.weights.len(), p.len()),
                        ));
                    }
                    let slot = s.slot.unwrap_or(1);
                    if slot == 0 || slot > p.len() {
                        return Err(schema_err(format!("{path}.slot"), format!("must lie in 1..={}", p.len())));
                    }
                }
            }
        }
        let mut ids = BTreeSet::new();
        for (i, t) in self.tasks.iter().enumerate() {
            let path = format!("tasks[{i}]");
            if t.id().is_empty() || !t.id().chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(schema_err(format!("{path}.id"), "ids use letters, digits, '-' and '_' only"));
            }
            if !ids.insert(t.id()) {
                return Err(schema_err(format!("{path}.id"), format!("duplicate id \"{}\"", t.id())));
            }
            if let Some(s) = t.scenario() {
                if !self.scenarios.contains_key(s) {
                    return Err(schema_err(format!("{path}.scenario"), format!("unknown scenario \"{s}\"")));
                }
            }
            match t {
                Task::NormEstimate { operator, .. } => check_choice(&format!("{path}.operator"), operator)?,
                Task::CommutatorVerify { operator: Some(op), .. } => check_choice(&format!("{path}.operator"), op)?,
                Task::Extrapolate { demo: Some(d), .. } => check_choice(&format!("{path}.demo.operator"), &d.operator)?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Resolves relative file references against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_source = |w: &mut WeightSource| {
            if let WeightSource::File { path } = w {
                fix(path)
            }
        };
        for s in self.scenarios.values_mut() {
            if let Some(m) = &mut s.manifest {
                fix(m);
            }
            s.weights.iter_mut().for_each(fix_source);
            if let Some(l) = &mut s.lambda {
                fix_source(l);
            }
        }
        for t in &mut self.tasks {
            let sym = match t {
                Task::Bmo { symbol, .. } | Task::CommutatorVerify { symbol, .. } | Task::LowerBound { symbol, .. } => {
                    symbol
                }
                _ => continue,
            };
            if let SymbolSpec::File { path } = sym {
                fix(path);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": "dyadic-lab/1",
        "depths": [2, 2],
        "seed": 1,
        "scenarios": {"ones": {"p": [2], "weights": [{"source": "generate", "weight": {"kind": "constant", "value": 1}, "seed": 0}]}},
        "tasks": [{"command": "weights-check", "id": "w", "scenario": "ones"}]
    }"#;

    #[test]
    fn minimal_parses() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.tasks[0].command(), "weights-check");
    }

    #[test]
    fn errors_carry_paths() {
        let bad = MINIMAL.replace("\"value\": 1", "\"value\": \"x\"");
        let e = ExperimentConfig::from_json(&bad).unwrap_err();
        assert!(e.path.starts_with("scenarios.ones.weights[0]"), "{e}");
        let e = ExperimentConfig::from_json(&MINIMAL.replace("dyadic-lab/1", "dyadic-lab/0")).unwrap_err();
        assert_eq!(e.path, "schema");
        let e = ExperimentConfig::from_json(&MINIMAL.replace("\"scenario\": \"ones\"", "\"scenario\": \"none\"")).unwrap_err();
        assert_eq!(e.path, "tasks[0].scenario");
        let e = ExperimentConfig::from_json(&MINIMAL.replace("\"seed\": 1,", "\"seed\": 1, \"extra\": 0,")).unwrap_err();
        assert!(e.message.contains("extra"), "{e}");
    }
}
