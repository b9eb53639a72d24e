//! Run reports and their merge.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SCHEMA;
use dyadic_core::bounds::RatioReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Recorded without an asserted outcome.
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<RatioReport>,
}

impl CheckEntry {
    pub fn outcome(ok: bool) -> Self {
        CheckEntry {
            status: if ok { Status::Pass } else { Status::Fail },
            value: None,
            bound: None,
            detail: None,
            ratios: None,
        }
    }

    pub fn measured(value: f64) -> Self {
        CheckEntry { status: Status::Measured, value: Some(value), bound: None, detail: None, ratios: None }
    }

    /// Passes iff `value ≤ bound`.
    pub fn at_most(value: f64, bound: f64) -> Self {
        CheckEntry { value: Some(value), bound: Some(bound), ..Self::outcome(value <= bound) }
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn with_ratios(mut self, r: RatioReport) -> Self {
        self.ratios = Some(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub version: String,
    pub config_digest: String,
    pub checks: BTreeMap<String, CheckEntry>,
    /// Milliseconds spent; the only field that differs between identical runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("nothing to merge")]
    Empty,
    #[error("cannot merge reports of versions {0} and {1}")]
    Version(String, String),
}

impl RunReport {
    pub fn new(config_digest: String) -> Self {
        RunReport {
            schema: SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest,
            checks: BTreeMap::new(),
            wall_clock_ms: None,
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, entry: CheckEntry) {
        self.checks.insert(id.into(), entry);
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, c)| c.status == Status::Fail).map(|(k, _)| k.as_str()).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

pub fn digest_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn merge_entry(a: &mut CheckEntry, b: &CheckEntry) {
    a.status = match (a.status, b.status) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Pass, _) | (_, Status::Pass) => Status::Pass,
        _ => Status::Measured,
    };
    a.value = match (a.value, b.value) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    };
    a.bound = a.bound.or(b.bound);
    if a.detail.is_none() {
        a.detail = b.detail.clone();
    }
    match (&mut a.ratios, &b.ratios) {
        (Some(x), Some(y)) => x.merge(y),
        (None, Some(y)) => a.ratios = Some(y.clone()),
        _ => {}
    }
}

/// Union of checks; shared ids take the larger values, merged ratio samples
/// and the conjunction of outcomes.
pub fn report_merge(reports: &[RunReport]) -> Result<RunReport, MergeError> {
    let first = reports.first().ok_or(MergeError::Empty)?;
    let mut out = first.clone();
    if reports.len() == 1 {
        return Ok(out);
    }
    let mut digests = vec![first.config_digest.clone()];
    for r in &reports[1..] {
        if r.version != first.version {
            return Err(MergeError::Version(first.version.clone(), r.version.clone()));
        }
        digests.push(r.config_digest.clone());
        for (id, c) in &r.checks {
            match out.checks.get_mut(id) {
                Some(e) => merge_entry(e, c),
                None => {
                    out.checks.insert(id.clone(), c.clone());
                }
            }
        }
        out.wall_clock_ms = match (out.wall_clock_ms, r.wall_clock_ms) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
    }
    out.config_digest = digest_text(&digests.join("+"));
    Ok(out)
}
