use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub digest: String,
    pub ratio: f64,
}

/// The maximum of sampled ratios, with every sample kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub samples: Vec<RatioSample>,
    pub max: f64,
    pub argmax: Option<String>,
    pub sampler: String,
    pub seed: u64,
    pub skipped: usize,
}

impl RatioReport {
    pub fn new(sampler: impl Into<String>, seed: u64) -> Self {
        RatioReport {
            samples: Vec::new(),
            max: 0.0,
            argmax: None,
            sampler: sampler.into(),
            seed,
            skipped: 0,
        }
    }

    pub fn push(&mut self, digest: impl Into<String>, ratio: f64) {
        let digest = digest.into();
        if self.argmax.is_none() || ratio > self.max {
            self.max = ratio;
            self.argmax = Some(digest.clone());
        }
        self.samples.push(RatioSample { digest, ratio });
    }

    /// Records `num / den`, skipping samples with a vanishing denominator.
    pub fn push_ratio(&mut self, digest: impl Into<String>, num: f64, den: f64) {
        if den > 0.0 && den.is_finite() && num.is_finite() {
            self.push(digest, num / den);
        } else {
            self.skipped += 1;
        }
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Appends another report's samples; the maximum is the larger of the two.
    pub fn merge(&mut self, other: &RatioReport) {
        for s in &other.samples {
            self.push(s.digest.clone(), s.ratio);
        }
        self.skipped += other.skipped;
    }

    pub fn is_finite(&self) -> bool {
        self.max.is_finite()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_tracks_first_maximizer() {
        let mut r = RatioReport::new("t", 1);
        r.push("a", 1.0);
        r.push("b", 3.0);
        r.push("c", 3.0);
        r.push_ratio("d", 1.0, 0.0);
        assert_eq!(r.max, 3.0);
        assert_eq!(r.argmax.as_deref(), Some("b"));
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn merge_is_monotone() {
        let mut a = RatioReport::new("t", 1);
        a.push("a", 2.0);
        let mut b = RatioReport::new("t", 2);
        b.push("b", 5.0);
        a.merge(&b);
        assert_eq!(a.max, 5.0);
        assert_eq!(a.len(), 2);
    }
}
