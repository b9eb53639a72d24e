use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use super::characteristics::CharacteristicReport;
use super::Weight;
use crate::error::Result;
use crate::exponent::ExponentTuple;

/// Characteristics keyed by a content hash of `(kind, weights, exponents)`.
///
/// Reads are shared; writes are exclusive and the last write wins. Identical
/// keys always carry identical values, so the race is benign.
#[derive(Debug, Default)]
pub struct CharacteristicCache {
    map: RwLock<HashMap<String, CharacteristicReport>>,
}

impl CharacteristicCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(kind: &str, ws: &[Weight], p: Option<&ExponentTuple>) -> String {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        for w in ws {
            h.update(w.digest().as_bytes());
        }
        if let Some(p) = p {
            for e in &p.0 {
                h.update(e.to_string().as_bytes());
                h.update(b";");
            }
        }
        hex::encode(h.finalize())
    }

    pub fn get(&self, key: &str) -> Option<CharacteristicReport> {
        self.map.read().expect("cache lock poisoned").get(key).copied()
    }

    pub fn get_or_compute(
        &self,
        key: String,
        compute: impl FnOnce() -> Result<CharacteristicReport>,
    ) -> Result<CharacteristicReport> {
        if let Some(v) = self.get(&key) {
            return Ok(v);
        }
        let v = compute()?;
        self.map.write().expect("cache lock poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached [`super::multilinear_characteristic`].
    pub fn multilinear(&self, ws: &[Weight], p: &ExponentTuple) -> Result<CharacteristicReport> {
        let key = Self::key("multilinear", ws, Some(p));
        self.get_or_compute(key, || super::multilinear_characteristic(ws, p))
    }

    /// Cached [`super::ainfty_characteristic`].
    pub fn ainfty(&self, w: &Weight) -> Result<CharacteristicReport> {
        let key = Self::key("ainfty", std::slice::from_ref(w), None);
        self.get_or_compute(key, || Ok(super::ainfty_characteristic(w)))
    }
}

pub fn global_cache() -> &'static CharacteristicCache {
    static CACHE: OnceLock<CharacteristicCache> = OnceLock::new();
    CACHE.get_or_init(CharacteristicCache::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ProductGrid;
    use crate::rng::uniform_positive;

    #[test]
    fn caches_by_content() {
        let g = ProductGrid::new(2, 2).unwrap();
        let w = Weight::new(uniform_positive(g, 0.5, 2.0, 3)).unwrap();
        let cache = CharacteristicCache::new();
        let p = ExponentTuple::from_values(&[2.0]).unwrap();
        let a = cache.multilinear(std::slice::from_ref(&w), &p).unwrap();
        let b = cache.multilinear(std::slice::from_ref(&w), &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
        cache.ainfty(&w).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn concurrent_reads_agree() {
        use rayon::prelude::*;
        let g = ProductGrid::new(3, 3).unwrap();
        let w = Weight::new(uniform_positive(g, 0.5, 2.0, 4)).unwrap();
        let cache = CharacteristicCache::new();
        let vals: Vec<f64> = (0..16).into_par_iter().map(|_| cache.ainfty(&w).unwrap().value).collect();
        assert!(vals.windows(2).all(|v| v[0] == v[1]));
    }
}
