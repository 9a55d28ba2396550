use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Quenched couplings of one disorder draw.
///
/// Keys are ascending tuples of 1-based Majorana labels. For the simplified
/// family the key `[a, b]` holds `λ_ab` with `λ_ba = −λ_ab`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub seed: u64,
    pub couplings: BTreeMap<Vec<usize>, f64>,
    pub mask: BTreeSet<Vec<usize>>,
    /// The c-number shift `w` (simplified family only).
    pub w: Option<f64>,
}

impl DisorderRealization {
    pub fn new(seed: u64) -> Self {
        Self { seed, couplings: BTreeMap::new(), mask: BTreeSet::new(), w: None }
    }

    pub fn insert(&mut self, tuple: Vec<usize>, value: f64) {
        self.mask.insert(tuple.clone());
        self.couplings.insert(tuple, value);
    }

    pub fn coupling(&self, tuple: &[usize]) -> Option<f64> {
        self.couplings.get(tuple).copied()
    }

    pub fn is_consistent(&self) -> bool {
        self.mask.len() == self.couplings.len() && self.mask.iter().all(|k| self.couplings.contains_key(k))
    }
}

/// The generator used for every disorder draw. ChaCha is portable, so a seed
/// reproduces the same couplings on every platform.
pub fn disorder_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
