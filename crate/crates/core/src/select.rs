//! Seed selection: length filter, exact dedup, seeded shuffle, take N.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzz::SeedInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Seeds to keep per target.
    pub n_samples: usize,
    /// Exclusive byte-length bound.
    pub max_len: usize,
    pub rng_seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            n_samples: 40,
            max_len: 64,
            rng_seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub raw: usize,
    pub within_length: usize,
    pub distinct: usize,
    pub selected: usize,
    /// Fewer than `n_samples` distinct eligible inputs were available.
    pub short_supply: bool,
}

pub fn select(inputs: &[SeedInput], cfg: &SelectionConfig) -> Vec<SeedInput> {
    select_with_stats(inputs, cfg).0
}

pub fn select_with_stats(inputs: &[SeedInput], cfg: &SelectionConfig) -> (Vec<SeedInput>, SelectionStats) {
    let within: Vec<&SeedInput> = inputs.iter().filter(|s| s.len() < cfg.max_len).collect();
    let mut seen: HashSet<&[u8]> = HashSet::with_capacity(within.len());
    let mut eligible: Vec<&SeedInput> = within
        .iter()
        .copied()
        .filter(|s| seen.insert(s.bytes.as_slice()))
        .collect();
    let distinct = eligible.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    eligible.shuffle(&mut rng);
    eligible.truncate(cfg.n_samples);
    let selected: Vec<SeedInput> = eligible.into_iter().cloned().collect();

    let stats = SelectionStats {
        raw: inputs.len(),
        within_length: within.len(),
        distinct,
        selected: selected.len(),
        short_supply: distinct < cfg.n_samples,
    };
    (selected, stats)
}
