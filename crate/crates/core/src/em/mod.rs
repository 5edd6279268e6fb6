//! Simulated external memory: a block store that counts distinct block
//! touches, a B-tree over it, and three search structures built from
//! B-trees.
//!
//! * [`TierForestBTreap`] decomposes a treap with B-tree composite
//!   priorities into same-tier components and stores each as a B-tree.
//! * [`DetScoreForest`] places item `x` in tree `floor(log2 log_B (1/w_x))`.
//! * [`RankForest`] keeps items in double-exponentially sized trees by
//!   recency rank.

mod btree;
mod det_forest;
mod rank_forest;
mod store;
mod tier_forest;

pub use btree::BTree;
pub use det_forest::DetScoreForest;
pub use rank_forest::RankForest;
pub use store::{Block, BlockId, BlockStore, EmReport};
pub use tier_forest::{TierForestBTreap, UpdateCost};

use crate::error::{Error, Result};
use crate::priority::check_branching;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub b: usize,
    /// Recorded for reporting only.
    pub alpha: f64,
}

impl EmConfig {
    pub fn new(b: usize, alpha: f64) -> Result<Self> {
        check_branching(b)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha {alpha} must lie in (0, 1)")));
        }
        Ok(EmConfig { b, alpha })
    }

    /// A warning when `B` is below `ln(n)^(1 / (1 - alpha))`.
    pub fn regime_warning(&self, n: usize) -> Option<String> {
        let need = (n.max(2) as f64).ln().powf(1.0 / (1.0 - self.alpha));
        ((self.b as f64) < need).then(|| format!("B = {} is below ln(n)^(1/(1-alpha)) = {need:.1} for n = {n}", self.b))
    }
}

/// `b^e`, saturating.
pub(crate) fn pow_sat(b: usize, e: u32) -> u64 {
    (b as u64).checked_pow(e).unwrap_or(u64::MAX)
}

/// `b^(2^k)`, saturating.
pub(crate) fn double_exp(b: usize, k: u32) -> u64 {
    if k >= 32 {
        return u64::MAX;
    }
    pow_sat(b, 1u32 << k)
}
