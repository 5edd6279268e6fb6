//! Learning-augmented treaps and B-trees.
//!
//! Items `1..=n` carry predicted scores; composite priorities turn those
//! scores into treaps (and tier-decomposed B-tree forests) whose access cost
//! tracks `log(1 / score)`. The crate also ships the workload generators,
//! divergence measures, sequence statistics and brute-force references used
//! to check those costs.

pub mod dynamic;
pub mod em;
pub mod error;
pub mod oracle;
pub mod predictions;
pub mod priority;
pub mod scalar;
pub mod sequences;
pub mod treap;

pub use error::{Error, Result};
pub use priority::{RandomStream, Scheme};
pub use scalar::Real;
pub use treap::{CostLedger, Key, Priority, Treap, Violation};

/// Item scores in double precision.
pub type WeightVector = priority::WeightVector<f64>;
/// Item scores in single precision.
pub type WeightVector32 = priority::WeightVector<f32>;
/// Probability distribution in double precision.
pub type Distribution = predictions::Distribution<f64>;
/// Probability distribution in single precision.
pub type Distribution32 = predictions::Distribution<f32>;
