//! Priority assignment rules.
//!
//! Every rule maps a positive score `w_x` to a [`Priority`]. The composite
//! rules put items into tiers by a doubly-logarithmic function of `1 / w_x`
//! and break ties inside a tier with a uniform offset, so that each tier
//! behaves like an ordinary random treap.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{floor_log, log_inverse, Real};
use crate::treap::{Key, Priority};

/// Seeded stream of offsets in `(0, 1)`.
///
/// Draw `counter` of seed `seed` is a pure function of the pair, so a stream
/// can be recreated (or queried out of order) from its seed alone.
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { seed, counter: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_offset(&mut self) -> f64 {
        self.counter += 1;
        to_open_unit(self.rng.next_u64())
    }

    /// The offset that draw number `counter` (0-based) of this seed yields.
    pub fn offset_at(seed: u64, counter: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(2 * counter as u128);
        to_open_unit(rng.next_u64())
    }

    /// An independent stream derived from this one's seed.
    pub fn fork(&self, salt: u64) -> RandomStream {
        RandomStream::new(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Positive per-item scores `w_1..w_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    pub fn new(w: Vec<T>) -> Result<Self> {
        for (i, &v) in w.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!("weight of item {} is {v}, must be positive", i + 1)));
            }
        }
        Ok(WeightVector { w })
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector { w: vec![T::one() / T::from_usize(n); n] }
    }

    /// Weights from masses, replacing zero masses by `floor`.
    pub fn from_masses(masses: &[T], floor: T) -> Result<Self> {
        Self::new(masses.iter().map(|&p| if p > T::zero() { p } else { floor }).collect())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Weight of item `x` (1-based).
    pub fn get(&self, x: Key) -> T {
        self.w[x as usize - 1]
    }

    pub fn set(&mut self, x: Key, v: T) -> Result<()> {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::Domain(format!("weight {v} must be positive")));
        }
        self.w[x as usize - 1] = v;
        Ok(())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn l1(&self) -> T {
        self.w.iter().copied().sum()
    }

    /// Rescaled so the weights sum to one.
    pub fn normalized(&self) -> Self {
        let s = self.l1();
        WeightVector { w: self.w.iter().map(|&v| v / s).collect() }
    }
}

/// Static-optimality weights `w_x = f_x / m`; unaccessed items get `1 / (n m)`.
pub fn static_opt_weights<T: Real>(frequencies: &[u64], m: u64) -> Result<WeightVector<T>> {
    if m == 0 {
        return Err(Error::Config("static weights need at least one access".into()));
    }
    let total: u64 = frequencies.iter().sum();
    if total != m {
        return Err(Error::Config(format!("frequencies sum to {total}, expected {m}")));
    }
    let n = frequencies.len();
    let mm = T::from_f64(m as f64);
    let floor = T::one() / (T::from_usize(n) * mm);
    WeightVector::new(
        frequencies
            .iter()
            .map(|&f| if f == 0 { floor } else { T::from_f64(f as f64) / mm })
            .collect(),
    )
}

fn check_weight<T: Real>(w: T) -> Result<()> {
    if w > T::zero() && w.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("score {w} must be positive")))
    }
}

/// `max(0, floor(log_2 log_2 (1/w)))`.
pub fn composite_tier<T: Real>(w: T) -> Result<i32> {
    check_weight(w)?;
    let two = T::from_f64(2.0);
    let l = log_inverse(w, two);
    Ok(if l < T::one() { 0 } else { floor_log(l, two) })
}

/// `max(0, floor(log_4 log_B (1/w)))`.
pub fn btree_tier<T: Real>(w: T, b: usize) -> Result<i32> {
    check_weight(w)?;
    check_branching(b)?;
    let l = log_inverse(w, T::from_usize(b));
    Ok(if l < T::one() { 0 } else { floor_log(l, T::from_f64(4.0)) })
}

/// `max(0, floor(log_2 log_B (1/w)))`, the tree index of the deterministic forest.
pub fn forest_index<T: Real>(w: T, b: usize) -> Result<i32> {
    check_weight(w)?;
    check_branching(b)?;
    let l = log_inverse(w, T::from_usize(b));
    Ok(if l < T::one() { 0 } else { floor_log(l, T::from_f64(2.0)) })
}

/// `max(0, floor(log_2 (1/w)))`.
pub fn single_log_tier<T: Real>(w: T) -> Result<i32> {
    check_weight(w)?;
    let l = log_inverse(w, T::from_f64(2.0));
    Ok(if l < T::one() { 0 } else { l.floor().as_f64() as i32 })
}

pub(crate) fn check_branching(b: usize) -> Result<()> {
    if b < 4 {
        return Err(Error::Config(format!("branching factor {b} must be at least 4")));
    }
    Ok(())
}

pub fn composite_priority<T: Real>(w: T, rng: &mut RandomStream) -> Result<Priority> {
    Priority::new(composite_tier(w)?, rng.next_offset())
}

pub fn btree_composite_priority<T: Real>(w: T, b: usize, rng: &mut RandomStream) -> Result<Priority> {
    Priority::new(btree_tier(w, b)?, rng.next_offset())
}

pub fn single_log_priority<T: Real>(w: T, rng: &mut RandomStream) -> Result<Priority> {
    Priority::new(single_log_tier(w)?, rng.next_offset())
}

/// Deterministic priority ordered exactly like the raw score.
pub fn raw_score_priority<T: Real>(w: T) -> Result<Priority> {
    check_weight(w)?;
    let w = w.as_f64();
    // w / (1 + w) is increasing and maps (0, inf) into (0, 1)
    let offset = w / (1.0 + w);
    let offset = offset.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    Priority::new(0, offset)
}

/// The rules compared in the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `-floor(log_2 log_2 (1/w)) + U(0,1)`
    Composite,
    /// `-floor(log_4 log_B (1/w)) + U(0,1)`
    BTree { b: usize },
    /// `-floor(log_2 (1/w)) + U(0,1)`
    SingleLog,
    /// `w` itself
    RawScore,
}

impl Scheme {
    pub fn priority<T: Real>(&self, w: T, rng: &mut RandomStream) -> Result<Priority> {
        match *self {
            Scheme::Composite => composite_priority(w, rng),
            Scheme::BTree { b } => btree_composite_priority(w, b, rng),
            Scheme::SingleLog => single_log_priority(w, rng),
            Scheme::RawScore => raw_score_priority(w),
        }
    }

    pub fn tier<T: Real>(&self, w: T) -> Result<i32> {
        match *self {
            Scheme::Composite => composite_tier(w),
            Scheme::BTree { b } => btree_tier(w, b),
            Scheme::SingleLog => single_log_tier(w),
            Scheme::RawScore => check_weight(w).map(|_| 0),
        }
    }

    /// Priorities for every item, drawing offsets in key order.
    pub fn assign<T: Real>(&self, w: &WeightVector<T>, rng: &mut RandomStream) -> Result<Vec<Priority>> {
        w.as_slice().iter().map(|&v| self.priority(v, rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_tier_examples() {
        assert_eq!(composite_tier(1.0 / 16.0_f64).unwrap(), 2);
        assert_eq!(composite_tier(0.6_f64).unwrap(), 0);
        assert_eq!(composite_tier(2f64.powi(-32)).unwrap(), 5);
        assert_eq!(composite_tier(2f32.powi(-32)).unwrap(), 5);
        assert_eq!(composite_tier(1.0_f64).unwrap(), 0);
        assert_eq!(composite_tier(3.0_f64).unwrap(), 0);
        assert!(composite_tier(0.0_f64).is_err());
        assert!(composite_tier(-1.0_f64).is_err());
    }

    #[test]
    fn btree_tier_examples() {
        assert_eq!(btree_tier(16f64.powi(-4), 16).unwrap(), 1);
        assert_eq!(btree_tier(16f64.powi(-16), 16).unwrap(), 2);
        assert_eq!(btree_tier(1.0 / 16.0_f64, 16).unwrap(), 0);
        assert_eq!(btree_tier(0.5_f64, 16).unwrap(), 0);
        assert!(matches!(btree_tier(0.5_f64, 3), Err(Error::Config(_))));
    }

    #[test]
    fn single_log_and_forest_index() {
        assert_eq!(single_log_tier(1.0 / 8.0_f64).unwrap(), 3);
        assert_eq!(single_log_tier(0.9_f64).unwrap(), 0);
        assert_eq!(forest_index(4f64.powi(-4), 4).unwrap(), 2);
        assert_eq!(forest_index(0.5_f64, 4).unwrap(), 0);
    }

    #[test]
    fn static_weights() {
        let w: WeightVector<f64> = static_opt_weights(&[2, 1, 1], 4).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.25, 0.25]);
        let w: WeightVector<f64> = static_opt_weights(&[5, 5, 5, 5], 20).unwrap();
        for &v in w.as_slice() {
            assert_eq!(composite_tier(v).unwrap(), 1); // floor(log2 log2 4)
        }
        let w: WeightVector<f64> = static_opt_weights(&[0, 7, 0], 7).unwrap();
        assert_eq!(w.get(2), 1.0);
        assert_eq!(composite_tier(w.get(2)).unwrap(), 0);
        assert!((w.get(1) - 1.0 / 21.0).abs() < 1e-15);
        assert!(w.l1() <= 1.0 + 1.0 / 7.0);
        assert!(matches!(static_opt_weights::<f64>(&[], 0), Err(Error::Config(_))));
    }

    #[test]
    fn raw_score_is_order_preserving() {
        let a = raw_score_priority(0.4_f64).unwrap();
        let b = raw_score_priority(0.3_f64).unwrap();
        assert!(a.offset() > b.offset());
        assert_eq!(a.tier(), 0);
        assert!(raw_score_priority(1e300_f64).is_ok());
    }

    #[test]
    fn stream_is_reproducible() {
        let mut a = RandomStream::new(7);
        let mut b = RandomStream::new(7);
        let xs: Vec<f64> = (0..100).map(|_| a.next_offset()).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.next_offset()).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(RandomStream::offset_at(7, i as u64), x);
        }
        assert_eq!(a.counter(), 100);
        assert_ne!(RandomStream::new(8).next_offset(), xs[0]);
    }

    #[test]
    fn weight_vector_rejects_nonpositive() {
        assert!(WeightVector::new(vec![0.5_f64, 0.0]).is_err());
        assert!(WeightVector::new(vec![0.5_f64, f64::NAN]).is_err());
        let w = WeightVector::new(vec![2.0_f64, 2.0]).unwrap();
        assert_eq!(w.normalized().as_slice(), &[0.5, 0.5]);
    }
}
