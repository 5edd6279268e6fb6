//! Time-varying scores over an access sequence and the driver that runs a
//! structure under them.

mod crude;
mod driver;
mod stats;

pub use crude::{rounded_score, CrudeOracle};
pub use driver::{
    cost_decomposition_check, run_dynamic, steps_csv, CostBreakdown, DecompositionReport, DriverConfig, DynScheme,
    StepRecord, Structure,
};
pub use stats::{compute_stats, interval_profile, work_next_profile, SequenceStats};

use crate::treap::Key;

/// `1 / (1 + interval)^2`.
pub fn isp_value(interval: u32) -> f64 {
    let d = 1.0 + interval as f64;
    1.0 / (d * d)
}

/// Interval-set priorities of all keys as a sequence is consumed.
///
/// Keys not yet accessed keep the initial weight `1 / (n + 1)^2`. After
/// access `i` only `x(i)` can change, to `isp(interval(i, x(i)))`.
#[derive(Clone, Debug)]
pub struct IspState {
    isp: Vec<f64>,
    seen: Vec<bool>,
}

impl IspState {
    pub fn new(n: u32) -> Self {
        let init = isp_value(n);
        IspState { isp: vec![init; n as usize + 1], seen: vec![false; n as usize + 1] }
    }

    pub fn get(&self, x: Key) -> f64 {
        self.isp[x as usize]
    }

    /// Applies access `i` and returns the changed key, if any.
    pub fn step(&mut self, i: usize, x: Key, stats: &SequenceStats) -> Option<Key> {
        self.seen[x as usize] = true;
        let v = isp_value(stats.interval(i));
        (std::mem::replace(&mut self.isp[x as usize], v) != v).then_some(x)
    }

    pub fn norm(&self) -> f64 {
        self.isp[1..].iter().sum()
    }

    pub fn all_seen(&self) -> bool {
        self.seen[1..].iter().all(|&s| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::AccessSequence;

    #[test]
    fn isp_formula() {
        assert_eq!(isp_value(0), 1.0);
        assert_eq!(isp_value(3), 1.0 / 16.0);
    }

    #[test]
    fn at_most_one_change_per_step() {
        let seq = AccessSequence::new(4, vec![1, 1, 2, 3, 1, 4, 2, 2]).unwrap();
        let stats = compute_stats(&seq);
        let mut st = IspState::new(4);
        let mut changes = 0;
        for i in 1..=seq.m() {
            if let Some(x) = st.step(i, seq.at(i), &stats) {
                assert_eq!(x, seq.at(i));
                changes += 1;
            }
            assert!(st.norm() <= std::f64::consts::PI.powi(2) / 6.0);
        }
        assert!(changes <= seq.m());
        assert!(st.all_seen());
        assert_eq!(st.get(1), 1.0 / 25.0);
    }
}
