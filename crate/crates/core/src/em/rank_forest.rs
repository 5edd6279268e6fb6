use std::collections::BTreeSet;

use super::btree::BTree;
use super::store::{BlockStore, EmReport};
use super::{double_exp, EmConfig};
use crate::error::{Error, Result};
use crate::treap::Key;

/// Rank-respecting forest.
///
/// Items are ordered by recency (rank 1 = most recently accessed). Tree
/// `T_i` (1-based) holds a contiguous range of ranks and, unless it is the
/// last nonempty tree, between `B^(2^i)` and `2 B^(2^(i+1))` items. An access
/// probes `T_1, T_2, ...`, moves the item into `T_1`, and pushes the
/// lowest-ranked `B^(2^(i+1))` items of an overflowing tree one tree down.
#[derive(Clone, Debug)]
pub struct RankForest {
    cfg: EmConfig,
    n: u32,
    store: BlockStore,
    trees: Vec<BTree>,
    tree_of: Vec<usize>,
    stamp: Vec<u64>,
    by_recency: Vec<BTreeSet<(u64, Key)>>,
    clock: u64,
}

/// Number of trees, `max(1, ceil(log2 log_B n))`.
pub fn tree_count(n: u32, b: usize) -> usize {
    let mut s = 1usize;
    while (s as u32) < 32 && double_exp(b, s as u32) < n as u64 {
        s += 1;
    }
    s
}

impl RankForest {
    /// Starts from the recency order `1, 2, ..., n` (key 1 most recent).
    pub fn new(n: u32, cfg: EmConfig) -> Result<Self> {
        EmConfig::new(cfg.b, cfg.alpha)?;
        if n == 0 {
            return Err(Error::Config("rank forest needs at least one item".into()));
        }
        let s = tree_count(n, cfg.b);
        let mut store = BlockStore::new(cfg.b);
        let mut trees = Vec::with_capacity(s);
        let mut by_recency = vec![BTreeSet::new(); s];
        let mut tree_of = vec![0; n as usize + 1];
        let stamp: Vec<u64> = (0..=n as u64).map(|x| if x == 0 { 0 } else { n as u64 - x + 1 }).collect();
        let mut next = 1u32;
        for i in 0..s {
            let take = if i + 1 == s { (n + 1 - next) as u64 } else { double_exp(cfg.b, i as u32 + 2).min((n + 1 - next) as u64) };
            let keys: Vec<Key> = (next..next + take as u32).collect();
            for &k in &keys {
                tree_of[k as usize] = i;
                by_recency[i].insert((stamp[k as usize], k));
            }
            trees.push(BTree::bulk_load(&mut store, &keys, i as i32));
            next += take as u32;
        }
        let rf = RankForest { cfg, n, store, trees, tree_of, stamp, by_recency, clock: n as u64 };
        rf.check_invariant().map_err(Error::Domain)?;
        Ok(rf)
    }

    fn lower(&self, i: usize) -> u64 {
        double_exp(self.cfg.b, i as u32 + 1)
    }

    fn batch(&self, i: usize) -> u64 {
        double_exp(self.cfg.b, i as u32 + 2)
    }

    pub fn config(&self) -> EmConfig {
        self.cfg
    }

    pub fn store(&self) -> &BlockStore {
        &self.store
    }

    pub fn report(&self) -> EmReport {
        self.store.report()
    }

    pub fn io_touches(&self) -> u64 {
        self.store.io_touches()
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn tree_sizes(&self) -> Vec<usize> {
        self.trees.iter().map(BTree::len).collect()
    }

    /// 0-based index of the tree holding `k`.
    pub fn tree_of(&self, k: Key) -> Result<usize> {
        self.check(k)?;
        Ok(self.tree_of[k as usize])
    }

    /// Current recency rank of `k` (1 = most recent). Linear time.
    pub fn rank(&self, k: Key) -> Result<usize> {
        self.check(k)?;
        let s = self.stamp[k as usize];
        Ok(self.stamp[1..].iter().filter(|&&t| t >= s).count())
    }

    fn check(&self, k: Key) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::KeyOutOfRange { key: k, n: self.n });
        }
        Ok(())
    }

    /// Accesses `k` and restores the invariant; returns distinct blocks
    /// touched by the search and the maintenance together.
    pub fn access(&mut self, k: Key) -> Result<u64> {
        self.check(k)?;
        self.store.begin_op();
        let j = self.tree_of[k as usize];
        for t in &self.trees[..=j] {
            t.search(&mut self.store, k);
        }
        self.by_recency[j].remove(&(self.stamp[k as usize], k));
        self.clock += 1;
        self.stamp[k as usize] = self.clock;
        self.by_recency[0].insert((self.clock, k));
        if j != 0 {
            self.trees[j].remove(&mut self.store, k)?;
            self.trees[0].insert(&mut self.store, k)?;
            self.tree_of[k as usize] = 0;
        }
        let s = self.trees.len();
        for i in 0..s - 1 {
            if self.trees[i].len() as u64 > 2u64.saturating_mul(self.batch(i)) {
                for _ in 0..self.batch(i) {
                    let (_, x) = self.by_recency[i].pop_first().unwrap();
                    self.shift(x, i, i + 1)?;
                }
            }
        }
        for i in 0..s - 1 {
            while (self.trees[i].len() as u64) < self.lower(i) {
                let Some(from) = (i + 1..s).find(|&j| !self.trees[j].is_empty()) else { break };
                let (_, x) = self.by_recency[from].pop_last().unwrap();
                self.shift(x, from, i)?;
            }
        }
        let cost = self.store.end_op();
        self.check_invariant().map_err(|e| Error::Domain(format!("rank forest invariant broken: {e}")))?;
        Ok(cost)
    }

    fn shift(&mut self, x: Key, from: usize, to: usize) -> Result<()> {
        self.trees[from].remove(&mut self.store, x)?;
        self.trees[to].insert(&mut self.store, x)?;
        self.by_recency[to].insert((self.stamp[x as usize], x));
        self.tree_of[x as usize] = to;
        Ok(())
    }

    /// Size and rank bounds of every tree. A tree is exempt from the size
    /// bounds when no later tree holds items; the last tree never has an
    /// upper size bound.
    pub fn check_invariant(&self) -> std::result::Result<(), String> {
        let s = self.trees.len();
        let mut prefix = 0u64;
        let mut prev_min: Option<u64> = None;
        for i in 0..s {
            let t = &self.trees[i];
            let size = t.len() as u64;
            if size != self.by_recency[i].len() as u64 {
                return Err(format!("T_{} recency index out of sync", i + 1));
            }
            if size == 0 {
                continue;
            }
            let (newest, oldest) = (self.by_recency[i].last().unwrap().0, self.by_recency[i].first().unwrap().0);
            if let Some(pm) = prev_min {
                if newest >= pm {
                    return Err(format!("T_{} does not hold a contiguous rank range", i + 1));
                }
            }
            prev_min = Some(oldest);
            prefix += size;
            let later = self.trees[i + 1..].iter().any(|t| !t.is_empty());
            if later && size < self.lower(i) {
                return Err(format!("|T_{}| = {size} below {}", i + 1, self.lower(i)));
            }
            if i + 1 < s && size > 2u64.saturating_mul(self.batch(i)) {
                return Err(format!("|T_{}| = {size} above {}", i + 1, 2u64.saturating_mul(self.batch(i))));
            }
            if prefix > 4u64.saturating_mul(self.batch(i)) {
                return Err(format!("max rank {prefix} in T_{} above {}", i + 1, 4u64.saturating_mul(self.batch(i))));
            }
        }
        if prefix != self.n as u64 {
            return Err(format!("trees hold {prefix} of {} items", self.n));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts() {
        assert_eq!(tree_count(16, 16), 1);
        assert_eq!(tree_count(256, 16), 1);
        assert_eq!(tree_count(1024, 16), 2);
        assert_eq!(tree_count(65536, 16), 2);
        assert_eq!(tree_count(65537, 16), 3);
        assert_eq!(tree_count(300, 4), 3);
    }

    #[test]
    fn repeat_access_touches_first_tree_only() {
        let cfg = EmConfig::new(4, 0.5).unwrap();
        let mut rf = RankForest::new(300, cfg).unwrap();
        assert_eq!(rf.tree_sizes(), vec![256, 44, 0]);
        rf.access(290).unwrap();
        assert_eq!(rf.tree_of(290).unwrap(), 0);
        assert_eq!(rf.rank(290).unwrap(), 1);
        let h = rf.trees[0].height(&rf.store) as u64;
        assert!(rf.access(290).unwrap() <= h);
    }

    #[test]
    fn invariant_holds_on_round_robin() {
        let cfg = EmConfig::new(4, 0.5).unwrap();
        let mut rf = RankForest::new(300, cfg).unwrap();
        for r in 0..3 {
            for k in (1..=300).rev() {
                rf.access(k).unwrap_or_else(|e| panic!("round {r}, key {k}: {e}"));
            }
        }
        assert_eq!(rf.access(0), Err(Error::KeyOutOfRange { key: 0, n: 300 }));
    }
}
