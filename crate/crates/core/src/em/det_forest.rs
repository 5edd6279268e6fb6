use super::btree::BTree;
use super::store::{BlockStore, EmReport};
use super::{double_exp, EmConfig};
use crate::error::{Error, Result};
use crate::priority::{forest_index, WeightVector};
use crate::scalar::Real;
use crate::treap::Key;

/// Deterministic score-respecting forest: item `x` lives in tree
/// `max(0, floor(log2 log_B (1/w_x)))` and a search probes the trees in
/// index order.
#[derive(Clone, Debug)]
pub struct DetScoreForest {
    cfg: EmConfig,
    store: BlockStore,
    trees: Vec<BTree>,
    index: Vec<usize>,
}

impl DetScoreForest {
    pub fn build<T: Real>(w: &WeightVector<T>, cfg: EmConfig) -> Result<Self> {
        EmConfig::new(cfg.b, cfg.alpha)?;
        let mut index = vec![0; w.len() + 1];
        let mut members: Vec<Vec<Key>> = Vec::new();
        for x in 1..=w.len() as Key {
            let i = forest_index(w.get(x), cfg.b)? as usize;
            if members.len() <= i {
                members.resize(i + 1, Vec::new());
            }
            members[i].push(x);
            index[x as usize] = i;
        }
        let mut store = BlockStore::new(cfg.b);
        let trees = members.iter().enumerate().map(|(i, keys)| BTree::bulk_load(&mut store, keys, i as i32)).collect();
        Ok(DetScoreForest { cfg, store, trees, index })
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

    pub fn tree_heights(&self) -> Vec<u32> {
        self.trees.iter().map(|t| t.height(&self.store)).collect()
    }

    pub fn index_of(&self, k: Key) -> Result<usize> {
        self.check(k)?;
        Ok(self.index[k as usize])
    }

    fn check(&self, k: Key) -> Result<()> {
        let n = (self.index.len() - 1) as u32;
        if k == 0 || k > n {
            return Err(Error::KeyOutOfRange { key: k, n });
        }
        Ok(())
    }

    /// Probes trees from index 0 until `k` is found; returns distinct blocks touched.
    pub fn access(&mut self, k: Key) -> Result<u64> {
        self.check(k)?;
        self.store.begin_op();
        for t in &self.trees {
            if t.search(&mut self.store, k) {
                return Ok(self.store.end_op());
            }
        }
        self.store.end_op();
        Err(Error::NotFound(k))
    }

    /// Moves `k` to the tree its new weight selects; returns blocks touched.
    pub fn update_weight<T: Real>(&mut self, k: Key, w: T) -> Result<u64> {
        self.check(k)?;
        let to = forest_index(w, self.cfg.b)? as usize;
        let from = self.index[k as usize];
        if to == from {
            return Ok(0);
        }
        while self.trees.len() <= to {
            let i = self.trees.len() as i32;
            self.trees.push(BTree::new(i));
        }
        self.store.begin_op();
        self.trees[from].remove(&mut self.store, k)?;
        self.trees[to].insert(&mut self.store, k)?;
        self.index[k as usize] = to;
        Ok(self.store.end_op())
    }

    /// `|T_i| <= B^(2^(i+1))` for every tree; holds whenever the weights sum to at most one.
    pub fn check_occupancy(&self) -> std::result::Result<(), String> {
        for (i, t) in self.trees.iter().enumerate() {
            let cap = double_exp(self.cfg.b, i as u32 + 1);
            if t.len() as u64 > cap {
                return Err(format!("tree {i} holds {} > {cap} items", t.len()));
            }
            t.validate(&self.store)?;
        }
        Ok(())
    }
}
