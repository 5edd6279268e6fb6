use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use super::btree::BTree;
use super::store::{Block, BlockId, BlockStore, EmReport};
use super::EmConfig;
use crate::error::{Error, Result};
use crate::priority::{btree_tier, RandomStream, Scheme, WeightVector};
use crate::scalar::Real;
use crate::treap::{Key, Priority, Treap};

#[derive(Clone, Debug)]
enum Placement {
    /// Stored as its own B-tree, glued below `host` (none for the top component).
    Own { tree: BTree, host: Option<BlockId> },
    /// Keys stored as guests inside `host`.
    Guest { host: BlockId },
}

#[derive(Clone, Debug)]
struct Component {
    root: Key,
    tier: i32,
    keys: Vec<Key>,
    placement: Placement,
}

/// Block touches of one priority update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateCost {
    /// Path to the item in the old layout.
    pub removal: u64,
    /// Path to the item in the new layout.
    pub insertion: u64,
    /// Blocks of the new layout whose content did not exist before.
    pub rebuild_writes: u64,
}

impl UpdateCost {
    /// Removal plus insertion; rebuild writes are reported separately.
    pub fn path_cost(&self) -> u64 {
        self.removal + self.insertion
    }
}

/// A treap with B-tree composite priorities, laid out in blocks.
///
/// Each maximal connected same-tier part of the treap is stored as a B-tree
/// of minimum height. A component's root block hangs below the block that
/// holds the treap parent of the component's root; a component that fits
/// into the free room of that block is stored there as guests instead.
#[derive(Clone, Debug)]
pub struct TierForestBTreap {
    cfg: EmConfig,
    base: Treap,
    store: BlockStore,
    block_of: Vec<BlockId>,
    up: Vec<Option<BlockId>>,
    top: Option<BlockId>,
    components: Vec<Component>,
    rebuild_writes: u64,
}

impl TierForestBTreap {
    pub fn build<T: Real>(w: &WeightVector<T>, cfg: EmConfig, rng: &mut RandomStream) -> Result<Self> {
        let prios = Scheme::BTree { b: cfg.b }.assign(w, rng)?;
        Self::from_priorities(&prios, cfg)
    }

    pub fn from_priorities(prios: &[Priority], cfg: EmConfig) -> Result<Self> {
        EmConfig::new(cfg.b, cfg.alpha)?;
        let base = Treap::from_priorities(prios)?;
        let mut tf = TierForestBTreap {
            cfg,
            base,
            store: BlockStore::new(cfg.b),
            block_of: vec![0; prios.len() + 1],
            up: Vec::new(),
            top: None,
            components: Vec::new(),
            rebuild_writes: 0,
        };
        tf.materialize();
        tf.store.reset_io();
        Ok(tf)
    }

    fn materialize(&mut self) {
        self.store.clear();
        self.up.clear();
        self.top = None;
        self.components.clear();
        let Some(root) = self.base.root() else { return };

        let tier = |k: Key| self.base.priority(k).unwrap().tier();
        let n = self.base.universe() as usize;
        let mut comp_of = vec![usize::MAX; n + 1];
        let mut comps: Vec<(Key, i32, Vec<Key>)> = vec![(root, tier(root), Vec::new())];
        comp_of[root as usize] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(k) = queue.pop_front() {
            let c = comp_of[k as usize];
            comps[c].2.push(k);
            for child in [self.base.left(k), self.base.right(k)].into_iter().flatten() {
                if tier(child) == tier(k) {
                    comp_of[child as usize] = c;
                } else {
                    comp_of[child as usize] = comps.len();
                    comps.push((child, tier(child), Vec::new()));
                }
                queue.push_back(child);
            }
        }

        let cap = self.store.capacity();
        for (root, tier, mut keys) in comps {
            keys.sort_unstable();
            let host = self.base.parent(root).map(|p| self.block_of[p as usize]);
            let placement = match host {
                Some(h) if self.store.get(h).occupancy() + keys.len() <= cap => {
                    let blk = self.store.get_mut(h);
                    blk.guests.extend_from_slice(&keys);
                    blk.guests.sort_unstable();
                    for &k in &keys {
                        self.block_of[k as usize] = h;
                    }
                    Placement::Guest { host: h }
                }
                _ => {
                    let tree = BTree::bulk_load(&mut self.store, &keys, tier);
                    for (id, parent) in tree.blocks(&self.store) {
                        if self.up.len() <= id as usize {
                            self.up.resize(id as usize + 1, None);
                        }
                        self.up[id as usize] = parent.or(host);
                        for &k in &self.store.get(id).keys {
                            self.block_of[k as usize] = id;
                        }
                    }
                    let r = tree.root().expect("component is nonempty");
                    match host {
                        Some(h) => self.store.get_mut(h).glue.push(r),
                        None => self.top = Some(r),
                    }
                    Placement::Own { tree, host }
                }
            };
            self.components.push(Component { root, tier, keys, placement });
        }
    }

    pub fn config(&self) -> EmConfig {
        self.cfg
    }

    pub fn base(&self) -> &Treap {
        &self.base
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

    /// Total blocks written by component rebuilds.
    pub fn rebuild_writes(&self) -> u64 {
        self.rebuild_writes
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Number of components stored as guests of another block.
    pub fn guest_component_count(&self) -> usize {
        self.components.iter().filter(|c| matches!(c.placement, Placement::Guest { .. })).count()
    }

    fn present(&self, k: Key) -> Result<()> {
        if k == 0 || k > self.base.universe() {
            return Err(Error::KeyOutOfRange { key: k, n: self.base.universe() });
        }
        if !self.base.contains(k) {
            return Err(Error::NotFound(k));
        }
        Ok(())
    }

    /// Blocks from the top block down to the block holding `k`.
    pub fn block_path(&self, k: Key) -> Result<Vec<BlockId>> {
        self.present(k)?;
        let mut path = vec![self.block_of[k as usize]];
        while let Some(p) = self.up[*path.last().unwrap() as usize] {
            path.push(p);
        }
        path.reverse();
        Ok(path)
    }

    /// Tiers of the treap nodes from the root down to `k`.
    pub fn path_tiers(&self, k: Key) -> Result<Vec<i32>> {
        Ok(self.base.path_to(k)?.into_iter().map(|x| self.base.priority(x).unwrap().tier()).collect())
    }

    /// Number of distinct blocks on the search path to `k`, charged to the store.
    pub fn access(&mut self, k: Key) -> Result<u64> {
        let path = self.block_path(k)?;
        self.store.begin_op();
        for id in path {
            self.store.touch(id);
        }
        Ok(self.store.end_op())
    }

    /// Changes the weight of `k`, keeping its offset.
    pub fn update_weight<T: Real>(&mut self, k: Key, w: T) -> Result<UpdateCost> {
        self.present(k)?;
        let tier = btree_tier(w, self.cfg.b)?;
        let old = self.base.priority(k).unwrap();
        self.update_priority(k, Priority::new(tier, old.offset())?)
    }

    pub fn update_priority(&mut self, k: Key, p: Priority) -> Result<UpdateCost> {
        self.present(k)?;
        if self.base.priority(k) == Some(p) {
            return Ok(UpdateCost::default());
        }
        let removal = self.access(k)?;
        let before: HashSet<BlockSignature> = self.signatures().into_iter().collect();
        self.base.update_priority(k, p)?;
        self.materialize();
        let insertion = self.access(k)?;
        let rebuild_writes = self.signatures().into_iter().filter(|s| !before.contains(s)).count() as u64;
        self.rebuild_writes += rebuild_writes;
        Ok(UpdateCost { removal, insertion, rebuild_writes })
    }

    fn anchor(&self, id: BlockId) -> Key {
        let b = self.store.get(id);
        b.keys.first().or(b.guests.first()).copied().unwrap_or(0)
    }

    fn signatures(&self) -> Vec<BlockSignature> {
        self.store
            .live_ids()
            .map(|id| {
                let b = self.store.get(id);
                BlockSignature {
                    tier: b.tier,
                    keys: b.keys.clone(),
                    guests: b.guests.clone(),
                    children: b.children.iter().map(|&c| self.anchor(c)).collect(),
                    glue: b.glue.iter().map(|&c| self.anchor(c)).collect(),
                }
            })
            .collect()
    }

    /// One block per line, numbered in breadth-first order from the top block:
    /// `id tier=t keys=.. guests=.. children=.. glue=..`.
    pub fn dump(&self) -> String {
        let mut order: Vec<BlockId> = Vec::new();
        let mut index: HashMap<BlockId, usize> = HashMap::new();
        let mut queue: VecDeque<BlockId> = self.top.into_iter().collect();
        while let Some(id) = queue.pop_front() {
            index.insert(id, order.len());
            order.push(id);
            let b = self.store.get(id);
            queue.extend(b.children.iter().chain(&b.glue).copied());
        }
        let list = |v: &mut dyn Iterator<Item = String>| {
            let s: Vec<String> = v.collect();
            if s.is_empty() {
                "-".to_string()
            } else {
                s.join(",")
            }
        };
        let mut out = String::new();
        for (i, &id) in order.iter().enumerate() {
            let b = self.store.get(id);
            let _ = writeln!(
                out,
                "{i} tier={} keys={} guests={} children={} glue={}",
                b.tier,
                list(&mut b.keys.iter().map(|k| k.to_string())),
                list(&mut b.guests.iter().map(|k| k.to_string())),
                list(&mut b.children.iter().map(|c| index[c].to_string())),
                list(&mut b.glue.iter().map(|c| index[c].to_string())),
            );
        }
        out
    }

    /// Structural checks: component partition, uniform tiers, glue placement,
    /// block occupancy and the B-tree shape of every stored component.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        self.base.validate().map_err(|v| v.to_string())?;
        let n = self.base.universe() as usize;
        let mut seen = vec![false; n + 1];
        for c in &self.components {
            for &k in &c.keys {
                if std::mem::replace(&mut seen[k as usize], true) {
                    return Err(format!("key {k} in two components"));
                }
                let t = self.base.priority(k).unwrap().tier();
                if t != c.tier {
                    return Err(format!("key {k} has tier {t} in a tier-{} component", c.tier));
                }
            }
            let expect_host = self.base.parent(c.root).map(|p| self.block_of[p as usize]);
            match &c.placement {
                Placement::Own { tree, host } => {
                    tree.validate(&self.store)?;
                    if *host != expect_host {
                        return Err(format!("component at {} glued to the wrong block", c.root));
                    }
                    let r = tree.root().unwrap();
                    if self.up[r as usize] != expect_host {
                        return Err(format!("root block of component at {} has the wrong parent", c.root));
                    }
                }
                Placement::Guest { host } => {
                    if Some(*host) != expect_host {
                        return Err(format!("guest component at {} in the wrong block", c.root));
                    }
                }
            }
        }
        if seen.iter().skip(1).filter(|&&s| s).count() != self.base.len() {
            return Err("components do not cover the treap".into());
        }
        for id in self.store.live_ids() {
            let b: &Block = self.store.get(id);
            if b.occupancy() > self.store.capacity() {
                return Err(format!("block {id} holds {} keys", b.occupancy()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct BlockSignature {
    tier: i32,
    keys: Vec<Key>,
    guests: Vec<Key>,
    children: Vec<Key>,
    glue: Vec<Key>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(b: usize) -> EmConfig {
        EmConfig::new(b, 0.5).unwrap()
    }

    #[test]
    fn uniform_square_universe_is_one_component() {
        let b = 16;
        let n = b * b;
        let w = WeightVector::<f64>::uniform(n);
        let mut tf = TierForestBTreap::build(&w, cfg(b), &mut RandomStream::new(3)).unwrap();
        tf.check_invariants().unwrap();
        assert_eq!(tf.component_count(), 1);
        assert_eq!(tf.io_touches(), 0);
        for k in 1..=n as Key {
            assert!(tf.access(k).unwrap() <= 3);
        }
    }

    #[test]
    fn heavy_item_is_in_the_top_block() {
        let n = 300;
        let mut w = vec![1e-9; n];
        w[41] = 1.0;
        let w = WeightVector::new(w).unwrap();
        let mut tf = TierForestBTreap::build(&w, cfg(8), &mut RandomStream::new(5)).unwrap();
        assert_eq!(tf.base().root(), Some(42));
        assert_eq!(tf.access(42).unwrap(), 1);
        assert_eq!(tf.access(42).unwrap(), 1);
        assert_eq!(tf.report().io_touches, 2);
    }

    #[test]
    fn update_with_same_weight_changes_nothing() {
        let w = WeightVector::<f64>::new((1..=40).map(|x| 1.0 / (x * x) as f64).collect()).unwrap();
        let mut tf = TierForestBTreap::build(&w, cfg(4), &mut RandomStream::new(1)).unwrap();
        let dump = tf.dump();
        assert_eq!(tf.update_weight(17, w.get(17)).unwrap(), UpdateCost::default());
        assert_eq!(tf.dump(), dump);
    }

    #[test]
    fn missing_keys() {
        let w = WeightVector::<f64>::uniform(5);
        let mut tf = TierForestBTreap::build(&w, cfg(4), &mut RandomStream::new(1)).unwrap();
        assert_eq!(tf.access(6), Err(Error::KeyOutOfRange { key: 6, n: 5 }));
        assert!(tf.update_weight(3, 0.0).is_err());
        assert!(TierForestBTreap::build(&w, EmConfig { b: 3, alpha: 0.5 }, &mut RandomStream::new(1)).is_err());
    }
}
