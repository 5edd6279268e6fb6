use super::store::{Block, BlockId, BlockStore};
use crate::error::{Error, Result};
use crate::treap::Key;

/// A B-tree of keys living in a [`BlockStore`].
///
/// Blocks hold at most `B - 1` keys and non-root blocks at least
/// `ceil(B / 2) - 1`. Every method that reads or writes a block charges it
/// to the store; the caller brackets operations with `begin_op`/`end_op`.
#[derive(Clone, Debug)]
pub struct BTree {
    root: Option<BlockId>,
    len: usize,
    tier: i32,
}

fn height_for(b: usize, s: usize) -> u32 {
    let mut h = 1u32;
    let mut cap = b as u128;
    while cap - 1 < s as u128 {
        h += 1;
        cap *= b as u128;
    }
    h
}

impl BTree {
    pub fn new(tier: i32) -> Self {
        BTree { root: None, len: 0, tier }
    }

    /// Builds a tree of minimum height over sorted, distinct `keys`.
    /// All leaves end up at the same depth. Construction is not charged.
    pub fn bulk_load(store: &mut BlockStore, keys: &[Key], tier: i32) -> Self {
        debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        if keys.is_empty() {
            return BTree::new(tier);
        }
        let h = height_for(store.branching(), keys.len());
        let root = Self::load(store, keys, h, tier);
        BTree { root: Some(root), len: keys.len(), tier }
    }

    fn load(store: &mut BlockStore, keys: &[Key], h: u32, tier: i32) -> BlockId {
        let b = store.branching();
        if h == 1 {
            debug_assert!(keys.len() < b);
            return store.alloc(Block::leaf(keys.to_vec(), tier));
        }
        let sub = (b as u128).pow(h - 1);
        let s = keys.len();
        let c = ((s as u128 + 1).div_ceil(sub)).max(2) as usize;
        let spread = s - (c - 1);
        let (q, r) = (spread / c, spread % c);
        let mut children = Vec::with_capacity(c);
        let mut seps = Vec::with_capacity(c - 1);
        let mut at = 0;
        for j in 0..c {
            let size = q + usize::from(j < r);
            children.push(Self::load(store, &keys[at..at + size], h - 1, tier));
            at += size;
            if j + 1 < c {
                seps.push(keys[at]);
                at += 1;
            }
        }
        store.alloc(Block { keys: seps, children, tier, ..Block::default() })
    }

    pub fn root(&self) -> Option<BlockId> {
        self.root
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tier(&self) -> i32 {
        self.tier
    }

    /// Number of block levels, 0 for an empty tree.
    pub fn height(&self, store: &BlockStore) -> u32 {
        let mut h = 0;
        let mut cur = self.root;
        while let Some(id) = cur {
            h += 1;
            cur = store.get(id).children.first().copied();
        }
        h
    }

    /// Blocks from the root to the block holding `k` (or to the leaf where
    /// the search for `k` ends). Not charged.
    pub fn path(&self, store: &BlockStore, k: Key) -> (Vec<BlockId>, bool) {
        let mut out = Vec::new();
        let mut cur = self.root;
        while let Some(id) = cur {
            out.push(id);
            let blk = store.get(id);
            match blk.keys.binary_search(&k) {
                Ok(_) => return (out, true),
                Err(pos) => cur = blk.children.get(pos).copied(),
            }
        }
        (out, false)
    }

    /// Searches for `k`, charging the path.
    pub fn search(&self, store: &mut BlockStore, k: Key) -> bool {
        let (path, found) = self.path(store, k);
        for id in path {
            store.touch(id);
        }
        found
    }

    pub fn insert(&mut self, store: &mut BlockStore, k: Key) -> Result<()> {
        let cap = store.capacity();
        let Some(root) = self.root else {
            let id = store.alloc(Block::leaf(vec![k], self.tier));
            store.touch(id);
            self.root = Some(id);
            self.len = 1;
            return Ok(());
        };
        let mut path: Vec<(BlockId, usize)> = Vec::new();
        let mut cur = root;
        loop {
            store.touch(cur);
            let blk = store.get(cur);
            match blk.keys.binary_search(&k) {
                Ok(_) => return Err(Error::DuplicateKey(k)),
                Err(pos) => {
                    if blk.is_leaf() {
                        store.get_mut(cur).keys.insert(pos, k);
                        break;
                    }
                    path.push((cur, pos));
                    cur = blk.children[pos];
                }
            }
        }
        self.len += 1;
        let mut node = cur;
        while store.get(node).keys.len() > cap {
            let blk = store.get_mut(node);
            let mid = blk.keys.len() / 2;
            let right_keys = blk.keys.split_off(mid + 1);
            let median = blk.keys.pop().expect("split of a full block");
            let right_children =
                if blk.is_leaf() { Vec::new() } else { blk.children.split_off(mid + 1) };
            let tier = blk.tier;
            let right = store.alloc(Block { keys: right_keys, children: right_children, tier, ..Block::default() });
            store.touch(right);
            match path.pop() {
                None => {
                    let new_root = store.alloc(Block {
                        keys: vec![median],
                        children: vec![node, right],
                        tier,
                        ..Block::default()
                    });
                    store.touch(new_root);
                    self.root = Some(new_root);
                    break;
                }
                Some((parent, idx)) => {
                    let p = store.get_mut(parent);
                    p.keys.insert(idx, median);
                    p.children.insert(idx + 1, right);
                    node = parent;
                }
            }
        }
        Ok(())
    }

    pub fn remove(&mut self, store: &mut BlockStore, k: Key) -> Result<()> {
        let min = store.branching().div_ceil(2) - 1;
        let mut path: Vec<(BlockId, usize)> = Vec::new();
        let mut cur = self.root.ok_or(Error::NotFound(k))?;
        let leaf = loop {
            store.touch(cur);
            let blk = store.get(cur);
            match blk.keys.binary_search(&k) {
                Ok(pos) => {
                    if blk.is_leaf() {
                        store.get_mut(cur).keys.remove(pos);
                        break cur;
                    }
                    // swap in the predecessor from the rightmost leaf of the left subtree
                    path.push((cur, pos));
                    let mut down = blk.children[pos];
                    loop {
                        store.touch(down);
                        let d = store.get(down);
                        if d.is_leaf() {
                            break;
                        }
                        path.push((down, d.children.len() - 1));
                        down = *d.children.last().unwrap();
                    }
                    let pred = store.get_mut(down).keys.pop().expect("nonempty leaf");
                    store.get_mut(cur).keys[pos] = pred;
                    break down;
                }
                Err(pos) => {
                    if blk.is_leaf() {
                        return Err(Error::NotFound(k));
                    }
                    path.push((cur, pos));
                    cur = blk.children[pos];
                }
            }
        };
        self.len -= 1;

        let mut node = leaf;
        while let Some((parent, idx)) = path.pop() {
            if store.get(node).keys.len() >= min {
                break;
            }
            let nchildren = store.get(parent).children.len();
            let left = (idx > 0).then(|| store.get(parent).children[idx - 1]);
            let right = (idx + 1 < nchildren).then(|| store.get(parent).children[idx + 1]);
            if let Some(l) = left {
                store.touch(l);
                if store.get(l).keys.len() > min {
                    let lk = store.get_mut(l).keys.pop().unwrap();
                    let lc = store.get_mut(l).children.pop();
                    let sep = std::mem::replace(&mut store.get_mut(parent).keys[idx - 1], lk);
                    let n = store.get_mut(node);
                    n.keys.insert(0, sep);
                    if let Some(c) = lc {
                        n.children.insert(0, c);
                    }
                    break;
                }
            }
            if let Some(r) = right {
                store.touch(r);
                if store.get(r).keys.len() > min {
                    let rk = store.get_mut(r).keys.remove(0);
                    let rc = if store.get(r).is_leaf() { None } else { Some(store.get_mut(r).children.remove(0)) };
                    let sep = std::mem::replace(&mut store.get_mut(parent).keys[idx], rk);
                    let n = store.get_mut(node);
                    n.keys.push(sep);
                    if let Some(c) = rc {
                        n.children.push(c);
                    }
                    break;
                }
            }
            // merge with a sibling through the separating key
            let (into, from, sep_idx) = match left {
                Some(l) => (l, node, idx - 1),
                None => (node, right.expect("non-root block has a sibling"), idx),
            };
            let sep = store.get_mut(parent).keys.remove(sep_idx);
            store.get_mut(parent).children.remove(sep_idx + 1);
            let moved = std::mem::take(store.get_mut(from));
            let dst = store.get_mut(into);
            dst.keys.push(sep);
            dst.keys.extend(moved.keys);
            dst.children.extend(moved.children);
            store.release(from);
            node = parent;
        }

        let root = self.root.unwrap();
        let r = store.get(root);
        if r.keys.is_empty() {
            self.root = r.children.first().copied();
            store.release(root);
        }
        Ok(())
    }

    /// Keys in order. Not charged.
    pub fn keys(&self, store: &BlockStore) -> Vec<Key> {
        fn walk(store: &BlockStore, id: BlockId, out: &mut Vec<Key>) {
            let blk = store.get(id);
            for (i, &k) in blk.keys.iter().enumerate() {
                if let Some(&c) = blk.children.get(i) {
                    walk(store, c, out);
                }
                out.push(k);
            }
            if let Some(&c) = blk.children.get(blk.keys.len()) {
                walk(store, c, out);
            }
        }
        let mut out = Vec::with_capacity(self.len);
        if let Some(r) = self.root {
            walk(store, r, &mut out);
        }
        out
    }

    /// Every block of the tree with its B-tree parent, root first. Not charged.
    pub fn blocks(&self, store: &BlockStore) -> Vec<(BlockId, Option<BlockId>)> {
        let mut out = Vec::new();
        let mut stack: Vec<(BlockId, Option<BlockId>)> = self.root.map(|r| (r, None)).into_iter().collect();
        while let Some((id, parent)) = stack.pop() {
            out.push((id, parent));
            for &c in store.get(id).children.iter().rev() {
                stack.push((c, Some(id)));
            }
        }
        out
    }

    /// Releases every block of the tree.
    pub fn clear(&mut self, store: &mut BlockStore) {
        for (id, _) in self.blocks(store) {
            store.release(id);
        }
        self.root = None;
        self.len = 0;
    }

    /// Checks key order, occupancy bounds, fan-out and uniform leaf depth.
    pub fn validate(&self, store: &BlockStore) -> std::result::Result<(), String> {
        let b = store.branching();
        let min = b.div_ceil(2) - 1;
        let keys = self.keys(store);
        if keys.len() != self.len {
            return Err(format!("recorded {} keys, found {}", self.len, keys.len()));
        }
        if !keys.windows(2).all(|w| w[0] < w[1]) {
            return Err("keys out of order".into());
        }
        let Some(root) = self.root else { return Ok(()) };
        let mut leaf_depth = None;
        let mut stack = vec![(root, 1u32)];
        while let Some((id, d)) = stack.pop() {
            let blk = store.get(id);
            if blk.keys.len() > b - 1 {
                return Err(format!("block {id} holds {} keys", blk.keys.len()));
            }
            if id != root && blk.keys.len() < min {
                return Err(format!("block {id} underfull with {} keys", blk.keys.len()));
            }
            if blk.keys.is_empty() {
                return Err(format!("block {id} is empty"));
            }
            if blk.is_leaf() {
                if *leaf_depth.get_or_insert(d) != d {
                    return Err("leaves at different depths".into());
                }
            } else {
                if blk.children.len() != blk.keys.len() + 1 {
                    return Err(format!("block {id} has {} keys and {} children", blk.keys.len(), blk.children.len()));
                }
                stack.extend(blk.children.iter().map(|&c| (c, d + 1)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bulk_load_minimum_height() {
        let mut s = BlockStore::new(4);
        for n in 0..200u32 {
            let keys: Vec<Key> = (1..=n).collect();
            let t = BTree::bulk_load(&mut s, &keys, 0);
            t.validate(&s).unwrap();
            assert_eq!(t.keys(&s), keys);
            let expect = if n == 0 { 0 } else { height_for(4, n as usize) };
            assert_eq!(t.height(&s), expect, "n = {n}");
        }
    }

    #[test]
    fn single_block_search_touches_one() {
        let mut s = BlockStore::new(16);
        let t = BTree::bulk_load(&mut s, &[2, 4, 6], 0);
        s.begin_op();
        assert!(t.search(&mut s, 4));
        assert!(!t.search(&mut s, 5));
        assert_eq!(s.end_op(), 1);
    }

    #[test]
    fn square_universe_has_height_two() {
        let mut s = BlockStore::new(16);
        let keys: Vec<Key> = (1..=256).collect();
        let t = BTree::bulk_load(&mut s, &keys, 0);
        assert_eq!(t.height(&s), 3);
        let keys: Vec<Key> = (1..=255).collect();
        let t = BTree::bulk_load(&mut s, &keys, 0);
        assert_eq!(t.height(&s), 2);
    }

    #[test]
    fn remove_missing_and_duplicate_insert() {
        let mut s = BlockStore::new(4);
        let mut t = BTree::new(0);
        assert_eq!(t.remove(&mut s, 3), Err(Error::NotFound(3)));
        t.insert(&mut s, 3).unwrap();
        assert_eq!(t.insert(&mut s, 3), Err(Error::DuplicateKey(3)));
        t.remove(&mut s, 3).unwrap();
        assert!(t.is_empty());
        assert_eq!(s.block_count(), 0);
    }

    proptest! {
        #[test]
        fn random_ops_match_set(b in 4usize..9, ops in prop::collection::vec((any::<bool>(), 1u32..120), 0..400)) {
            let mut s = BlockStore::new(b);
            let mut t = BTree::new(0);
            let mut model = std::collections::BTreeSet::new();
            for (ins, k) in ops {
                if ins {
                    prop_assert_eq!(t.insert(&mut s, k).is_ok(), model.insert(k));
                } else {
                    prop_assert_eq!(t.remove(&mut s, k).is_ok(), model.remove(&k));
                }
                t.validate(&s).map_err(TestCaseError::fail)?;
            }
            prop_assert_eq!(t.keys(&s), model.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(s.block_count(), t.blocks(&s).len());
        }
    }
}
