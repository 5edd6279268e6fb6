//! Binary treap over the dense key universe `1..=n`.
//!
//! A treap is the unique binary search tree whose nodes are heap ordered by
//! priority. Priorities here are composite: an integral tier plus a real
//! offset in `(0, 1)`. Node storage is addressed by key and every operation
//! descends iteratively, so degenerate (chain-shaped) trees are fine.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// An item of the ordered universe `1..=n`.
pub type Key = u32;

const NIL: Key = 0;

/// Composite priority `-tier + offset`.
///
/// Larger priorities sit closer to the root. The order is lexicographic on
/// `(-tier, offset)`; [`Treap`] breaks remaining ties in favour of the smaller
/// key so that two priorities in one tree never compare equal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Priority {
    tier: i32,
    offset: f64,
}

impl Priority {
    pub fn new(tier: i32, offset: f64) -> Result<Self> {
        if !(offset > 0.0 && offset < 1.0) {
            return Err(Error::Domain(format!(
                "priority offset {offset} must lie strictly inside (0, 1)"
            )));
        }
        Ok(Priority { tier, offset })
    }

    pub fn tier(&self) -> i32 {
        self.tier
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// The real-valued priority `-tier + offset`.
    pub fn value(&self) -> f64 {
        -(self.tier as f64) + self.offset
    }

    /// Total order of `(priority, key)` pairs: `Greater` means `a` ranks above `b`.
    pub fn rank_cmp(a: (Priority, Key), b: (Priority, Key)) -> Ordering {
        b.0.tier
            .cmp(&a.0.tier)
            .then_with(|| a.0.offset.total_cmp(&b.0.offset))
            .then_with(|| b.1.cmp(&a.1))
    }
}

/// Work counters accumulated by tree operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub comparisons: u64,
    pub rotations: u64,
    pub nodes_touched: u64,
}

/// First structural defect found by [`Treap::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BstOrder { key: Key, parent: Key },
    HeapOrder { child: Key, parent: Key },
    Link { key: Key, expected_parent: Key, found_parent: Key },
    Size { recorded: usize, reachable: usize },
    Cycle { key: Key },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BstOrder { key, parent } => {
                write!(f, "key {key} is on the wrong side of ancestor {parent}")
            }
            Violation::HeapOrder { child, parent } => {
                write!(f, "child {child} outranks its parent {parent}")
            }
            Violation::Link { key, expected_parent, found_parent } => write!(
                f,
                "key {key} records parent {found_parent} but hangs below {expected_parent}"
            ),
            Violation::Size { recorded, reachable } => {
                write!(f, "size is {recorded} but {reachable} nodes are reachable")
            }
            Violation::Cycle { key } => write!(f, "key {key} is reachable twice"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Treap {
    n: u32,
    prio: Vec<Option<Priority>>,
    left: Vec<Key>,
    right: Vec<Key>,
    parent: Vec<Key>,
    root: Key,
    size: usize,
    ledger: CostLedger,
}

impl Treap {
    /// An empty treap over the universe `1..=n`.
    pub fn new(n: u32) -> Self {
        let slots = n as usize + 1;
        Treap {
            n,
            prio: vec![None; slots],
            left: vec![NIL; slots],
            right: vec![NIL; slots],
            parent: vec![NIL; slots],
            root: NIL,
            size: 0,
            ledger: CostLedger::default(),
        }
    }

    /// The treap over keys `1..=priorities.len()` with the given priorities.
    pub fn from_priorities(priorities: &[Priority]) -> Result<Self> {
        let pairs: Vec<(Key, Priority)> = priorities
            .iter()
            .enumerate()
            .map(|(i, p)| (i as Key + 1, *p))
            .collect();
        Self::build_recursive(priorities.len() as u32, &pairs)
    }

    /// Builds the unique treap for `(key, priority)` pairs over `1..=n`.
    ///
    /// Equivalent to picking the highest-priority key as the root and
    /// recursing on both sides; realized with a linear-time stack sweep.
    pub fn build_recursive(n: u32, pairs: &[(Key, Priority)]) -> Result<Self> {
        let mut t = Treap::new(n);
        for &(k, p) in pairs {
            t.check_key(k)?;
            Priority::new(p.tier, p.offset)
                .map_err(|e| Error::InvalidPriority { key: k, reason: e.to_string() })?;
            if t.prio[k as usize].is_some() {
                return Err(Error::DuplicateKey(k));
            }
            t.prio[k as usize] = Some(p);
        }
        let mut stack: Vec<Key> = Vec::new();
        for k in 1..=n {
            if t.prio[k as usize].is_none() {
                continue;
            }
            let mut last = NIL;
            while let Some(&top) = stack.last() {
                if t.outranks(top, k) {
                    break;
                }
                last = stack.pop().unwrap();
            }
            t.left[k as usize] = last;
            if last != NIL {
                t.parent[last as usize] = k;
            }
            if let Some(&top) = stack.last() {
                t.right[top as usize] = k;
                t.parent[k as usize] = top;
            }
            stack.push(k);
        }
        t.root = stack.first().copied().unwrap_or(NIL);
        t.size = pairs.len();
        Ok(t)
    }

    pub fn universe(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn root(&self) -> Option<Key> {
        some(self.root)
    }

    pub fn contains(&self, k: Key) -> bool {
        k >= 1 && k <= self.n && self.prio[k as usize].is_some()
    }

    pub fn priority(&self, k: Key) -> Option<Priority> {
        self.prio.get(k as usize).copied().flatten()
    }

    pub fn left(&self, k: Key) -> Option<Key> {
        self.present(k).ok().and_then(|_| some(self.left[k as usize]))
    }

    pub fn right(&self, k: Key) -> Option<Key> {
        self.present(k).ok().and_then(|_| some(self.right[k as usize]))
    }

    pub fn parent(&self, k: Key) -> Option<Key> {
        self.present(k).ok().and_then(|_| some(self.parent[k as usize]))
    }

    pub fn ledger(&self) -> CostLedger {
        self.ledger
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = CostLedger::default();
    }

    /// Depth of `k` (root has depth 1) without charging the ledger.
    pub fn depth(&self, k: Key) -> Result<u32> {
        self.present(k)?;
        let mut d = 1;
        let mut cur = k;
        while self.parent[cur as usize] != NIL {
            cur = self.parent[cur as usize];
            d += 1;
        }
        Ok(d)
    }

    /// Depth of every key, indexed by key; absent keys report 0.
    pub fn depths(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.n as usize + 1];
        if self.root == NIL {
            return out;
        }
        let mut stack = vec![(self.root, 1u32)];
        while let Some((k, d)) = stack.pop() {
            out[k as usize] = d;
            for c in [self.left[k as usize], self.right[k as usize]] {
                if c != NIL {
                    stack.push((c, d + 1));
                }
            }
        }
        out
    }

    /// Root-to-`k` path, inclusive.
    pub fn path_to(&self, k: Key) -> Result<Vec<Key>> {
        self.present(k)?;
        let mut path = vec![k];
        let mut cur = k;
        while self.parent[cur as usize] != NIL {
            cur = self.parent[cur as usize];
            path.push(cur);
        }
        path.reverse();
        Ok(path)
    }

    /// Searches for `k` from the root and returns its depth, charging every
    /// node on the path to the ledger.
    pub fn access(&mut self, k: Key) -> Result<u32> {
        self.check_key(k)?;
        let mut cur = self.root;
        let mut depth = 0;
        while cur != NIL {
            depth += 1;
            self.ledger.nodes_touched += 1;
            self.ledger.comparisons += 1;
            match k.cmp(&cur) {
                Ordering::Equal => return Ok(depth),
                Ordering::Less => cur = self.left[cur as usize],
                Ordering::Greater => cur = self.right[cur as usize],
            }
        }
        Err(Error::NotFound(k))
    }

    /// Inserts `k` as a leaf and rotates it up into heap position.
    /// Returns the number of rotations.
    pub fn insert(&mut self, k: Key, p: Priority) -> Result<u64> {
        self.check_key(k)?;
        if self.prio[k as usize].is_some() {
            return Err(Error::DuplicateKey(k));
        }
        Priority::new(p.tier, p.offset)?;
        self.prio[k as usize] = Some(p);
        self.left[k as usize] = NIL;
        self.right[k as usize] = NIL;
        self.parent[k as usize] = NIL;
        self.size += 1;
        if self.root == NIL {
            self.root = k;
            return Ok(0);
        }
        let mut cur = self.root;
        loop {
            self.ledger.nodes_touched += 1;
            self.ledger.comparisons += 1;
            let slot = if k < cur {
                &mut self.left[cur as usize]
            } else {
                &mut self.right[cur as usize]
            };
            if *slot == NIL {
                *slot = k;
                self.parent[k as usize] = cur;
                break;
            }
            cur = *slot;
        }
        let mut rotations = 0;
        while self.parent[k as usize] != NIL && self.outranks(k, self.parent[k as usize]) {
            self.rotate_up(k);
            rotations += 1;
        }
        Ok(rotations)
    }

    /// Rotates `k` down to a leaf and detaches it. Returns the number of rotations.
    pub fn delete(&mut self, k: Key) -> Result<u64> {
        self.locate(k)?;
        let mut rotations = 0;
        loop {
            let l = self.left[k as usize];
            let r = self.right[k as usize];
            let child = match (l, r) {
                (NIL, NIL) => break,
                (c, NIL) | (NIL, c) => c,
                (l, r) => {
                    if self.outranks(l, r) {
                        l
                    } else {
                        r
                    }
                }
            };
            self.rotate_up(child);
            rotations += 1;
        }
        let p = self.parent[k as usize];
        if p == NIL {
            self.root = NIL;
        } else if self.left[p as usize] == k {
            self.left[p as usize] = NIL;
        } else {
            self.right[p as usize] = NIL;
        }
        self.parent[k as usize] = NIL;
        self.prio[k as usize] = None;
        self.size -= 1;
        Ok(rotations)
    }

    /// Replaces the priority of `k` in place by rotating it up or down.
    /// Returns the number of rotations.
    pub fn update_priority(&mut self, k: Key, p: Priority) -> Result<u64> {
        self.locate(k)?;
        Priority::new(p.tier, p.offset)?;
        let old = self.prio[k as usize].unwrap();
        self.prio[k as usize] = Some(p);
        let mut rotations = 0;
        if Priority::rank_cmp((p, k), (old, k)) == Ordering::Greater {
            while self.parent[k as usize] != NIL && self.outranks(k, self.parent[k as usize]) {
                self.rotate_up(k);
                rotations += 1;
            }
        } else {
            loop {
                let l = self.left[k as usize];
                let r = self.right[k as usize];
                let best = match (l, r) {
                    (NIL, NIL) => break,
                    (c, NIL) | (NIL, c) => c,
                    (l, r) => {
                        if self.outranks(l, r) {
                            l
                        } else {
                            r
                        }
                    }
                };
                if !self.outranks(best, k) {
                    break;
                }
                self.rotate_up(best);
                rotations += 1;
            }
        }
        Ok(rotations)
    }

    /// Priority change by deletion followed by reinsertion.
    /// Returns the total rotation count of both steps.
    pub fn update_priority_reinsert(&mut self, k: Key, p: Priority) -> Result<u64> {
        let down = self.delete(k)?;
        let up = self.insert(k, p)?;
        Ok(down + up)
    }

    /// Whether `x` is a proper ancestor of `y`, by walking up from `y`.
    pub fn is_ancestor(&self, x: Key, y: Key) -> Result<bool> {
        self.present(x)?;
        self.present(y)?;
        if x == y {
            return Err(Error::Domain("ancestry is defined for distinct keys".into()));
        }
        let mut cur = self.parent[y as usize];
        while cur != NIL {
            if cur == x {
                return Ok(true);
            }
            cur = self.parent[cur as usize];
        }
        Ok(false)
    }

    /// Checks BST order, heap order, parent links and size.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let mut reachable = 0usize;
        let mut seen = vec![false; self.n as usize + 1];
        if self.root != NIL && self.parent[self.root as usize] != NIL {
            return Err(Violation::Link {
                key: self.root,
                expected_parent: NIL,
                found_parent: self.parent[self.root as usize],
            });
        }
        // (node, lower bound, upper bound, bounding ancestor)
        let mut stack: Vec<(Key, Key, Key, Key)> = Vec::new();
        if self.root != NIL {
            stack.push((self.root, 0, self.n + 1, NIL));
        }
        while let Some((k, lo, hi, anc)) = stack.pop() {
            if seen[k as usize] || self.prio[k as usize].is_none() {
                return Err(Violation::Cycle { key: k });
            }
            seen[k as usize] = true;
            reachable += 1;
            if k <= lo || k >= hi {
                return Err(Violation::BstOrder { key: k, parent: anc });
            }
            for (c, clo, chi) in [
                (self.left[k as usize], lo, k),
                (self.right[k as usize], k, hi),
            ] {
                if c == NIL {
                    continue;
                }
                if self.parent[c as usize] != k {
                    return Err(Violation::Link {
                        key: c,
                        expected_parent: k,
                        found_parent: self.parent[c as usize],
                    });
                }
                if self.prio[c as usize].is_some() && self.outranks(c, k) {
                    return Err(Violation::HeapOrder { child: c, parent: k });
                }
                stack.push((c, clo, chi, k));
            }
        }
        if reachable != self.size {
            return Err(Violation::Size { recorded: self.size, reachable });
        }
        Ok(())
    }

    /// Node-for-node equality of shape and priorities, ignoring ledgers.
    pub fn same_tree(&self, other: &Treap) -> bool {
        self.n == other.n
            && self.root == other.root
            && self.size == other.size
            && self.prio == other.prio
            && self.left == other.left
            && self.right == other.right
            && self.parent == other.parent
    }

    fn outranks(&self, a: Key, b: Key) -> bool {
        let pa = self.prio[a as usize].expect("ranked key present");
        let pb = self.prio[b as usize].expect("ranked key present");
        Priority::rank_cmp((pa, a), (pb, b)) == Ordering::Greater
    }

    fn rotate_up(&mut self, x: Key) {
        let p = self.parent[x as usize];
        let g = self.parent[p as usize];
        if self.left[p as usize] == x {
            let b = self.right[x as usize];
            self.left[p as usize] = b;
            if b != NIL {
                self.parent[b as usize] = p;
            }
            self.right[x as usize] = p;
        } else {
            let b = self.left[x as usize];
            self.right[p as usize] = b;
            if b != NIL {
                self.parent[b as usize] = p;
            }
            self.left[x as usize] = p;
        }
        self.parent[p as usize] = x;
        self.parent[x as usize] = g;
        if g == NIL {
            self.root = x;
        } else if self.left[g as usize] == p {
            self.left[g as usize] = x;
        } else {
            self.right[g as usize] = x;
        }
        self.ledger.rotations += 1;
    }

    /// Charged search that must find `k`.
    fn locate(&mut self, k: Key) -> Result<()> {
        self.access(k).map(|_| ())
    }

    fn check_key(&self, k: Key) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::KeyOutOfRange { key: k, n: self.n });
        }
        Ok(())
    }

    fn present(&self, k: Key) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::NotFound(k))
        }
    }
}

fn some(k: Key) -> Option<Key> {
    (k != NIL).then_some(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(offset: f64) -> Priority {
        Priority::new(0, offset).unwrap()
    }

    fn sample() -> Treap {
        Treap::from_priorities(&[p(0.9), p(0.5), p(0.7)]).unwrap()
    }

    #[test]
    fn build_matches_hand_derivation() {
        let t = sample();
        assert_eq!(t.root(), Some(1));
        assert_eq!(t.right(1), Some(3));
        assert_eq!(t.left(3), Some(2));
        let d = t.depths();
        assert_eq!(&d[1..], &[1, 3, 2]);
        assert_eq!(t.validate(), Ok(()));
    }

    #[test]
    fn singleton_and_chain() {
        let t = Treap::from_priorities(&[p(0.5)]).unwrap();
        assert_eq!((t.len(), t.root(), t.depth(1).unwrap()), (1, Some(1), 1));

        let pri: Vec<_> = (0..50).map(|i| p(0.99 - i as f64 * 0.01)).collect();
        let t = Treap::from_priorities(&pri).unwrap();
        let d = t.depths();
        for x in 1..=50u32 {
            assert_eq!(d[x as usize], x);
        }
    }

    #[test]
    fn duplicate_or_bad_input_rejected() {
        assert_eq!(
            Treap::build_recursive(3, &[(1, p(0.5)), (1, p(0.6))]).unwrap_err(),
            Error::DuplicateKey(1)
        );
        assert!(matches!(
            Treap::build_recursive(3, &[(4, p(0.5))]),
            Err(Error::KeyOutOfRange { .. })
        ));
        let bad = Priority { tier: 0, offset: 1.0 };
        assert!(matches!(
            Treap::build_recursive(3, &[(1, bad)]),
            Err(Error::InvalidPriority { .. })
        ));
    }

    #[test]
    fn insert_errors_and_empty() {
        let mut t = Treap::new(4);
        assert_eq!(t.insert(2, p(0.3)).unwrap(), 0);
        assert_eq!(t.root(), Some(2));
        assert_eq!(t.insert(2, p(0.4)).unwrap_err(), Error::DuplicateKey(2));
    }

    #[test]
    fn max_priority_insert_becomes_root() {
        let mut t = Treap::new(4);
        for (k, o) in [(1, 0.9), (2, 0.5), (3, 0.7)] {
            t.insert(k, p(o)).unwrap();
        }
        // BST leaf position for 4 is below 3, at depth 3 (1 -> 3 -> 4).
        let leaf_depth = 3;
        let r = t.insert(4, p(0.95)).unwrap();
        assert_eq!(t.root(), Some(4));
        assert_eq!(r, leaf_depth - 1);
    }

    #[test]
    fn delete_and_reinsert_restores() {
        let mut t = Treap::from_priorities(&[p(0.2), p(0.8)]).unwrap();
        t.delete(2).unwrap();
        assert_eq!((t.len(), t.root()), (1, Some(1)));
        assert_eq!(t.delete(2).unwrap_err(), Error::NotFound(2));

        let orig = sample();
        let mut t = sample();
        t.delete(3).unwrap();
        t.insert(3, p(0.7)).unwrap();
        assert!(t.same_tree(&orig));
    }

    #[test]
    fn access_and_ancestry() {
        let mut t = sample();
        assert_eq!(t.access(1).unwrap(), 1);
        assert_eq!(t.access(2).unwrap(), 3);
        assert_eq!(t.ledger().nodes_touched, 4);
        assert!(t.is_ancestor(3, 2).unwrap());
        assert!(!t.is_ancestor(2, 3).unwrap());
        assert!(t.is_ancestor(1, 2).unwrap() && t.is_ancestor(1, 3).unwrap());
        assert!(t.access(5).is_err());
        let mut t2 = Treap::new(3);
        t2.insert(1, p(0.1)).unwrap();
        assert_eq!(t2.access(2).unwrap_err(), Error::NotFound(2));
        assert_eq!(t2.is_ancestor(1, 2).unwrap_err(), Error::NotFound(2));
    }

    #[test]
    fn update_priority_edges() {
        let mut t = sample();
        let before = t.clone();
        assert_eq!(t.update_priority(2, p(0.5)).unwrap(), 0);
        assert!(t.same_tree(&before));
        t.update_priority(2, Priority::new(-1, 0.5).unwrap()).unwrap();
        assert_eq!(t.root(), Some(2));
        assert_eq!(t.validate(), Ok(()));
        assert_eq!(t.update_priority(9, p(0.5)).unwrap_err(), Error::KeyOutOfRange { key: 9, n: 3 });
    }

    #[test]
    fn validate_reports_faults() {
        let mut t = sample();
        // swap the children of 3 so 2 hangs on the right
        t.right[3] = t.left[3];
        t.left[3] = NIL;
        assert!(matches!(t.validate(), Err(Violation::BstOrder { key: 2, .. })));

        let mut t = sample();
        t.prio[2] = Some(p(0.99));
        assert_eq!(t.validate(), Err(Violation::HeapOrder { child: 2, parent: 3 }));

        let mut t = sample();
        t.parent[2] = 1;
        assert!(matches!(t.validate(), Err(Violation::Link { key: 2, .. })));

        let mut t = sample();
        t.size = 5;
        assert!(matches!(t.validate(), Err(Violation::Size { .. })));
    }

    #[test]
    fn tiers_dominate_offsets() {
        let hi = Priority::new(0, 0.01).unwrap();
        let lo = Priority::new(1, 0.99).unwrap();
        assert_eq!(Priority::rank_cmp((hi, 5), (lo, 1)), Ordering::Greater);
        let a = Priority::new(2, 0.5).unwrap();
        assert_eq!(Priority::rank_cmp((a, 1), (a, 2)), Ordering::Greater);
        assert_eq!(hi.value(), 0.01);
        assert_eq!(lo.value(), -1.0 + 0.99);
    }
}
