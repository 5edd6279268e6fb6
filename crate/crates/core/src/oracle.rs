//! Brute-force references. Nothing here calls into the structures it is
//! used to check.

use crate::dynamic::SequenceStats;
use crate::error::{Error, Result};
use crate::sequences::AccessSequence;
use crate::treap::{Key, Priority};

/// Largest universe accepted by [`optimal_static_bst_cost`].
pub const MAX_DP_N: usize = 2000;

/// Minimum of `sum_x f_x * depth(x)` over all binary search trees on keys
/// `1..=n`, root at depth 1. Interval DP with monotone roots, `O(n^2)`.
pub fn optimal_static_bst_cost(freq: &[u64]) -> Result<u64> {
    let n = freq.len();
    if n > MAX_DP_N {
        return Err(Error::Config(format!("optimal BST limited to {MAX_DP_N} keys, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let mut pre = vec![0u64; n + 1];
    for i in 0..n {
        pre[i + 1] = pre[i] + freq[i];
    }
    // cost[i][j] over keys i..j (0-based, half-open), stored as (n+1)^2
    let w = n + 1;
    let mut cost = vec![0u64; w * w];
    let mut root = vec![0u32; w * w];
    for i in 0..n {
        cost[i * w + i + 1] = freq[i];
        root[i * w + i + 1] = i as u32;
    }
    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            let lo = root[i * w + j - 1] as usize;
            let hi = root[(i + 1) * w + j] as usize;
            let mut best = u64::MAX;
            let mut arg = lo;
            for r in lo..=hi {
                let c = cost[i * w + r] + cost[(r + 1) * w + j];
                if c < best {
                    best = c;
                    arg = r;
                }
            }
            cost[i * w + j] = best + pre[j] - pre[i];
            root[i * w + j] = arg as u32;
        }
    }
    Ok(cost[n])
}

fn outranks(a: (Priority, Key), b: (Priority, Key)) -> bool {
    let ((pa, ka), (pb, kb)) = (a, b);
    if pa.tier() != pb.tier() {
        return pa.tier() < pb.tier();
    }
    if pa.offset() != pb.offset() {
        return pa.offset() > pb.offset();
    }
    ka < kb
}

/// Depth of each key (index `x - 1`) in the treap on keys `1..=n` with the
/// given priorities, by recursive top-priority splitting.
pub fn naive_depths(prios: &[Priority]) -> Result<Vec<u32>> {
    let mut sorted: Vec<(i32, u64)> = prios.iter().map(|p| (p.tier(), p.offset().to_bits())).collect();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Domain("duplicate priorities".into()));
    }
    let mut depth = vec![0u32; prios.len()];
    fn go(prios: &[Priority], lo: usize, hi: usize, d: u32, depth: &mut [u32]) {
        if lo >= hi {
            return;
        }
        let mut top = lo;
        for x in lo + 1..hi {
            if outranks((prios[x], x as Key + 1), (prios[top], top as Key + 1)) {
                top = x;
            }
        }
        depth[top] = d;
        go(prios, lo, top, d + 1, depth);
        go(prios, top + 1, hi, d + 1, depth);
    }
    go(prios, 0, prios.len(), 1, &mut depth);
    Ok(depth)
}

/// `x` is an ancestor of `y` (or `x == y`) exactly when `x` has the top
/// priority among the keys between them.
pub fn ancestor_by_interval_max(prios: &[Priority], x: Key, y: Key) -> bool {
    let (lo, hi) = (x.min(y), x.max(y));
    (lo..=hi).all(|z| z == x || outranks((prios[x as usize - 1], x), (prios[z as usize - 1], z)))
}

/// Expected depth of `x` in a uniformly random treap on `n` keys:
/// `sum_y 1 / (|x - y| + 1)`.
pub fn analytic_expected_depth(x: Key, n: u32) -> f64 {
    (1..=n).map(|y| 1.0 / ((x as i64 - y as i64).unsigned_abs() as f64 + 1.0)).sum()
}

fn distinct(keys: &[Key], n: u32) -> u32 {
    let mut seen = vec![false; n as usize + 1];
    keys.iter().filter(|&&k| !std::mem::replace(&mut seen[k as usize], true)).count() as u32
}

/// `work(i, x)`, previous-access convention, by literal scan.
pub fn work_past_at(seq: &AccessSequence, i: usize, x: Key) -> u32 {
    let keys = seq.keys();
    match (1..i).rev().find(|&j| keys[j - 1] == x) {
        Some(j) => distinct(&keys[j..i - 1], seq.n()),
        None => seq.n(),
    }
}

/// `work(i, x)`, next-access convention, by literal scan.
pub fn work_next_at(seq: &AccessSequence, i: usize, x: Key) -> u32 {
    let keys = seq.keys();
    match (i + 1..=seq.m()).find(|&j| keys[j - 1] == x) {
        Some(j) => distinct(&keys[i..j], seq.n()),
        None => seq.n(),
    }
}

/// `interval(i, x)` by literal scan; the window starts at time 1 when `x`
/// has no access at or before `i`.
pub fn interval_at(seq: &AccessSequence, i: usize, x: Key) -> u32 {
    let keys = seq.keys();
    let prev = (1..=i).rev().find(|&j| keys[j - 1] == x).unwrap_or(0);
    match (i + 1..=seq.m()).find(|&j| keys[j - 1] == x) {
        Some(j) => distinct(&keys[prev..j], seq.n()),
        None => seq.n(),
    }
}

/// `future(i, x)`: `work_past` at the next access of `x` after `i`, or `n`.
pub fn future_at(seq: &AccessSequence, i: usize, x: Key) -> u32 {
    match (i + 1..=seq.m()).find(|&j| seq.keys()[j - 1] == x) {
        Some(j) => work_past_at(seq, j, x),
        None => seq.n(),
    }
}

/// Per-access statistics recomputed from the definitions, quadratic time.
pub fn exhaustive_stats(seq: &AccessSequence) -> SequenceStats {
    let m = seq.m();
    let keys = seq.keys();
    let mut prev = Vec::with_capacity(m);
    let mut next = Vec::with_capacity(m);
    let mut work_past = Vec::with_capacity(m);
    let mut work_next = Vec::with_capacity(m);
    let mut future = Vec::with_capacity(m);
    for i in 1..=m {
        let x = keys[i - 1];
        prev.push((1..i).rev().find(|&j| keys[j - 1] == x));
        next.push((i + 1..=m).find(|&j| keys[j - 1] == x));
        work_past.push(work_past_at(seq, i, x));
        work_next.push(interval_at(seq, i, x));
        future.push(future_at(seq, i, x));
    }
    SequenceStats { n: seq.n(), m, prev, next, work_past, work_next, future }
}
