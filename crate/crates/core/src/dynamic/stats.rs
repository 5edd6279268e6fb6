use crate::sequences::AccessSequence;
use crate::treap::Key;

/// Binary indexed tree over `0..len` counting marked positions.
#[derive(Clone, Debug)]
pub(crate) struct Fenwick {
    t: Vec<i64>,
}

impl Fenwick {
    pub(crate) fn new(len: usize) -> Self {
        Fenwick { t: vec![0; len + 1] }
    }

    pub(crate) fn add(&mut self, pos: usize, v: i64) {
        let mut i = pos + 1;
        while i < self.t.len() {
            self.t[i] += v;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum over `0..end`.
    pub(crate) fn prefix(&self, end: usize) -> i64 {
        let mut i = end.min(self.t.len() - 1);
        let mut s = 0;
        while i > 0 {
            s += self.t[i];
            i &= i - 1;
        }
        s
    }

    /// Smallest position `p` with `prefix(p + 1) >= k`, for `k >= 1`.
    pub(crate) fn find_kth(&self, k: i64) -> usize {
        let mut pos = 0;
        let mut rem = k;
        let mut step = (self.t.len() - 1).next_power_of_two();
        while step > 0 {
            let nxt = pos + step;
            if nxt < self.t.len() && self.t[nxt] < rem {
                pos = nxt;
                rem -= self.t[nxt];
            }
            step >>= 1;
        }
        pos
    }
}

/// Per-access statistics of a sequence. Times are 1-based; vectors are
/// indexed by `i - 1`.
///
/// * `work_past[i]`: distinct keys in `x(prev+1 .. i-1)` where `prev` is the
///   previous access of `x(i)`; `n` on a first access.
/// * `work_next[i]`: distinct keys in `x(i+1 .. next)`, including `x(next)`,
///   where `next` is the next access of `x(i)`; `n` if there is none. This is
///   also the interval-set size of `x(i)` at time `i`.
/// * `future[i]`: `work_past` at the next access of `x(i)`; `n` if none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceStats {
    pub n: u32,
    pub m: usize,
    pub prev: Vec<Option<usize>>,
    pub next: Vec<Option<usize>>,
    pub work_past: Vec<u32>,
    pub work_next: Vec<u32>,
    pub future: Vec<u32>,
}

impl SequenceStats {
    /// `interval(i, x(i))`.
    pub fn interval(&self, i: usize) -> u32 {
        self.work_next[i - 1]
    }

    pub fn work(&self, i: usize) -> u32 {
        self.work_past[i - 1]
    }
}

/// All per-access statistics in `O(m log m)`.
pub fn compute_stats(seq: &AccessSequence) -> SequenceStats {
    let n = seq.n();
    let m = seq.m();
    let x = seq.keys();
    let mut last = vec![0usize; n as usize + 1];
    let mut prev = vec![None; m];
    for i in 1..=m {
        let k = x[i - 1] as usize;
        if last[k] != 0 {
            prev[i - 1] = Some(last[k]);
        }
        last[k] = i;
    }
    let mut next = vec![None; m];
    for i in 1..=m {
        if let Some(p) = prev[i - 1] {
            next[p - 1] = Some(i);
        }
    }
    // marks the latest occurrence of every key seen so far
    let mut fen = Fenwick::new(m + 1);
    let mut work_past = vec![n; m];
    for i in 1..=m {
        if let Some(p) = prev[i - 1] {
            work_past[i - 1] = (fen.prefix(i) - fen.prefix(p + 1)) as u32;
            fen.add(p, -1);
        }
        fen.add(i, 1);
    }
    let future: Vec<u32> = next.iter().map(|nx| nx.map_or(n, |j| work_past[j - 1])).collect();
    let work_next: Vec<u32> = next.iter().map(|nx| nx.map_or(n, |j| work_past[j - 1] + 1)).collect();
    SequenceStats { n, m, prev, next, work_past, work_next, future }
}

/// `work(i, x)` for every key at a fixed time, next-access convention:
/// distinct keys in `x(i+1 .. next(i, x))`, or `n`. Indexed by `x - 1`.
pub fn work_next_profile(seq: &AccessSequence, i: usize) -> Vec<u32> {
    let n = seq.n();
    let mut out = vec![n; n as usize];
    let mut seen = vec![false; n as usize + 1];
    let mut distinct = 0;
    for &k in &seq.keys()[i.min(seq.m())..] {
        if !seen[k as usize] {
            seen[k as usize] = true;
            distinct += 1;
            out[k as usize - 1] = distinct;
        }
    }
    out
}

/// `interval(i, x)` for every key at a fixed time: distinct keys in
/// `x(prev+1 .. next)` with `prev` the last access at or before `i` (0 if
/// none) and `next` the first access after `i`; `n` if there is no next.
pub fn interval_profile(seq: &AccessSequence, i: usize) -> Vec<u32> {
    let n = seq.n();
    let x = seq.keys();
    let i = i.min(seq.m());
    let mut out = vec![n; n as usize];
    let mut last: Vec<usize> = vec![0; n as usize + 1];
    for (t, &k) in x[..i].iter().enumerate() {
        last[k as usize] = t + 1;
    }
    let mut nxt: Vec<Option<usize>> = vec![None; n as usize + 1];
    for (t, &k) in x.iter().enumerate().skip(i) {
        nxt[k as usize].get_or_insert(t + 1);
    }
    for key in 1..=n {
        if let Some(j) = nxt[key as usize] {
            out[key as usize - 1] = distinct_in(x, last[key as usize] + 1, j, n);
        }
    }
    out
}

fn distinct_in(x: &[Key], from: usize, to: usize, n: u32) -> u32 {
    let mut seen = vec![false; n as usize + 1];
    let mut c = 0;
    for &k in &x[from - 1..to] {
        if !std::mem::replace(&mut seen[k as usize], true) {
            c += 1;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: u32, keys: &[Key]) -> AccessSequence {
        AccessSequence::new(n, keys.to_vec()).unwrap()
    }

    #[test]
    fn small_example() {
        let s = compute_stats(&seq(3, &[1, 2, 3, 1]));
        assert_eq!(s.work(4), 2);
        assert_eq!(s.interval(1), 3);
        assert_eq!(s.work_past[..3], [3, 3, 3]);
        assert_eq!(s.future[0], 2);
        assert_eq!(s.prev[3], Some(1));
        assert_eq!(s.next[0], Some(4));
        assert_eq!(interval_profile(&seq(3, &[1, 2, 3, 1]), 1)[0], 3);
    }

    #[test]
    fn repeated_key() {
        let s = compute_stats(&seq(5, &[2, 2, 2]));
        assert_eq!(s.work_past, vec![5, 0, 0]);
        assert_eq!(s.work_next, vec![1, 1, 5]);
        assert_eq!(s.future, vec![0, 0, 5]);
    }

    #[test]
    fn fenwick_kth() {
        let mut f = Fenwick::new(10);
        for p in [1, 4, 7] {
            f.add(p, 1);
        }
        assert_eq!(f.find_kth(1), 1);
        assert_eq!(f.find_kth(2), 4);
        assert_eq!(f.find_kth(3), 7);
        assert_eq!(f.prefix(5), 2);
    }

    #[test]
    fn work_next_profile_is_a_prefix_permutation() {
        let s = seq(4, &[1, 2, 1, 3, 2, 4]);
        let p = work_next_profile(&s, 1);
        assert_eq!(p, vec![2, 1, 3, 4]);
        assert_eq!(work_next_profile(&s, 5), vec![4, 4, 4, 1]);
    }
}
