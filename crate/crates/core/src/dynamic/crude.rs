use super::stats::Fenwick;
use crate::treap::Key;

/// `2^ceil(log2(work + 1)) - 1`; 0 when `work` is 0.
pub fn rounded_score(work: u64) -> u64 {
    (work + 1).next_power_of_two() - 1
}

/// Working-set scores rounded up to one less than a power of two, kept
/// current lazily.
///
/// Recency is tracked exactly: each key occupies a time slot and a Fenwick
/// tree over slots answers rank and select queries. Moving the accessed key
/// to the front shifts every more recent key down by one rank, and a
/// rounded score only changes for keys landing just past a power of two,
/// so those are the only keys reported.
#[derive(Clone, Debug)]
pub struct CrudeOracle {
    n: u32,
    fen: Fenwick,
    slot_of: Vec<usize>,
    key_at: Vec<Key>,
    clock: usize,
    seen: Vec<bool>,
    score: Vec<u64>,
}

impl CrudeOracle {
    /// Initial recency order `1, 2, ..., n` (key 1 most recent); room for `m` accesses.
    pub fn new(n: u32, m: usize) -> Self {
        let slots = n as usize + m + 1;
        let mut fen = Fenwick::new(slots);
        let mut slot_of = vec![0; n as usize + 1];
        let mut key_at = vec![0; slots];
        for x in 1..=n {
            let s = (n - x + 1) as usize;
            slot_of[x as usize] = s;
            key_at[s] = x;
            fen.add(s, 1);
        }
        let unseen = rounded_score(n as u64);
        CrudeOracle {
            n,
            fen,
            slot_of,
            key_at,
            clock: n as usize,
            seen: vec![false; n as usize + 1],
            score: vec![unseen; n as usize + 1],
        }
    }

    /// Recency rank of `x`, 1 for the most recent key.
    pub fn rank(&self, x: Key) -> u64 {
        (self.n as i64 - self.fen.prefix(self.slot_of[x as usize])) as u64
    }

    fn key_at_rank(&self, r: u64) -> Key {
        let k = self.n as i64 - r as i64 + 1;
        self.key_at[self.fen.find_kth(k)]
    }

    /// Exact working-set size: distinct keys since the last access of `x`,
    /// or `n` before its first access.
    pub fn exact_work(&self, x: Key) -> u64 {
        if self.seen[x as usize] {
            self.rank(x) - 1
        } else {
            self.n as u64
        }
    }

    pub fn score(&self, x: Key) -> u64 {
        self.score[x as usize]
    }

    pub fn is_seen(&self, x: Key) -> bool {
        self.seen[x as usize]
    }

    /// Records an access to `x` and returns the keys whose score changed,
    /// `x` first.
    pub fn step(&mut self, x: Key) -> Vec<Key> {
        let r = self.rank(x);
        let mut crossed = Vec::new();
        let mut p = 1u64;
        while p < r {
            let y = self.key_at_rank(p);
            if self.seen[y as usize] {
                crossed.push(y);
            }
            p <<= 1;
        }
        self.fen.add(self.slot_of[x as usize], -1);
        self.clock += 1;
        self.slot_of[x as usize] = self.clock;
        self.key_at[self.clock] = x;
        self.fen.add(self.clock, 1);
        self.seen[x as usize] = true;
        self.score[x as usize] = 0;
        let mut out = Vec::with_capacity(crossed.len() + 1);
        out.push(x);
        for y in crossed {
            self.score[y as usize] = rounded_score(self.rank(y) - 1);
            out.push(y);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(rounded_score(0), 0);
        assert_eq!(rounded_score(1), 1);
        assert_eq!(rounded_score(2), 3);
        assert_eq!(rounded_score(3), 3);
        assert_eq!(rounded_score(4), 7);
    }

    #[test]
    fn immediate_repeat_updates_only_itself() {
        let mut o = CrudeOracle::new(8, 10);
        o.step(5);
        assert_eq!(o.step(5), vec![5]);
        assert_eq!(o.score(5), 0);
    }

    #[test]
    fn ranks_follow_move_to_front() {
        let mut o = CrudeOracle::new(6, 10);
        assert_eq!((1..=6).map(|x| o.rank(x)).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
        for x in [3, 1, 4, 1, 5] {
            o.step(x);
        }
        assert_eq!(o.rank(5), 1);
        assert_eq!(o.rank(1), 2);
        assert_eq!(o.rank(4), 3);
        assert_eq!(o.rank(3), 4);
        assert_eq!(o.exact_work(3), 3);
        assert_eq!(o.exact_work(2), 6);
        assert_eq!(o.score(3), 3);
    }

    #[test]
    fn reported_keys_sit_just_past_powers_of_two() {
        let mut o = CrudeOracle::new(64, 200);
        for x in 1..=64 {
            o.step(x);
        }
        let u = o.step(1);
        assert_eq!(u.len(), 1 + 6);
        for &y in &u[1..] {
            let r = o.rank(y) - 1;
            assert!(r.is_power_of_two());
            assert_eq!(o.score(y), rounded_score(r));
        }
    }
}
