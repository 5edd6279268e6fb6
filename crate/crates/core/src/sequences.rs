//! Access sequences, the distributions and patterns that generate them, and
//! the trace file format.
//!
//! A trace file is ASCII: a header line `n m`, then `m` lines of one key each.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::predictions::Distribution;
use crate::treap::Key;

/// Keys `x(1), ..., x(m)` over the universe `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessSequence {
    n: u32,
    keys: Vec<Key>,
}

impl AccessSequence {
    pub fn new(n: u32, keys: Vec<Key>) -> Result<Self> {
        if let Some(&k) = keys.iter().find(|&&k| k == 0 || k > n) {
            return Err(Error::KeyOutOfRange { key: k, n });
        }
        Ok(AccessSequence { n, keys })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[Key] {
        &self.keys
    }

    /// `x(i)` for `i` in `1..=m`.
    pub fn at(&self, i: usize) -> Key {
        self.keys[i - 1]
    }

    /// Access count of every key, indexed from 0 for key 1.
    pub fn counts(&self) -> Vec<u64> {
        let mut f = vec![0u64; self.n as usize];
        for &k in &self.keys {
            f[k as usize - 1] += 1;
        }
        f
    }

    pub fn to_trace(&self) -> String {
        let mut out = String::with_capacity(self.keys.len() * 6 + 16);
        let _ = writeln!(out, "{} {}", self.n, self.keys.len());
        for k in &self.keys {
            let _ = writeln!(out, "{k}");
        }
        out
    }

    pub fn parse_trace(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let Some((_, header)) = lines.next() else {
            return Ok(AccessSequence { n: 0, keys: Vec::new() });
        };
        let bad_header = || Error::Parse { line: 1, reason: format!("expected header `n m`, found `{header}`") };
        let mut parts = header.split_whitespace();
        let n: u32 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
        let m: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
        if parts.next().is_some() {
            return Err(bad_header());
        }
        let mut keys = Vec::with_capacity(m);
        for (idx, line) in lines {
            let line_no = idx + 1;
            let k: Key = line
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line: line_no, reason: format!("bad key `{}`: {e}", line.trim()) })?;
            if k == 0 || k > n {
                return Err(Error::Parse { line: line_no, reason: format!("key {k} outside 1..={n}") });
            }
            keys.push(k);
        }
        if keys.len() != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                reason: format!("header announces {m} accesses, found {}", keys.len()),
            });
        }
        Ok(AccessSequence { n, keys })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_trace())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse_trace(&std::fs::read_to_string(path)?)
    }
}

/// Workload families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `p_x` proportional to `x^(-s)`.
    Zipf { s: f64 },
    Uniform,
    /// `p_x = 2 (n - x + 1) / (n (n + 1))`.
    Linear,
    /// `K = log2(n) / 2` segments of halving size and doubling mass.
    Segmented,
    /// `1, 2, ..., n, 1, 2, ...`
    RoundRobin,
    /// Each key repeated `m / n` times in a run: `1, 1, ..., 2, 2, ...`
    BlockRepeat,
    File(PathBuf),
}

impl Family {
    pub fn parse(name: &str) -> Result<Family> {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix("zipf") {
            let s = rest.trim_start_matches([':', '(']).trim_end_matches(')');
            let s = if s.is_empty() { 1.0 } else { s.parse().map_err(|_| Error::Config(format!("bad zipf exponent in `{name}`")))? };
            return Ok(Family::Zipf { s });
        }
        if let Some(path) = name.strip_prefix("file:") {
            return Ok(Family::File(PathBuf::from(path)));
        }
        Ok(match name {
            "uniform" => Family::Uniform,
            "linear" => Family::Linear,
            "segmented" => Family::Segmented,
            "round-robin" | "x1" => Family::RoundRobin,
            "block-repeat" | "x2" => Family::BlockRepeat,
            _ => return Err(Error::Config(format!("unknown family `{name}`"))),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Family::Zipf { s } => format!("zipf:{s}"),
            Family::Uniform => "uniform".into(),
            Family::Linear => "linear".into(),
            Family::Segmented => "segmented".into(),
            Family::RoundRobin => "round-robin".into(),
            Family::BlockRepeat => "block-repeat".into(),
            Family::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn is_distributional(&self) -> bool {
        matches!(self, Family::Zipf { .. } | Family::Uniform | Family::Linear | Family::Segmented)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceSpec {
    pub family: Family,
    pub n: u32,
    pub m: usize,
    pub seed: u64,
}

impl TraceSpec {
    pub fn new(family: Family, n: u32, m: usize, seed: u64) -> Self {
        TraceSpec { family, n, m, seed }
    }
}

/// Exact masses for a distributional family.
pub fn gen_distribution(spec: &TraceSpec) -> Result<Distribution<f64>> {
    let n = spec.n as usize;
    if n == 0 {
        return Err(Error::Config("universe must be nonempty".into()));
    }
    match &spec.family {
        Family::Zipf { s } => {
            let w: Vec<f64> = (1..=n).map(|x| (x as f64).powf(-s)).collect();
            Distribution::from_weights(&w)
        }
        Family::Uniform => Ok(Distribution::uniform(n)),
        Family::Linear => {
            let denom = (n * (n + 1)) as f64;
            Distribution::from_weights(&(1..=n).map(|x| 2.0 * (n - x + 1) as f64 / denom).collect::<Vec<_>>())
        }
        Family::Segmented => segmented(n),
        other => Err(Error::Config(format!("family {} has no item distribution", other.name()))),
    }
}

/// Segment `S_i` (`i = 1..=K`, `K = log2(n) / 2`) holds `2^(1-i) n / K` items
/// of mass `2^(i-1) / n`. Segments are nested: each sits in the middle gap
/// of the next heavier one, so a lighter item's search crosses the whole
/// band of every heavier segment. Leftover keys at the top have zero mass.
fn segmented(n: usize) -> Result<Distribution<f64>> {
    let log = n.trailing_zeros();
    if !n.is_power_of_two() || !log.is_multiple_of(2) || log < 2 {
        return Err(Error::Config(format!("segmented family needs n an even power of two, got {n}")));
    }
    let k = (log / 2) as usize;
    let segs: Vec<(usize, f64)> = (1..=k)
        .map(|i| {
            let size = (2f64.powi(1 - i as i32) * n as f64 / k as f64).floor() as usize;
            (size, 2f64.powi(i as i32 - 1) / n as f64)
        })
        .collect();
    let mut w = Vec::with_capacity(n);
    for &(size, mass) in segs[1..].iter().rev() {
        w.extend(std::iter::repeat_n(mass, size / 2));
    }
    w.extend(std::iter::repeat_n(segs[0].1, segs[0].0));
    for &(size, mass) in &segs[1..] {
        w.extend(std::iter::repeat_n(mass, size - size / 2));
    }
    w.resize(n, 0.0);
    Distribution::from_weights(&w)
}

/// Generates the access sequence of `spec`.
pub fn gen_sequence(spec: &TraceSpec) -> Result<AccessSequence> {
    let n = spec.n;
    let m = spec.m;
    match &spec.family {
        Family::File(path) => AccessSequence::read(path),
        Family::RoundRobin => AccessSequence::new(n, (0..m).map(|i| (i % n as usize) as Key + 1).collect()),
        Family::BlockRepeat => {
            let (run, extra) = (m / n as usize, m % n as usize);
            let mut keys = Vec::with_capacity(m);
            for x in 1..=n {
                let len = run + usize::from(((x - 1) as usize) < extra);
                keys.extend(std::iter::repeat_n(x, len));
            }
            AccessSequence::new(n, keys)
        }
        _ => {
            let p = gen_distribution(spec)?;
            let sampler = WeightedIndex::new(p.masses()).map_err(|e| Error::Domain(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            AccessSequence::new(n, (0..m).map(|_| sampler.sample(&mut rng) as Key + 1).collect())
        }
    }
}
