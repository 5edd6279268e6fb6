use std::fmt::Write as _;

use super::crude::CrudeOracle;
use super::stats::{compute_stats, SequenceStats};
use crate::em::{DetScoreForest, EmConfig, RankForest, TierForestBTreap};
use crate::error::{Error, Result};
use crate::priority::{composite_priority, RandomStream, Scheme, WeightVector};
use crate::sequences::AccessSequence;
use crate::treap::{Key, Treap};

/// How item scores evolve over the sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum DynScheme {
    /// Interval-set priority of the accessed item.
    IntervalSet,
    /// Interval-set priority shifted by `mae / m` per step with a random sign.
    IntervalSetNoisy { mae: f64 },
    /// Working-set size at the next access.
    FutureExact,
    /// Future working-set size `f` reported as `round((f + 1)^(1 + eta)) - 1`,
    /// `eta ~ U(-eps, eps)`.
    FutureNoisy { eps: f64 },
    /// Rounded past working-set sizes from [`CrudeOracle`].
    PastCrude,
    /// Fixed weights, never updated.
    Static(WeightVector<f64>),
}

impl DynScheme {
    pub fn name(&self) -> &'static str {
        match self {
            DynScheme::IntervalSet => "interval-set",
            DynScheme::IntervalSetNoisy { .. } => "interval-set-noisy",
            DynScheme::FutureExact => "future-ws-exact",
            DynScheme::FutureNoisy { .. } => "future-ws-noisy",
            DynScheme::PastCrude => "past-ws-crude",
            DynScheme::Static(_) => "static",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Treap,
    TierForest,
    DetForest,
    RankForest,
}

impl Structure {
    pub fn parse(s: &str) -> Result<Structure> {
        Ok(match s {
            "treap" => Structure::Treap,
            "tier-forest" => Structure::TierForest,
            "det-forest" => Structure::DetForest,
            "rank-forest" => Structure::RankForest,
            _ => return Err(Error::Config(format!("unknown structure `{s}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Structure::Treap => "treap",
            Structure::TierForest => "tier-forest",
            Structure::DetForest => "det-forest",
            Structure::RankForest => "rank-forest",
        }
    }

    /// Base of the logarithm in this structure's cost bounds.
    pub fn log_base(&self, b: usize) -> f64 {
        match self {
            Structure::Treap => 2.0,
            _ => b as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriverConfig {
    pub b: usize,
    pub alpha: f64,
    /// Scores enter as `1 / (s + 1)^2` when set, `1 / (s + 1)` otherwise.
    pub squared: bool,
    pub record_steps: bool,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig { b: 16, alpha: 0.5, squared: true, record_steps: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub i: usize,
    pub key: Key,
    /// Nodes (treap) or blocks touched by the access.
    pub cost: u64,
    pub update_set: usize,
    pub update_cost: u64,
    pub work: u32,
    pub interval: u32,
    pub future: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub n: u32,
    pub m: usize,
    pub log_base: f64,
    pub access_cost: u64,
    /// Removal plus insertion cost of every priority update.
    pub update_cost: u64,
    /// Blocks written by component rebuilds (tier forest only).
    pub rebuild_writes: u64,
    pub rotations: u64,
    pub updates: u64,
    pub max_update_set: usize,
    /// `sum_i log(1 / w(i, x(i)))` with the weight in force at access `i`.
    pub access_log_sum: f64,
    /// `sum_i || log w(i) - log w(i-1) ||_1`.
    pub update_log_sum: f64,
    /// `sum_i |reported score - exact score|` for noisy interval-set runs.
    pub mae: f64,
    pub steps: Vec<StepRecord>,
}

impl CostBreakdown {
    pub fn total(&self) -> u64 {
        self.access_cost + self.update_cost
    }
}

enum Engine {
    Treap(Treap),
    Tier(TierForestBTreap),
    Det(DetScoreForest),
    Rank(RankForest),
}

impl Engine {
    fn access(&mut self, k: Key) -> Result<u64> {
        match self {
            Engine::Treap(t) => t.access(k).map(u64::from),
            Engine::Tier(t) => t.access(k),
            Engine::Det(d) => d.access(k),
            Engine::Rank(r) => r.access(k),
        }
    }

    fn update(&mut self, k: Key, w: f64, rng: &mut RandomStream, out: &mut CostBreakdown) -> Result<()> {
        match self {
            Engine::Treap(t) => {
                let before = t.depth(k)?;
                out.rotations += t.update_priority(k, composite_priority(w, rng)?)?;
                out.update_cost += u64::from(before + t.depth(k)?);
            }
            Engine::Tier(t) => {
                let b = t.config().b;
                let c = t.update_priority(k, Scheme::BTree { b }.priority(w, rng)?)?;
                out.update_cost += c.path_cost();
                out.rebuild_writes += c.rebuild_writes;
            }
            Engine::Det(d) => out.update_cost += d.update_weight(k, w)?,
            Engine::Rank(_) => {}
        }
        Ok(())
    }
}

fn score_weight(s: f64, squared: bool) -> f64 {
    if squared {
        1.0 / ((s + 1.0) * (s + 1.0))
    } else {
        1.0 / (s + 1.0)
    }
}

/// Runs `structure` over `seq` with scores evolving by `scheme`.
///
/// Dynamic schemes start every item at score `n`, i.e. weight
/// `1 / (n + 1)^2`. After access `i` each item in the scheme's update set
/// receives a new weight and a freshly drawn offset; an update whose weight
/// equals the current one is skipped. The rank forest maintains itself and
/// ignores scores.
pub fn run_dynamic(
    seq: &AccessSequence,
    scheme: &DynScheme,
    structure: Structure,
    cfg: DriverConfig,
    rng: &mut RandomStream,
) -> Result<CostBreakdown> {
    let n = seq.n();
    let m = seq.m();
    let em = EmConfig::new(cfg.b, cfg.alpha)?;
    match scheme {
        DynScheme::Static(w) if w.len() != n as usize => {
            return Err(Error::Config(format!("{} static weights for {n} items", w.len())))
        }
        DynScheme::Static(_) if structure == Structure::RankForest => {
            return Err(Error::Config("the rank forest does not take static weights".into()))
        }
        DynScheme::FutureNoisy { eps } | DynScheme::IntervalSetNoisy { mae: eps } if !(*eps >= 0.0) => {
            return Err(Error::Config(format!("noise level {eps} must be nonnegative")))
        }
        _ => {}
    }
    let log_base = structure.log_base(cfg.b);
    let mut out = CostBreakdown { n, m, log_base, ..CostBreakdown::default() };
    if m == 0 {
        return Ok(out);
    }

    let mut weights: Vec<f64> = match scheme {
        DynScheme::Static(w) => std::iter::once(0.0).chain(w.as_slice().iter().copied()).collect(),
        _ => vec![score_weight(n as f64, cfg.squared); n as usize + 1],
    };
    let initial = WeightVector::new(weights[1..].to_vec())?;
    let mut engine = match structure {
        Structure::Treap => Engine::Treap(Treap::from_priorities(&Scheme::Composite.assign(&initial, rng)?)?),
        Structure::TierForest => Engine::Tier(TierForestBTreap::build(&initial, em, rng)?),
        Structure::DetForest => Engine::Det(DetScoreForest::build(&initial, em)?),
        Structure::RankForest => Engine::Rank(RankForest::new(n, em)?),
    };

    let stats = compute_stats(seq);
    let mut noise = rng.fork(0x6e6f_6973_65);
    let mut crude = matches!(scheme, DynScheme::PastCrude).then(|| CrudeOracle::new(n, m));
    let floor = 1.0 / (n as f64).powi(3).max(1.0);
    let ln_b = log_base.ln();
    let mut changes: Vec<(Key, f64)> = Vec::new();

    for i in 1..=m {
        let x = seq.at(i);
        let cost = engine.access(x)?;
        out.access_cost += cost;
        out.access_log_sum += (1.0 / weights[x as usize]).ln() / ln_b;

        changes.clear();
        if structure != Structure::RankForest {
            match scheme {
                DynScheme::Static(_) => {}
                DynScheme::IntervalSet => {
                    changes.push((x, score_weight(stats.interval(i) as f64, cfg.squared)));
                }
                DynScheme::IntervalSetNoisy { mae } => {
                    let exact = score_weight(stats.interval(i) as f64, cfg.squared);
                    let sign = if noise.next_offset() < 0.5 { -1.0 } else { 1.0 };
                    let reported = (exact + sign * mae / m as f64).clamp(floor, 1.0);
                    out.mae += (reported - exact).abs();
                    changes.push((x, reported));
                }
                DynScheme::FutureExact => {
                    changes.push((x, score_weight(stats.future[i - 1] as f64, cfg.squared)));
                }
                DynScheme::FutureNoisy { eps } => {
                    let f = stats.future[i - 1] as f64;
                    let eta = eps * (2.0 * noise.next_offset() - 1.0);
                    let s = ((f + 1.0).powf(1.0 + eta)).round() - 1.0;
                    changes.push((x, score_weight(s.max(0.0), cfg.squared)));
                }
                DynScheme::PastCrude => {
                    let o = crude.as_mut().unwrap();
                    for y in o.step(x) {
                        changes.push((y, score_weight(o.score(y) as f64, cfg.squared)));
                    }
                }
            }
        }

        let mut step_update = 0;
        let mut set_size = 0;
        for &(y, w) in &changes {
            let old = weights[y as usize];
            if w == old {
                continue;
            }
            set_size += 1;
            out.update_log_sum += (w.ln() - old.ln()).abs() / ln_b;
            let before = out.update_cost;
            engine.update(y, w, rng, &mut out)?;
            step_update += out.update_cost - before;
            weights[y as usize] = w;
            out.updates += 1;
        }
        out.max_update_set = out.max_update_set.max(set_size);
        if cfg.record_steps {
            out.steps.push(StepRecord {
                i,
                key: x,
                cost,
                update_set: set_size,
                update_cost: step_update,
                work: stats.work_past[i - 1],
                interval: stats.work_next[i - 1],
                future: stats.future[i - 1],
            });
        }
    }
    Ok(out)
}

/// Per-step trace as CSV.
pub fn steps_csv(steps: &[StepRecord]) -> String {
    let mut s = String::from("i,key,cost,update_set,update_cost,work,interval,future\n");
    for r in steps {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.i, r.key, r.cost, r.update_set, r.update_cost, r.work, r.interval, r.future
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    pub measured: u64,
    /// `n log n + sum log(1/w(i, x(i))) + sum ||log w(i) - log w(i-1)||_1`.
    pub rhs: f64,
    /// `n log n + sum log(work(i) + 1)`.
    pub working_set_rhs: f64,
    pub c: f64,
    pub c0: f64,
    pub holds: bool,
}

/// Compares the measured cost with the score-based bound `c * rhs + c0`.
pub fn cost_decomposition_check(b: &CostBreakdown, stats: &SequenceStats, c: f64, c0: f64) -> DecompositionReport {
    let ln_b = b.log_base.ln();
    let n = b.n as f64;
    let base = n * n.max(2.0).ln() / ln_b;
    let rhs = base + b.access_log_sum + b.update_log_sum;
    let ws: f64 = stats.work_past.iter().map(|&w| (w as f64 + 1.0).ln() / ln_b).sum();
    let measured = b.total();
    DecompositionReport {
        measured,
        rhs,
        working_set_rhs: base + ws,
        c,
        c0,
        holds: (measured as f64) <= c * rhs + c0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{gen_sequence, Family, TraceSpec};

    fn cfg() -> DriverConfig {
        DriverConfig { record_steps: true, ..DriverConfig::default() }
    }

    #[test]
    fn empty_sequence_costs_nothing() {
        let seq = AccessSequence::new(5, vec![]).unwrap();
        let r = run_dynamic(&seq, &DynScheme::IntervalSet, Structure::Treap, cfg(), &mut RandomStream::new(1)).unwrap();
        assert_eq!(r.total(), 0);
    }

    #[test]
    fn repeated_key_is_cheap_under_future_scores() {
        let seq = AccessSequence::new(64, vec![7; 500]).unwrap();
        let r = run_dynamic(&seq, &DynScheme::FutureExact, Structure::Treap, cfg(), &mut RandomStream::new(2)).unwrap();
        let after: Vec<u64> = r.steps[10..].iter().map(|s| s.cost).collect();
        let mean = after.iter().sum::<u64>() as f64 / after.len() as f64;
        assert!(mean <= 3.0, "mean depth {mean}");
    }

    #[test]
    fn zero_noise_matches_exact() {
        let seq = gen_sequence(&TraceSpec::new(Family::Zipf { s: 1.0 }, 100, 2000, 4)).unwrap();
        for st in [Structure::Treap, Structure::TierForest] {
            let a = run_dynamic(&seq, &DynScheme::FutureExact, st, cfg(), &mut RandomStream::new(9)).unwrap();
            let b = run_dynamic(&seq, &DynScheme::FutureNoisy { eps: 0.0 }, st, cfg(), &mut RandomStream::new(9)).unwrap();
            assert_eq!(a.steps, b.steps);
            assert_eq!(a.total(), b.total());
        }
    }

    #[test]
    fn static_scheme_never_updates() {
        let seq = gen_sequence(&TraceSpec::new(Family::Uniform, 50, 500, 4)).unwrap();
        let w = WeightVector::uniform(50);
        let r = run_dynamic(&seq, &DynScheme::Static(w), Structure::DetForest, cfg(), &mut RandomStream::new(1)).unwrap();
        assert_eq!((r.update_cost, r.updates, r.update_log_sum), (0, 0, 0.0));
        let rep = cost_decomposition_check(&r, &compute_stats(&seq), 8.0, 0.0);
        assert!(rep.holds);
    }

    #[test]
    fn incompatible_combinations() {
        let seq = AccessSequence::new(5, vec![1, 2]).unwrap();
        let mut rng = RandomStream::new(1);
        let w = DynScheme::Static(WeightVector::uniform(5));
        assert!(matches!(run_dynamic(&seq, &w, Structure::RankForest, cfg(), &mut rng), Err(Error::Config(_))));
        let bad = DynScheme::FutureNoisy { eps: -0.1 };
        assert!(matches!(run_dynamic(&seq, &bad, Structure::Treap, cfg(), &mut rng), Err(Error::Config(_))));
        let short = DynScheme::Static(WeightVector::uniform(4));
        assert!(run_dynamic(&seq, &short, Structure::Treap, cfg(), &mut rng).is_err());
    }

    #[test]
    fn interval_set_third_term_from_isp_trace() {
        let seq = gen_sequence(&TraceSpec::new(Family::Zipf { s: 1.0 }, 32, 400, 5)).unwrap();
        let stats = compute_stats(&seq);
        let r = run_dynamic(&seq, &DynScheme::IntervalSet, Structure::TierForest, cfg(), &mut RandomStream::new(1))
            .unwrap();
        let mut w = vec![super::super::isp_value(32); 33];
        let mut expect = 0.0;
        for i in 1..=seq.m() {
            let x = seq.at(i) as usize;
            let v = super::super::isp_value(stats.interval(i));
            expect += (v.ln() - w[x].ln()).abs() / 16f64.ln();
            w[x] = v;
        }
        assert!((r.update_log_sum - expect).abs() < 1e-9);
        assert!(r.max_update_set <= 1);
        assert_eq!(steps_csv(&r.steps).lines().count(), seq.m() + 1);
    }
}
