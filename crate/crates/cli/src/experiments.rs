use std::fmt::Write as _;

use anyhow::{bail, Result};
use latreap::dynamic::{
    compute_stats, run_dynamic, steps_csv, CostBreakdown, CrudeOracle, DriverConfig, DynScheme, IspState, Structure,
};
use latreap::em::{BTree, BlockStore, DetScoreForest, EmConfig, RankForest, TierForestBTreap};
use latreap::oracle;
use latreap::predictions::{Distribution, LogBase, Measure};
use latreap::priority::{static_opt_weights, WeightVector};
use latreap::sequences::{gen_distribution, gen_sequence, AccessSequence, Family, TraceSpec};
use latreap::{Key, Priority, RandomStream, Scheme, Treap};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Params;

pub struct Ctx {
    pub seed: u64,
    pub trials: u64,
    pool: rayon::ThreadPool,
}

impl Ctx {
    pub fn new(seed: u64, trials: u64, threads: usize) -> Result<Self> {
        if trials == 0 {
            bail!("trials must be at least 1");
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(Ctx { seed, trials, pool })
    }

    /// Runs `f(trial, seed)` for every trial; results come back in trial order.
    pub fn each<T: Send>(&self, f: impl Fn(u64, u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        self.pool.install(|| (0..self.trials).into_par_iter().map(|t| f(t, self.seed.wrapping_add(t))).collect())
    }
}

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

pub struct Report {
    pub results: Value,
    pub trials_csv: String,
    pub steps_csv: Option<String>,
    pub checks: Vec<Check>,
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = v.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    s / c.max(1) as f64
}

fn family(p: &Params) -> Result<Family> {
    Ok(Family::parse(p.str("family"))?)
}

fn sequence(p: &Params, seed: u64) -> Result<AccessSequence> {
    Ok(gen_sequence(&TraceSpec::new(family(p)?, p.get("n")?, p.get("m")?, seed))?)
}

fn treap_static_cost(w: &WeightVector<f64>, freq: &[u64], seed: u64) -> Result<u64> {
    let prios = Scheme::Composite.assign(w, &mut RandomStream::new(seed))?;
    let d = Treap::from_priorities(&prios)?.depths();
    Ok(freq.iter().enumerate().map(|(x, &f)| f * u64::from(d[x + 1])).sum())
}

fn forest_static_cost(w: &WeightVector<f64>, seq: &AccessSequence, b: usize, seed: u64) -> Result<u64> {
    let mut f = TierForestBTreap::build(w, EmConfig::new(b, 0.5)?, &mut RandomStream::new(seed))?;
    for &k in seq.keys() {
        f.access(k)?;
    }
    Ok(f.io_touches())
}

pub const STATIC_OPT: &[(&str, &str)] =
    &[("family", "zipf"), ("n", "1024"), ("m", "100000"), ("seed", "0"), ("trials", "20"), ("threads", "0")];

pub fn static_opt(p: &Params, ctx: &Ctx) -> Result<Report> {
    let n: u32 = p.get("n")?;
    let rows = ctx.each(|_, seed| {
        let seq = sequence(p, seed)?;
        let freq = seq.counts();
        let m = seq.m() as u64;
        let w = static_opt_weights::<f64>(&freq, m)?;
        let measured = treap_static_cost(&w, &freq, seed)? as f64;
        let dp = (n as usize <= oracle::MAX_DP_N).then(|| oracle::optimal_static_bst_cost(&freq)).transpose()?;
        let ent = Distribution::<f64>::from_counts(&freq)?.entropy(LogBase::Bits);
        Ok((seed, measured, dp.map(|v| v as f64), m as f64 * ent + n as f64))
    })?;
    let measured = mean(rows.iter().map(|r| r.1));
    let dp = rows.iter().map(|r| r.2).collect::<Option<Vec<f64>>>().map(mean);
    let entropy_bound = mean(rows.iter().map(|r| r.3));
    let ratio = dp.map(|d| measured / d);
    let mut csv = String::from("trial,seed,measured_cost,dp_opt,entropy_bound\n");
    for (t, r) in rows.iter().enumerate() {
        let dp = r.2.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{t},{},{},{dp},{}", r.0, r.1, r.3);
    }
    let mut checks = vec![check(
        "cost within 4x entropy bound",
        measured <= 4.0 * entropy_bound,
        format!("{measured:.0} vs 4 x {entropy_bound:.0}"),
    )];
    if let Some(r) = ratio {
        checks.push(check("cost within 4x DP optimum", r <= 4.0, format!("ratio {r:.4}")));
    }
    Ok(Report {
        results: json!({
            "measured_cost": num(measured),
            "dp_opt": dp.map_or(Value::Null, num),
            "entropy_bound": num(entropy_bound),
            "ratio": ratio.map_or(Value::Null, num),
        }),
        trials_csv: csv,
        steps_csv: None,
        checks,
    })
}

pub const ROBUSTNESS: &[(&str, &str)] = &[
    ("family", "zipf"),
    ("n", "1024"),
    ("m", "100000"),
    ("structure", "treap"),
    ("b", "16"),
    ("measures", "kl,chi2,tv,l2,linf,hellinger"),
    ("eps_divergence", "0.1,0.5,1.0"),
    ("eps_distance", "0.01,0.05,0.1"),
    ("seed", "0"),
    ("trials", "10"),
    ("threads", "0"),
];

pub fn robustness(p: &Params, ctx: &Ctx) -> Result<Report> {
    let n: u32 = p.get("n")?;
    let m: usize = p.get("m")?;
    let b: usize = p.get("b")?;
    let structure = Structure::parse(p.str("structure"))?;
    if !matches!(structure, Structure::Treap | Structure::TierForest) {
        bail!("robustness runs on treap or tier-forest, not {}", structure.name());
    }
    let base = if structure == Structure::Treap { 2.0 } else { b as f64 };
    let dist = gen_distribution(&TraceSpec::new(family(p)?, n, 0, 0))?;
    let measures: Vec<Measure> = p.list::<String>("measures")?.iter().map(|s| Measure::parse(s)).collect::<Result<_, _>>()?;

    let cost = |w: &WeightVector<f64>, seq: &AccessSequence, seed: u64| -> Result<f64> {
        Ok(match structure {
            Structure::Treap => treap_static_cost(w, &seq.counts(), seed)? as f64,
            _ => forest_static_cost(w, seq, b, seed)? as f64,
        })
    };
    let exact = WeightVector::new(dist.masses().to_vec())?;
    let baseline = ctx.each(|_, seed| {
        let seq = gen_sequence(&TraceSpec::new(family(p)?, n, m, seed))?;
        Ok((seed, cost(&exact, &seq, seed)?))
    })?;

    let mut csv = String::from("measure,target,distance,trial,seed,cost_exact,cost_perturbed,overhead,additive_term\n");
    let mut points = Vec::new();
    let mut checks = Vec::new();
    for measure in measures {
        let targets: Vec<f64> = match measure {
            Measure::Kl | Measure::Chi2 => p.list("eps_divergence")?,
            _ => p.list("eps_distance")?,
        };
        for eps in targets {
            let q = match dist.perturb(measure, eps) {
                Ok(q) => q,
                Err(e) => {
                    points.push(json!({"measure": measure.name(), "target": num(eps), "error": e.to_string()}));
                    continue;
                }
            };
            let d = dist.distance(&q, measure)?;
            let term = measure.additive_term(d, m as f64, n as f64, base);
            let w = WeightVector::new(q.masses().to_vec())?;
            let perturbed = ctx.each(|t, seed| {
                let seq = gen_sequence(&TraceSpec::new(family(p)?, n, m, seed))?;
                Ok((cost(&w, &seq, seed)?, baseline[t as usize].1))
            })?;
            for (t, &(cq, cp)) in perturbed.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{eps},{d},{t},{},{cp},{cq},{},{term}",
                    measure.name(),
                    baseline[t].0,
                    cq - cp
                );
            }
            let over = mean(perturbed.iter().map(|r| r.0 - r.1));
            let label = format!("{} at {eps}", measure.name());
            checks.push(check(
                format!("{label}: overhead within 8x additive term"),
                over <= 8.0 * term,
                format!("{over:.0} vs {term:.0}"),
            ));
            if measure == Measure::Kl && structure == Structure::Treap {
                let cross = dist.cross_entropy(&q, LogBase::Bits)?;
                let cost_bound = 4.0 * m as f64 * cross + 4.0 * n as f64;
                let over_bound = 6.0 * m as f64 * d / std::f64::consts::LN_2 + 6.0 * n as f64;
                let worst_cost = perturbed.iter().map(|r| r.0).fold(0.0, f64::max);
                let worst_over = perturbed.iter().map(|r| r.0 - r.1).fold(f64::MIN, f64::max);
                checks.push(check(
                    format!("{label}: cost within cross-entropy bound"),
                    worst_cost <= cost_bound,
                    format!("{worst_cost:.0} vs {cost_bound:.0}"),
                ));
                checks.push(check(
                    format!("{label}: overhead within KL bound"),
                    worst_over <= over_bound,
                    format!("{worst_over:.0} vs {over_bound:.0}"),
                ));
            }
            points.push(json!({
                "measure": measure.name(),
                "target": num(eps),
                "distance": num(d),
                "mean_overhead": num(over),
                "additive_term": num(term),
                "overhead_over_term": num(over / term),
            }));
        }
    }
    Ok(Report {
        results: json!({
            "mean_cost_exact": num(mean(baseline.iter().map(|r| r.1))),
            "log_base": num(base),
            "points": points,
        }),
        trials_csv: csv,
        steps_csv: None,
        checks,
    })
}

pub const COUNTEREXAMPLES: &[(&str, &str)] =
    &[("family", "both"), ("n", "4096"), ("seed", "0"), ("trials", "50"), ("threads", "0")];

fn expected_access(scheme: Scheme, masses: &[f64], seed: u64) -> Result<(f64, Vec<u32>)> {
    let n = masses.len() as f64;
    let w = WeightVector::<f64>::from_masses(masses, 1.0 / (n * n))?;
    let prios = scheme.assign(&w, &mut RandomStream::new(seed))?;
    let d = Treap::from_priorities(&prios)?.depths();
    Ok((masses.iter().enumerate().map(|(x, &p)| p * d[x + 1] as f64).sum(), d))
}

pub fn counterexamples(p: &Params, ctx: &Ctx) -> Result<Report> {
    let n: u32 = p.get("n")?;
    let which = p.str("family");
    if !matches!(which, "both" | "linear" | "segmented") {
        bail!("counterexamples family must be both, linear or segmented, got `{which}`");
    }
    let mut results = serde_json::Map::new();
    let mut checks = Vec::new();
    let mut csv = String::from("distribution,trial,seed,scheme,expected_access\n");

    if which != "segmented" {
        let lin = gen_distribution(&TraceSpec::new(Family::Linear, n, 0, 0))?;
        let (raw, depths) = expected_access(Scheme::RawScore, lin.masses(), ctx.seed)?;
        let exact = (1..=n).all(|x| depths[x as usize] == x);
        let comp = ctx.each(|_, seed| expected_access(Scheme::Composite, lin.masses(), seed).map(|r| r.0))?;
        for (t, c) in comp.iter().enumerate() {
            let _ = writeln!(csv, "linear,{t},{},composite,{c}", ctx.seed + t as u64);
        }
        let _ = writeln!(csv, "linear,0,{},raw-score,{raw}", ctx.seed);
        checks.push(check("raw-score depth equals key", exact, format!("n={n}")));
        checks.push(check(
            "raw-score expected access at least n/3",
            raw >= n as f64 / 3.0,
            format!("{raw:.4} vs {:.4}", n as f64 / 3.0),
        ));
        results.insert(
            "linear".into(),
            json!({
                "raw_score_expected_access": num(raw),
                "raw_score_depth_is_key": exact,
                "composite_expected_access": num(mean(comp.iter().copied())),
            }),
        );
    }
    if which != "linear" {
        let seg = gen_distribution(&TraceSpec::new(Family::Segmented, n, 0, 0))?;
        let rows = ctx.each(|_, seed| {
            Ok((
                expected_access(Scheme::SingleLog, seg.masses(), seed)?.0,
                expected_access(Scheme::Composite, seg.masses(), seed)?.0,
            ))
        })?;
        for (t, r) in rows.iter().enumerate() {
            let s = ctx.seed + t as u64;
            let _ = writeln!(csv, "segmented,{t},{s},single-log,{}\nsegmented,{t},{s},composite,{}", r.0, r.1);
        }
        let single = mean(rows.iter().map(|r| r.0));
        let comp = mean(rows.iter().map(|r| r.1));
        checks.push(check(
            "single-log slower than composite",
            single > comp,
            format!("{single:.3} vs {comp:.3}"),
        ));
        results.insert(
            "segmented".into(),
            json!({
                "single_log_expected_access": num(single),
                "composite_expected_access": num(comp),
                "ratio": num(single / comp),
            }),
        );
    }
    Ok(Report { results: Value::Object(results), trials_csv: csv, steps_csv: None, checks })
}

pub const WORKING_SET: &[(&str, &str)] = &[
    ("family", "zipf"),
    ("n", "1024"),
    ("m", "100000"),
    ("b", "16"),
    ("factor", "8"),
    ("record_steps", "false"),
    ("seed", "0"),
    ("trials", "3"),
    ("threads", "0"),
];

/// `sum_i sum_{x in U_i} log2(s(i, x) + 1)` for the crude oracle.
fn crude_volume(seq: &AccessSequence) -> f64 {
    let mut o = CrudeOracle::new(seq.n(), seq.m());
    let mut v = 0.0;
    for &x in seq.keys() {
        for y in o.step(x) {
            v += (o.score(y) as f64 + 1.0).log2();
        }
    }
    v
}

pub fn working_set(p: &Params, ctx: &Ctx) -> Result<Report> {
    let b: usize = p.get("b")?;
    let factor: f64 = p.get("factor")?;
    let record = p.flag("record_steps")?;
    let cfg = DriverConfig { b, record_steps: record, ..DriverConfig::default() };
    let runs = [
        ("treap/future", DynScheme::FutureExact, Structure::Treap),
        ("treap/crude", DynScheme::PastCrude, Structure::Treap),
        ("rank-forest", DynScheme::FutureExact, Structure::RankForest),
    ];
    let rows = ctx.each(|_, seed| {
        let seq = sequence(p, seed)?;
        let stats = compute_stats(&seq);
        let n = seq.n() as f64;
        let volume = crude_volume(&seq);
        let mut out = Vec::new();
        for (label, scheme, structure) in &runs {
            let r = run_dynamic(&seq, scheme, *structure, cfg, &mut RandomStream::new(seed))?;
            let ln_b = r.log_base.ln();
            let ws = n * n.ln() / ln_b + stats.work_past.iter().map(|&w| (w as f64 + 1.0).ln() / ln_b).sum::<f64>();
            // the crude oracle also pays for the volume of its score updates
            let full = if *scheme == DynScheme::PastCrude { ws + volume } else { ws };
            out.push((*label, r, ws, full));
        }
        Ok((seed, out))
    })?;

    let mut csv = String::from("trial,seed,run,access_cost,update_cost,total,working_set_bound,full_bound\n");
    let mut checks = Vec::new();
    let mut summary = serde_json::Map::new();
    for (t, (seed, out)) in rows.iter().enumerate() {
        for (label, r, ws, th) in out {
            let _ = writeln!(csv, "{t},{seed},{label},{},{},{},{ws},{th}", r.access_cost, r.update_cost, r.total());
            checks.push(check(
                format!("trial {t} {label}: cost within {factor}x full bound"),
                r.total() as f64 <= factor * th,
                format!("{} vs {th:.0}", r.total()),
            ));
        }
    }
    for (i, (label, _, _)) in runs.iter().enumerate() {
        let total = mean(rows.iter().map(|r| r.1[i].1.total() as f64));
        let ws = mean(rows.iter().map(|r| r.1[i].2));
        let th = mean(rows.iter().map(|r| r.1[i].3));
        summary.insert(
            label.to_string(),
            json!({
                "mean_total": num(total),
                "working_set_bound": num(ws),
                "full_bound": num(th),
                "total_over_working_set_bound": num(total / ws),
            }),
        );
    }
    let steps = record.then(|| steps_csv(&rows[0].1[0].1.steps));
    Ok(Report { results: Value::Object(summary), trials_csv: csv, steps_csv: steps, checks })
}

pub const INTERVAL_SET: &[(&str, &str)] = &[
    ("family", "zipf"),
    ("n", "256"),
    ("m", "100000"),
    ("b", "16"),
    ("structure", "tier-forest"),
    ("mae", "0,0.5,1"),
    ("record_steps", "false"),
    ("seed", "0"),
    ("trials", "10"),
    ("threads", "0"),
];

pub fn interval_set(p: &Params, ctx: &Ctx) -> Result<Report> {
    let n: u32 = p.get("n")?;
    let m: usize = p.get("m")?;
    let b: usize = p.get("b")?;
    let structure = Structure::parse(p.str("structure"))?;
    let fracs: Vec<f64> = p.list("mae")?;
    let record = p.flag("record_steps")?;
    let cfg = DriverConfig { b, record_steps: record, ..DriverConfig::default() };
    let x1 = gen_sequence(&TraceSpec::new(Family::RoundRobin, n, m, 0))?;
    let x2 = gen_sequence(&TraceSpec::new(Family::BlockRepeat, n, m, 0))?;
    let ln_b = (b as f64).ln();

    struct Trial {
        seed: u64,
        x1: CostBreakdown,
        x2: CostBreakdown,
        sweep: Vec<(f64, CostBreakdown)>,
    }
    let rows = ctx.each(|_, seed| {
        let go = |seq: &AccessSequence, s: &DynScheme| run_dynamic(seq, s, structure, cfg, &mut RandomStream::new(seed));
        let seq = sequence(p, seed)?;
        let mut sweep = Vec::new();
        for &f in &fracs {
            let eps = f * m as f64 / n as f64;
            let scheme = if eps == 0.0 { DynScheme::IntervalSet } else { DynScheme::IntervalSetNoisy { mae: eps } };
            sweep.push((eps, go(&seq, &scheme)?));
        }
        Ok(Trial { seed, x1: go(&x1, &DynScheme::IntervalSet)?, x2: go(&x2, &DynScheme::IntervalSet)?, sweep })
    })?;

    let mut csv = String::from("trial,seed,run,mae,access_cost,update_cost,total,max_update_set\n");
    let mut checks = Vec::new();
    for (t, r) in rows.iter().enumerate() {
        let mut line = |run: &str, mae: f64, c: &CostBreakdown| {
            let _ = writeln!(
                csv,
                "{t},{},{run},{mae},{},{},{},{}",
                r.seed,
                c.access_cost,
                c.update_cost,
                c.total(),
                c.max_update_set
            );
        };
        line("x1", 0.0, &r.x1);
        line("x2", 0.0, &r.x2);
        for (eps, c) in &r.sweep {
            line("sweep", *eps, c);
        }
        checks.push(check(
            format!("trial {t}: X2 cheaper than X1"),
            r.x2.total() < r.x1.total(),
            format!("{} vs {}", r.x2.total(), r.x1.total()),
        ));
        let exact = r.sweep.iter().find(|s| s.0 == 0.0).map(|s| s.1.total() as f64);
        if let Some(exact) = exact {
            for (eps, c) in r.sweep.iter().filter(|s| s.0 > 0.0) {
                let allow = 8.0 * m as f64 * (1.0 + n as f64 * eps / m as f64).ln() / ln_b + 8.0 * n as f64;
                checks.push(check(
                    format!("trial {t}: mae {eps} within allowance"),
                    c.total() as f64 <= exact + allow,
                    format!("{} vs {exact} + {allow:.0}", c.total()),
                ));
            }
        }
        let worst = [&r.x1, &r.x2].into_iter().chain(r.sweep.iter().filter(|s| s.0 == 0.0).map(|s| &s.1));
        let worst = worst.map(|c| c.max_update_set).max().unwrap_or(0);
        checks.push(check(format!("trial {t}: at most one update per step"), worst <= 1, format!("max {worst}")));
    }
    let sweep: Vec<Value> = fracs
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            json!({
                "mae": num(f * m as f64 / n as f64),
                "mean_total": num(mean(rows.iter().map(|r| r.sweep[i].1.total() as f64))),
                "mean_realized_mae": num(mean(rows.iter().map(|r| r.sweep[i].1.mae))),
            })
        })
        .collect();
    let steps = record.then(|| steps_csv(&rows[0].x2.steps));
    Ok(Report {
        results: json!({
            "x1_mean_total": num(mean(rows.iter().map(|r| r.x1.total() as f64))),
            "x2_mean_total": num(mean(rows.iter().map(|r| r.x2.total() as f64))),
            "sweep": sweep,
        }),
        trials_csv: csv,
        steps_csv: steps,
        checks,
    })
}

pub const EM_COMPARE: &[(&str, &str)] = &[
    ("family", "zipf"),
    ("n", "4096"),
    ("m", "100000"),
    ("b", "16"),
    ("factor", "8"),
    ("seed", "0"),
    ("trials", "3"),
    ("threads", "0"),
];

pub fn em_compare(p: &Params, ctx: &Ctx) -> Result<Report> {
    let n: u32 = p.get("n")?;
    let b: usize = p.get("b")?;
    let factor: f64 = p.get("factor")?;
    let fam = family(p)?;
    if !fam.is_distributional() {
        bail!("em-compare needs a distributional family, got {}", fam.name());
    }
    let dist = gen_distribution(&TraceSpec::new(fam, n, 0, 0))?;
    let w = WeightVector::new(dist.masses().to_vec())?;
    let cfg = EmConfig::new(b, 0.5)?;
    let ln_b = (b as f64).ln();
    let rows = ctx.each(|_, seed| {
        let seq = sequence(p, seed)?;
        let tier = forest_static_cost(&w, &seq, b, seed)?;
        let mut det = DetScoreForest::build(&w, cfg)?;
        for &k in seq.keys() {
            det.access(k)?;
        }
        let opt = seq.m() as f64 * dist.masses().iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln() / ln_b).sum::<f64>();
        Ok((seed, tier, det.io_touches(), opt))
    })?;
    let mut csv = String::from("trial,seed,tier_forest_io,det_forest_io,opt_static_b\n");
    let mut checks = Vec::new();
    for (t, r) in rows.iter().enumerate() {
        let _ = writeln!(csv, "{t},{},{},{},{}", r.0, r.1, r.2, r.3);
    }
    let tier = mean(rows.iter().map(|r| r.1 as f64));
    let det = mean(rows.iter().map(|r| r.2 as f64));
    let opt = mean(rows.iter().map(|r| r.3));
    checks.push(check(
        format!("tier forest within {factor}x OPT_B"),
        tier <= factor * opt,
        format!("{tier:.0} vs {opt:.0}"),
    ));
    checks.push(check(
        format!("deterministic forest within {factor}x OPT_B"),
        det <= factor * opt,
        format!("{det:.0} vs {opt:.0}"),
    ));
    if let Some(warn) = cfg.regime_warning(n as usize) {
        eprintln!("warning: {warn}");
    }
    Ok(Report {
        results: json!({
            "tier_forest_io": num(tier),
            "det_forest_io": num(det),
            "opt_static_b": num(opt),
            "tier_over_opt": num(tier / opt),
            "det_over_opt": num(det / opt),
        }),
        trials_csv: csv,
        steps_csv: None,
        checks,
    })
}

pub const VALIDATE: &[(&str, &str)] = &[("seed", "0"), ("trials", "20"), ("threads", "0")];

fn random_priorities(n: u32, rng: &mut RandomStream) -> Vec<Priority> {
    (0..n).map(|_| Priority::new((rng.next_offset() * 3.0) as i32, rng.next_offset()).unwrap()).collect()
}

fn random_keys(n: u32, m: usize, rng: &mut RandomStream) -> Vec<Key> {
    (0..m).map(|_| (rng.next_offset() * n as f64) as Key + 1).collect()
}

/// One round of every invariant on fresh random instances; returns failures.
fn validate_round(seed: u64) -> Result<Vec<String>> {
    let mut rng = RandomStream::new(seed);
    let mut fail = Vec::new();
    let n = 1 + (rng.next_offset() * 10.0) as u32;

    let prios = random_priorities(n, &mut rng);
    let reference = Treap::from_priorities(&prios)?;
    if reference.depths()[1..] != oracle::naive_depths(&prios)?[..] {
        fail.push("treap depths differ from the recursive reference".to_string());
    }
    let mut order: Vec<Key> = (1..=n).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, (rng.next_offset() * (i + 1) as f64) as usize);
    }
    let mut t = Treap::new(n);
    for &k in &order {
        t.insert(k, prios[k as usize - 1])?;
    }
    if !t.same_tree(&reference) || t.validate().is_err() {
        fail.push(format!("insertion order {order:?} built a different tree"));
    }
    for x in 1..=n {
        for y in (1..=n).filter(|&y| y != x) {
            if t.is_ancestor(x, y)? != oracle::ancestor_by_interval_max(&prios, x, y) {
                fail.push(format!("ancestry of {x} over {y} disagrees with the interval maximum"));
            }
        }
    }

    let seq = AccessSequence::new(n, random_keys(n, 80, &mut rng))?;
    let stats = compute_stats(&seq);
    if stats != oracle::exhaustive_stats(&seq) {
        fail.push("sequence statistics differ from the exhaustive scan".to_string());
    }
    let mut isp = IspState::new(n);
    for i in 1..=seq.m() {
        isp.step(i, seq.at(i), &stats);
        if isp.norm() > std::f64::consts::PI.powi(2) / 6.0 || (isp.all_seen() && isp.norm() > 0.645) {
            fail.push(format!("interval-set norm {} at step {i}", isp.norm()));
        }
    }

    let mut crude = CrudeOracle::new(n, seq.m());
    // x itself plus one key per power of two below n
    let cap = n.next_power_of_two().ilog2() as usize + 1;
    for &x in seq.keys() {
        let u = crude.step(x);
        if u.len() > cap {
            fail.push(format!("crude update set of {} items", u.len()));
        }
        for y in u {
            let (s, w) = (crude.score(y) as f64, crude.exact_work(y) as f64);
            let ok = if w == 0.0 {
                s == 0.0
            } else {
                (w + 1.0).log2() <= (s + 1.0).log2() && (s + 1.0).log2() <= 2.0 * (w + 1.0).log2() + 1.0
            };
            if !ok {
                fail.push(format!("crude score {s} outside the band of work {w}"));
            }
        }
    }

    let big = 1 + (rng.next_offset() * 32.0) as u32;
    let b = 4 + (rng.next_offset() * 5.0) as usize;
    let cfg = EmConfig::new(b, 0.5)?;
    let fp = random_priorities(big, &mut rng);
    let mut tf = TierForestBTreap::from_priorities(&fp, cfg)?;
    let k = 1 + (rng.next_offset() * big as f64) as Key;
    let np = Priority::new((rng.next_offset() * 3.0) as i32, rng.next_offset())?;
    tf.update_priority(k, np)?;
    let mut changed = fp.clone();
    changed[k as usize - 1] = np;
    if let Err(e) = tf.check_invariants() {
        fail.push(format!("tier forest: {e}"));
    }
    if tf.dump() != TierForestBTreap::from_priorities(&changed, cfg)?.dump() {
        fail.push("tier forest update differs from a rebuild".to_string());
    }

    let mut rank = RankForest::new(big, cfg)?;
    for k in random_keys(big, 200, &mut rng) {
        rank.access(k)?;
        if let Err(e) = rank.check_invariant() {
            fail.push(format!("rank forest: {e}"));
            break;
        }
    }

    let w = WeightVector::<f64>::new((1..=big).map(|x| 1.0 / x as f64).collect())?.normalized();
    if let Err(e) = DetScoreForest::build(&w, cfg)?.check_occupancy() {
        fail.push(format!("deterministic forest: {e}"));
    }

    let mut store = BlockStore::new(b);
    let mut tree = BTree::new(0);
    let mut present = vec![false; 201];
    for _ in 0..400 {
        let k = 1 + (rng.next_offset() * 200.0) as Key;
        if present[k as usize] {
            tree.remove(&mut store, k)?;
        } else {
            tree.insert(&mut store, k)?;
        }
        present[k as usize] ^= true;
    }
    let want: Vec<Key> = (1..=200).filter(|&k| present[k as usize]).collect();
    if tree.validate(&store).is_err() || tree.keys(&store) != want {
        fail.push("B-tree lost its shape or its keys".to_string());
    }
    fail.sort();
    fail.dedup();
    Ok(fail)
}

pub fn validate(_: &Params, ctx: &Ctx) -> Result<Report> {
    let rows = ctx.each(|_, seed| Ok((seed, validate_round(seed)?)))?;
    let mut csv = String::from("trial,seed,failures\n");
    let mut checks = Vec::new();
    for (t, (seed, fails)) in rows.iter().enumerate() {
        let _ = writeln!(csv, "{t},{seed},{}", fails.len());
        checks.push(check(format!("trial {t} invariants"), fails.is_empty(), fails.join("; ")));
    }
    let total: usize = rows.iter().map(|r| r.1.len()).sum();
    Ok(Report { results: json!({ "rounds": rows.len(), "failures": total }), trials_csv: csv, steps_csv: None, checks })
}
