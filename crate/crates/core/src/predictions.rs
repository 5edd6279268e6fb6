//! Distributions over `1..=n`, entropic quantities, distances between
//! distributions, and perturbation of a distribution to a target error.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Logarithm base for entropic quantities. Always explicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogBase {
    Bits,
    Nats,
}

impl LogBase {
    fn log<T: Real>(self, v: T) -> T {
        match self {
            LogBase::Bits => v.log2(),
            LogBase::Nats => v.ln(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    p: Vec<T>,
}

impl<T: Real> Distribution<T> {
    /// Masses of items `1..=n`; must be nonnegative and sum to one.
    pub fn new(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Domain("distribution over an empty universe".into()));
        }
        for (i, &v) in p.iter().enumerate() {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::Domain(format!("mass of item {} is {v}", i + 1)));
            }
        }
        let s: T = p.iter().copied().sum();
        if (s - T::one()).abs() > T::mass_tolerance() {
            return Err(Error::Domain(format!("masses sum to {s}, not 1")));
        }
        Ok(Distribution { p })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(w: &[T]) -> Result<Self> {
        let s: T = w.iter().copied().sum();
        if !(s > T::zero()) {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        Self::new(w.iter().map(|&v| v / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Distribution { p: vec![T::one() / T::from_usize(n); n] }
    }

    /// Empirical distribution of item counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let w: Vec<T> = counts.iter().map(|&c| T::from_f64(c as f64)).collect();
        Self::from_weights(&w)
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn masses(&self) -> &[T] {
        &self.p
    }

    /// Mass of item `x` (1-based).
    pub fn mass(&self, x: u32) -> T {
        self.p[x as usize - 1]
    }

    /// Items with positive mass.
    pub fn support(&self) -> Vec<u32> {
        (1..=self.p.len() as u32).filter(|&x| self.mass(x) > T::zero()).collect()
    }

    pub fn entropy(&self, base: LogBase) -> T {
        self.p
            .iter()
            .filter(|&&v| v > T::zero())
            .map(|&v| -v * base.log(v))
            .sum()
    }

    pub fn cross_entropy(&self, q: &Self, base: LogBase) -> Result<T> {
        self.same_universe(q)?;
        let mut acc = T::zero();
        for (i, (&a, &b)) in self.p.iter().zip(&q.p).enumerate() {
            if a > T::zero() {
                if !(b > T::zero()) {
                    return Err(Error::Domain(format!(
                        "prediction gives zero mass to item {} which has mass {a}",
                        i + 1
                    )));
                }
                acc = acc - a * base.log(b);
            }
        }
        Ok(acc)
    }

    /// `D_KL(self || q)`, computed term by term and clamped at zero.
    pub fn kl(&self, q: &Self, base: LogBase) -> Result<T> {
        self.same_universe(q)?;
        let mut acc = T::zero();
        for (i, (&a, &b)) in self.p.iter().zip(&q.p).enumerate() {
            if a > T::zero() {
                if !(b > T::zero()) {
                    return Err(Error::Domain(format!("support violation at item {}", i + 1)));
                }
                acc = acc + a * base.log(a / b);
            }
        }
        Ok(acc.max(T::zero()))
    }

    pub fn error_measures(&self, q: &Self) -> Result<ErrorMeasures<T>> {
        self.same_universe(q)?;
        let half = T::from_f64(0.5);
        let mut l1 = T::zero();
        let mut l2 = T::zero();
        let mut linf = T::zero();
        let mut chi2 = T::zero();
        let mut hel = T::zero();
        for (&a, &b) in self.p.iter().zip(&q.p) {
            let d = (a - b).abs();
            l1 = l1 + d;
            l2 = l2 + d * d;
            linf = linf.max(d);
            if b > T::zero() {
                chi2 = chi2 + d * d / b;
            } else if a > T::zero() {
                chi2 = T::infinity();
            }
            let h = a.sqrt() - b.sqrt();
            hel = hel + h * h;
        }
        Ok(ErrorMeasures {
            tv: half * l1,
            l2: l2.sqrt(),
            linf,
            chi2,
            hellinger: half * hel.sqrt(),
        })
    }

    /// Distance of `q` from `self` under `measure` (KL in nats).
    pub fn distance(&self, q: &Self, measure: Measure) -> Result<T> {
        let e = self.error_measures(q)?;
        Ok(match measure {
            Measure::Kl => self.kl(q, LogBase::Nats)?,
            Measure::Chi2 => e.chi2,
            Measure::Tv => e.tv,
            Measure::L2 => e.l2,
            Measure::Linf => e.linf,
            Measure::Hellinger => e.hellinger,
        })
    }

    /// A distribution at distance `eps` (within 20%) from `self` under `measure`.
    ///
    /// Searches the mixture `(1 - λ) p + λ r` by bisection on `λ`, first with
    /// `r` uniform and, if that cannot reach `eps`, with `r` concentrated on
    /// the lightest item. Every mass of the result is at least `1 / n^3`.
    pub fn perturb(&self, measure: Measure, eps: T) -> Result<Self> {
        if !(eps >= T::zero()) {
            return Err(Error::Domain(format!("target error {eps} must be nonnegative")));
        }
        if eps == T::zero() {
            return Ok(self.clone());
        }
        let n = self.n();
        let floor = T::one() / T::from_usize(n).powi(3);
        let uniform = vec![T::one() / T::from_usize(n); n];
        let lightest = (0..n)
            .rev()
            .min_by(|&a, &b| self.p[a].partial_cmp(&self.p[b]).unwrap())
            .unwrap();
        let mut spike = vec![floor; n];
        spike[lightest] = T::one() - floor * T::from_usize(n - 1);

        let lo_band = T::from_f64(0.8) * eps;
        let hi_band = T::from_f64(1.2) * eps;
        for target in [uniform, spike] {
            let at = |lambda: T| -> Result<(Self, T)> {
                let q = self.mix(&target, lambda, floor);
                let d = self.distance(&q, measure)?;
                Ok((q, d))
            };
            let (_, reach) = at(T::one())?;
            if reach < lo_band {
                continue;
            }
            let (mut lo, mut hi) = (T::zero(), T::one());
            let two = T::from_f64(2.0);
            for _ in 0..80 {
                let mid = (lo + hi) / two;
                let (_, d) = at(mid)?;
                if d < eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            for lambda in [hi, lo] {
                let (q, d) = at(lambda)?;
                if d >= lo_band && d <= hi_band {
                    return Ok(q);
                }
            }
        }
        Err(Error::Domain(format!("cannot reach {measure:?} error {eps} from this distribution")))
    }

    fn mix(&self, target: &[T], lambda: T, floor: T) -> Self {
        let raw: Vec<T> = self
            .p
            .iter()
            .zip(target)
            .map(|(&a, &b)| ((T::one() - lambda) * a + lambda * b).max(floor))
            .collect();
        let s: T = raw.iter().copied().sum();
        Distribution { p: raw.into_iter().map(|v| v / s).collect() }
    }

    fn same_universe(&self, q: &Self) -> Result<()> {
        if self.n() != q.n() {
            return Err(Error::Domain(format!(
                "distributions over {} and {} items",
                self.n(),
                q.n()
            )));
        }
        Ok(())
    }

    /// Two-column CSV: header `key,mass` followed by one row per item.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,mass\n");
        for (i, v) in self.p.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, v.as_f64());
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut masses: Vec<T> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("key")) {
                continue;
            }
            let parse_err = |reason: String| Error::Parse { line: lineno + 1, reason };
            let (k, v) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected `key,mass`".into()))?;
            let k: usize = k.trim().parse().map_err(|e| parse_err(format!("bad key: {e}")))?;
            let v: f64 = v.trim().parse().map_err(|e| parse_err(format!("bad mass: {e}")))?;
            if k != masses.len() + 1 {
                return Err(parse_err(format!("expected key {}, found {k}", masses.len() + 1)));
            }
            masses.push(T::from_f64(v));
        }
        Self::new(masses)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorMeasures<T> {
    pub tv: T,
    pub l2: T,
    pub linf: T,
    pub chi2: T,
    pub hellinger: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Measure {
    Kl,
    Chi2,
    Tv,
    L2,
    Linf,
    Hellinger,
}

impl Measure {
    pub const ALL: [Measure; 6] =
        [Measure::Kl, Measure::Chi2, Measure::Tv, Measure::L2, Measure::Linf, Measure::Hellinger];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Kl => "kl",
            Measure::Chi2 => "chi2",
            Measure::Tv => "tv",
            Measure::L2 => "l2",
            Measure::Linf => "linf",
            Measure::Hellinger => "hellinger",
        }
    }

    pub fn parse(s: &str) -> Result<Measure> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown error measure `{s}`")))
    }

    /// Additive cost term that a prediction at error `eps` may add to a
    /// static B-tree over `n` items serving `m` accesses.
    pub fn additive_term(&self, eps: f64, m: f64, n: f64, b: f64) -> f64 {
        match self {
            Measure::Kl | Measure::Chi2 => eps * m / b.ln(),
            _ => m * (1.0 + eps * n).ln() / b.ln(),
        }
    }
}

/// Summed absolute error between two score sequences.
pub fn mae<T: Real>(truth: &[T], predicted: &[T]) -> Result<T> {
    if truth.len() != predicted.len() {
        return Err(Error::Domain(format!(
            "score sequences have lengths {} and {}",
            truth.len(),
            predicted.len()
        )));
    }
    Ok(truth.iter().zip(predicted).map(|(&a, &b)| (a - b).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = Distribution<f64>;

    #[test]
    fn entropy_examples() {
        let p = D::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((p.entropy(LogBase::Bits) - 1.5).abs() < 1e-12);
        assert_eq!(D::new(vec![0.0, 1.0, 0.0]).unwrap().entropy(LogBase::Bits), 0.0);
        assert!((D::uniform(8).entropy(LogBase::Bits) - 3.0).abs() < 1e-12);
        let p32 = Distribution::<f32>::uniform(8);
        assert!((p32.entropy(LogBase::Bits) - 3.0).abs() < 1e-5);
    }

    #[test]
    fn kl_examples() {
        let p = D::new(vec![1.0, 0.0]).unwrap();
        let q = D::uniform(2);
        assert!((p.cross_entropy(&q, LogBase::Bits).unwrap() - 1.0).abs() < 1e-12);
        assert!((p.kl(&q, LogBase::Bits).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(q.kl(&q, LogBase::Bits).unwrap(), 0.0);
        assert!(matches!(q.kl(&p, LogBase::Nats), Err(Error::Domain(_))));
        assert!(matches!(q.cross_entropy(&p, LogBase::Nats), Err(Error::Domain(_))));
    }

    #[test]
    fn measures_identical_are_zero() {
        let p = D::new(vec![0.1, 0.2, 0.7]).unwrap();
        let e = p.error_measures(&p).unwrap();
        assert_eq!(e, ErrorMeasures { tv: 0.0, l2: 0.0, linf: 0.0, chi2: 0.0, hellinger: 0.0 });
        let q = D::new(vec![0.0, 0.3, 0.7]).unwrap();
        assert!(p.error_measures(&q).unwrap().chi2.is_infinite());
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(D::new(vec![0.5, 0.6]).is_err());
        assert!(D::new(vec![-0.5, 1.5]).is_err());
        assert!(D::new(vec![]).is_err());
        assert!(D::uniform(3).error_measures(&D::uniform(4)).is_err());
    }

    #[test]
    fn perturb_tv_on_uniform() {
        let p = D::uniform(100);
        let q = p.perturb(Measure::Tv, 0.1).unwrap();
        let tv = p.error_measures(&q).unwrap().tv;
        assert!((0.08..=0.12).contains(&tv), "tv = {tv}");
        assert_eq!(p.perturb(Measure::Kl, 0.0).unwrap(), p);
        assert!(q.masses().iter().all(|&v| v >= 1e-6));
    }

    #[test]
    fn perturb_kl_uses_uniform_mixture() {
        let w: Vec<f64> = (1..=50).map(|x| 1.0 / x as f64).collect();
        let p = D::from_weights(&w).unwrap();
        let q = p.perturb(Measure::Kl, 0.2).unwrap();
        let kl = p.kl(&q, LogBase::Nats).unwrap();
        assert!((0.16..=0.24).contains(&kl));
        // mixture toward uniform keeps the heaviest item the heaviest
        assert!(q.mass(1) > q.mass(50));
    }

    #[test]
    fn perturb_infeasible() {
        let p = D::uniform(4);
        assert!(matches!(p.perturb(Measure::Tv, 5.0), Err(Error::Domain(_))));
        assert!(p.perturb(Measure::Tv, -1.0).is_err());
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.5]).unwrap(), 0.5);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let p = D::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(D::from_csv(&p.to_csv()).unwrap(), p);
        assert!(matches!(D::from_csv("key,mass\n1,0.5\n3,0.5\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(D::from_csv("1;0.5\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn additive_terms() {
        let b = 16.0_f64;
        assert!((Measure::Kl.additive_term(1.0, 100.0, 10.0, b) - 100.0 / b.ln()).abs() < 1e-12);
        assert!((Measure::Tv.additive_term(0.1, 100.0, 10.0, b) - 100.0 * 2f64.ln() / b.ln()).abs() < 1e-12);
    }
}
