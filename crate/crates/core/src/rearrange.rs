//! Constructive rearrangements.
//!
//! [`greedy_rearrange`] builds a prefix of a prime ordering whose partial
//! sums of `p^{-z}` are steered toward a target point in the plane;
//! [`riemann_rearrange_real`] is the classic two-pile scheme for a real
//! conditionally convergent series.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::primes::PrimeOrdering;
use crate::series::{Domain, SeriesPoint};
use crate::summation::{CompensatedSum, Neumaier};

/// Default candidate window for the greedy rearranger.
pub const DEFAULT_WINDOW: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bucket {
    Plus,
    Minus,
    Neutral,
}

impl Bucket {
    pub fn symbol(self) -> char {
        match self {
            Bucket::Plus => '+',
            Bucket::Minus => '-',
            Bucket::Neutral => '0',
        }
    }
}

fn check_phase_params(y: f64, threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return domain(format!("threshold K must lie in (0, 1), got {threshold}"));
    }
    if !(y > 0.0 && y.is_finite()) {
        return domain(format!("y must be positive, got {y}"));
    }
    Ok(())
}

#[inline]
fn bucket_of(p: u64, y: f64, alpha: f64, threshold: f64) -> Bucket {
    let c = (y * (p as f64).ln() + alpha).cos();
    if c > threshold {
        Bucket::Plus
    } else if c < -threshold {
        Bucket::Minus
    } else {
        Bucket::Neutral
    }
}

/// Classifies `p` by `cos(y ln p + alpha)` against `+-threshold`.
pub fn classify_prime(p: u64, y: f64, alpha: f64, threshold: f64) -> Result<Bucket> {
    check_phase_params(y, threshold)?;
    Ok(bucket_of(p, y, alpha, threshold))
}

/// Primes split by phase: `P+`, `P-` and the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBucket {
    pub threshold: f64,
    pub alpha: f64,
    pub y: f64,
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
    pub neutral: Vec<u64>,
}

impl PhaseBucket {
    pub fn new(y: f64, alpha: f64, threshold: f64) -> Result<Self> {
        check_phase_params(y, threshold)?;
        if !(0.0..TAU).contains(&alpha) {
            return domain(format!("alpha must lie in [0, 2pi), got {alpha}"));
        }
        Ok(Self {
            threshold,
            alpha,
            y,
            plus: Vec::new(),
            minus: Vec::new(),
            neutral: Vec::new(),
        })
    }

    pub fn insert(&mut self, p: u64) -> Bucket {
        let b = bucket_of(p, self.y, self.alpha, self.threshold);
        match b {
            Bucket::Plus => self.plus.push(p),
            Bucket::Minus => self.minus.push(p),
            Bucket::Neutral => self.neutral.push(p),
        }
        b
    }

    pub fn extend<I: IntoIterator<Item = u64>>(&mut self, primes: I) {
        for p in primes {
            self.insert(p);
        }
    }

    pub fn len(&self) -> usize {
        self.plus.len() + self.minus.len() + self.neutral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyParams {
    /// Number of smallest unused primes scored at each step.
    pub window: usize,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self { window: DEFAULT_WINDOW }
    }
}

/// Output of [`greedy_rearrange`].
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementPlan {
    pub z: SeriesPoint,
    pub target: Complex64,
    /// Primes in the order they were consumed.
    pub prefix: Vec<u64>,
    /// Partial sums of `2^{-z} + sum p^{-z}` over the prefix, starting from
    /// `S_0 = 2^{-z}`.
    pub trace: Vec<Complex64>,
    pub params: GreedyParams,
    /// Steps where no candidate pointed toward the target.
    pub fallback_steps: usize,
    /// Steps where the smallest unused prime was overdue and taken regardless.
    pub forced_steps: usize,
}

impl RearrangementPlan {
    pub fn ordering(&self) -> Result<PrimeOrdering> {
        PrimeOrdering::with_prefix(self.prefix.clone())
    }

    pub fn distance(&self, step: usize) -> f64 {
        (self.target - self.trace[step]).norm()
    }

    pub fn final_distance(&self) -> f64 {
        self.distance(self.trace.len() - 1)
    }

    pub fn steps(&self) -> usize {
        self.prefix.len()
    }
}

/// Greedy steering of `sum p^{-z}` toward `target`.
///
/// At each step the first `window` unused primes (ascending) are scored by
/// `<v_p, target - S> / |v_p|`, where `v_p = p^{-z}` viewed as a vector in the
/// plane, and the best one is consumed; ties go to the smaller prime. If no
/// candidate has a positive score, the smallest unused prime is consumed.
/// The smallest unused prime is also consumed when it is overdue, i.e. when
/// its ascending index i satisfies `i * window <= step`, so the i-th prime
/// is always used by step `i * window`.
pub fn greedy_rearrange(
    z: &SeriesPoint,
    target: Complex64,
    steps: usize,
    params: GreedyParams,
) -> Result<RearrangementPlan> {
    z.require(Domain::Rho)?;
    if !(z.y > 0.0 || z.is_override()) {
        return domain("greedy rearrangement needs y > 0");
    }
    if params.window == 0 {
        return domain("window must be >= 1");
    }
    let w = params.window;
    let primes = if steps == 0 {
        Vec::new()
    } else {
        PrimeOrdering::increasing().first(steps + w)?
    };
    let terms: Vec<Complex64> = primes.iter().map(|&p| z.pow_neg((p as f64).ln())).collect();
    let norms: Vec<f64> = terms.iter().map(|t| t.norm()).collect();

    let mut window: VecDeque<usize> = (0..w.min(primes.len())).collect();
    let mut fresh = window.len();
    let mut acc = CompensatedSum::new();
    acc.add(z.pow_neg(std::f64::consts::LN_2));
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(acc.value());
    let mut prefix = Vec::with_capacity(steps);
    let (mut fallback_steps, mut forced_steps) = (0, 0);

    for step in 1..=steps {
        let smallest = *window.front().ok_or_else(|| {
            Error::Resource("greedy rearrangement ran out of sieved primes".into())
        })?;
        let slot = if (smallest + 1) * w <= step {
            forced_steps += 1;
            0
        } else {
            let dir = target - acc.value();
            let mut best = (0usize, f64::NEG_INFINITY);
            for (slot, &i) in window.iter().enumerate() {
                let v = terms[i];
                let score = (v.re * dir.re + v.im * dir.im) / norms[i];
                if score > best.1 {
                    best = (slot, score);
                }
            }
            if best.1 > 0.0 {
                best.0
            } else {
                fallback_steps += 1;
                0
            }
        };
        let chosen = window.remove(slot).expect("slot in window");
        if fresh < primes.len() {
            window.push_back(fresh);
            fresh += 1;
        }
        acc.add(terms[chosen]);
        trace.push(acc.value());
        prefix.push(primes[chosen]);
    }

    Ok(RearrangementPlan {
        z: *z,
        target,
        prefix,
        trace,
        params,
        fallback_steps,
        forced_steps,
    })
}

/// `2^{-z} + sum_{i<=n} p_i^{-z}` in increasing order: the default steering
/// target.
pub fn increasing_order_estimate(z: &SeriesPoint, n: usize) -> Result<Complex64> {
    Ok(crate::series::rho_partial(&PrimeOrdering::increasing(), n, z)?.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Number of terms consumed when the crossing happened.
    pub step: usize,
    pub overshoot: f64,
    pub last_term: f64,
}

/// Output of [`riemann_rearrange_real`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealRearrangement {
    pub target: f64,
    /// 1-based indices of the original series, in consumption order.
    pub order: Vec<u64>,
    /// Partial sums `S_0 = 0, S_1, ...`.
    pub partials: Vec<f64>,
    pub crossings: Vec<Crossing>,
    /// Sums of `a_i^+` and `a_i^-` over the consumed terms.
    pub positive_mass: f64,
    pub negative_mass: f64,
}

impl RealRearrangement {
    pub fn last(&self) -> f64 {
        *self.partials.last().expect("S_0 present")
    }
}

struct Pile {
    cursor: u64,
    positive: bool,
}

impl Pile {
    fn next<F: Fn(u64) -> f64>(&mut self, term: &F, budget: u64) -> Result<(u64, f64)> {
        let start = self.cursor;
        loop {
            if self.cursor - start >= budget {
                return Err(Error::Hypothesis(format!(
                    "no {} term among indices {}..{}",
                    if self.positive { "positive" } else { "negative" },
                    start,
                    self.cursor
                )));
            }
            let i = self.cursor;
            self.cursor += 1;
            let a = term(i);
            if (self.positive && a > 0.0) || (!self.positive && a < 0.0) {
                return Ok((i, a));
            }
        }
    }
}

/// Two-pile steering of a real series `a_1, a_2, ...` toward `target`:
/// take the next positive term while `S <= target`, the next negative term
/// otherwise. `budget` bounds how far ahead either pile is searched.
pub fn riemann_rearrange_real<F>(term: F, target: f64, steps: usize, budget: u64) -> Result<RealRearrangement>
where
    F: Fn(u64) -> f64,
{
    let mut pos = Pile { cursor: 1, positive: true };
    let mut neg = Pile { cursor: 1, positive: false };
    let mut acc = Neumaier::new();
    let mut partials = Vec::with_capacity(steps + 1);
    partials.push(0.0);
    let mut order = Vec::with_capacity(steps);
    let mut crossings = Vec::new();
    let (mut positive_mass, mut negative_mass) = (Neumaier::new(), Neumaier::new());

    for step in 1..=steps {
        let before = acc.value();
        let above = before > target;
        let (i, a) = if above {
            neg.next(&term, budget)?
        } else {
            pos.next(&term, budget)?
        };
        if a > 0.0 {
            positive_mass.add(a);
        } else {
            negative_mass.add(-a);
        }
        acc.add(a);
        let after = acc.value();
        if (after > target) != above {
            crossings.push(Crossing {
                step,
                overshoot: (after - target).abs(),
                last_term: a.abs(),
            });
        }
        partials.push(after);
        order.push(i);
    }
    Ok(RealRearrangement {
        target,
        order,
        partials,
        crossings,
        positive_mass: positive_mass.value(),
        negative_mass: negative_mass.value(),
    })
}

/// Summary of how a trace approaches its target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorReport {
    /// First step with distance `< epsilon`.
    pub first_entry: Option<usize>,
    /// Longest run of consecutive steps inside the ball.
    pub longest_residence: usize,
    /// Times the trace left the ball after being inside.
    pub exits: usize,
    /// Minimum distance over the last `trailing` entries.
    pub trailing_min: f64,
}

/// Default trailing window for [`convergence_monitor`].
pub const DEFAULT_TRAILING: usize = 1000;

pub fn convergence_monitor(plan: &RearrangementPlan, epsilon: f64) -> MonitorReport {
    monitor_trace(&plan.trace, plan.target, epsilon, DEFAULT_TRAILING)
}

pub fn monitor_trace(trace: &[Complex64], target: Complex64, epsilon: f64, trailing: usize) -> MonitorReport {
    assert!(!trace.is_empty(), "trace must be nonempty");
    let mut first_entry = None;
    let mut longest = 0;
    let mut run = 0;
    let mut exits = 0;
    let mut inside_prev = false;
    for (t, s) in trace.iter().enumerate() {
        let inside = (target - s).norm() < epsilon;
        if inside {
            first_entry.get_or_insert(t);
            run += 1;
            longest = longest.max(run);
        } else {
            if inside_prev {
                exits += 1;
            }
            run = 0;
        }
        inside_prev = inside;
    }
    MonitorReport {
        first_entry,
        longest_residence: longest,
        exits,
        trailing_min: trailing_min_distance(trace, target, trace.len() - 1, trailing),
    }
}

/// Minimum of `|target - S_t|` over `t` in `(step - window, step]`.
pub fn trailing_min_distance(trace: &[Complex64], target: Complex64, step: usize, window: usize) -> f64 {
    let lo = (step + 1).saturating_sub(window.max(1));
    trace[lo..=step]
        .iter()
        .map(|s| (target - s).norm())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn classify_examples() {
        let ln3 = 3f64.ln();
        assert_eq!(classify_prime(3, 2.0 * PI / ln3, 0.0, 0.5).unwrap(), Bucket::Plus);
        assert_eq!(classify_prime(3, PI / ln3, 0.0, 0.5).unwrap(), Bucket::Minus);
        assert_eq!(classify_prime(3, PI / (2.0 * ln3), 0.0, 0.5).unwrap(), Bucket::Neutral);
        assert!(classify_prime(3, 1.0, 0.0, 1.0).is_err());
        assert!(classify_prime(3, 1.0, 0.0, 0.0).is_err());
        assert!(classify_prime(3, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn buckets_partition_1e5_primes() {
        let primes = PrimeOrdering::increasing().first(100_000).unwrap();
        let mut b = PhaseBucket::new(14.134725, 1.0, 0.5).unwrap();
        b.extend(primes.iter().copied());
        assert_eq!(b.len(), 100_000);
        for &p in primes.iter().step_by(997) {
            let expect = classify_prime(p, 14.134725, 1.0, 0.5).unwrap();
            let found = match expect {
                Bucket::Plus => b.plus.contains(&p),
                Bucket::Minus => b.minus.contains(&p),
                Bucket::Neutral => b.neutral.contains(&p),
            };
            assert!(found);
        }
    }

    #[test]
    fn zero_steps() {
        let z = SeriesPoint::new(0.9, 5.0);
        let target = Complex64::new(0.3, -0.2);
        let plan = greedy_rearrange(&z, target, 0, GreedyParams::default()).unwrap();
        assert!(plan.prefix.is_empty());
        assert_eq!(plan.trace.len(), 1);
        let two = z.pow_neg(std::f64::consts::LN_2);
        assert_eq!(plan.trace[0], two);
        assert_eq!(plan.final_distance(), (target - two).norm());
    }

    #[test]
    fn greedy_trace_consistency() {
        let z = SeriesPoint::new(0.9, 5.0);
        let params = GreedyParams { window: 32 };
        let plan = greedy_rearrange(&z, Complex64::new(0.0, 0.0), 20_000, params).unwrap();
        assert_eq!(plan.trace.len(), plan.prefix.len() + 1);
        let mut seen = std::collections::HashSet::new();
        assert!(plan.prefix.iter().all(|p| seen.insert(*p)));
        for step in (1..=20_000).step_by(613) {
            let inc = plan.trace[step] - plan.trace[step - 1];
            let term = z.pow_neg((plan.prefix[step - 1] as f64).ln());
            assert!((inc - term).norm() <= 1e-12 * term.norm().max(1e-3));
        }
        // Eventual consumption: the i-th prime is used by step i * W.
        let asc = PrimeOrdering::increasing().first(20_000 / 32).unwrap();
        let pos: std::collections::HashMap<u64, usize> =
            plan.prefix.iter().enumerate().map(|(s, &p)| (p, s + 1)).collect();
        for (i, p) in asc.iter().enumerate() {
            assert!(pos[p] <= (i + 1) * 32, "prime {p} consumed at {}", pos[p]);
        }
        assert!(plan.ordering().is_ok());
    }

    #[test]
    fn greedy_reaches_origin() {
        let z = SeriesPoint::new(0.9, 5.0);
        let plan = greedy_rearrange(&z, Complex64::new(0.0, 0.0), 100_000, GreedyParams { window: 512 }).unwrap();
        let min = plan.trace.iter().map(|s| s.norm()).fold(f64::INFINITY, f64::min);
        assert!(min <= 1e-2, "min |S| = {min}");
    }

    #[test]
    fn greedy_domain() {
        let bad = SeriesPoint::new(1.2, 5.0);
        assert!(greedy_rearrange(&bad, Complex64::new(0.0, 0.0), 10, GreedyParams::default()).is_err());
        let flat = SeriesPoint::new(0.9, 0.0);
        assert!(greedy_rearrange(&flat, Complex64::new(0.0, 0.0), 10, GreedyParams::default()).is_err());
    }

    fn alt_harmonic(i: u64) -> f64 {
        if i % 2 == 1 {
            1.0 / i as f64
        } else {
            -1.0 / i as f64
        }
    }

    #[test]
    fn riemann_to_zero() {
        let r = riemann_rearrange_real(alt_harmonic, 0.0, 10_000, 1_000).unwrap();
        assert!(r.last().abs() <= 1e-3);
        assert!(!r.crossings.is_empty());
        for c in &r.crossings {
            assert!(c.overshoot <= c.last_term, "{c:?}");
        }
        let mut order = r.order.clone();
        order.sort_unstable();
        order.dedup();
        assert_eq!(order.len(), r.order.len());
    }

    #[test]
    fn riemann_to_ln2() {
        let r = riemann_rearrange_real(alt_harmonic, LN_2, 10_000, 1_000).unwrap();
        assert!((r.last() - LN_2).abs() <= 1e-3);
        assert!(r.crossings.len() > 10);
        assert!(r.crossings.iter().all(|c| c.overshoot <= c.last_term));
    }

    #[test]
    fn riemann_needs_both_piles() {
        let err = riemann_rearrange_real(|i| 1.0 / i as f64, 0.0, 100, 10_000).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(_)));
    }

    #[test]
    fn monitor_examples() {
        let target = Complex64::new(0.5, 0.5);
        let r = monitor_trace(&[target; 10], target, 0.1, 5);
        assert_eq!(r.first_entry, Some(0));
        assert_eq!(r.exits, 0);
        assert_eq!(r.longest_residence, 10);

        let line: Vec<Complex64> = (0..=100).map(|t| Complex64::new((100 - t) as f64 / 100.0, 0.0)).collect();
        let r = monitor_trace(&line, Complex64::new(0.0, 0.0), 0.1, 10);
        assert_eq!(r.first_entry, Some(91));
        assert_eq!(r.longest_residence, 10);
        assert_eq!(r.trailing_min, 0.0);

        let bounce: Vec<Complex64> = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let r = monitor_trace(&bounce, Complex64::new(0.0, 0.0), 0.5, 2);
        assert_eq!((r.first_entry, r.exits, r.longest_residence), (Some(1), 2, 2));
        assert_eq!(r.trailing_min, 0.0);
    }

    #[test]
    fn monitor_agrees_with_independent_scan() {
        let z = SeriesPoint::new(0.9, 5.0);
        let plan = greedy_rearrange(&z, Complex64::new(0.0, 0.0), 5_000, GreedyParams::default()).unwrap();
        let eps = 0.05;
        let r = convergence_monitor(&plan, eps);
        let dists: Vec<f64> = (0..plan.trace.len()).map(|t| plan.distance(t)).collect();
        assert_eq!(r.first_entry, dists.iter().position(|&d| d < eps));
        let exits = dists.windows(2).filter(|w| w[0] < eps && w[1] >= eps).count();
        assert_eq!(r.exits, exits);
        let tail = &dists[dists.len() - DEFAULT_TRAILING..];
        assert_eq!(r.trailing_min, tail.iter().cloned().fold(f64::INFINITY, f64::min));
    }
}
