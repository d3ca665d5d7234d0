//! Phase-bucket statistics of the odd primes: how often `cos(y ln p + alpha)`
//! exceeds `K` or falls below `-K`, and how the reciprocal sums over each
//! bucket grow with the cutoff.

use crate::error::{domain, Result};
use crate::primes::PrimeTable;
use crate::rearrange::{classify_prime, Bucket};
use crate::summation::Neumaier;

fn check(n: u64, y: f64, alpha: f64, threshold: f64) -> Result<()> {
    if n < 3 {
        return domain(format!("N must be >= 3, got {n}"));
    }
    if !(0.0..std::f64::consts::TAU).contains(&alpha) {
        return domain(format!("alpha must lie in [0, 2pi), got {alpha}"));
    }
    // Validates y and the threshold.
    classify_prime(3, y, alpha, threshold).map(|_| ())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketFractions {
    pub count: usize,
    pub plus: f64,
    pub minus: f64,
    pub neutral: f64,
}

/// Fractions of the odd primes `<= n` in each phase bucket.
pub fn bucket_fractions(n: u64, y: f64, alpha: f64, threshold: f64) -> Result<BucketFractions> {
    check(n, y, alpha, threshold)?;
    let table = PrimeTable::sieve(n)?;
    let mut counts = [0usize; 3];
    for &p in table.primes() {
        counts[slot(classify_prime(p, y, alpha, threshold)?)] += 1;
    }
    let total = table.primes().len();
    let frac = |c: usize| c as f64 / total as f64;
    Ok(BucketFractions {
        count: total,
        plus: frac(counts[0]),
        minus: frac(counts[1]),
        neutral: frac(counts[2]),
    })
}

fn slot(b: Bucket) -> usize {
    match b {
        Bucket::Plus => 0,
        Bucket::Minus => 1,
        Bucket::Neutral => 2,
    }
}

/// Per-bucket totals at one cutoff. Arrays are indexed plus, minus, neutral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub n: u64,
    pub counts: [usize; 3],
    /// `sum 1/p` per bucket.
    pub recip: [f64; 3],
    /// `sum 1/p^x` per bucket.
    pub recip_x: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTable {
    pub y: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub x: f64,
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `sum 1/p` against `ln ln n` per bucket, when
    /// there are at least two checkpoints.
    pub slopes: Option<[f64; 3]>,
}

/// Cutoffs `10^3, 10^4, ...` below `n`, followed by `n` itself.
pub fn decade_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1000u64;
    while c < n {
        out.push(c);
        c = match c.checked_mul(10) {
            Some(v) => v,
            None => break,
        };
    }
    out.push(n);
    out
}

/// Checkpointed reciprocal sums over each bucket, for primes up to `n`.
pub fn reciprocal_sums(n: u64, y: f64, alpha: f64, threshold: f64, x: f64) -> Result<GrowthTable> {
    check(n, y, alpha, threshold)?;
    if !(x > 0.0 && x <= 1.0) {
        return domain(format!("x must lie in (0, 1], got {x}"));
    }
    let table = PrimeTable::sieve(n)?;
    let cuts = decade_checkpoints(n);
    let mut counts = [0usize; 3];
    let mut recip = [Neumaier::new(); 3];
    let mut recip_x = [Neumaier::new(); 3];
    let mut rows = Vec::with_capacity(cuts.len());
    let mut primes = table.primes().iter().peekable();
    for &cut in &cuts {
        while let Some(&&p) = primes.peek() {
            if p > cut {
                break;
            }
            primes.next();
            let s = slot(classify_prime(p, y, alpha, threshold)?);
            counts[s] += 1;
            let pf = p as f64;
            recip[s].add(1.0 / pf);
            recip_x[s].add((-x * pf.ln()).exp());
        }
        rows.push(GrowthRow {
            n: cut,
            counts,
            recip: recip.map(|a| a.value()),
            recip_x: recip_x.map(|a| a.value()),
        });
    }
    let slopes = (rows.len() >= 2).then(|| {
        let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln().ln()).collect();
        let mut out = [0.0; 3];
        for (b, slope) in out.iter_mut().enumerate() {
            let ys: Vec<f64> = rows.iter().map(|r| r.recip[b]).collect();
            *slope = least_squares_slope(&xs, &ys);
        }
        out
    });
    Ok(GrowthTable { y, alpha, threshold, x, rows, slopes })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
