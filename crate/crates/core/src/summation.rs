//! Compensated complex accumulation and checkpointed partial-sum traces.

use num_complex::Complex64;
use rayon::prelude::*;

/// Chunk size for the deterministic parallel reduction.
pub const CHUNK: usize = 4096;

/// Neumaier-compensated real accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated complex accumulator: running value plus correction term.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    re: Neumaier,
    im: Neumaier,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    /// The correction currently carried alongside the naive running sum.
    pub fn correction(&self) -> Complex64 {
        Complex64::new(self.re.carry, self.im.carry)
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for z in iter {
            acc.add(z);
        }
        acc
    }
}

/// Sums `len` terms produced by `term(i)` for `i in 0..len` in parallel.
///
/// Each chunk of [`CHUNK`] indices is summed with compensation, and chunk
/// results are combined in ascending chunk order, so the output is
/// bit-identical regardless of thread count.
pub fn chunked_sum<F>(len: usize, term: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partials: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&term).collect::<CompensatedSum>().value()
        })
        .collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub n: u64,
    pub sum: Complex64,
    pub last_term_abs: f64,
}

/// Where a trace records checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointPolicy {
    /// Every power of two, plus the final index.
    PowersOfTwo,
    /// Every index of the form `2^m - 1`, plus the final index.
    Mersenne,
    /// Every `k`-th index, plus the final index.
    Every(u64),
}

impl CheckpointPolicy {
    pub fn hits(self, n: u64) -> bool {
        match self {
            CheckpointPolicy::PowersOfTwo => n.is_power_of_two(),
            CheckpointPolicy::Mersenne => (n + 1).is_power_of_two(),
            CheckpointPolicy::Every(k) => k > 0 && n.is_multiple_of(k),
        }
    }
}

/// A compensated running sum with recorded checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTrace {
    acc: CompensatedSum,
    n: u64,
    last_term_abs: f64,
    policy: CheckpointPolicy,
    checkpoints: Vec<Checkpoint>,
}

impl SumTrace {
    pub fn new(policy: CheckpointPolicy) -> Self {
        Self {
            acc: CompensatedSum::new(),
            n: 0,
            last_term_abs: 0.0,
            policy,
            checkpoints: Vec::new(),
        }
    }

    /// Adds a term that does not count towards the index, e.g. a fixed
    /// leading term of the series.
    pub fn add_offset(&mut self, z: Complex64) {
        self.acc.add(z);
        self.last_term_abs = z.norm();
    }

    pub fn push(&mut self, term: Complex64) {
        self.acc.add(term);
        self.n += 1;
        self.last_term_abs = term.norm();
        if self.policy.hits(self.n) {
            self.record();
        }
    }

    /// Records the final checkpoint if the last index was not already recorded.
    pub fn finish(mut self) -> Self {
        if self.checkpoints.last().map(|c| c.n) != Some(self.n) {
            self.record();
        }
        self
    }

    fn record(&mut self) {
        self.checkpoints.push(Checkpoint {
            n: self.n,
            sum: self.acc.value(),
            last_term_abs: self.last_term_abs,
        });
    }

    pub fn value(&self) -> Complex64 {
        self.acc.value()
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn last_term_abs(&self) -> f64 {
        self.last_term_abs
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn checkpoint_at(&self, n: u64) -> Option<&Checkpoint> {
        self.checkpoints
            .binary_search_by_key(&n, |c| c.n)
            .ok()
            .map(|i| &self.checkpoints[i])
    }

    pub fn correction(&self) -> Complex64 {
        self.acc.correction()
    }
}
