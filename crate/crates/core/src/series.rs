//! Complex Dirichlet-type terms and partial sums.
//!
//! Every power `n^{-z}` is evaluated from `ln n` as
//! `exp(-x ln n) * (cos(y ln n) - i sin(y ln n))`, so big squarefree `q`
//! never pass through a float conversion.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::primes::PrimeOrdering;
use crate::squarefree::induced_sequence;
use crate::summation::{CheckpointPolicy, CompensatedSum, SumTrace};

/// Parameter ranges required by the different series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// 1/2 < x < 1 and y > 0.
    Theta,
    /// 0 < x <= 1.
    Rho,
    /// x > 0.
    Eta,
    /// 0 < x < 1.
    Strip,
}

impl Domain {
    pub fn contains(self, x: f64, y: f64) -> bool {
        match self {
            Domain::Theta => x > 0.5 && x < 1.0 && y > 0.0,
            Domain::Rho => x > 0.0 && x <= 1.0,
            Domain::Eta => x > 0.0,
            Domain::Strip => x > 0.0 && x < 1.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Domain::Theta => "1/2 < x < 1 and y > 0",
            Domain::Rho => "0 < x <= 1",
            Domain::Eta => "x > 0",
            Domain::Strip => "0 < x < 1",
        }
    }
}

/// The complex parameter z = x + iy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub y: f64,
    unsafe_domain: bool,
}

impl SeriesPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, unsafe_domain: false }
    }

    /// Constructs a point after checking it against `domain`.
    pub fn checked(x: f64, y: f64, domain: Domain) -> Result<Self> {
        let z = Self::new(x, y);
        z.require(domain)?;
        Ok(z)
    }

    /// Disables every domain guard for this point.
    pub fn with_override(mut self) -> Self {
        self.unsafe_domain = true;
        self
    }

    pub fn is_override(&self) -> bool {
        self.unsafe_domain
    }

    pub fn require(&self, d: Domain) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return domain(format!("z = {} + {}i is not finite", self.x, self.y));
        }
        if self.unsafe_domain || d.contains(self.x, self.y) {
            Ok(())
        } else {
            domain(format!(
                "z = {} + {}i is outside {} (use the unsafe-domain override to explore)",
                self.x,
                self.y,
                d.describe()
            ))
        }
    }

    /// `n^{-z}` given `ln n`.
    #[inline]
    pub fn pow_neg(&self, ln_n: f64) -> Complex64 {
        Complex64::from_polar((-self.x * ln_n).exp(), -self.y * ln_n)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// `phi(k) = (-1)^{k-1} k^{-z}`.
pub fn phi(k: u64, z: &SeriesPoint) -> Complex64 {
    phi_from_log(k % 2 == 1, (k as f64).ln(), z)
}

/// `phi` for an index known only through its parity and logarithm.
#[inline]
pub fn phi_from_log(odd: bool, ln_k: f64, z: &SeriesPoint) -> Complex64 {
    let t = z.pow_neg(ln_k);
    if odd {
        t
    } else {
        -t
    }
}

/// `phi(2^l)`.
pub fn phi_pow2(l: u32, z: &SeriesPoint) -> Complex64 {
    phi_from_log(l == 0, l as f64 * LN_2, z)
}

/// `theta_n(z) = sum_{i<=n} sgn(q_i) q_i^{-z}` under the induced ordering,
/// checkpointed at powers of two and at n.
pub fn theta_partial(ordering: &PrimeOrdering, n: u64, z: &SeriesPoint) -> Result<SumTrace> {
    theta_trace(ordering, n, z, CheckpointPolicy::PowersOfTwo)
}

pub fn theta_trace(
    ordering: &PrimeOrdering,
    n: u64,
    z: &SeriesPoint,
    policy: CheckpointPolicy,
) -> Result<SumTrace> {
    z.require(Domain::Theta)?;
    let mut trace = SumTrace::new(policy);
    for t in induced_sequence(ordering, n)? {
        let term = z.pow_neg(t.log_q);
        trace.push(if t.sign < 0 { -term } else { term });
    }
    Ok(trace.finish())
}

/// `prod_{i<=m} (1 - p_i^{-z})` by sequential complex multiplication.
pub fn euler_product_partial(ordering: &PrimeOrdering, m: usize, z: &SeriesPoint) -> Result<Complex64> {
    let primes = ordering.first(m)?;
    Ok(euler_product_of(&primes, z))
}

pub fn euler_product_of(primes: &[u64], z: &SeriesPoint) -> Complex64 {
    primes.iter().fold(Complex64::new(1.0, 0.0), |acc, &p| {
        acc * (Complex64::new(1.0, 0.0) - z.pow_neg((p as f64).ln()))
    })
}

/// `rho_n(z) = 2^{-z} + sum_{i<=n} p_i^{-z}`.
pub fn rho_partial(ordering: &PrimeOrdering, n: usize, z: &SeriesPoint) -> Result<SumTrace> {
    z.require(Domain::Rho)?;
    let mut trace = SumTrace::new(CheckpointPolicy::PowersOfTwo);
    trace.add_offset(z.pow_neg(LN_2));
    for p in ordering.first(n)? {
        trace.push(z.pow_neg((p as f64).ln()));
    }
    Ok(trace.finish())
}

/// `sum_{k<=K} phi(k)`.
pub fn eta_partial(k_max: u64, z: &SeriesPoint) -> Result<SumTrace> {
    z.require(Domain::Eta)?;
    if k_max == 0 {
        return domain("eta partial needs K >= 1");
    }
    let mut trace = SumTrace::new(CheckpointPolicy::PowersOfTwo);
    for k in 1..=k_max {
        trace.push(phi(k, z));
    }
    Ok(trace.finish())
}

/// Midpoint of the partial sums at K-1 and K: the alternating-series tail
/// estimate of eta(z).
pub fn eta_midpoint(k_max: u64, z: &SeriesPoint) -> Result<Complex64> {
    if k_max < 2 {
        return domain("eta midpoint needs K >= 2");
    }
    let trace = eta_partial(k_max, z)?;
    Ok(trace.value() - phi(k_max, z) * 0.5)
}

/// Closed form of `sum_{l>=0} phi(2^l)`:
/// `(2^x - 2 e^{-iy ln 2}) / (2^x - e^{-iy ln 2})`.
pub fn pow2_sum_closed_form(z: &SeriesPoint) -> Result<Complex64> {
    z.require(Domain::Strip)?;
    let two_x = Complex64::new(2f64.powf(z.x), 0.0);
    let rot = Complex64::from_polar(1.0, -z.y * LN_2);
    let den = two_x - rot;
    if den.norm() < 1e-300 {
        return Err(crate::Error::Domain(format!(
            "closed form is singular at z = {} + {}i",
            z.x, z.y
        )));
    }
    Ok((two_x - rot * 2.0) / den)
}

/// `sum_{l<L} phi(2^l)`.
pub fn pow2_partial(terms: u32, z: &SeriesPoint) -> Complex64 {
    (0..terms).map(|l| phi_pow2(l, z)).collect::<CompensatedSum>().value()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoriolisCheckpoint {
    pub n: usize,
    pub sum: Complex64,
    pub sum_sq: f64,
    pub product: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoriolisReport {
    pub checkpoints: Vec<CoriolisCheckpoint>,
    /// 1-based indices i with `|1 + z_i| < 1e-15`.
    pub near_zero_factors: Vec<usize>,
}

impl CoriolisReport {
    pub fn last(&self) -> &CoriolisCheckpoint {
        self.checkpoints.last().expect("nonempty")
    }

    pub fn at(&self, n: usize) -> Option<&CoriolisCheckpoint> {
        self.checkpoints.iter().find(|c| c.n == n)
    }
}

/// Partial sums of `z_i` and `|z_i|^2` alongside the partial product of
/// `1 + z_i`, checkpointed per `policy` and at the end.
pub fn coriolis_diagnostic(terms: &[Complex64], policy: CheckpointPolicy) -> Result<CoriolisReport> {
    if terms.is_empty() {
        return domain("coriolis diagnostic needs a nonempty sequence");
    }
    let mut sum = CompensatedSum::new();
    let mut sum_sq = crate::summation::Neumaier::new();
    let mut product = Complex64::new(1.0, 0.0);
    let mut checkpoints = Vec::new();
    let mut near_zero_factors = Vec::new();
    for (i, &z) in terms.iter().enumerate() {
        let n = i + 1;
        sum.add(z);
        sum_sq.add(z.norm_sqr());
        let factor = Complex64::new(1.0, 0.0) + z;
        if factor.norm() < 1e-15 {
            near_zero_factors.push(n);
        }
        product *= factor;
        if policy.hits(n as u64) || n == terms.len() {
            checkpoints.push(CoriolisCheckpoint {
                n,
                sum: sum.value(),
                sum_sq: sum_sq.value(),
                product,
            });
        }
    }
    Ok(CoriolisReport { checkpoints, near_zero_factors })
}
