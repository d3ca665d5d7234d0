//! Checks of the finite identities behind the block ordering.
//!
//! The product expansion and the signed divisor sums are checked exactly;
//! the theta subsequence and the power-of-two closed form are checked in
//! floating point against stated tolerances.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::One;

use crate::error::{domain, resource, Result};
use crate::primes::{PrimeOrdering, PrimeTable};
use crate::series::{
    euler_product_of, pow2_partial, pow2_sum_closed_form, theta_trace, Domain, SeriesPoint,
};
use crate::squarefree::{self, streaming_counts, Blocks, DivisorFilter, BLOCK_CAP};
use crate::summation::CheckpointPolicy;

/// Largest m accepted by [`verify_product_expansion`].
pub const EXPANSION_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpansionWitness {
    /// Two prime subsets produced the same product.
    Collision { q: BigUint },
    /// Coefficient of q differs between the expansion and the signed U_m.
    Mismatch { q: BigUint, expansion: i64, signed_set: i64 },
    /// The constant term of the product is not 1.
    Constant { value: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionReport {
    pub m: usize,
    pub pass: bool,
    /// Number of nonconstant monomials in the expansion.
    pub terms: usize,
    pub witness: Option<ExpansionWitness>,
    /// The expansion of `prod (1 - X_p) - 1`, keyed by the product q.
    pub expansion: BTreeMap<BigUint, i64>,
}

/// Expands `prod_{i<=m} (1 - X_{p_i}) - 1` with each monomial keyed by the
/// exact product of its primes, and compares the signed multiset with
/// `{(q, sgn q) : q in U_m}` taken from the block enumeration.
pub fn verify_product_expansion(ordering: &PrimeOrdering, m: usize) -> Result<ExpansionReport> {
    if m == 0 || m > EXPANSION_CAP {
        return resource(format!("product expansion needs 1 <= m <= {EXPANSION_CAP}, got {m}"));
    }
    let primes = ordering.first(m)?;
    let mut poly: BTreeMap<BigUint, i64> = BTreeMap::new();
    poly.insert(BigUint::one(), 1);
    let mut witness = None;
    for &p in &primes {
        let shifted: Vec<(BigUint, i64)> = poly.iter().map(|(q, &c)| (q * p, -c)).collect();
        for (q, c) in shifted {
            match poly.entry(q) {
                Entry::Occupied(mut e) => {
                    witness.get_or_insert(ExpansionWitness::Collision { q: e.key().clone() });
                    *e.get_mut() += c;
                }
                Entry::Vacant(e) => {
                    e.insert(c);
                }
            }
        }
    }
    let constant = poly.remove(&BigUint::one()).unwrap_or(0);
    if constant != 1 {
        witness.get_or_insert(ExpansionWitness::Constant { value: constant });
    }

    let signed_set: BTreeMap<BigUint, i64> = squarefree::u_m(ordering, m)?
        .into_iter()
        .map(|t| (t.q, t.sign as i64))
        .collect();
    if witness.is_none() {
        let keys: std::collections::BTreeSet<&BigUint> = poly.keys().chain(signed_set.keys()).collect();
        for q in keys {
            let a = poly.get(q).copied().unwrap_or(0);
            let b = signed_set.get(q).copied().unwrap_or(0);
            if a != b {
                witness = Some(ExpansionWitness::Mismatch { q: q.clone(), expansion: a, signed_set: b });
                break;
            }
        }
    }
    Ok(ExpansionReport {
        m,
        pass: witness.is_none(),
        terms: poly.len(),
        witness,
        expansion: poly,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FkReport {
    pub k_max: u64,
    pub pass: bool,
    pub failures: Vec<u64>,
}

/// Checks that the signed count of squarefree odd divisors of k is `f(k)`
/// for every `1 <= k <= k_max`.
pub fn verify_fk_range(k_max: u64) -> Result<FkReport> {
    if k_max == 0 {
        return domain("k_max must be >= 1");
    }
    let table = PrimeTable::sieve(k_max.max(3))?;
    let filter = DivisorFilter::default();
    let mut failures = Vec::new();
    for k in 1..=k_max {
        if squarefree::signed_divisor_sum(k, &table, &filter)? != squarefree::f(k) as i64 {
            failures.push(k);
        }
    }
    Ok(FkReport { k_max, pass: failures.is_empty(), failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRow {
    pub m: usize,
    pub u_count: u64,
    pub q_count: u64,
    /// Whether the counts came from materialized blocks.
    pub enumerated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountsReport {
    pub pass: bool,
    pub rows: Vec<CountRow>,
}

/// Largest m accepted by [`verify_counts`].
pub const COUNTS_CAP: usize = 20;
/// Blocks up to this index are materialized; larger ones are only counted.
pub const COUNTS_ENUMERATED: usize = 16;

/// `|U_m| = 2^m - 1` and `|Q_m| = 2^{m-1}` for `m <= m_max`.
pub fn verify_counts(m_max: usize) -> Result<CountsReport> {
    if m_max == 0 || m_max > COUNTS_CAP {
        return domain(format!("counts need 1 <= m_max <= {COUNTS_CAP}, got {m_max}"));
    }
    let mut rows = Vec::with_capacity(m_max);
    let enumerated = m_max.min(COUNTS_ENUMERATED);
    let mut union = 0u64;
    for b in Blocks::new(&PrimeOrdering::increasing(), enumerated)? {
        union += b.members.len() as u64;
        rows.push(CountRow { m: b.m, u_count: union, q_count: b.members.len() as u64, enumerated: true });
    }
    for m in enumerated + 1..=m_max {
        let (u_count, q_count) = streaming_counts(m);
        rows.push(CountRow { m, u_count, q_count, enumerated: false });
    }
    let pass = rows
        .iter()
        .all(|r| r.u_count == (1u64 << r.m) - 1 && r.q_count == 1u64 << (r.m - 1));
    Ok(CountsReport { pass, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaReport {
    pub pass: bool,
    pub max_error: f64,
    /// `(m, |theta_{2^m-1} - (prod - 1)|)`.
    pub errors: Vec<(usize, f64)>,
}

/// `|theta_{2^m-1}(z) - (prod_{i<=m} (1 - p_i^{-z}) - 1)| <= tol` for every
/// `m <= m_max`.
pub fn verify_theta_subsequence(
    ordering: &PrimeOrdering,
    m_max: usize,
    z: &SeriesPoint,
    tol: f64,
) -> Result<ThetaReport> {
    z.require(Domain::Theta)?;
    if m_max == 0 || m_max > BLOCK_CAP {
        return resource(format!("theta check needs 1 <= m_max <= {BLOCK_CAP}"));
    }
    let n = (1u64 << m_max) - 1;
    let trace = theta_trace(ordering, n, z, CheckpointPolicy::Mersenne)?;
    let primes = ordering.first(m_max)?;
    let mut errors = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let theta = trace
            .checkpoint_at((1u64 << m) - 1)
            .expect("checkpoint at 2^m - 1")
            .sum;
        let prod = euler_product_of(&primes[..m], z) - Complex64::new(1.0, 0.0);
        errors.push((m, (theta - prod).norm()));
    }
    let max_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(ThetaReport { pass: max_error <= tol, max_error, errors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pow2Report {
    pub pass: bool,
    pub error: f64,
    pub bound: f64,
    pub closed_form: Complex64,
    pub partial: Complex64,
}

/// Compares `sum_{l<L} phi(2^l)` with the closed form.
///
/// The allowed error is `max(tol, 2^{-Lx} / (1 - 2^{-x}))`, the geometric
/// tail bound, and the closed form must be nonzero.
pub fn verify_pow2_closed_form(z: &SeriesPoint, terms: u32, tol: f64) -> Result<Pow2Report> {
    if !(z.x > 0.0 && z.x < 1.0) {
        return domain(format!("closed-form check needs 0 < x < 1, got {}", z.x));
    }
    let closed_form = pow2_sum_closed_form(z)?;
    let partial = pow2_partial(terms, z);
    let error = (partial - closed_form).norm();
    let tail = 2f64.powf(-(terms as f64) * z.x) / (1.0 - 2f64.powf(-z.x));
    let bound = tol.max(tail + 1e-15);
    Ok(Pow2Report {
        pass: error <= bound && closed_form.norm() > 0.0,
        error,
        bound,
        closed_form,
        partial,
    })
}
