//! The squarefree odd numbers Q, enumerated block by block under the
//! ordering induced by a prime ordering.
//!
//! Block `Q_m` holds `p_m` and every `p_m * q` with `q` in `U_{m-1}`, sorted
//! ascending. Concatenating blocks in order gives the induced sequence
//! `q_1, q_2, ...`; the first `2^m - 1` entries are exactly `U_m`.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, resource, Result};
use crate::primes::{PrimeOrdering, PrimeTable};

/// Largest block index that may be materialized.
pub const BLOCK_CAP: usize = 30;

/// A squarefree odd number with its factorization, sign and position.
#[derive(Debug, Clone, PartialEq)]
pub struct SquarefreeTerm {
    pub q: BigUint,
    /// Distinct odd primes whose product is `q`, in ordering-index order.
    pub primes: Vec<u64>,
    pub sign: i8,
    /// The unique m with q in Q_m.
    pub block: usize,
    /// 1-based index in the induced ordering of Q.
    pub position: u64,
    /// Sum of ln p over `primes`.
    pub log_q: f64,
}

impl SquarefreeTerm {
    pub fn sgn(&self) -> i8 {
        self.sign
    }

    pub fn omega(&self) -> usize {
        self.primes.len()
    }
}

/// `sgn q = (-1)^k` for a product of k distinct primes.
pub fn sgn(term: &SquarefreeTerm) -> i8 {
    if term.primes.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockIndex {
    pub m: usize,
    pub members: Vec<SquarefreeTerm>,
}

/// Generates `Q_1, Q_2, ...` in order while accumulating `U_m`.
pub struct Blocks {
    primes: Vec<u64>,
    u: Vec<SquarefreeTerm>,
    next: usize,
}

impl Blocks {
    /// Prepares generation of blocks `1..=max_m`.
    pub fn new(ordering: &PrimeOrdering, max_m: usize) -> Result<Self> {
        if max_m > BLOCK_CAP {
            return resource(format!(
                "block {max_m} would hold 2^{} terms; cap is m <= {BLOCK_CAP}",
                max_m - 1
            ));
        }
        Ok(Self {
            primes: ordering.first(max_m)?,
            u: Vec::new(),
            next: 1,
        })
    }

    /// `U_m` for the last block produced.
    pub fn union_so_far(&self) -> &[SquarefreeTerm] {
        &self.u
    }
}

impl Iterator for Blocks {
    type Item = BlockIndex;

    fn next(&mut self) -> Option<BlockIndex> {
        let m = self.next;
        if m > self.primes.len() {
            return None;
        }
        self.next += 1;
        let p = self.primes[m - 1];
        let p_big = BigUint::from(p);
        let ln_p = (p as f64).ln();

        let mut members = Vec::with_capacity(1usize << (m - 1));
        members.push(SquarefreeTerm {
            q: p_big.clone(),
            primes: vec![p],
            sign: -1,
            block: m,
            position: 0,
            log_q: ln_p,
        });
        for t in &self.u {
            let mut primes = Vec::with_capacity(t.primes.len() + 1);
            primes.extend_from_slice(&t.primes);
            primes.push(p);
            members.push(SquarefreeTerm {
                q: &t.q * &p_big,
                primes,
                sign: -t.sign,
                block: m,
                position: 0,
                log_q: t.log_q + ln_p,
            });
        }
        members.sort_unstable_by(|a, b| a.q.cmp(&b.q));
        let base = 1u64 << (m - 1);
        for (j, t) in members.iter_mut().enumerate() {
            t.position = base + j as u64;
        }
        self.u.extend(members.iter().cloned());
        Some(BlockIndex { m, members })
    }
}

/// `Q_m` under the given ordering.
pub fn block(ordering: &PrimeOrdering, m: usize) -> Result<BlockIndex> {
    if m == 0 {
        return domain("blocks are indexed from m = 1");
    }
    let mut blocks = Blocks::new(ordering, m)?;
    let mut last = None;
    for b in blocks.by_ref() {
        last = Some(b);
    }
    Ok(last.expect("m >= 1"))
}

/// `U_m` in induced order, i.e. `q_1 .. q_{2^m - 1}`.
pub fn u_m(ordering: &PrimeOrdering, m: usize) -> Result<Vec<SquarefreeTerm>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut blocks = Blocks::new(ordering, m)?;
    for _ in blocks.by_ref() {}
    Ok(blocks.u)
}

/// Number of blocks needed to cover the first `n` induced terms.
pub fn blocks_for_count(n: u64) -> usize {
    (64 - n.leading_zeros()) as usize
}

/// `q_1, ..., q_n` under the ordering induced by `ordering`.
pub fn induced_sequence(ordering: &PrimeOrdering, n: u64) -> Result<Vec<SquarefreeTerm>> {
    if n == 0 {
        return domain("induced sequence length must be >= 1");
    }
    let blocks = Blocks::new(ordering, blocks_for_count(n))?;
    let mut out = Vec::with_capacity(n as usize);
    for b in blocks {
        let take = (n as usize - out.len()).min(b.members.len());
        out.extend(b.members.into_iter().take(take));
        if out.len() as u64 == n {
            break;
        }
    }
    Ok(out)
}

/// 1 if `q` divides `k`, else 0.
pub fn delta(k: u64, term: &SquarefreeTerm) -> u8 {
    if k == 0 {
        return 0;
    }
    match term.q.to_u64() {
        Some(q) if q <= k => u8::from(k.is_multiple_of(q)),
        _ => 0,
    }
}

/// Exact divisibility for big `k`.
pub fn delta_big(k: &BigUint, term: &SquarefreeTerm) -> u8 {
    if k.is_zero() {
        return 0;
    }
    u8::from((k % &term.q).is_zero())
}

/// 0 if `k` is a power of two (including 1), else -1.
pub fn f(k: u64) -> i8 {
    if k.is_power_of_two() {
        0
    } else {
        -1
    }
}

/// Smallest m with `U_m` containing every odd prime `<= bound`; 1 when there
/// are none.
pub fn m_of_k(ordering: &PrimeOrdering, bound: u64) -> Result<usize> {
    if bound == 0 {
        return domain("m(K) needs K >= 1");
    }
    Ok(ordering.max_index_up_to(bound)?.unwrap_or(1))
}

/// Optional restrictions on the divisors counted by [`signed_divisor_sum`].
#[derive(Debug, Clone, Copy, Default)]
pub struct DivisorFilter<'a> {
    /// Only count q whose prime set lies inside this set (q in U_m).
    pub allowed: Option<&'a HashSet<u64>>,
    /// Only count q with `q * den >= num`, i.e. `q >= num / den`.
    pub min_q: Option<(u64, u64)>,
}

/// Sum of `sgn q` over squarefree odd `q` dividing `k`, subject to `filter`.
pub fn signed_divisor_sum(k: u64, table: &PrimeTable, filter: &DivisorFilter<'_>) -> Result<i64> {
    if k == 0 {
        return domain("k must be >= 1");
    }
    let mut factors = table.odd_prime_factors(k)?;
    if let Some(allowed) = filter.allowed {
        factors.retain(|p| allowed.contains(p));
    }
    Ok(signed_subset_sum(&factors, filter.min_q))
}

/// Signed count over the nonempty subsets of `factors` (distinct primes),
/// keeping products `q` with `q * den >= num` when a bound is given.
pub fn signed_subset_sum(factors: &[u64], min_q: Option<(u64, u64)>) -> i64 {
    let n = factors.len();
    if min_q.is_none() {
        // Alternating binomial sum: (1 - 1)^n - 1.
        return if n == 0 { 0 } else { -1 };
    }
    let (num, den) = min_q.unwrap();
    let mut total = 0i64;
    for mask in 1u32..(1u32 << n) {
        let mut q: u128 = 1;
        for (i, &p) in factors.iter().enumerate() {
            if mask >> i & 1 == 1 {
                q *= p as u128;
            }
        }
        if q * den as u128 >= num as u128 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    total
}

/// `|U_m|` and `|Q_m|` by streaming over subset masks of `m` primes, without
/// materializing any products.
pub fn streaming_counts(m: usize) -> (u64, u64) {
    assert!((1..40).contains(&m));
    let mut u = 0u64;
    let mut q = 0u64;
    for mask in 1u64..(1u64 << m) {
        u += 1;
        if 64 - mask.leading_zeros() as usize == m {
            q += 1;
        }
    }
    (u, q)
}

/// Exact product of a prime set.
pub fn product(primes: &[u64]) -> BigUint {
    primes.iter().fold(BigUint::one(), |acc, &p| acc * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn qs(terms: &[SquarefreeTerm]) -> Vec<u64> {
        terms.iter().map(|t| t.q.to_u64().unwrap()).collect()
    }

    #[test]
    fn small_blocks() {
        let inc = PrimeOrdering::increasing();
        assert_eq!(qs(&block(&inc, 1).unwrap().members), vec![3]);
        assert_eq!(qs(&block(&inc, 2).unwrap().members), vec![5, 15]);
        assert_eq!(qs(&block(&inc, 3).unwrap().members), vec![7, 21, 35, 105]);
        assert!(block(&inc, 31).is_err());
    }

    #[test]
    fn induced_sequences() {
        let inc = PrimeOrdering::increasing();
        assert_eq!(
            qs(&induced_sequence(&inc, 8).unwrap()),
            vec![3, 5, 15, 7, 21, 35, 105, 11]
        );
        assert_eq!(qs(&induced_sequence(&inc, 1).unwrap()), vec![3]);
        let o = PrimeOrdering::with_prefix(vec![5]).unwrap();
        assert_eq!(qs(&induced_sequence(&o, 3).unwrap()), vec![5, 3, 15]);
        let positions: Vec<u64> = induced_sequence(&inc, 8).unwrap().iter().map(|t| t.position).collect();
        assert_eq!(positions, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn signs() {
        let seq = induced_sequence(&PrimeOrdering::increasing(), 7).unwrap();
        let by_q = |q: u64| seq.iter().find(|t| t.q == BigUint::from(q)).unwrap().clone();
        assert_eq!(sgn(&by_q(15)), 1);
        assert_eq!(sgn(&by_q(3)), -1);
        assert_eq!(sgn(&by_q(105)), -1);
        for t in &seq {
            assert_eq!(sgn(t), t.sign);
        }
    }

    #[test]
    fn delta_and_f() {
        let seq = induced_sequence(&PrimeOrdering::increasing(), 7).unwrap();
        let three = &seq[0];
        let thirty_five = seq.iter().find(|t| t.q == BigUint::from(35u32)).unwrap();
        assert_eq!(delta(15, three), 1);
        assert_eq!(delta(8, three), 0);
        assert_eq!(delta(105, thirty_five), 1);
        assert_eq!(delta_big(&BigUint::from(105u32), thirty_five), 1);
        assert_eq!(f(8), 0);
        assert_eq!(f(1), 0);
        assert_eq!(f(45), -1);
    }

    #[test]
    fn m_of_k_examples() {
        let inc = PrimeOrdering::increasing();
        assert_eq!(m_of_k(&inc, 10).unwrap(), 3);
        assert_eq!(m_of_k(&inc, 2).unwrap(), 1);
        assert_eq!(m_of_k(&inc, 1).unwrap(), 1);
        let o = PrimeOrdering::with_prefix(vec![7, 5, 3]).unwrap();
        assert_eq!(m_of_k(&o, 7).unwrap(), 3);
        // Brute force: smallest m whose P_m covers the odd primes <= K.
        let o = PrimeOrdering::with_prefix(vec![13, 7, 3, 101]).unwrap();
        let seq = o.first(200).unwrap();
        let table = PrimeTable::sieve(300).unwrap();
        for k in 1..=300u64 {
            let need: BTreeSet<u64> = table.primes().iter().copied().filter(|&p| p <= k).collect();
            let brute = (1..=200)
                .find(|&m| need.iter().all(|p| seq[..m].contains(p)))
                .unwrap();
            assert_eq!(m_of_k(&o, k).unwrap(), brute, "K = {k}");
        }
    }

    #[test]
    fn signed_divisor_sum_examples() {
        let table = PrimeTable::sieve(1000).unwrap();
        let none = DivisorFilter::default();
        assert_eq!(signed_divisor_sum(45, &table, &none).unwrap(), -1);
        assert_eq!(signed_divisor_sum(16, &table, &none).unwrap(), 0);
        assert_eq!(signed_divisor_sum(105, &table, &none).unwrap(), -1);
        // With a threshold the subset loop runs; q >= 1 keeps everything.
        let all = DivisorFilter { allowed: None, min_q: Some((1, 1)) };
        assert_eq!(signed_divisor_sum(105, &table, &all).unwrap(), -1);
        // q in U_1 = {3} and q >= 9/3.
        let u1: HashSet<u64> = [3].into();
        let filt = DivisorFilter { allowed: Some(&u1), min_q: Some((9, 3)) };
        assert_eq!(signed_divisor_sum(9, &table, &filt).unwrap(), -1);
        let filt = DivisorFilter { allowed: Some(&u1), min_q: Some((5, 3)) };
        assert_eq!(signed_divisor_sum(5, &table, &filt).unwrap(), 0);
    }

    #[test]
    fn signed_divisor_sum_matches_f_to_1e5() {
        let table = PrimeTable::sieve(100_000).unwrap();
        let none = DivisorFilter::default();
        for k in 1..=100_000u64 {
            assert_eq!(signed_divisor_sum(k, &table, &none).unwrap(), f(k) as i64, "k = {k}");
        }
    }

    #[test]
    fn block_structure() {
        let o = PrimeOrdering::with_prefix(vec![11, 3, 23]).unwrap();
        let primes = o.first(12).unwrap();
        let mut union: BTreeSet<BigUint> = BTreeSet::new();
        for b in Blocks::new(&o, 12).unwrap() {
            assert_eq!(b.members.len(), 1 << (b.m - 1));
            assert!(b.members.windows(2).all(|w| w[0].q < w[1].q));
            let p_m = primes[b.m - 1];
            for t in &b.members {
                assert!(t.primes.contains(&p_m));
                assert!(t.primes.iter().all(|p| primes[..b.m].contains(p)));
                assert_eq!(t.q, product(&t.primes));
                assert_eq!(t.sign, if t.primes.len() % 2 == 0 { 1 } else { -1 });
                assert!(union.insert(t.q.clone()), "blocks overlap");
            }
            // U_m as all subset products of P_m.
            let pm = &primes[..b.m];
            let expect: BTreeSet<BigUint> = (1u32..(1 << b.m))
                .map(|mask| product(&pm.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect::<Vec<_>>()))
                .collect();
            assert_eq!(union, expect);
        }
    }

    #[test]
    fn log_q_matches_ln() {
        for t in u_m(&PrimeOrdering::increasing(), 12).unwrap() {
            let q = t.q.to_u64().unwrap();
            assert!(q < 1 << 53);
            let ln = (q as f64).ln();
            assert!((t.log_q - ln).abs() <= 1e-12 * ln);
        }
    }

    #[test]
    fn counts() {
        for m in 1..=20 {
            assert_eq!(streaming_counts(m), ((1 << m) - 1, 1 << (m - 1)));
        }
    }
}
