//! Odd primes and orderings of the odd primes.
//!
//! An ordering is stored as an explicit finite prefix followed by every
//! remaining odd prime in increasing order. That covers every ordering this
//! crate can construct and keeps orderings serializable as plain text.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{domain, resource, Error, Result};

/// Largest sieve limit the auto-extending orderings will request.
pub const MAX_SIEVE_LIMIT: u64 = 1 << 31;

/// Odd primes up to a limit, plus a smallest-prime-factor table for odd n.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    // spf[n >> 1] is the smallest prime factor of odd n; spf[0] (n = 1) is 1.
    spf: Vec<u32>,
}

impl PrimeTable {
    /// Sieve of Eratosthenes over the odd numbers `<= limit`.
    pub fn sieve(limit: u64) -> Result<Self> {
        if limit < 3 {
            return domain(format!("sieve limit must be >= 3, got {limit}"));
        }
        if limit > MAX_SIEVE_LIMIT {
            return resource(format!(
                "sieve limit {limit} exceeds cap {MAX_SIEVE_LIMIT}"
            ));
        }
        let len = limit.div_ceil(2) as usize;
        let mut spf = vec![0u32; len];
        spf[0] = 1;
        let mut i = 3u64;
        while i * i <= limit {
            if spf[(i / 2) as usize] == 0 {
                let mut j = i * i;
                while j <= limit {
                    let slot = &mut spf[(j / 2) as usize];
                    if *slot == 0 {
                        *slot = i as u32;
                    }
                    j += 2 * i;
                }
            }
            i += 2;
        }
        let mut primes = Vec::new();
        for (idx, slot) in spf.iter_mut().enumerate().skip(1) {
            let n = 2 * idx as u64 + 1;
            if *slot == 0 {
                *slot = n as u32;
                primes.push(n);
            }
        }
        Ok(Self { limit, primes, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Ascending odd primes `<= limit`.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Smallest prime factor of an odd `n` with `3 <= n <= limit`.
    pub fn smallest_factor(&self, n: u64) -> Option<u64> {
        if n < 3 || n.is_multiple_of(2) || n > self.limit {
            return None;
        }
        Some(self.spf[(n / 2) as usize] as u64)
    }

    pub fn is_odd_prime(&self, n: u64) -> Option<bool> {
        if n > self.limit {
            return None;
        }
        Some(n >= 3 && n % 2 == 1 && self.spf[(n / 2) as usize] as u64 == n)
    }

    /// Number of odd primes `<= n` (n clamped to the table limit).
    pub fn count_up_to(&self, n: u64) -> usize {
        self.primes.partition_point(|&p| p <= n)
    }

    /// Distinct odd prime factors of `k`, ascending. Powers of two are dropped.
    ///
    /// Odd parts above the table limit fall back to trial division, which
    /// needs the table to reach the square root of what remains.
    pub fn odd_prime_factors(&self, k: u64) -> Result<Vec<u64>> {
        if k == 0 {
            return domain("cannot factor 0");
        }
        let mut n = k >> k.trailing_zeros();
        let mut out = Vec::new();
        if n > self.limit {
            for &p in &self.primes {
                if p * p > n {
                    break;
                }
                if n.is_multiple_of(p) {
                    out.push(p);
                    while n.is_multiple_of(p) {
                        n /= p;
                    }
                    if n <= self.limit {
                        break;
                    }
                }
            }
            if n > self.limit {
                let last = *self.primes.last().unwrap_or(&3);
                if last.saturating_mul(last) < n {
                    return resource(format!(
                        "cannot factor {k}: sieve limit {} is below sqrt of cofactor {n}",
                        self.limit
                    ));
                }
                out.push(n);
                return Ok(out);
            }
        }
        while n > 1 {
            let p = self.spf[(n / 2) as usize] as u64;
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// A permutation of the odd primes: explicit prefix, then the unused primes
/// in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrimeOrdering {
    prefix: Vec<u64>,
}

impl PrimeOrdering {
    /// The increasing ordering 3, 5, 7, 11, ...
    pub fn increasing() -> Self {
        Self { prefix: Vec::new() }
    }

    pub fn with_prefix(prefix: Vec<u64>) -> Result<Self> {
        if let Some(&max) = prefix.iter().max() {
            if max > MAX_SIEVE_LIMIT {
                return resource(format!("prefix prime {max} exceeds sieve cap"));
            }
            let table = PrimeTable::sieve(max.max(3))?;
            let mut seen = HashSet::with_capacity(prefix.len());
            for &p in &prefix {
                if table.is_odd_prime(p) != Some(true) {
                    return domain(format!("{p} is not an odd prime"));
                }
                if !seen.insert(p) {
                    return domain(format!("prime {p} repeated in ordering prefix"));
                }
            }
        }
        Ok(Self { prefix })
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn is_increasing(&self) -> bool {
        self.prefix.is_empty()
    }

    /// The first `count` primes of the ordering.
    pub fn first(&self, count: usize) -> Result<Vec<u64>> {
        let from_prefix = count.min(self.prefix.len());
        let mut out: Vec<u64> = self.prefix[..from_prefix].to_vec();
        if count <= self.prefix.len() {
            return Ok(out);
        }
        let need = count - self.prefix.len();
        let used: HashSet<u64> = self.prefix.iter().copied().collect();
        let max_prefix = self.prefix.iter().copied().max().unwrap_or(3);
        let mut limit = estimate_nth_prime(count).max(max_prefix).max(64);
        loop {
            let table = PrimeTable::sieve(limit.min(MAX_SIEVE_LIMIT))?;
            let tail: Vec<u64> = table
                .primes()
                .iter()
                .copied()
                .filter(|p| !used.contains(p))
                .take(need)
                .collect();
            if tail.len() == need {
                out.extend(tail);
                return Ok(out);
            }
            if limit >= MAX_SIEVE_LIMIT {
                return resource(format!(
                    "ordering needs more than the primes below {MAX_SIEVE_LIMIT}"
                ));
            }
            limit = limit.saturating_mul(2);
        }
    }

    /// The `i`-th prime of the ordering, 1-based.
    pub fn nth(&self, i: usize) -> Result<u64> {
        if i == 0 {
            return domain("ordering index is 1-based");
        }
        if i <= self.prefix.len() {
            return Ok(self.prefix[i - 1]);
        }
        Ok(*self.first(i)?.last().expect("nonempty"))
    }

    /// `P_m`: the set of the first `m` primes of the ordering.
    pub fn p_m_set(&self, m: usize) -> Result<BTreeSet<u64>> {
        if m == 0 {
            return domain("P_m is defined for m >= 1");
        }
        Ok(self.first(m)?.into_iter().collect())
    }

    /// 1-based position of the odd prime `p` in the ordering.
    pub fn index_of(&self, p: u64) -> Result<usize> {
        if let Some(pos) = self.prefix.iter().position(|&q| q == p) {
            return Ok(pos + 1);
        }
        let table = PrimeTable::sieve(p.max(3))?;
        if table.is_odd_prime(p) != Some(true) {
            return domain(format!("{p} is not an odd prime"));
        }
        let below = table.count_up_to(p);
        let prefix_below = self.prefix.iter().filter(|&&q| q <= p).count();
        Ok(self.prefix.len() + below - prefix_below)
    }

    /// Largest ordering index among the odd primes `<= bound`; `None` when
    /// there are no odd primes that small.
    pub fn max_index_up_to(&self, bound: u64) -> Result<Option<usize>> {
        if bound < 3 {
            return Ok(None);
        }
        let table = PrimeTable::sieve(bound)?;
        let total = table.primes().len();
        let pos: HashMap<u64, usize> = self
            .prefix
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i + 1))
            .collect();
        let mut in_prefix = 0usize;
        let mut best = 0usize;
        for p in table.primes() {
            if let Some(&i) = pos.get(p) {
                in_prefix += 1;
                best = best.max(i);
            }
        }
        let tail = total - in_prefix;
        if tail > 0 {
            best = best.max(self.prefix.len() + tail);
        }
        Ok(Some(best))
    }

    /// Parses the ordering file format: one prime per line. Blank lines and
    /// lines starting with `#` are ignored; an empty file is the increasing
    /// ordering.
    pub fn parse(text: &str) -> Result<Self> {
        let mut prefix = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let p: u64 = line.parse().map_err(|_| {
                Error::Parse(format!("line {}: expected a prime, got {line:?}", lineno + 1))
            })?;
            prefix.push(p);
        }
        Self::with_prefix(prefix)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::with_capacity(self.prefix.len() * 8);
        for p in &self.prefix {
            let _ = writeln!(s, "{p}");
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Upper bound on the n-th prime (Rosser), with slack for small n.
pub(crate) fn estimate_nth_prime(n: usize) -> u64 {
    let n = n.max(6) as f64;
    (n * (n.ln() + n.ln().ln()) * 1.05 + 16.0).ceil() as u64
}
