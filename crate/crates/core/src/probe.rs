//! `Phi(m, n)`, `Psi(K)`, `c(K, k)` and `Omega(K)`.
//!
//! `Psi(K)` is the product of the signed sum over `U_{m(K)}` with the eta
//! partial sum of length K. Expanding the product by `k = h q` gives
//! `Psi(K) = sum_{k <= K P} c(K, k) phi(k)` with `P = p_1 ... p_{m(K)}`, and
//! `c(K, k) = f(k)` for `k <= K`, so
//!
//! ```text
//! Omega(K) = Psi(K) - sum_{k<=K} f(k) phi(k)            (product route)
//!          = sum_{K < k <= K P} c(K, k) phi(k)          (direct route)
//! ```
//!
//! The product route works for any K; the direct route has `K P` terms and
//! exists as a cross-check at small K.

use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{domain, resource, Result};
use crate::primes::{PrimeOrdering, PrimeTable};
use crate::series::{euler_product_of, phi, Domain, SeriesPoint};
use crate::squarefree::{self, m_of_k, DivisorFilter};
use crate::summation::{chunked_sum, CompensatedSum};

/// Largest `K * p_1 ... p_{m(K)}` the direct route will sum.
pub const DIRECT_TERM_CAP: u64 = 10_000_000;

/// Largest m for which `U_m` is materialized term by term.
pub const ENUMERATION_CAP: usize = 20;

/// How the signed sum over `U_m` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorRoute {
    /// `prod_{i<=m} (1 - p_i^{-z}) - 1`.
    EulerProduct,
    /// Term by term over the materialized `U_m`.
    Enumerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Product,
    Direct,
    Both,
}

impl std::str::FromStr for Route {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Route::Product),
            "direct" => Ok(Route::Direct),
            "both" => Ok(Route::Both),
            other => Err(crate::Error::Parse(format!("unknown route {other:?}"))),
        }
    }
}

/// `sum_{q in U_m} sgn(q) q^{-z}`.
pub fn signed_u_sum(ordering: &PrimeOrdering, m: usize, z: &SeriesPoint, route: FactorRoute) -> Result<Complex64> {
    match route {
        FactorRoute::EulerProduct => {
            let primes = ordering.first(m)?;
            Ok(euler_product_of(&primes, z) - Complex64::new(1.0, 0.0))
        }
        FactorRoute::Enumerated => {
            if m > ENUMERATION_CAP {
                return resource(format!(
                    "U_{m} has 2^{m} - 1 terms; enumeration cap is m <= {ENUMERATION_CAP}"
                ));
            }
            Ok(squarefree::u_m(ordering, m)?
                .iter()
                .map(|t| {
                    let v = z.pow_neg(t.log_q);
                    if t.sign < 0 {
                        -v
                    } else {
                        v
                    }
                })
                .collect::<CompensatedSum>()
                .value())
        }
    }
}

/// `sum_{h<=n} (-1)^{h-1} h^{-z}` without domain checks.
fn eta_prefix(n: u64, z: &SeriesPoint) -> Complex64 {
    (1..=n).map(|h| phi(h, z)).collect::<CompensatedSum>().value()
}

/// `Phi(m, n)`: the signed `U_m` sum times the eta partial sum of length n.
pub fn u_eta_product(
    ordering: &PrimeOrdering,
    m: usize,
    n: u64,
    z: &SeriesPoint,
    route: FactorRoute,
) -> Result<Complex64> {
    if m == 0 || n == 0 {
        return domain("Phi(m, n) needs m, n >= 1");
    }
    z.require(Domain::Strip)?;
    Ok(signed_u_sum(ordering, m, z, route)? * eta_prefix(n, z))
}

/// `Psi(K) = Phi(m(K), K)`, via the Euler product.
pub fn psi(ordering: &PrimeOrdering, k_max: u64, z: &SeriesPoint) -> Result<Complex64> {
    let m = m_of_k(ordering, k_max)?;
    u_eta_product(ordering, m, k_max, z, FactorRoute::EulerProduct)
}

/// `sum_{k<=K} f(k) phi(k)`.
pub fn fk_phi_prefix(k_max: u64, z: &SeriesPoint) -> Complex64 {
    (1..=k_max)
        .map(|k| if k.is_power_of_two() { Complex64::new(0.0, 0.0) } else { -phi(k, z) })
        .collect::<CompensatedSum>()
        .value()
}

/// Precomputed data for evaluating `c(K, k)` at a fixed K.
#[derive(Debug, Clone)]
pub struct CoeffContext {
    pub k_max: u64,
    pub m: usize,
    /// `p_1, ..., p_{m(K)}`.
    pub primes: Vec<u64>,
    allowed: HashSet<u64>,
    table: PrimeTable,
}

impl CoeffContext {
    /// Context able to evaluate `c(K, k)` for `k <= k_limit`.
    pub fn new(ordering: &PrimeOrdering, k_max: u64, k_limit: u64) -> Result<Self> {
        let m = m_of_k(ordering, k_max)?;
        let primes = ordering.first(m)?;
        let allowed = primes.iter().copied().collect();
        let table = PrimeTable::sieve(k_limit.max(3))?;
        Ok(Self { k_max, m, primes, allowed, table })
    }

    /// `c(K, k)`: signed sum over `q in U_{m(K)}` with `q | k` and `q K >= k`.
    pub fn c(&self, k: u64) -> Result<i64> {
        let filter = DivisorFilter {
            allowed: Some(&self.allowed),
            min_q: Some((k, self.k_max)),
        };
        squarefree::signed_divisor_sum(k, &self.table, &filter)
    }

    /// `K * p_1 ... p_{m(K)}`, or `None` on overflow.
    pub fn upper_index(&self) -> Option<u64> {
        self.primes.iter().try_fold(self.k_max, |acc, &p| acc.checked_mul(p))
    }
}

/// `c(K, k)` for a single pair.
pub fn c_coeff(ordering: &PrimeOrdering, k_max: u64, k: u64) -> Result<i64> {
    if k_max == 0 || k == 0 {
        return domain("c(K, k) needs K, k >= 1");
    }
    CoeffContext::new(ordering, k_max, k)?.c(k)
}

/// Omega by the product route: `Psi(K) - sum_{k<=K} f(k) phi(k)`.
pub fn omega_product(ordering: &PrimeOrdering, k_max: u64, z: &SeriesPoint) -> Result<Complex64> {
    Ok(psi(ordering, k_max, z)? - fk_phi_prefix(k_max, z))
}

/// Omega by the direct route: `sum_{K < k <= K P} c(K, k) phi(k)`.
pub fn omega_direct(ordering: &PrimeOrdering, k_max: u64, z: &SeriesPoint) -> Result<Complex64> {
    if k_max == 0 {
        return domain("Omega(K) needs K >= 1");
    }
    z.require(Domain::Strip)?;
    let m = m_of_k(ordering, k_max)?;
    let primes = ordering.first(m)?;
    let upper = primes
        .iter()
        .try_fold(k_max, |acc, &p| acc.checked_mul(p))
        .filter(|&n| n <= DIRECT_TERM_CAP)
        .ok_or_else(|| {
            crate::Error::Resource(format!(
                "direct route for K = {k_max} needs K * p_1 ... p_{m} terms, above the cap of {DIRECT_TERM_CAP}"
            ))
        })?;
    let ctx = CoeffContext::new(ordering, k_max, upper)?;
    let len = (upper - k_max) as usize;
    Ok(chunked_sum(len, |i| {
        let k = k_max + 1 + i as u64;
        let c = ctx.c(k).expect("table covers the direct range");
        if c == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            phi(k, z) * c as f64
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaValue {
    pub product: Option<Complex64>,
    pub direct: Option<Complex64>,
}

impl OmegaValue {
    pub fn value(&self) -> Complex64 {
        self.product.or(self.direct).expect("at least one route")
    }

    pub fn route_gap(&self) -> Option<f64> {
        Some((self.product? - self.direct?).norm())
    }
}

pub fn omega(ordering: &PrimeOrdering, k_max: u64, z: &SeriesPoint, route: Route) -> Result<OmegaValue> {
    let product = match route {
        Route::Product | Route::Both => Some(omega_product(ordering, k_max, z)?),
        Route::Direct => None,
    };
    let direct = match route {
        Route::Direct | Route::Both => Some(omega_direct(ordering, k_max, z)?),
        Route::Product => None,
    };
    Ok(OmegaValue { product, direct })
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub z: SeriesPoint,
    pub ordering: PrimeOrdering,
    pub k_from: u64,
    pub k_to: u64,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRow {
    pub k: u64,
    pub m_k: usize,
    pub psi: Complex64,
    pub fk_phi_prefix: Complex64,
    /// `psi - fk_phi_prefix`.
    pub omega: Complex64,
    pub omega_direct: Option<Complex64>,
    pub route_gap: Option<f64>,
    /// Why a requested direct value is missing.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaScan {
    pub rows: Vec<OmegaRow>,
    /// Set when z lies outside 1/2 < x < 1, y > 0 and the override was used.
    pub exploratory: bool,
}

/// One row per K in `k_from..=k_to`.
///
/// The Euler product, eta partial sum and `f phi` prefix are accumulated
/// incrementally in K, so a scan does the same floating-point work as the
/// standalone [`psi`] and [`fk_phi_prefix`] for each row.
pub fn omega_scan(cfg: &ProbeConfig) -> Result<OmegaScan> {
    if cfg.k_from == 0 || cfg.k_from > cfg.k_to {
        return domain(format!("empty K range [{}, {}]", cfg.k_from, cfg.k_to));
    }
    let z = &cfg.z;
    z.require(Domain::Theta)?;
    let exploratory = !Domain::Theta.contains(z.x, z.y);

    let m_top = m_of_k(&cfg.ordering, cfg.k_to)?;
    let primes = cfg.ordering.first(m_top)?;
    let index: std::collections::HashMap<u64, usize> =
        primes.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
    let table = PrimeTable::sieve(cfg.k_to.max(3))?;

    let one = Complex64::new(1.0, 0.0);
    let mut euler = one;
    let mut euler_len = 0usize;
    let mut eta = CompensatedSum::new();
    let mut fk = CompensatedSum::new();
    let mut running_m = 0usize;
    let mut rows = Vec::with_capacity((cfg.k_to - cfg.k_from + 1) as usize);

    for k in 1..=cfg.k_to {
        let t = phi(k, z);
        eta.add(t);
        if !k.is_power_of_two() {
            fk.add(-t);
        }
        if table.is_odd_prime(k) == Some(true) {
            running_m = running_m.max(index[&k]);
        }
        if k < cfg.k_from {
            continue;
        }
        let m_k = running_m.max(1);
        while euler_len < m_k {
            euler *= one - z.pow_neg((primes[euler_len] as f64).ln());
            euler_len += 1;
        }
        let psi = (euler - one) * eta.value();
        let fk_phi_prefix = fk.value();
        let omega = psi - fk_phi_prefix;
        let (omega_direct, note) = match cfg.route {
            Route::Product => (None, None),
            Route::Direct | Route::Both => match omega_direct(&cfg.ordering, k, z) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            },
        };
        rows.push(OmegaRow {
            k,
            m_k,
            psi,
            fk_phi_prefix,
            omega,
            route_gap: omega_direct.map(|d| (omega - d).norm()),
            omega_direct,
            note,
        });
    }
    Ok(OmegaScan { rows, exploratory })
}

/// `sum_{k<=K} phi(k) + sum_{k<=K} f(k) phi(k) - sum_{2^l <= K} phi(2^l)`,
/// which vanishes identically since `f` kills every non-power of two.
pub fn final_combination(k_max: u64, z: &SeriesPoint) -> Complex64 {
    let mut all = CompensatedSum::new();
    let mut weighted = CompensatedSum::new();
    let mut pow2 = CompensatedSum::new();
    for k in 1..=k_max {
        let t = phi(k, z);
        all.add(t);
        if k.is_power_of_two() {
            pow2.add(t);
        } else {
            weighted.add(-t);
        }
    }
    all.value() + weighted.value() - pow2.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> SeriesPoint {
        SeriesPoint::new(0.75, 14.134725)
    }

    fn p(w: &SeriesPoint, n: f64) -> Complex64 {
        w.pow_neg(n.ln())
    }

    #[test]
    fn phi_small() {
        let w = z();
        let inc = PrimeOrdering::increasing();
        for route in [FactorRoute::EulerProduct, FactorRoute::Enumerated] {
            let v = u_eta_product(&inc, 1, 1, &w, route).unwrap();
            assert!((v + p(&w, 3.0)).norm() < 1e-15);
            let v = u_eta_product(&inc, 2, 2, &w, route).unwrap();
            let expect = (-p(&w, 3.0) - p(&w, 5.0) + p(&w, 15.0)) * (1.0 - p(&w, 2.0));
            assert!((v - expect).norm() < 1e-15);
        }
        assert!(signed_u_sum(&inc, 21, &w, FactorRoute::Enumerated).is_err());
    }

    #[test]
    fn phi_double_sum_form() {
        // sum_h sum_q sgn(q) (-1)^{hq-1} (hq)^{-z}, term by term.
        let w = SeriesPoint::new(0.6, 3.0);
        let inc = PrimeOrdering::increasing();
        let u2 = [(3u64, -1.0), (5, -1.0), (15, 1.0)];
        let mut expect = Complex64::new(0.0, 0.0);
        for h in 1..=3u64 {
            for &(q, s) in &u2 {
                let k = h * q;
                let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
                expect += p(&w, k as f64) * (s * sign);
            }
        }
        let got = u_eta_product(&inc, 2, 3, &w, FactorRoute::EulerProduct).unwrap();
        assert!((got - expect).norm() < 1e-12);
    }

    #[test]
    fn psi_small() {
        let w = z();
        let inc = PrimeOrdering::increasing();
        assert!((psi(&inc, 1, &w).unwrap() + p(&w, 3.0)).norm() < 1e-15);
        let expect = -p(&w, 3.0) * (1.0 - p(&w, 2.0) + p(&w, 3.0));
        assert!((psi(&inc, 3, &w).unwrap() - expect).norm() < 1e-15);
        assert_eq!(m_of_k(&inc, 5).unwrap(), 2);
    }

    #[test]
    fn c_examples() {
        let inc = PrimeOrdering::increasing();
        assert_eq!(c_coeff(&inc, 5, 3).unwrap(), -1);
        assert_eq!(c_coeff(&inc, 3, 9).unwrap(), -1);
        assert_eq!(c_coeff(&inc, 3, 5).unwrap(), 0);
        assert_eq!(c_coeff(&inc, 1, 3).unwrap(), -1);
        assert_eq!(c_coeff(&inc, 1, 2).unwrap(), 0);
    }

    #[test]
    fn c_by_pair_enumeration() {
        // c(K, k) = sum of sgn q over pairs (h, q), h <= K, q in U_m, hq = k.
        let inc = PrimeOrdering::increasing();
        for k_max in [1u64, 2, 5, 8, 11] {
            let m = m_of_k(&inc, k_max).unwrap();
            let u = squarefree::u_m(&inc, m).unwrap();
            let ctx = CoeffContext::new(&inc, k_max, 20_000).unwrap();
            let upper = ctx.upper_index().unwrap();
            let mut by_pair = vec![0i64; upper as usize + 1];
            for h in 1..=k_max {
                for t in &u {
                    let q: u64 = num_traits::ToPrimitive::to_u64(&t.q).unwrap();
                    by_pair[(h * q) as usize] += t.sign as i64;
                }
            }
            for k in 1..=upper {
                assert_eq!(ctx.c(k).unwrap(), by_pair[k as usize], "K = {k_max}, k = {k}");
            }
        }
    }

    #[test]
    fn omega_small_k() {
        let w = z();
        let inc = PrimeOrdering::increasing();
        let v = omega(&inc, 1, &w, Route::Both).unwrap();
        assert!((v.product.unwrap() + p(&w, 3.0)).norm() < 1e-15);
        assert!((v.direct.unwrap() + p(&w, 3.0)).norm() < 1e-15);
        let v = omega(&inc, 2, &w, Route::Both).unwrap();
        assert!(v.route_gap().unwrap() <= 1e-14);
        let v = omega(&inc, 10, &w, Route::Both).unwrap();
        assert_eq!(m_of_k(&inc, 10).unwrap(), 3);
        assert!(v.route_gap().unwrap() <= 1e-10);
    }

    #[test]
    fn direct_cap() {
        let inc = PrimeOrdering::increasing();
        let err = omega_direct(&inc, 40, &z()).unwrap_err();
        assert!(err.to_string().contains("10000000"), "{err}");
    }

    #[test]
    fn scan_rows() {
        let w = z();
        let cfg = ProbeConfig {
            z: w,
            ordering: PrimeOrdering::increasing(),
            k_from: 1,
            k_to: 100,
            route: Route::Product,
        };
        let scan = omega_scan(&cfg).unwrap();
        assert_eq!(scan.rows.len(), 100);
        assert!(!scan.exploratory);
        for r in &scan.rows {
            assert_eq!(r.omega, r.psi - r.fk_phi_prefix);
            assert_eq!(r.m_k, m_of_k(&cfg.ordering, r.k).unwrap());
        }
        for k in [1u64, 7, 64, 100] {
            let r = &scan.rows[k as usize - 1];
            assert_eq!(r.psi, psi(&cfg.ordering, k, &w).unwrap());
            assert_eq!(r.fk_phi_prefix, fk_phi_prefix(k, &w));
        }
        let one = omega_scan(&ProbeConfig { k_to: 1, route: Route::Both, ..cfg.clone() }).unwrap();
        assert!(one.rows[0].route_gap.unwrap() <= 1e-14);
        assert!(omega_scan(&ProbeConfig { k_from: 5, k_to: 4, ..cfg.clone() }).is_err());
        let half = SeriesPoint::new(0.5, 14.134725);
        assert!(omega_scan(&ProbeConfig { z: half, ..cfg.clone() }).is_err());
        let scan = omega_scan(&ProbeConfig { z: half.with_override(), k_to: 5, ..cfg }).unwrap();
        assert!(scan.exploratory);
    }

    #[test]
    fn scan_with_other_ordering_differs_only_through_m() {
        let w = z();
        let base = ProbeConfig {
            z: w,
            ordering: PrimeOrdering::increasing(),
            k_from: 1,
            k_to: 60,
            route: Route::Product,
        };
        let other = ProbeConfig {
            ordering: PrimeOrdering::with_prefix(vec![5, 3, 11, 7, 13]).unwrap(),
            ..base.clone()
        };
        let a = omega_scan(&base).unwrap();
        let b = omega_scan(&other).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.fk_phi_prefix, rb.fk_phi_prefix);
            let ua = signed_u_sum(&base.ordering, ra.m_k, &w, FactorRoute::EulerProduct).unwrap();
            let ub = signed_u_sum(&other.ordering, rb.m_k, &w, FactorRoute::EulerProduct).unwrap();
            // U_{m(K)} sets coincide as sets whenever the first m primes agree as sets.
            let sa = base.ordering.p_m_set(ra.m_k).unwrap();
            let sb = other.ordering.p_m_set(rb.m_k).unwrap();
            if sa == sb {
                assert!((ua - ub).norm() < 1e-12);
                assert!((ra.omega - rb.omega).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn final_combination_small() {
        let w = SeriesPoint::new(0.75, 1.0);
        assert!(final_combination(4, &w).norm() <= 1e-15);
        assert_eq!(final_combination(1, &w), Complex64::new(0.0, 0.0));
        assert!(final_combination(1000, &w).norm() <= 1e-12);
    }
}
