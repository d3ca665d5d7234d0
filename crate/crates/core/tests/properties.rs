use blocksum_core::equidist::reciprocal_sums;
use blocksum_core::identities::verify_theta_subsequence;
use blocksum_core::probe::{omega, Route};
use blocksum_core::rearrange::{greedy_rearrange, GreedyParams};
use blocksum_core::series::rho_partial;
use blocksum_core::{PrimeOrdering, SeriesPoint};

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn unit(&mut self) -> f64 {
        self.next() as f64 / (1u64 << 31) as f64
    }
}

fn random_prefix(rng: &mut Lcg, pool: &[u64], len: usize) -> PrimeOrdering {
    let mut prefix = Vec::new();
    while prefix.len() < len {
        let p = pool[rng.next() as usize % pool.len()];
        if !prefix.contains(&p) {
            prefix.push(p);
        }
    }
    PrimeOrdering::with_prefix(prefix).unwrap()
}

#[test]
fn theta_identity_is_ordering_independent() {
    let pool = PrimeOrdering::increasing().first(40).unwrap();
    let mut rng = Lcg(17);
    let z = SeriesPoint::new(0.6, 2.0);
    for _ in 0..20 {
        let o = random_prefix(&mut rng, &pool, 6);
        let r = verify_theta_subsequence(&o, 10, &z, 1e-10).unwrap();
        assert!(r.pass, "prefix {:?}: max error {:e}", o.prefix(), r.max_error);
    }
    let o = PrimeOrdering::with_prefix(vec![31, 3, 11]).unwrap();
    assert!(verify_theta_subsequence(&o, 10, &z, 1e-10).unwrap().pass);
}

#[test]
fn omega_routes_agree_at_random_points() {
    let mut rng = Lcg(99);
    let inc = PrimeOrdering::increasing();
    for _ in 0..3 {
        let z = SeriesPoint::new(0.5 + 0.49 * rng.unit(), 30.0 * rng.unit() + 0.1);
        for k in 1..=12 {
            let gap = omega(&inc, k, &z, Route::Both).unwrap().route_gap().unwrap();
            assert!(gap <= 1e-10, "z = {z:?}, K = {k}: gap {gap:e}");
        }
    }
}

#[test]
fn plus_bucket_reciprocal_growth_follows_mertens_density() {
    let g = reciprocal_sums(1_000_000, 14.134725, 0.0, 0.5, 1.0).unwrap();
    let at = |n: u64| g.rows.iter().find(|r| r.n == n).unwrap().recip[0];
    let lnln = |n: f64| n.ln().ln();
    let predicted = at(10_000) + (lnln(1e6) - lnln(1e4)) / 3.0;
    let actual = at(1_000_000);
    assert!(
        ((actual - predicted) / predicted).abs() <= 0.25,
        "actual {actual}, predicted {predicted}"
    );
}

#[test]
fn greedy_closes_on_the_increasing_order_sum() {
    let z = SeriesPoint::new(0.75, 14.134725);
    let n = 1_000_000;
    let target = rho_partial(&PrimeOrdering::increasing(), n, &z).unwrap().value();
    let plan = greedy_rearrange(&z, target, n, GreedyParams::default()).unwrap();
    assert!(
        plan.final_distance() <= plan.distance(1000),
        "final {:e} vs step 1e3 {:e}",
        plan.final_distance(),
        plan.distance(1000)
    );
}

#[test]
fn greedy_prefix_is_a_valid_ordering() {
    let z = SeriesPoint::new(0.8, 3.0);
    let plan = greedy_rearrange(&z, blocksum_core::Complex64::new(0.1, -0.2), 5000, GreedyParams { window: 64 })
        .unwrap();
    let o = plan.ordering().unwrap();
    let reloaded = PrimeOrdering::parse(&o.to_file_string()).unwrap();
    assert_eq!(reloaded, o);
    // The first 5000 ordered primes are a permutation of an initial segment
    // plus at most W - 1 later primes.
    let mut sorted = plan.prefix.clone();
    sorted.sort_unstable();
    let inc = PrimeOrdering::increasing().first(5000 + 64).unwrap();
    assert!(sorted.iter().all(|p| inc.binary_search(p).is_ok()));
}
