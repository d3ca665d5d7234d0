//! Experiments with block-ordered squarefree signed Dirichlet sums.
//!
//! - [`primes`]: odd primes and prefix-plus-increasing-tail orderings of them
//! - [`squarefree`]: the blocks `Q_m`, the induced ordering of the
//!   squarefree odd numbers, signs and signed divisor sums
//! - [`series`]: `phi`, `theta_n`, `rho`, eta partials, Euler-product partials
//! - [`rearrange`]: greedy steering of prime series and two-pile real rearrangement
//! - [`identities`]: exact and floating-point checks of the finite identities
//! - [`probe`]: `Phi(m, n)`, `Psi(K)`, `c(K, k)`, `Omega(K)` and scans over K
//! - [`equidist`]: phase-bucket densities of `y ln p` and reciprocal sums

pub mod equidist;
pub mod error;
pub mod identities;
pub mod primes;
pub mod probe;
pub mod rearrange;
pub mod series;
pub mod squarefree;
pub mod summation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use primes::{PrimeOrdering, PrimeTable};
pub use series::{Domain, SeriesPoint};
pub use summation::{CheckpointPolicy, SumTrace};
