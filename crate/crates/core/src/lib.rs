//! Machine verification of an explicit Selberg lower-bound sieve proof that
//! every integer N ≥ 2 splits as N = a + b with Ω(ab) ≤ 21.
//!
//! The library is organized along the proof:
//! - [`primes`] — segmented prime generation, π/p_i queries, gap scanning,
//!   and Ω/ω/τ_k multiplicity arithmetic.
//! - [`estimates`] — exact streamed prime sums and the explicit
//!   Rosser–Schoenfeld-style bounds, all carried as [`bounded::BoundedValue`]
//!   so inequalities are certified with margin.
//! - [`constants`] — the density model g, the dimension constant K = 3
//!   (four-case verification), the V(z) lower bound, the remainder constant
//!   with Rankin's trick and α-optimisation, and the main sieve factor.
//! - [`pipeline`] — the checkpointed Case 2 interval certification over
//!   (2, q_max] and the asymptotic Case 3 inequality.
//! - [`decomp`] — exact sifted-set counts, r_d residuals, brute-force
//!   minimum-Ω decompositions, range scans, and prime-gap witnesses.

pub mod bounded;
pub mod constants;
pub mod decomp;
pub mod error;
pub mod estimates;
pub mod pipeline;
pub mod primes;

pub use bounded::{BoundedValue, Domain, NeumaierSum};
pub use error::{Error, Result};
pub use primes::{
    big_omega, factor_u64, is_prime_u64, max_prime_gap, tau_k_squarefree, FactorMultiplicity,
    PrimeStream, PrimeTable, SpfTable,
};
