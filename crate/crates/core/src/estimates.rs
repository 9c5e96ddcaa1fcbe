//! Exact streamed prime sums and the explicit analytic bounds the constants
//! lemmas consume (Rosser–Schoenfeld Theorem 5 forms). The analytic constants
//! 0.2634 and 0.2366 are consumed as stated, not re-derived; each analytic
//! form is gated to the range in which the proofs invoke it.

use crate::bounded::{BoundedValue, Domain, NeumaierSum};
use crate::error::{Error, Result};
use crate::primes::PrimeStream;

/// Validity floor for the z ≥ 10^10 analytic forms.
pub const ANALYTIC_Z_MIN: f64 = 1e10;
/// Validity floor for the interval (Case 1) form.
pub const INTERVAL_W_MIN: f64 = 286.0;
/// Mertens-type constant in Σ_{p<z} 1/p < log log z + 0.2634.
pub const PRIME_RECIPROCAL_CONSTANT: f64 = 0.2634;

pub enum SumMode {
    /// Streamed exact sum with compensated summation.
    Exact,
    /// The analytic upper bound; valid only for z ≥ 10^10.
    AnalyticUpper,
}

/// Σ_{p<z} 1/p, exact or as the analytic upper bound log log z + 0.2634.
pub fn prime_reciprocal_sum(z: f64, mode: SumMode) -> Result<BoundedValue> {
    if z < 2.0 {
        return Err(Error::InvalidArgument(format!("z must be >= 2, got {z}")));
    }
    match mode {
        SumMode::Exact => {
            let mut acc = NeumaierSum::new();
            for p in PrimeStream::new(ceil_u64(z)) {
                acc.add(1.0 / p as f64);
            }
            Ok(acc.bounded(Domain::Linear))
        }
        SumMode::AnalyticUpper => {
            if z < ANALYTIC_Z_MIN {
                return Err(Error::Range(format!(
                    "analytic bound on sum 1/p is only invoked for z >= 1e10, got {z}"
                )));
            }
            Ok(BoundedValue::rounded(
                z.ln().ln() + PRIME_RECIPROCAL_CONSTANT,
                3,
                Domain::Linear,
            ))
        }
    }
}

/// The Case 1 interval form: an upper bound on 2 Σ_{w≤p≤z} 1/p, namely
/// 2 log(log z / log w) + 1/log²z + 1/log²w. Valid for w ≥ 286.
pub fn interval_reciprocal_bound(w: f64, z: f64) -> Result<BoundedValue> {
    if w < INTERVAL_W_MIN {
        return Err(Error::Range(format!(
            "interval reciprocal bound requires w >= 286, got {w}"
        )));
    }
    if z < w {
        return Err(Error::InvalidArgument(format!(
            "need z >= w, got z={z} w={w}"
        )));
    }
    let lw = w.ln();
    let lz = z.ln();
    let v = 2.0 * (lz / lw).ln() + 1.0 / (lz * lz) + 1.0 / (lw * lw);
    Ok(BoundedValue::rounded(v, 8, Domain::Linear))
}

/// Σ_{p<z} log p / p, exact or as the analytic upper bound log z.
pub fn sum_logp_over_p(z: f64, mode: SumMode) -> Result<BoundedValue> {
    if z < 2.0 {
        return Err(Error::InvalidArgument(format!("z must be >= 2, got {z}")));
    }
    match mode {
        SumMode::Exact => {
            let mut acc = NeumaierSum::new();
            for p in PrimeStream::new(ceil_u64(z)) {
                let pf = p as f64;
                acc.add(pf.ln() / pf);
            }
            Ok(acc.bounded(Domain::Linear))
        }
        SumMode::AnalyticUpper => {
            if z < ANALYTIC_Z_MIN {
                return Err(Error::Range(format!(
                    "analytic bound on sum log p / p is only invoked for z >= 1e10, got {z}"
                )));
            }
            Ok(BoundedValue::rounded(z.ln(), 1, Domain::Linear))
        }
    }
}

/// Exact-partial-plus-telescoped-tail cutoff.
const TAIL_CUTOFF: u64 = 1_000_000;

/// Certified upper bound on Σ_{p ≥ w} 1/(p(p−2)): the exact partial sum up to
/// 10^6 plus the telescoping tail Σ_{n>c} 1/(n(n−2)) = ½(1/(c−1) + 1/c).
pub fn tail_sum_p_pminus2(w: f64) -> Result<BoundedValue> {
    if w < 3.0 {
        return Err(Error::InvalidArgument(format!("w must be >= 3, got {w}")));
    }
    let w_int = ceil_u64_inclusive(w);
    if w_int > TAIL_CUTOFF {
        // pure telescoping tail over all integers >= w
        let c = w - 2.0;
        let v = 0.5 * (1.0 / c + 1.0 / (c + 1.0));
        return Ok(BoundedValue::rounded(v, 4, Domain::Linear));
    }
    let mut acc = NeumaierSum::new();
    for p in PrimeStream::resume_after(TAIL_CUTOFF + 1, w_int.saturating_sub(1)) {
        if p < 3 {
            continue;
        }
        let pf = p as f64;
        acc.add(1.0 / (pf * (pf - 2.0)));
    }
    let c = TAIL_CUTOFF as f64 - 1.0;
    let tail = 0.5 * (1.0 / c + 1.0 / (c + 1.0));
    let partial = acc.bounded(Domain::Linear);
    Ok(BoundedValue::with_slack(
        partial.value + tail,
        partial.slack + f64::EPSILON * tail,
        Domain::Linear,
    ))
}

fn ceil_u64(z: f64) -> u64 {
    z.ceil() as u64
}

/// Smallest integer ≥ w, treating w already integral as itself.
fn ceil_u64_inclusive(w: f64) -> u64 {
    w.ceil() as u64
}
