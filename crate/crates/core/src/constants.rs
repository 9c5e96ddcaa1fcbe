//! The density model g and the constants lemmas: the dimension constant K
//! (four-case verification), the V(z) lower bound, the remainder bound via
//! Rankin's trick with its α-optimisation, and the main sieve factor of the
//! explicit Selberg lower-bound theorem.

use crate::bounded::NeumaierSum;
use crate::error::{Error, Result};
use crate::primes::{factor_u64, PrimeStream, PrimeTable};
use serde::Serialize;

/// Sieve dimension: two residue classes sieved per odd prime.
pub const KAPPA: f64 = 2.0;
/// Dimension constant certified by [`verify_k`].
pub const BIG_K: f64 = 3.0;
/// Constant in the exponent of the remainder bound; equals 8 × 0.2634.
pub const REMAINDER_EXP_CONSTANT: f64 = 2.1072;
/// V(z) ≥ V_LOWER_CONSTANT / log²z for z ≥ 10^10.
pub const V_LOWER_CONSTANT: f64 = 0.2749;
/// Floor of validity for the analytic V(z) bound.
pub const V_ANALYTIC_Z_MIN: f64 = 1e10;

/// Combined exponent k = κ + log K = 2 + log 3.
pub fn combined_exponent() -> f64 {
    KAPPA + BIG_K.ln()
}

/// Exact rational in lowest terms; large enough for g on squarefree d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den);
        Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// g(p): 1/2 at p = 2, 2/p at odd primes.
#[inline]
pub fn g_at_prime(p: u64) -> f64 {
    if p == 2 {
        0.5
    } else {
        2.0 / p as f64
    }
}

/// Multiplicative extension of g to squarefree d; exact rational.
pub fn g_value(d: u64) -> Result<Rational> {
    if d == 0 {
        return Err(Error::InvalidArgument("g(0) is undefined".into()));
    }
    let fac = factor_u64(d);
    if fac.iter().any(|&(_, e)| e > 1) {
        return Err(Error::InvalidArgument(format!("{d} is not squarefree")));
    }
    let mut num = 1u64;
    let mut den = 1u64;
    for &(p, _) in &fac {
        let (n, dd) = if p == 2 { (1, 2) } else { (2, p) };
        num = num
            .checked_mul(n)
            .ok_or_else(|| Error::InvalidArgument(format!("g({d}) overflows")))?;
        den = dd
            .checked_mul(den)
            .ok_or_else(|| Error::InvalidArgument(format!("g({d}) overflows")))?;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    Ok(Rational::new(num, den))
}

/// Π_{w≤p<z}(1−g(p))^{−1} · (log w / log z)² — the quantity whose supremum
/// over 2 ≤ w < z is the dimension constant K.
pub fn k_ratio(w: u64, z: f64, table: &PrimeTable) -> Result<f64> {
    if w < 2 || (w as f64) >= z {
        return Err(Error::InvalidArgument(format!(
            "k_ratio needs prime w < z, got w={w} z={z}"
        )));
    }
    if z > table.limit() as f64 {
        return Err(Error::OutOfRange {
            query: z.ceil() as u64,
            limit: table.limit(),
        });
    }
    let mut log_prod = 0.0f64;
    let mut p = w;
    loop {
        if (p as f64) >= z {
            break;
        }
        if table.membership(p).unwrap_or(false) {
            log_prod -= (1.0 - g_at_prime(p)).ln();
        }
        p += 1;
        if p >= table.limit() {
            break;
        }
    }
    let ratio = (w as f64).ln() / z.ln();
    Ok(log_prod.exp() * ratio * ratio)
}

/// One case's outcome in the K verification.
#[derive(Debug, Clone, Serialize)]
pub struct KCase {
    pub bound: f64,
    pub limit: f64,
    pub witness: Option<(u64, u64)>,
    pub ok: bool,
}

/// Report of the four-case certification of K = 3.
#[derive(Debug, Clone, Serialize)]
pub struct KReport {
    /// w ≥ 286: exp of the certified estimate chain; must stay ≤ 1.24.
    pub case1: KCase,
    /// 3 ≤ w ≤ 285, z ≥ 286: finite maximum over prime w; must stay ≤ 1.86.
    pub case2: KCase,
    /// w = 2, z ≥ 286: 2 · 1.86 · log²2/log²3; must stay ≤ 1.49.
    pub case3: KCase,
    /// z < 286: exhaustive supremum over prime pairs; must equal 3.
    pub case4: KCase,
    pub k_certified: f64,
}

impl KReport {
    pub fn all_ok(&self) -> bool {
        self.case1.ok && self.case2.ok && self.case3.ok && self.case4.ok
    }
}

/// Certify the dimension condition constant K = 3 by the four-case split.
///
/// Case 4 walks every prime pair (w, q) with w ≤ q < 286 and evaluates the
/// ratio on both sides of each prime z = q (the supremum over real z is
/// attained in one-sided limits at primes, the function being piecewise
/// monotone in z between primes).
pub fn verify_k(table: &PrimeTable) -> Result<KReport> {
    if table.limit() < 287 {
        return Err(Error::Precondition(
            "verify_k needs a prime table through 286".into(),
        ));
    }
    let primes_to_285: Vec<u64> = table.iter().take_while(|&p| p <= 285).collect();

    // Case 1: chain constant 1/log²z + 1/log²w + 2 Σ_{p≥286} 1/(p(p−2)) ≤ 0.21,
    // both pieces through certified estimates; report exp(0.21).
    let interval_terms = crate::estimates::interval_reciprocal_bound(286.0, 286.0)?;
    let tail = crate::estimates::tail_sum_p_pminus2(286.0)?;
    let chain = interval_terms.upper() + 2.0 * tail.upper();
    let case1_ok = chain <= 0.21 && (0.21f64).exp() <= 1.24;
    let case1 = KCase {
        bound: (0.21f64).exp(),
        limit: 1.24,
        witness: None,
        ok: case1_ok,
    };

    // Case 2: finite check over prime w in [3, 285].
    let odd_primes: Vec<u64> = primes_to_285.iter().copied().filter(|&p| p >= 3).collect();
    let mut case2_max = 0.0f64;
    let mut case2_w = 0u64;
    let l286 = 286.0f64.ln();
    for (i, &w) in odd_primes.iter().enumerate() {
        let mut log_prod = 0.0f64;
        for &p in &odd_primes[i..] {
            log_prod -= (1.0 - 2.0 / p as f64).ln();
        }
        let lw = (w as f64).ln();
        let v = 1.24 * (lw / l286) * (lw / l286) * log_prod.exp();
        if v > case2_max {
            case2_max = v;
            case2_w = w;
        }
    }
    let case2 = KCase {
        bound: case2_max,
        limit: 1.86,
        witness: Some((case2_w, 286)),
        ok: case2_max <= 1.86,
    };

    // Case 3: 2 · 1.86 · log²2 / log²3 ≤ 1.49.
    let c3 = 2.0 * 1.86 * (2.0f64.ln() / 3.0f64.ln()).powi(2);
    let case3 = KCase {
        bound: c3,
        limit: 1.49,
        witness: None,
        ok: c3 <= 1.49,
    };

    // Case 4: exhaustive over prime pairs w ≤ q < 286, both one-sided values.
    let mut sup = 0.0f64;
    let mut arg = (0u64, 0u64);
    for (i, &w) in primes_to_285.iter().enumerate() {
        let lw = (w as f64).ln();
        let mut log_prod = 0.0f64; // over primes in [w, q), then [w, q]
        for &q in &primes_to_285[i..] {
            let lq = (q as f64).ln();
            if q > w {
                // left limit at z = q: product excludes q
                let left = log_prod.exp() * (lw / lq) * (lw / lq);
                if left > sup {
                    sup = left;
                    arg = (w, q);
                }
            }
            log_prod -= (1.0 - g_at_prime(q)).ln();
            // right limit z -> q⁺: product includes q
            let right = log_prod.exp() * (lw / lq) * (lw / lq);
            if right > sup {
                sup = right;
                arg = (w, q);
            }
        }
    }
    let case4 = KCase {
        bound: sup,
        limit: 3.0 + 1e-9,
        witness: Some(arg),
        ok: (sup - 3.0).abs() <= 1e-9,
    };

    let report = KReport {
        case1,
        case2,
        case3,
        case4,
        k_certified: BIG_K,
    };
    if !report.all_ok() {
        return Err(Error::VerificationFailed(format!(
            "K certification failed: {report:?}"
        )));
    }
    Ok(report)
}

/// V(z) = Π_{p<z}(1−g(p)) carried in log domain.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VProduct {
    pub z: f64,
    pub value_log: f64,
    pub slack: f64,
}

impl VProduct {
    pub fn value(&self) -> f64 {
        self.value_log.exp()
    }
}

pub enum VMode {
    Exact,
    /// 0.2749 / log²z; valid only for z ≥ 10^10.
    AnalyticLower,
}

/// V(z), either exactly streamed or as the analytic lower bound.
pub fn v_product(z: f64, mode: VMode) -> Result<VProduct> {
    if z <= 2.0 {
        return Err(Error::InvalidArgument(format!(
            "v_product needs z > 2, got {z}"
        )));
    }
    match mode {
        VMode::Exact => {
            let mut acc = NeumaierSum::new();
            for p in PrimeStream::new(z.ceil() as u64) {
                if (p as f64) < z {
                    acc.add((1.0 - g_at_prime(p)).ln());
                }
            }
            Ok(VProduct {
                z,
                value_log: acc.value(),
                slack: acc.slack(),
            })
        }
        VMode::AnalyticLower => {
            if z < V_ANALYTIC_Z_MIN {
                return Err(Error::Range(format!(
                    "analytic V(z) lower bound requires z >= 1e10, got {z}"
                )));
            }
            let lz = z.ln();
            Ok(VProduct {
                z,
                value_log: V_LOWER_CONSTANT.ln() - 2.0 * lz.ln(),
                slack: 1e-12,
            })
        }
    }
}

/// Re-derivation of the 0.2749 constant from the proof's own pieces:
/// ½ · exp(2·0.2366 − 2·0.5357) — the 0.2366 gain in the exponent against the
/// 1.0714 loss from the squared-tail term.
pub fn v_constant_rederivation() -> f64 {
    0.5 * (2.0f64 * 0.2366 - 2.0 * 0.5357).exp()
}

/// The main factor F(s, k) = 1 − (s+3)/(2e^k) · (2ek/(s−3))^{(s−3)/2} of the
/// explicit lower-bound sieve; requires s ≥ 2k + 3 and may be negative
/// (a vacuous bound) near that boundary.
pub fn main_sieve_factor(s: f64, k: f64) -> Result<f64> {
    if s < 2.0 * k + 3.0 {
        return Err(Error::Precondition(format!(
            "main sieve factor requires s >= 2k + 3 = {}, got s = {s}",
            2.0 * k + 3.0
        )));
    }
    let inner = (2.0 * std::f64::consts::E * k / (s - 3.0)).powf((s - 3.0) / 2.0);
    Ok(1.0 - (s + 3.0) / (2.0 * k.exp()) * inner)
}

/// exp(2.1072 + 8αe^α − αs): the constant in front of D log⁸z in the
/// remainder bound, as a function of the free Rankin parameter α.
pub fn remainder_constant(alpha: f64, s: f64) -> Result<f64> {
    if alpha <= 0.0 || s <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "remainder constant needs alpha > 0, s > 0; got alpha={alpha}, s={s}"
        )));
    }
    Ok((REMAINDER_EXP_CONSTANT + 8.0 * alpha * alpha.exp() - alpha * s).exp())
}

/// Minimize the remainder constant over α: the stationarity condition is
/// e^α(1+α) = s/8, solved by bisection to 10⁻¹².
pub fn optimize_alpha(s: f64) -> Result<f64> {
    if s <= 8.0 {
        return Err(Error::Precondition(format!(
            "no interior minimum for s <= 8, got s = {s}"
        )));
    }
    let target = s / 8.0;
    let phi = |a: f64| a.exp() * (1.0 + a) - target;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Rankin's-trick upper bound on R₄(A, D) in log domain:
/// δ·log D + Σ_{p<z} log(1 + 8/p^δ).
pub fn rankin_remainder_log(z: f64, log_d: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    if log_d < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "log D must be >= 0, got {log_d}"
        )));
    }
    let mut acc = NeumaierSum::new();
    for p in PrimeStream::new(z.ceil() as u64) {
        if (p as f64) < z {
            acc.add(rankin_term(p, delta));
        }
    }
    Ok(delta * log_d + acc.value())
}

/// One prime's contribution log(1 + 8/p^δ) to the Rankin product.
#[inline]
pub fn rankin_term(p: u64, delta: f64) -> f64 {
    (8.0 / (p as f64).powf(delta)).ln_1p()
}

/// Exact Σ_{d|P(z), d<D} τ₈(d) by divisor enumeration — the brute-force
/// oracle the Rankin bound must dominate. Refuses z large enough that P(z)
/// has more than 2²⁰ divisors.
pub fn remainder_exact_small(z: f64, log_d: f64) -> Result<u64> {
    let primes: Vec<u64> = PrimeStream::new(z.ceil() as u64)
        .filter(|&p| (p as f64) < z)
        .collect();
    if primes.len() > 20 {
        return Err(Error::Refused(format!(
            "P(z) for z={z} has {} prime factors (> 2^20 divisors)",
            primes.len()
        )));
    }
    let mut total = 0u64;
    let n = primes.len();
    'subset: for mask in 0u32..(1u32 << n) {
        let mut d = 1u64;
        let mut tau8 = 1u64;
        for (i, &p) in primes.iter().enumerate() {
            if mask >> i & 1 == 1 {
                d = match d.checked_mul(p) {
                    Some(v) => v,
                    None => continue 'subset, // d certainly >= D for our log_d ranges
                };
                tau8 *= 8;
            }
        }
        if (d as f64).ln() < log_d {
            total += tau8;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_values() {
        assert_eq!(g_value(2).unwrap(), Rational { num: 1, den: 2 });
        assert_eq!(g_value(3).unwrap(), Rational { num: 2, den: 3 });
        assert_eq!(g_value(15).unwrap(), Rational { num: 4, den: 15 });
        assert_eq!(g_value(1).unwrap(), Rational { num: 1, den: 1 });
        assert!(g_value(12).is_err());
    }

    #[test]
    fn k_ratio_limit_cases() {
        let t = PrimeTable::build(300).unwrap();
        let r = k_ratio(2, 2.000001, &t).unwrap();
        assert!((r - 2.0).abs() < 1e-4);
        let r3 = k_ratio(3, 3.000001, &t).unwrap();
        assert!((r3 - 3.0).abs() < 1e-4); // the extremal case
        let r57 = k_ratio(5, 7.0, &t).unwrap();
        assert!((r57 - (5.0 / 3.0) * (5.0f64.ln() / 7.0f64.ln()).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn verify_k_certifies_three() {
        let t = PrimeTable::build(300).unwrap();
        let r = verify_k(&t).unwrap();
        assert!((r.case4.bound - 3.0).abs() <= 1e-9);
        assert_eq!(r.case4.witness.unwrap().0, 3);
        assert!(r.case2.bound <= 1.86);
        assert!((r.case1.bound - 1.2337).abs() < 1e-3);
        assert!(r.case3.bound <= 1.49);
        assert_eq!(r.k_certified, 3.0);
    }

    #[test]
    fn v_product_small_exact() {
        let v3 = v_product(3.0, VMode::Exact).unwrap();
        assert!((v3.value() - 0.5).abs() < 1e-12);
        let v7 = v_product(7.0, VMode::Exact).unwrap();
        assert!((v7.value() - 0.1).abs() < 1e-12); // (1/2)(1/3)(3/5)
        assert!(v_product(1e6, VMode::AnalyticLower).is_err());
    }

    #[test]
    fn v_constant_rederives() {
        assert!((v_constant_rederivation() - 0.2749).abs() < 1e-4);
    }

    #[test]
    fn v_exact_dominates_formal_analytic_at_desk_scale() {
        // surrogate: V(z)·log²z stays well above 0.2749 at reachable z
        for z in [1e4, 1e5, 1e6] {
            let v = v_product(z, VMode::Exact).unwrap();
            let direct = v.value() * z.ln() * z.ln();
            assert!(direct >= V_LOWER_CONSTANT, "z={z}: {direct}");
        }
    }

    #[test]
    fn main_factor_boundary_identity() {
        for k in [1.0, 2.0, combined_exponent(), 4.5] {
            let f = main_sieve_factor(2.0 * k + 3.0, k).unwrap();
            assert!((f - (-(k + 2.0))).abs() < 1e-9, "k={k}: {f}");
        }
        assert!(main_sieve_factor(5.0, 2.0).is_err());
    }

    #[test]
    fn main_factor_paper_point() {
        let f = main_sieve_factor(18.4, combined_exponent()).unwrap();
        assert!((f - 0.0367).abs() < 5e-4, "got {f}");
        assert!(f > 0.0);
    }

    #[test]
    fn main_factor_increasing_and_to_one() {
        // F dips slightly just past the boundary s = 2k+3, then climbs to 1;
        // check monotonicity from s = 12 onward.
        let k = combined_exponent();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let s = 12.0 + i as f64 * 0.5;
            let f = main_sieve_factor(s, k).unwrap();
            if i < 40 {
                assert!(f > prev, "s={s}: {f} <= {prev}");
            } else {
                assert!(f >= prev, "s={s}: {f} < {prev}");
            }
            prev = f;
        }
        assert!(main_sieve_factor(1e4, k).unwrap() > 0.999);
    }

    #[test]
    fn remainder_constant_values() {
        let c = remainder_constant(0.457, 18.4).unwrap();
        assert!(c <= 0.591 && (c - 0.5900).abs() < 5e-4, "got {c}");
        let c0 = remainder_constant(1e-12, 18.4).unwrap();
        assert!((c0 - (2.1072f64).exp()).abs() < 1e-6);
        assert!((2.1072f64.exp() - 8.2257).abs() < 1e-3);
        assert!(remainder_constant(0.0, 1.0).is_err());
    }

    #[test]
    fn alpha_optimisation() {
        let a = optimize_alpha(18.4).unwrap();
        assert!((a - 0.4567).abs() < 1e-3, "got {a}");
        let at_opt = remainder_constant(a, 18.4).unwrap();
        assert!(at_opt <= remainder_constant(0.457, 18.4).unwrap() + 1e-12);
        for alpha in [0.1, 0.3, 0.457, 0.6, 0.9, 2.0] {
            assert!(at_opt <= remainder_constant(alpha, 18.4).unwrap() + 1e-12);
        }
        // s = 8e puts the stationary point below 1
        let a8e = optimize_alpha(8.0 * std::f64::consts::E).unwrap();
        assert!(a8e < 1.0);
        assert!(
            remainder_constant(a8e, 8.0 * std::f64::consts::E).unwrap()
                < remainder_constant(1.0, 8.0 * std::f64::consts::E).unwrap()
        );
        assert!(optimize_alpha(8.0).is_err());
    }

    #[test]
    fn rankin_log_values() {
        let v = rankin_remainder_log(3.0, 0.0, 0.999).unwrap();
        assert!((v - (1.0f64 + 8.0 / 2.0f64.powf(0.999)).ln()).abs() < 1e-12);
        let v5 = rankin_remainder_log(5.0, 18.4 * 5.0f64.ln(), 0.2).unwrap();
        assert!((v5 - 10.0022).abs() < 1e-3, "got {v5}");
        assert!(rankin_remainder_log(5.0, 1.0, 1.0).is_err());
        assert!(rankin_remainder_log(5.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn exact_small_remainder_sums() {
        assert_eq!(remainder_exact_small(3.0, 1e9).unwrap(), 9); // {1,2}
        assert_eq!(remainder_exact_small(5.0, 1e9).unwrap(), 81); // {1,2,3,6}
        assert_eq!(remainder_exact_small(5.0, 4.0f64.ln()).unwrap(), 17); // {1,2,3}
    }

    #[test]
    fn rankin_dominates_exact_oracle() {
        let exact = remainder_exact_small(5.0, 18.4 * 5.0f64.ln()).unwrap();
        let bound = rankin_remainder_log(5.0, 18.4 * 5.0f64.ln(), 0.2).unwrap();
        assert!(bound.exp() >= exact as f64);
    }

    #[test]
    fn remainder_exp_constant_is_eight_times_mertens() {
        assert_eq!(8.0 * 0.2634, REMAINDER_EXP_CONSTANT);
    }
}
