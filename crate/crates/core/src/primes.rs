//! Prime generation, counting and multiplicity arithmetic.
//!
//! Everything here is exact: primes come from a segmented, odd-only sieve of
//! Eratosthenes, π(x)/p_i are served from per-block cumulative popcounts (no
//! analytic approximations), and Ω/ω/τ_k come from complete factorizations.
//!
//! Two access patterns are provided:
//! * [`PrimeTable`] — a queryable in-memory table for membership, π(x), p_i,
//!   and backward/forward neighbour queries. Memory is one bit per odd
//!   number, so 10⁹ costs ~60 MB.
//! * [`PrimeStream`] — a forward-only iterator that sieves segment by segment
//!   and never stores more than one segment. This is what the long-running
//!   pipeline and the gap scanner use; it reaches 10¹⁰ in minutes.

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Numbers per sieve segment (~1 MB of bitset per segment).
const SEGMENT_NUMBERS: u64 = 1 << 21;

const CACHE_MAGIC: &[u8; 8] = b"OMSVPCT1";
const CACHE_SEGMENT_WORDS: usize = 1 << 14;

/// Bit index of odd number `n` (n must be odd): bit b represents 2b+1.
#[inline]
fn odd_index(n: u64) -> u64 {
    n / 2
}

/// Plain odd-only sieve used to bootstrap base primes up to `limit` (exclusive).
fn simple_odd_primes(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let half = (limit / 2).max(1) as usize;
    let mut composite = vec![false; half]; // index b <-> 2b+1
    let mut primes = Vec::new();
    let mut p = 3u64;
    while p * p < limit {
        if !composite[odd_index(p) as usize] {
            let mut m = p * p;
            while m < limit {
                composite[odd_index(m) as usize] = true;
                m += 2 * p;
            }
        }
        p += 2;
    }
    for b in 1..half {
        if !composite[b] {
            primes.push(2 * b as u64 + 1);
        }
    }
    primes
}

/// Sieve one segment of odd numbers `[lo, lo + 2*bits)` (lo odd) against
/// `base` primes, writing a set-bit-means-prime mask into `words`.
fn sieve_segment(words: &mut [u64], lo: u64, bits: usize, base: &[u64]) {
    for w in words.iter_mut() {
        *w = !0u64;
    }
    let hi = lo + 2 * bits as u64; // exclusive, odd numbers only
    for &p in base {
        let p2 = p * p;
        if p2 >= hi {
            break;
        }
        // first odd multiple of p in [max(lo, p*p), hi); multiples below p*p
        // are handled by smaller primes
        let mut m = if p2 >= lo {
            p2
        } else {
            let mut m = lo + (p - lo % p) % p;
            if m % 2 == 0 {
                m += p;
            }
            m.max(p2)
        };
        while m < hi {
            let b = ((m - lo) / 2) as usize;
            words[b / 64] &= !(1u64 << (b % 64));
            m += 2 * p;
        }
    }
    // mask tail beyond `bits`
    let full = bits / 64;
    let rem = bits % 64;
    if rem > 0 {
        words[full] &= (1u64 << rem) - 1;
    }
    for w in words.iter_mut().skip(if rem > 0 { full + 1 } else { full }) {
        *w = 0;
    }
}

/// Immutable queryable store of all primes below `limit`.
///
/// Shared freely across threads; construction is deterministic.
pub struct PrimeTable {
    limit: u64,
    /// Odd-only bitset: bit b set <=> 2b+1 is prime. Bit 0 (the number 1) is clear.
    words: Vec<u64>,
    /// cum[i] = set bits in words[..i * CUM_BLOCK]; enables O(1)-ish rank/select.
    cum: Vec<u64>,
    /// Total primes below `limit` (including 2).
    count: u64,
}

/// Words per rank block (32768 bits = 65536 numbers).
const CUM_BLOCK: usize = 512;

impl PrimeTable {
    /// Sieve all primes below `limit` (exclusive). Rejects `limit < 3`.
    pub fn build(limit: u64) -> Result<Self> {
        if limit < 3 {
            return Err(Error::InvalidArgument(format!(
                "prime table limit must be >= 3, got {limit}"
            )));
        }
        let half = (limit / 2) as usize; // bits for odd numbers < limit
        let nwords = (half + 63) / 64;
        let mut words = vec![0u64; nwords];
        let root = (limit as f64).sqrt() as u64 + 2;
        let base = simple_odd_primes(root.min(limit));
        let seg_bits = (SEGMENT_NUMBERS / 2) as usize;
        let mut seg = vec![0u64; (seg_bits + 63) / 64];
        let mut bit_lo = 0usize;
        while bit_lo < half {
            let bits = seg_bits.min(half - bit_lo);
            let lo = 2 * bit_lo as u64 + 1;
            sieve_segment(&mut seg[..(bits + 63) / 64], lo, bits, &base);
            debug_assert_eq!(bit_lo % 64, 0);
            let dst = bit_lo / 64;
            let n = (bits + 63) / 64;
            words[dst..dst + n].copy_from_slice(&seg[..n]);
            bit_lo += bits;
        }
        words[0] &= !1; // 1 is not prime
        Ok(Self::from_words(limit, words))
    }

    fn from_words(limit: u64, words: Vec<u64>) -> Self {
        let mut cum = Vec::with_capacity(words.len() / CUM_BLOCK + 2);
        let mut running = 0u64;
        for (i, w) in words.iter().enumerate() {
            if i % CUM_BLOCK == 0 {
                cum.push(running);
            }
            running += w.count_ones() as u64;
        }
        cum.push(running);
        let count = running + 1; // the prime 2
        PrimeTable {
            limit,
            words,
            cum,
            count,
        }
    }

    /// Exclusive upper bound of the table.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// π(limit − 1): number of primes stored.
    pub fn prime_count(&self) -> u64 {
        self.count
    }

    /// Is `n` prime? `n` must be below the limit.
    pub fn membership(&self, n: u64) -> Result<bool> {
        if n >= self.limit {
            return Err(Error::OutOfRange {
                query: n,
                limit: self.limit,
            });
        }
        if n == 2 {
            return Ok(true);
        }
        if n < 2 || n % 2 == 0 {
            return Ok(false);
        }
        let b = odd_index(n) as usize;
        Ok(self.words[b / 64] >> (b % 64) & 1 == 1)
    }

    /// Count set bits among bits `[0, bit]` inclusive.
    fn rank(&self, bit: usize) -> u64 {
        let word = bit / 64;
        let block = word / CUM_BLOCK;
        let mut c = self.cum[block];
        for w in block * CUM_BLOCK..word {
            c += self.words[w].count_ones() as u64;
        }
        let keep = 64 - (bit % 64 + 1);
        c + (self.words[word] << keep).count_ones() as u64
    }

    /// π(x): the number of primes ≤ x. Requires `2 ≤ x < limit`.
    pub fn pi(&self, x: u64) -> Result<u64> {
        if x >= self.limit {
            return Err(Error::OutOfRange {
                query: x,
                limit: self.limit,
            });
        }
        if x < 2 {
            return Err(Error::InvalidArgument(format!("pi({x}) needs x >= 2")));
        }
        Ok(1 + self.rank(((x - 1) / 2) as usize))
    }

    /// The i-th prime, 1-indexed: p_1 = 2.
    pub fn nth_prime(&self, i: u64) -> Result<u64> {
        if i == 0 {
            return Err(Error::InvalidArgument("prime index starts at 1".into()));
        }
        if i > self.count {
            return Err(Error::OutOfRange {
                query: i,
                limit: self.limit,
            });
        }
        if i == 1 {
            return Ok(2);
        }
        let target = i - 1; // select target-th set bit (1-based)
                            // binary search the cum blocks
        let mut lo = 0usize;
        let mut hi = self.cum.len() - 1;
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.cum[mid] < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut remaining = target - self.cum[lo];
        for w in lo * CUM_BLOCK..self.words.len() {
            let pop = self.words[w].count_ones() as u64;
            if pop >= remaining {
                let mut word = self.words[w];
                for _ in 1..remaining {
                    word &= word - 1;
                }
                let bit = w * 64 + word.trailing_zeros() as usize;
                return Ok(2 * bit as u64 + 1);
            }
            remaining -= pop;
        }
        unreachable!("count bookkeeping out of sync")
    }

    /// Largest prime ≤ x, if any.
    pub fn prev_prime(&self, x: u64) -> Result<Option<u64>> {
        if x >= self.limit {
            return Err(Error::OutOfRange {
                query: x,
                limit: self.limit,
            });
        }
        if x < 2 {
            return Ok(None);
        }
        if x == 2 {
            return Ok(Some(2));
        }
        let start = odd_index(if x % 2 == 0 { x - 1 } else { x }) as usize;
        let mut word = start / 64;
        let mut mask = if start % 64 == 63 {
            !0u64
        } else {
            (1u64 << (start % 64 + 1)) - 1
        };
        loop {
            let w = self.words[word] & mask;
            if w != 0 {
                let bit = word * 64 + 63 - w.leading_zeros() as usize;
                return Ok(Some(2 * bit as u64 + 1));
            }
            if word == 0 {
                return Ok(Some(2));
            }
            word -= 1;
            mask = !0u64;
        }
    }

    /// Iterate all primes in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(2u64).chain(
            self.words
                .iter()
                .enumerate()
                .flat_map(|(wi, &w)| BitIter {
                    word: w,
                    base: wi * 64,
                })
                .map(|b| 2 * b as u64 + 1),
        )
    }

    /// Write the sieved bitset to a cache file: magic, limit, then per-segment
    /// little-endian word counts and payloads.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&self.limit.to_le_bytes())?;
        let nsegs = (self.words.len() + CACHE_SEGMENT_WORDS - 1) / CACHE_SEGMENT_WORDS;
        f.write_all(&(nsegs as u64).to_le_bytes())?;
        for chunk in self.words.chunks(CACHE_SEGMENT_WORDS) {
            f.write_all(&(chunk.len() as u64).to_le_bytes())?;
            for w in chunk {
                f.write_all(&w.to_le_bytes())?;
            }
        }
        f.flush()?;
        Ok(())
    }

    /// Load a table previously written by [`write_cache`](Self::write_cache).
    /// Returns `Ok(None)` if the file does not exist or was built for a
    /// different limit, so cache absence is transparent to callers.
    pub fn read_cache(path: &Path, limit: u64) -> Result<Option<Self>> {
        let f = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut f = std::io::BufReader::new(f);
        let mut magic = [0u8; 8];
        if f.read_exact(&mut magic).is_err() || &magic != CACHE_MAGIC {
            return Ok(None);
        }
        let mut u = [0u8; 8];
        f.read_exact(&mut u)?;
        if u64::from_le_bytes(u) != limit {
            return Ok(None);
        }
        f.read_exact(&mut u)?;
        let nsegs = u64::from_le_bytes(u);
        let mut words = Vec::new();
        for _ in 0..nsegs {
            f.read_exact(&mut u)?;
            let n = u64::from_le_bytes(u) as usize;
            for _ in 0..n {
                f.read_exact(&mut u)?;
                words.push(u64::from_le_bytes(u));
            }
        }
        let expect = ((limit / 2) as usize + 63) / 64;
        if words.len() != expect {
            return Ok(None);
        }
        Ok(Some(Self::from_words(limit, words)))
    }
}

struct BitIter {
    word: u64,
    base: usize,
}

impl Iterator for BitIter {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let t = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + t)
    }
}

/// Forward-only segmented prime iterator up to `limit` (exclusive).
///
/// Memory is one segment plus the base primes up to √limit, regardless of
/// limit. Supports resuming past a given prime for checkpointed runs.
pub struct PrimeStream {
    limit: u64,
    base: Vec<u64>,
    seg: Vec<u64>,
    seg_lo: u64, // first (odd) number covered by `seg`
    seg_bits: usize,
    cursor: usize, // next bit to inspect within seg
    emitted_two: bool,
    start_after: u64,
}

impl PrimeStream {
    pub fn new(limit: u64) -> Self {
        Self::resume_after(limit, 0)
    }

    /// Yield only primes strictly greater than `start_after`.
    pub fn resume_after(limit: u64, start_after: u64) -> Self {
        let root = (limit as f64).sqrt() as u64 + 2;
        let base = simple_odd_primes(root.min(limit.max(3)));
        let seg_bits = (SEGMENT_NUMBERS / 2) as usize;
        let first = if start_after < 3 { 1 } else { start_after | 1 };
        // align segment start downward to a word boundary in global bit space
        let global_bit = odd_index(first);
        let seg_lo = 2 * (global_bit - global_bit % 64) + 1;
        let mut s = PrimeStream {
            limit,
            base,
            seg: vec![0u64; seg_bits / 64],
            seg_lo,
            seg_bits,
            cursor: (global_bit % 64) as usize,
            emitted_two: start_after >= 2,
            start_after,
        };
        s.fill();
        s
    }

    fn fill(&mut self) {
        let remaining = if self.seg_lo >= self.limit {
            0
        } else {
            ((self.limit - self.seg_lo) + 1) / 2
        };
        let bits = self.seg_bits.min(remaining as usize);
        if bits == 0 {
            self.seg.iter_mut().for_each(|w| *w = 0);
            return;
        }
        let nwords = (bits + 63) / 64;
        sieve_segment(&mut self.seg[..nwords], self.seg_lo, bits, &self.base);
        for w in self.seg[nwords..].iter_mut() {
            *w = 0;
        }
        if self.seg_lo == 1 {
            self.seg[0] &= !1;
        }
    }
}

impl Iterator for PrimeStream {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        if !self.emitted_two {
            self.emitted_two = true;
            if self.limit > 2 {
                return Some(2);
            }
            return None;
        }
        loop {
            while self.cursor < self.seg_bits {
                let w = self.seg[self.cursor / 64] >> (self.cursor % 64);
                if w == 0 {
                    self.cursor = (self.cursor / 64 + 1) * 64;
                    continue;
                }
                self.cursor += w.trailing_zeros() as usize;
                let n = self.seg_lo + 2 * self.cursor as u64;
                self.cursor += 1;
                if n <= self.start_after {
                    continue;
                }
                if n >= self.limit {
                    return None;
                }
                return Some(n);
            }
            self.seg_lo += 2 * self.seg_bits as u64;
            if self.seg_lo >= self.limit {
                return None;
            }
            self.cursor = 0;
            self.fill();
        }
    }
}

/// Maximum gap p_{i+1} − p_i over consecutive primes with p_{i+1} ≤ limit,
/// together with the smaller prime of the earliest pair attaining it.
/// Streams segments; never stores the primes.
pub fn max_prime_gap(limit: u64) -> Result<(u64, u64)> {
    if limit < 5 {
        return Err(Error::InvalidArgument(format!(
            "max_prime_gap needs limit >= 5, got {limit}"
        )));
    }
    let mut best = 0u64;
    let mut at = 0u64;
    let mut prev = 0u64;
    for p in PrimeStream::new(limit + 1) {
        if prev != 0 {
            let gap = p - prev;
            if gap > best {
                best = gap;
                at = prev;
            }
        }
        prev = p;
    }
    Ok((best, at))
}

// ---------------------------------------------------------------------------
// Factorization and multiplicity arithmetic
// ---------------------------------------------------------------------------

/// Smallest-prime-factor table for bulk factorization of n < limit.
pub struct SpfTable {
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn build(limit: u64) -> Result<Self> {
        if limit < 2 || limit > u32::MAX as u64 + 1 {
            return Err(Error::InvalidArgument(format!(
                "spf table limit must be in [2, 2^32], got {limit}"
            )));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n];
        let mut p = 2usize;
        while p * p < n {
            if spf[p] == 0 {
                let mut m = p * p;
                while m < n {
                    if spf[m] == 0 {
                        spf[m] = p as u32;
                    }
                    m += p;
                }
            }
            p += 1;
        }
        for (i, s) in spf.iter_mut().enumerate().skip(2) {
            if *s == 0 {
                *s = i as u32;
            }
        }
        Ok(SpfTable { spf })
    }

    pub fn limit(&self) -> u64 {
        self.spf.len() as u64
    }

    #[inline]
    pub fn smallest_factor(&self, n: u64) -> u32 {
        self.spf[n as usize]
    }

    /// (Ω(n), ω(n)) by SPF walk. n must be within the table.
    #[inline]
    pub fn omega(&self, mut n: u64) -> (u32, u32) {
        let mut big = 0u32;
        let mut small = 0u32;
        let mut last = 0u32;
        while n > 1 {
            let p = self.spf[n as usize];
            big += 1;
            if p != last {
                small += 1;
                last = p;
            }
            n /= p as u64;
        }
        (big, small)
    }
}

/// Deterministic Miller–Rabin for u64 (base set valid for all 64-bit inputs).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Full factorization by trial division, short-circuiting through
/// Miller–Rabin once the cofactor is prime.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for p in [2u64, 3, 5] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut d = 7u64;
    let steps = [4u64, 2, 4, 2, 4, 6, 2, 6]; // wheel mod 30 from 7
    let mut i = 0;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
            if n > 1 && is_prime_u64(n) {
                break;
            }
        } else if i % 8 == 0 && n > 1 && d > 1000 && is_prime_u64(n) {
            break;
        }
        d += steps[i % 8];
        i += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Prime-factor multiplicities of one integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorMultiplicity {
    pub n: u64,
    /// Ω(n): prime factors counted with multiplicity.
    pub omega_big: u32,
    /// ω(n): distinct prime factors.
    pub omega_small: u32,
}

/// Exact Ω and ω of n ≥ 1, via SPF lookup when the table covers n.
pub fn big_omega(n: u64, spf: Option<&SpfTable>) -> Result<FactorMultiplicity> {
    if n == 0 {
        return Err(Error::InvalidArgument("omega of 0 is undefined".into()));
    }
    if let Some(t) = spf {
        if n < t.limit() {
            let (big, small) = t.omega(n);
            return Ok(FactorMultiplicity {
                n,
                omega_big: big,
                omega_small: small,
            });
        }
    }
    let fac = factor_u64(n);
    Ok(FactorMultiplicity {
        n,
        omega_big: fac.iter().map(|&(_, e)| e).sum(),
        omega_small: fac.len() as u32,
    })
}

/// τ_k(d) = k^{ω(d)} for squarefree d; rejects non-squarefree arguments.
pub fn tau_k_squarefree(d: u64, k: u32) -> Result<u64> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument("tau_k needs d >= 1, k >= 1".into()));
    }
    let fac = factor_u64(d);
    if fac.iter().any(|&(_, e)| e > 1) {
        return Err(Error::InvalidArgument(format!("{d} is not squarefree")));
    }
    Ok((k as u64).pow(fac.len() as u32))
}
