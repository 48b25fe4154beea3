//! Prime generation, primality predicates and prime counting.
//!
//! Two sieve layouts back everything here:
//!
//! * [`PrimeBitmap`]: a plain odd-only bit-packed sieve over `[0, limit]`,
//!   used whenever a hot loop needs O(1) membership tests.
//! * [`OddSegment`]: the same layout restricted to a window `[lo, hi]`,
//!   filled from a table of base primes. Windows are independent, so large
//!   sieves and counts shard them across workers and merge in order.
//!
//! [`sieve`] picks the plain layout up to [`DENSE_SIEVE_LIMIT`] and the
//! segmented one above it.

use crate::error::{require_even, Error, Result};
use crate::exec::{chunk_bounds, chunk_count, Exec};

/// Largest limit accepted by [`sieve`].
pub const SIEVE_GUARD: u64 = 1 << 32;
/// Limits up to this size use the plain sieve; larger ones are segmented.
pub const DENSE_SIEVE_LIMIT: u64 = 1 << 26;
/// Largest argument accepted by [`prime_count`].
pub const PRIME_COUNT_GUARD: u64 = 1 << 36;
/// Width (in integers) of one segment of the segmented sieve.
pub const SEGMENT_SPAN: u64 = 1 << 21;

const WORD_BITS: u64 = 64;

/// Primality flags for the odd integers `start, start + 2, ...` of a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddSegment {
    start: u64,
    len: u64,
    words: Vec<u64>,
}

impl OddSegment {
    fn all_set(start: u64, len: u64) -> Self {
        let n_words = len.div_ceil(WORD_BITS) as usize;
        let mut words = vec![u64::MAX; n_words];
        let tail = len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << tail) - 1;
            }
        }
        OddSegment { start, len, words }
    }

    fn empty() -> Self {
        OddSegment {
            start: 1,
            len: 0,
            words: Vec::new(),
        }
    }

    #[inline]
    fn clear(&mut self, idx: u64) {
        self.words[(idx / WORD_BITS) as usize] &= !(1u64 << (idx % WORD_BITS));
    }

    #[inline]
    fn get(&self, idx: u64) -> bool {
        self.words[(idx / WORD_BITS) as usize] >> (idx % WORD_BITS) & 1 == 1
    }

    /// Sieves the odd integers of `[lo, hi]` with `base`, which must contain
    /// every prime up to `⌊√hi⌋` in ascending order (2 may be present; it is
    /// skipped).
    pub fn sieve(lo: u64, hi: u64, base: &[u64]) -> Self {
        let start = lo | 1;
        if hi < start {
            return Self::empty();
        }
        let end = if hi.is_multiple_of(2) { hi - 1 } else { hi };
        let len = (end - start) / 2 + 1;
        let mut seg = Self::all_set(start, len);
        if start == 1 {
            seg.clear(0);
        }
        for &p in base.iter().filter(|&&p| p > 2) {
            let square = p * p;
            if square > end {
                break;
            }
            let mut first = square.max(start.div_ceil(p) * p);
            if first % 2 == 0 {
                first += p;
            }
            let mut idx = (first - start) / 2;
            while idx < len {
                seg.clear(idx);
                idx += p;
            }
        }
        seg
    }

    /// In-place sieve of the odd integers in `[1, limit]`; needs no base table.
    fn sieve_from_one(limit: u64) -> Self {
        if limit < 1 {
            return Self::empty();
        }
        let end = if limit.is_multiple_of(2) {
            limit - 1
        } else {
            limit
        };
        let len = (end - 1) / 2 + 1;
        let mut seg = Self::all_set(1, len);
        seg.clear(0);
        let mut i = 1;
        loop {
            let p = 2 * i + 1;
            if p * p > end {
                break;
            }
            if seg.get(i) {
                let mut idx = (p * p - 1) / 2;
                while idx < len {
                    seg.clear(idx);
                    idx += p;
                }
            }
            i += 1;
        }
        seg
    }

    /// Whether odd `n` inside the window is prime. Values outside the window
    /// or even values report `false`.
    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        if n < self.start || n.is_multiple_of(2) {
            return false;
        }
        let idx = (n - self.start) / 2;
        idx < self.len && self.get(idx)
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Ascending odd primes of the window.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let start = self.start;
        self.words.iter().enumerate().flat_map(move |(w, &word)| {
            let base = start + 2 * WORD_BITS * w as u64;
            BitIter(word).map(move |bit| base + 2 * bit)
        })
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.0 == 0 {
            return None;
        }
        let tz = u64::from(self.0.trailing_zeros());
        self.0 &= self.0 - 1;
        Some(tz)
    }
}

/// O(1) primality lookups for every integer in `[0, limit]`.
#[derive(Debug, Clone)]
pub struct PrimeBitmap {
    limit: u64,
    odd: OddSegment,
}

impl PrimeBitmap {
    /// Plain sieve; callers are responsible for keeping `limit` reasonable
    /// (one bit per odd integer).
    pub fn new(limit: u64) -> Self {
        PrimeBitmap {
            limit,
            odd: OddSegment::sieve_from_one(limit),
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Primality of `n`; values above the limit fall back to [`is_prime`].
    #[inline]
    pub fn is_prime(&self, n: u64) -> bool {
        if n > self.limit {
            return is_prime(n);
        }
        n == 2 || self.odd.contains(n)
    }

    pub fn count(&self) -> u64 {
        self.odd.count() + u64::from(self.limit >= 2)
    }

    /// Ascending primes `≤ limit`, including 2.
    pub fn primes(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(approx_count_hint(self.limit));
        if self.limit >= 2 {
            out.push(2);
        }
        out.extend(self.odd.iter());
        out
    }

    /// Ascending odd primes `≤ limit`.
    pub fn odd_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.odd.iter()
    }
}

fn approx_count_hint(limit: u64) -> usize {
    if limit < 16 {
        8
    } else {
        let x = limit as f64;
        (1.26 * x / x.ln()) as usize
    }
}

/// Ordered primes up to a limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn count(&self) -> u64 {
        self.primes.len() as u64
    }

    /// Primes `> 2`.
    pub fn odd_primes(&self) -> &[u64] {
        match self.primes.first() {
            Some(2) => &self.primes[1..],
            _ => &self.primes,
        }
    }

    /// π(x) for `x ≤ limit`. Larger `x` is clamped to the table.
    pub fn pi(&self, x: u64) -> u64 {
        self.primes.partition_point(|&p| p <= x) as u64
    }

    pub fn contains(&self, n: u64) -> bool {
        n <= self.limit && self.primes.binary_search(&n).is_ok()
    }

    pub fn into_primes(self) -> Vec<u64> {
        self.primes
    }
}

pub(crate) fn check_sieve_guard(limit: u64) -> Result<()> {
    if limit > SIEVE_GUARD {
        return Err(Error::Guard {
            what: "sieve limit",
            value: limit,
            guard_name: "SIEVE_GUARD",
            guard: SIEVE_GUARD,
        });
    }
    Ok(())
}

/// All primes `≤ limit`.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    sieve_with(limit, Exec::default())
}

pub fn sieve_with(limit: u64, exec: Exec) -> Result<PrimeTable> {
    check_sieve_guard(limit)?;
    if limit <= DENSE_SIEVE_LIMIT {
        Ok(PrimeTable {
            limit,
            primes: PrimeBitmap::new(limit).primes(),
        })
    } else {
        Ok(sieve_segmented(limit, exec))
    }
}

/// Segmented sieve regardless of size. Exposed so the two layouts can be
/// compared directly.
pub fn sieve_segmented(limit: u64, exec: Exec) -> PrimeTable {
    let base = PrimeBitmap::new(limit.isqrt()).primes();
    let chunks = chunk_count(0, limit, SEGMENT_SPAN);
    let parts = exec.map_range(0..chunks, |i| {
        let (lo, hi) = chunk_bounds(0, limit, SEGMENT_SPAN, i);
        segment_primes(lo, hi, &base)
    });
    PrimeTable {
        limit,
        primes: parts.concat(),
    }
}

fn segment_primes(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    if lo <= 2 && 2 <= hi {
        out.push(2);
    }
    out.extend(OddSegment::sieve(lo, hi, base).iter());
    out
}

/// Primes in `[lo, hi]`, using `base` for the sieving primes.
pub fn sieve_segment(lo: u64, hi: u64, base: &PrimeTable) -> Result<Vec<u64>> {
    if lo > hi {
        return Err(Error::Precondition(format!(
            "segment [{lo}, {hi}] is empty"
        )));
    }
    let root = hi.isqrt();
    if base.limit < root {
        return Err(Error::Precondition(format!(
            "base table limit {} is below ⌊√{hi}⌋ = {root}",
            base.limit
        )));
    }
    Ok(segment_primes(lo, hi, &base.primes))
}

const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (u128::from(a) * u128::from(b) % u128::from(m)) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for all `u64` (Miller–Rabin with the first
/// twelve prime bases, exact below 3.3·10^24).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in WITNESSES {
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

/// The `x`-th prime with `2` as the first; `nth_prime(0) = 0`.
pub fn nth_prime(x: u64) -> Result<u64> {
    if x == 0 {
        return Ok(0);
    }
    // p_n < n (ln n + ln ln n) for n ≥ 6
    let bound = if x < 6 {
        13
    } else {
        let n = x as f64;
        (n * (n.ln() + n.ln().ln())).ceil() as u64
    };
    let table = sieve(bound)?;
    table
        .primes
        .get((x - 1) as usize)
        .copied()
        .ok_or_else(|| Error::Overflow(format!("nth_prime bound {bound} too small for {x}")))
}

/// Exact π(x).
pub fn prime_count(x: u64) -> Result<u64> {
    prime_count_with(x, Exec::default())
}

pub fn prime_count_with(x: u64, exec: Exec) -> Result<u64> {
    if x > PRIME_COUNT_GUARD {
        return Err(Error::Guard {
            what: "prime_count argument",
            value: x,
            guard_name: "PRIME_COUNT_GUARD",
            guard: PRIME_COUNT_GUARD,
        });
    }
    if x <= DENSE_SIEVE_LIMIT {
        return Ok(PrimeBitmap::new(x).count());
    }
    let base = PrimeBitmap::new(x.isqrt()).primes();
    let chunks = chunk_count(0, x, SEGMENT_SPAN);
    let odd = exec.sum_range(0..chunks, |i| {
        let (lo, hi) = chunk_bounds(0, x, SEGMENT_SPAN, i);
        OddSegment::sieve(lo, hi, &base).count()
    });
    Ok(odd + 1)
}

/// `x / ln x`, the approximation to π(x).
pub fn pi_approx(x: u64) -> Result<f64> {
    if x < 2 {
        return Err(Error::Domain(format!("pi_approx needs x >= 2, got {x}")));
    }
    let x = x as f64;
    Ok(x / x.ln())
}

/// Prime counts of the two halves of `[1, ne]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalCounts {
    /// π(ne/2)
    pub low: u64,
    /// π(ne) − π(ne/2)
    pub high: u64,
}

impl IntervalCounts {
    /// Both halves hold at least one prime.
    pub fn both_nonempty(&self) -> bool {
        self.low >= 1 && self.high >= 1
    }
}

pub fn interval_prime_count(ne: u64) -> Result<IntervalCounts> {
    require_even(ne, 6)?;
    let low = prime_count(ne / 2)?;
    let all = prime_count(ne)?;
    Ok(IntervalCounts {
        low,
        high: all - low,
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    /// Trial division, independent of every sieve in this crate.
    pub fn is_prime_trial(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    pub fn primes_upto(limit: u64) -> Vec<u64> {
        (0..=limit).filter(|&n| is_prime_trial(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn big_table() -> &'static PrimeTable {
        static TABLE: OnceLock<PrimeTable> = OnceLock::new();
        TABLE.get_or_init(|| sieve(10_000_000).unwrap())
    }

    #[test]
    fn sieve_examples() {
        assert!(sieve(0).unwrap().primes().is_empty());
        assert!(sieve(1).unwrap().primes().is_empty());
        assert_eq!(sieve(2).unwrap().primes(), &[2]);
        assert_eq!(sieve(10).unwrap().primes(), &primes_upto(10)[..]);
        assert_eq!(sieve(10).unwrap().primes(), &[2, 3, 5, 7]);
        let t = sieve(34).unwrap();
        assert_eq!(t.primes(), &primes_upto(34)[..]);
        assert_eq!(t.odd_primes(), &[3, 5, 7, 11, 13, 17, 19, 23, 29, 31]);
        assert_eq!(t.count(), 11);
    }

    #[test]
    fn sieve_matches_trial_division_to_1e5() {
        let oracle = primes_upto(100_000);
        let t = sieve(100_000).unwrap();
        assert_eq!(t.primes(), &oracle[..]);
        for limit in [3, 4, 63, 64, 65, 127, 128, 129, 1000, 4097, 99_999] {
            let expected: Vec<u64> = oracle.iter().copied().filter(|&p| p <= limit).collect();
            assert_eq!(
                sieve(limit).unwrap().primes(),
                &expected[..],
                "limit {limit}"
            );
        }
    }

    #[test]
    fn sieve_guard() {
        let err = sieve(SIEVE_GUARD + 1).unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains("SIEVE_GUARD"));
    }

    #[test]
    fn segmented_equals_plain() {
        for limit in [0, 1, 2, 3, 1_000_000, 3 * SEGMENT_SPAN + 17] {
            let plain = PrimeTable {
                limit,
                primes: PrimeBitmap::new(limit).primes(),
            };
            assert_eq!(sieve_segmented(limit, Exec::Sequential), plain);
            assert_eq!(sieve_segmented(limit, Exec::Parallel), plain);
        }
    }

    #[test]
    fn segment_examples() {
        assert_eq!(
            sieve_segment(90, 100, &sieve(10).unwrap()).unwrap(),
            vec![97]
        );
        assert_eq!(
            sieve_segment(0, 10, &sieve(4).unwrap()).unwrap(),
            vec![2, 3, 5, 7]
        );
        assert!(sieve_segment(14, 16, &sieve(4).unwrap())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn segment_preconditions() {
        let small = sieve(5).unwrap();
        assert!(matches!(
            sieve_segment(0, 100, &small),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            sieve_segment(10, 9, &small),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn primality_examples() {
        assert!(!is_prime(0));
        assert!(!is_prime(1));
        assert!(is_prime(2));
        assert!(is_prime(31));
        assert!(!is_prime(27));
        for n in 0..20_000 {
            assert_eq!(is_prime(n), is_prime_trial(n), "{n}");
        }
        // strong pseudoprimes to several small bases
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(is_prime(18_446_744_073_709_551_557));
    }

    #[test]
    fn bitmap_agrees_with_predicate() {
        let bm = PrimeBitmap::new(5000);
        for n in 0..6000 {
            assert_eq!(bm.is_prime(n), is_prime_trial(n), "{n}");
        }
    }

    #[test]
    fn nth_prime_examples() {
        assert_eq!(nth_prime(0).unwrap(), 0);
        assert_eq!(nth_prime(1).unwrap(), 2);
        assert_eq!(nth_prime(11).unwrap(), 31);
        let oracle = primes_upto(2000);
        for (i, &p) in oracle.iter().enumerate() {
            assert_eq!(nth_prime(i as u64 + 1).unwrap(), p);
        }
    }

    #[test]
    fn prime_count_examples() {
        assert_eq!(prime_count(0).unwrap(), 0);
        assert_eq!(prime_count(2).unwrap(), 1);
        assert_eq!(prime_count(100).unwrap(), 25);
        assert_eq!(prime_count(1_000_000).unwrap(), 78_498);
        assert_eq!(sieve_segmented(1_000_000, Exec::Parallel).count(), 78_498);
    }

    #[test]
    fn prime_count_matches_sieve_length() {
        let t = sieve(1_000_000).unwrap();
        for x in (0..=1_000_000).step_by(997).chain([1_000_000]) {
            assert_eq!(prime_count(x).unwrap(), t.pi(x), "{x}");
        }
    }

    #[test]
    fn pi_approx_values() {
        let expected = 100.0 / 100f64.ln();
        assert!((pi_approx(100).unwrap() - expected).abs() < 1e-9);
        assert!((pi_approx(100).unwrap() - 21.714_724_095).abs() < 1e-9);
        assert!(matches!(pi_approx(1), Err(Error::Domain(_))));
    }

    #[test]
    fn approximation_error_shrinks() {
        let errs: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&x| {
                let exact = prime_count(x).unwrap() as f64;
                (exact - pi_approx(x).unwrap()).abs() / exact
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn interval_counts() {
        assert_eq!(
            interval_prime_count(20).unwrap(),
            IntervalCounts { low: 4, high: 4 }
        );
        assert_eq!(
            interval_prime_count(6).unwrap(),
            IntervalCounts { low: 2, high: 1 }
        );
        assert_eq!(
            interval_prime_count(100).unwrap(),
            IntervalCounts { low: 15, high: 10 }
        );
        assert!(matches!(interval_prime_count(7), Err(Error::Domain(_))));
        assert!(matches!(interval_prime_count(4), Err(Error::Domain(_))));
        for ne in (6..=2000).step_by(2) {
            assert!(interval_prime_count(ne).unwrap().both_nonempty(), "{ne}");
        }
    }

    proptest! {
        #[test]
        fn segment_is_slice_of_full_sieve(a in 0u64..=10_000_000, b in 0u64..=10_000_000) {
            let (lo, hi) = (a.min(b), a.max(b));
            let full = big_table();
            let base = sieve(hi.isqrt()).unwrap();
            let got = sieve_segment(lo, hi, &base).unwrap();
            let from = full.primes().partition_point(|&p| p < lo);
            let to = full.primes().partition_point(|&p| p <= hi);
            prop_assert_eq!(&got[..], &full.primes()[from..to]);
        }

        #[test]
        fn consecutive_segments_concatenate(lo in 0u64..1_000_000, w1 in 0u64..5000, w2 in 0u64..5000) {
            let mid = lo + w1;
            let hi = mid + 1 + w2;
            let base = sieve(hi.isqrt()).unwrap();
            let mut joined = sieve_segment(lo, mid, &base).unwrap();
            joined.extend(sieve_segment(mid + 1, hi, &base).unwrap());
            prop_assert_eq!(joined, sieve_segment(lo, hi, &base).unwrap());
        }

        #[test]
        fn is_prime_matches_trial(n in 0u64..5_000_000) {
            prop_assert_eq!(is_prime(n), is_prime_trial(n));
        }
    }
}
