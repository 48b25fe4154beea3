//! Goldbach partitions `ne = p + q` and quasi-partitions `(p, ne − p)`.
//!
//! By default the prime 2 is excluded from every pair, so `phi(4) = 0`;
//! pass `allow_two = true` to count `(2, 2)`.

use serde::Serialize;

use crate::error::{require_even, Error, Result};
use crate::exec::{chunk_bounds, chunk_count, Exec};
use crate::primes::{check_sieve_guard, OddSegment, PrimeBitmap};

/// Largest even number accepted by [`phi`].
pub const PHI_SCAN_LIMIT: u64 = 1 << 33;
/// Largest upper bound accepted by [`phi_scan`] (one sieve bit per odd number).
pub const PHI_SCAN_RANGE_GUARD: u64 = 1 << 30;

const PHI_SEGMENT: u64 = 1 << 20;
const SCAN_CHUNK: u64 = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionSet {
    pub ne: u64,
    /// `(p, q)` with `p ≤ q`, ascending in `p`.
    pub pairs: Vec<(u64, u64)>,
    pub phi: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuasiEntry {
    pub p: u64,
    pub q: u64,
    pub q_is_prime: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuasiSet {
    pub ne: u64,
    pub entries: Vec<QuasiEntry>,
    pub r: u64,
}

impl QuasiSet {
    /// Entries whose partner is prime, i.e. ordered Goldbach pairs.
    pub fn flagged(&self) -> impl Iterator<Item = &QuasiEntry> {
        self.entries.iter().filter(|e| e.q_is_prime)
    }
}

pub fn goldbach_pairs(ne: u64, allow_two: bool) -> Result<PartitionSet> {
    require_even(ne, 4)?;
    check_sieve_guard(ne)?;
    let primes = PrimeBitmap::new(ne);
    let mut pairs = Vec::new();
    if allow_two && ne == 4 {
        pairs.push((2, 2));
    }
    pairs.extend(
        primes
            .odd_primes()
            .take_while(|&p| p <= ne / 2)
            .filter(|&p| primes.is_prime(ne - p))
            .map(|p| (p, ne - p)),
    );
    let phi = pairs.len() as u64;
    Ok(PartitionSet { ne, pairs, phi })
}

/// Counting options for [`phi_with`] and [`phi_scan_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counting {
    pub allow_two: bool,
    pub exec: Exec,
}

/// Number of unordered Goldbach partitions of `ne`.
pub fn phi(ne: u64) -> Result<u64> {
    phi_with(ne, Counting::default())
}

/// Counts odd primes `p ≤ ne/2` with `ne − p` prime by sieving each window
/// of candidates together with its mirror image `[ne − hi, ne − lo]`.
pub fn phi_with(ne: u64, opts: Counting) -> Result<u64> {
    require_even(ne, 4)?;
    if ne > PHI_SCAN_LIMIT {
        return Err(Error::Guard {
            what: "phi argument",
            value: ne,
            guard_name: "PHI_SCAN_LIMIT",
            guard: PHI_SCAN_LIMIT,
        });
    }
    let two = u64::from(opts.allow_two && ne == 4);
    let half = ne / 2;
    if half < 3 {
        return Ok(two);
    }
    let base = PrimeBitmap::new(ne.isqrt()).primes();
    let chunks = chunk_count(3, half, PHI_SEGMENT);
    let odd = opts.exec.sum_range(0..chunks, |i| {
        let (lo, hi) = chunk_bounds(3, half, PHI_SEGMENT, i);
        let low = OddSegment::sieve(lo, hi, &base);
        let high = OddSegment::sieve(ne - hi, ne - lo, &base);
        low.iter().filter(|&p| high.contains(ne - p)).count() as u64
    });
    Ok(odd + two)
}

/// One entry `(p, ne − p)` per odd prime `p ≤ ne − 3`.
pub fn quasi_pairs(ne: u64) -> Result<QuasiSet> {
    require_even(ne, 6)?;
    check_sieve_guard(ne)?;
    let primes = PrimeBitmap::new(ne);
    let entries: Vec<QuasiEntry> = primes
        .odd_primes()
        .take_while(|&p| p <= ne - 3)
        .map(|p| QuasiEntry {
            p,
            q: ne - p,
            q_is_prime: primes.is_prime(ne - p),
        })
        .collect();
    let r = entries.len() as u64;
    Ok(QuasiSet { ne, entries, r })
}

/// `(ne, phi)` for every even `ne` in `[lo, hi]`, ascending.
pub fn phi_scan(lo: u64, hi: u64) -> Result<PhiScan> {
    phi_scan_with(lo, hi, Counting::default())
}

pub fn phi_scan_with(lo: u64, hi: u64, opts: Counting) -> Result<PhiScan> {
    require_even(lo, 4)?;
    require_even(hi, 4)?;
    if lo > hi {
        return Err(Error::Domain(format!("scan range [{lo}, {hi}] is empty")));
    }
    if hi > PHI_SCAN_RANGE_GUARD {
        return Err(Error::Guard {
            what: "phi_scan upper bound",
            value: hi,
            guard_name: "PHI_SCAN_RANGE_GUARD",
            guard: PHI_SCAN_RANGE_GUARD,
        });
    }
    let bitmap = PrimeBitmap::new(hi);
    let odd_primes: Vec<u64> = bitmap.odd_primes().take_while(|&p| p <= hi / 2).collect();
    Ok(PhiScan {
        bitmap,
        odd_primes,
        opts,
        next: lo,
        hi,
        buffer: Vec::new().into_iter(),
    })
}

/// Streaming iterator over `(ne, phi)` records. Records are produced in
/// chunks of consecutive even numbers; a chunk may be counted in parallel but
/// is always yielded in ascending order.
pub struct PhiScan {
    bitmap: PrimeBitmap,
    odd_primes: Vec<u64>,
    opts: Counting,
    next: u64,
    hi: u64,
    buffer: std::vec::IntoIter<(u64, u64)>,
}

impl PhiScan {
    fn phi_at(&self, ne: u64) -> u64 {
        let two = u64::from(self.opts.allow_two && ne == 4);
        let end = self.odd_primes.partition_point(|&p| p <= ne / 2);
        two + self.odd_primes[..end]
            .iter()
            .filter(|&&p| self.bitmap.is_prime(ne - p))
            .count() as u64
    }

    fn fill(&mut self) {
        let first = self.next;
        let last = (first + 2 * (SCAN_CHUNK - 1)).min(self.hi);
        let n = (last - first) / 2 + 1;
        let records = self.opts.exec.map_range(0..n, |k| {
            let ne = first + 2 * k;
            (ne, self.phi_at(ne))
        });
        self.next = last + 2;
        self.buffer = records.into_iter();
    }
}

impl Iterator for PhiScan {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        if let Some(rec) = self.buffer.next() {
            return Some(rec);
        }
        if self.next > self.hi {
            return None;
        }
        self.fill();
        self.buffer.next()
    }
}

pub const PHI_CSV_HEADER: &str = "ne,phi";

/// Writes a scan as CSV with header `ne,phi` and LF line endings.
pub fn write_phi_csv<W: std::io::Write>(
    out: &mut W,
    records: impl IntoIterator<Item = (u64, u64)>,
) -> std::io::Result<()> {
    writeln!(out, "{PHI_CSV_HEADER}")?;
    for (ne, phi) in records {
        writeln!(out, "{ne},{phi}")?;
    }
    Ok(())
}

/// Ordered count `2·phi(ne) − [ne/2 prime]`: cells `(p, q)` and `(q, p)`
/// both count except on the diagonal.
pub fn ordered_count(phi: u64, half_is_prime: bool) -> u64 {
    2 * phi - u64::from(half_is_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::is_prime;
    use crate::primes::oracle::{is_prime_trial, primes_upto};

    /// Naive double loop over the primes; the ground truth for `phi`.
    fn brute_phi(ne: u64, primes: &[u64], allow_two: bool) -> u64 {
        let mut n = 0;
        for (i, &p) in primes.iter().enumerate() {
            if p == 2 && !allow_two {
                continue;
            }
            for &q in &primes[i..] {
                if p + q == ne {
                    n += 1;
                }
                if p + q >= ne {
                    break;
                }
            }
        }
        n
    }

    #[test]
    fn pair_examples() {
        let six = goldbach_pairs(6, false).unwrap();
        assert_eq!(six.pairs, vec![(3, 3)]);
        assert_eq!(six.phi, 1);
        let t = goldbach_pairs(34, false).unwrap();
        assert_eq!(t.pairs, vec![(3, 31), (5, 29), (11, 23), (17, 17)]);
        assert_eq!(t.phi, 4);
        assert_eq!(goldbach_pairs(100, false).unwrap().phi, 6);
        assert_eq!(goldbach_pairs(4, false).unwrap().phi, 0);
        assert_eq!(goldbach_pairs(4, true).unwrap().pairs, vec![(2, 2)]);
        assert!(matches!(goldbach_pairs(9, false), Err(Error::Domain(_))));
    }

    #[test]
    fn pair_invariants() {
        for ne in (4..=3000).step_by(2) {
            let set = goldbach_pairs(ne, false).unwrap();
            assert_eq!(set.phi as usize, set.pairs.len());
            assert!(set.pairs.windows(2).all(|w| w[0].0 < w[1].0));
            for &(p, q) in &set.pairs {
                assert!(p <= q && p + q == ne && is_prime_trial(p) && is_prime_trial(q));
            }
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(100).unwrap(), 6);
        assert_eq!(phi(6).unwrap(), 1);
        assert_eq!(phi(4).unwrap(), 0);
        assert_eq!(
            phi_with(
                4,
                Counting {
                    allow_two: true,
                    ..Default::default()
                }
            )
            .unwrap(),
            1
        );
        // verified by brute force below
        assert_eq!(phi(2688).unwrap(), 88);
        assert_eq!(brute_phi(2688, &primes_upto(2688), false), 88);
        assert!(matches!(phi(PHI_SCAN_LIMIT + 2), Err(Error::Guard { .. })));
    }

    #[test]
    fn phi_matches_brute_force() {
        let primes = primes_upto(4000);
        for ne in (4..=4000).step_by(2) {
            let expected = brute_phi(ne, &primes, false);
            assert_eq!(phi(ne).unwrap(), expected, "{ne}");
            assert_eq!(goldbach_pairs(ne, false).unwrap().phi, expected);
        }
    }

    #[test]
    fn phi_exec_independent_across_segments() {
        // spans several PHI_SEGMENT windows
        let ne = 6 * PHI_SEGMENT + 1_234;
        let seq = phi_with(
            ne,
            Counting {
                allow_two: false,
                exec: Exec::Sequential,
            },
        )
        .unwrap();
        let par = phi_with(
            ne,
            Counting {
                allow_two: false,
                exec: Exec::Parallel,
            },
        )
        .unwrap();
        assert_eq!(seq, par);
        let bitmap = PrimeBitmap::new(ne);
        let direct = bitmap
            .odd_primes()
            .take_while(|&p| p <= ne / 2)
            .filter(|&p| bitmap.is_prime(ne - p))
            .count() as u64;
        assert_eq!(seq, direct);
    }

    #[test]
    fn quasi_examples() {
        let q = quasi_pairs(34).unwrap();
        assert_eq!(q.r, 10);
        let qs: Vec<u64> = q.entries.iter().map(|e| e.q).collect();
        assert_eq!(qs, vec![31, 29, 27, 23, 21, 17, 15, 11, 5, 3]);
        let flagged: Vec<u64> = q.flagged().map(|e| e.q).collect();
        assert_eq!(flagged, vec![31, 29, 23, 17, 11, 5, 3]);
        assert_eq!(flagged.len() as u64, ordered_count(4, true));

        let six = quasi_pairs(6).unwrap();
        assert_eq!(
            six.entries,
            vec![QuasiEntry {
                p: 3,
                q: 3,
                q_is_prime: true
            }]
        );
        assert!(matches!(quasi_pairs(4), Err(Error::Domain(_))));
    }

    #[test]
    fn quasi_consistency() {
        for ne in (6..=10_000).step_by(2) {
            let q = quasi_pairs(ne).unwrap();
            let set = goldbach_pairs(ne, false).unwrap();
            let expected_r = (3..=ne - 3).filter(|&p| is_prime(p)).count() as u64;
            assert_eq!(q.r, expected_r);
            assert_eq!(
                q.flagged().count() as u64,
                ordered_count(set.phi, is_prime(ne / 2)),
                "{ne}"
            );
            for &(p, pq) in &set.pairs {
                assert!(q.flagged().any(|e| e.p == p && e.q == pq));
            }
        }
    }

    #[test]
    fn scan_examples() {
        let recs: Vec<_> = phi_scan(4, 10).unwrap().collect();
        assert_eq!(recs, vec![(4, 0), (6, 1), (8, 1), (10, 2)]);
        assert_eq!(
            phi_scan(100, 100).unwrap().collect::<Vec<_>>(),
            vec![(100, 6)]
        );
        assert_eq!(phi_scan(6, 6).unwrap().collect::<Vec<_>>(), vec![(6, 1)]);
        assert!(matches!(phi_scan(10, 4), Err(Error::Domain(_))));
        assert!(matches!(phi_scan(4, 7), Err(Error::Domain(_))));
        assert!(matches!(
            phi_scan(4, PHI_SCAN_RANGE_GUARD + 2),
            Err(Error::Guard { .. })
        ));
    }

    #[test]
    fn scan_is_deterministic_and_matches_phi() {
        let seq: Vec<_> = phi_scan_with(
            4,
            6000,
            Counting {
                allow_two: false,
                exec: Exec::Sequential,
            },
        )
        .unwrap()
        .collect();
        let par: Vec<_> = phi_scan_with(
            4,
            6000,
            Counting {
                allow_two: false,
                exec: Exec::Parallel,
            },
        )
        .unwrap()
        .collect();
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 2999);
        for &(ne, n) in &seq {
            assert_eq!(n, phi(ne).unwrap());
        }
    }

    #[test]
    fn csv_format() {
        let mut out = Vec::new();
        write_phi_csv(&mut out, phi_scan(4, 10).unwrap()).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "ne,phi\n4,0\n6,1\n8,1\n10,2\n"
        );
    }
}
