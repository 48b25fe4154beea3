//! Odd-sum matrices over the labels `1, 3, ..., ne − 1` and their
//! prime-labelled submatrix.
//!
//! Matrices are held in accessor form: two label axes plus a rule for each
//! cell, so construction costs O(labels) and cells are computed on demand.
//! Dense materialization is limited to `ne ≤ MATRIX_DENSE_GUARD`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{require_even, Error, Result};
use crate::exec::Exec;
use crate::primes::{check_sieve_guard, is_prime, PrimeBitmap};

pub const MATRIX_DENSE_GUARD: u64 = 10_000;

/// Largest number of evens one [`audit_range`] call may cover.
pub const AUDIT_RANGE_GUARD: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    /// Every sum `x + y` of odd labels.
    Full,
    /// Cells on or above the anti-diagonal `x + y = ne`; the rest read 0.
    Regular,
    /// Only cells with `x + y = ne`; the rest read 0.
    MaxAntidiagonal,
    /// Full sums restricted to odd prime labels.
    Prime,
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MatrixKind::Full),
            "regular" => Ok(MatrixKind::Regular),
            "max" | "max-antidiagonal" => Ok(MatrixKind::MaxAntidiagonal),
            "prime" => Ok(MatrixKind::Prime),
            other => Err(Error::Domain(format!(
                "unknown matrix kind {other:?} (expected full, regular, max-antidiagonal or prime)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Labels {
    /// `1, 3, ..., 2·count − 1`
    Odd {
        count: u64,
    },
    List(Vec<u64>),
}

impl Labels {
    fn len(&self) -> u64 {
        match self {
            Labels::Odd { count } => *count,
            Labels::List(v) => v.len() as u64,
        }
    }

    fn get(&self, i: u64) -> u64 {
        match self {
            Labels::Odd { .. } => 2 * i + 1,
            Labels::List(v) => v[i as usize],
        }
    }

    fn to_vec(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumMatrix {
    ne: u64,
    kind: MatrixKind,
    rows: Labels,
    cols: Labels,
}

impl SumMatrix {
    pub fn ne(&self) -> u64 {
        self.ne
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn n_rows(&self) -> u64 {
        self.rows.len()
    }

    pub fn n_cols(&self) -> u64 {
        self.cols.len()
    }

    pub fn row_label(&self, i: u64) -> u64 {
        self.rows.get(i)
    }

    pub fn col_label(&self, j: u64) -> u64 {
        self.cols.get(j)
    }

    pub fn row_labels(&self) -> Vec<u64> {
        self.rows.to_vec()
    }

    pub fn col_labels(&self) -> Vec<u64> {
        self.cols.to_vec()
    }

    /// Cell value; masked cells read 0.
    pub fn entry(&self, i: u64, j: u64) -> u64 {
        let sum = self.rows.get(i) + self.cols.get(j);
        match self.kind {
            MatrixKind::Full | MatrixKind::Prime => sum,
            MatrixKind::Regular if sum <= self.ne => sum,
            MatrixKind::MaxAntidiagonal if sum == self.ne => sum,
            _ => 0,
        }
    }

    fn check_dense(&self) -> Result<()> {
        if self.ne > MATRIX_DENSE_GUARD {
            return Err(Error::Guard {
                what: "matrix size ne",
                value: self.ne,
                guard_name: "MATRIX_DENSE_GUARD",
                guard: MATRIX_DENSE_GUARD,
            });
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<Vec<Vec<u64>>> {
        self.check_dense()?;
        Ok((0..self.n_rows())
            .map(|i| (0..self.n_cols()).map(|j| self.entry(i, j)).collect())
            .collect())
    }

    /// Right-aligned integer grid, one row per line, cells separated by a
    /// space.
    pub fn render(&self) -> Result<String> {
        let dense = self.to_dense()?;
        let width = dense
            .iter()
            .flatten()
            .map(|v| v.to_string().len())
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        for row in &dense {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v:>width$}");
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn odd_prime_labels(ne: u64) -> Vec<u64> {
    PrimeBitmap::new(ne)
        .odd_primes()
        .take_while(|&p| p < ne)
        .collect()
}

pub fn build_matrix(ne: u64, kind: MatrixKind) -> Result<SumMatrix> {
    require_even(ne, 4)?;
    check_sieve_guard(ne)?;
    let labels = match kind {
        MatrixKind::Prime => Labels::List(odd_prime_labels(ne)),
        _ => Labels::Odd { count: ne / 2 },
    };
    Ok(SumMatrix {
        ne,
        kind,
        rows: labels.clone(),
        cols: labels,
    })
}

/// Drops every row and column of a full matrix whose label is not an odd
/// prime.
pub fn delete_transform(full: &SumMatrix) -> Result<SumMatrix> {
    if full.kind != MatrixKind::Full {
        return Err(Error::Domain(format!(
            "delete_transform needs a full matrix, got {:?}",
            full.kind
        )));
    }
    let keep = |labels: &Labels| {
        Labels::List(
            labels
                .to_vec()
                .into_iter()
                .filter(|&l| is_prime(l))
                .collect(),
        )
    };
    Ok(SumMatrix {
        ne: full.ne,
        kind: MatrixKind::Prime,
        rows: keep(&full.rows),
        cols: keep(&full.cols),
    })
}

/// Labels removed by [`delete_transform`]; together with the kept labels
/// they reconstruct the full label set.
pub fn deletion_complement(full: &SumMatrix) -> Result<Vec<u64>> {
    if full.kind != MatrixKind::Full {
        return Err(Error::Domain(format!(
            "deletion_complement needs a full matrix, got {:?}",
            full.kind
        )));
    }
    Ok(full
        .rows
        .to_vec()
        .into_iter()
        .filter(|&l| !is_prime(l))
        .collect())
}

fn count_ordered_odd_pairs(ne: u64, m: u64, first: u64) -> Result<u64> {
    require_even(ne, 4)?;
    if !m.is_multiple_of(2) {
        return Err(Error::Domain(format!("target {m} is not even")));
    }
    if m < 2 || m > 2 * (ne - 1) {
        return Err(Error::Domain(format!(
            "target {m} outside [2, {}]",
            2 * (ne - 1)
        )));
    }
    let top = ne - 1;
    let lo = first.max(m.saturating_sub(top));
    let hi = top.min(m.saturating_sub(first));
    Ok(if m < 2 * first || lo > hi {
        0
    } else {
        (hi - lo) / 2 + 1
    })
}

/// Ordered odd pairs `(x, y)`, `1 ≤ x, y ≤ ne − 1`, with `x + y = m`.
pub fn antidiagonal_count(ne: u64, m: u64) -> Result<u64> {
    count_ordered_odd_pairs(ne, m, 1)
}

/// As [`antidiagonal_count`] with labels starting at 3.
pub fn shifted_antidiagonal_count(ne: u64, m: u64) -> Result<u64> {
    count_ordered_odd_pairs(ne, m, 3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Containment {
    pub contained: bool,
    pub ordered_count: u64,
}

/// Whether some cell of the prime matrix for `ne_bound` equals `m`, and how
/// many cells do.
pub fn prime_matrix_contains(ne_bound: u64, m: u64) -> Result<Containment> {
    require_even(ne_bound, 4)?;
    require_even(m, 4)?;
    if m > ne_bound {
        return Err(Error::Domain(format!(
            "target {m} exceeds matrix bound {ne_bound}"
        )));
    }
    let bitmap = PrimeBitmap::new(ne_bound);
    Ok(containment(&bitmap, ne_bound, m))
}

fn containment(bitmap: &PrimeBitmap, ne_bound: u64, m: u64) -> Containment {
    let ordered_count = bitmap
        .odd_primes()
        .take_while(|&p| p < m && p < ne_bound)
        .filter(|&p| {
            let q = m - p;
            q > 2 && q < ne_bound && bitmap.is_prime(q)
        })
        .count() as u64;
    Containment {
        contained: ordered_count > 0,
        ordered_count,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeletionAudit {
    pub ne: u64,
    /// Anti-diagonal cells a total elimination of `ne` must delete (`ne/2`).
    pub rows_required_for_elimination: u64,
    pub low_interval: [u64; 2],
    pub high_interval: [u64; 2],
    /// Odd primes in `low_interval`.
    pub interval_low_primes: u64,
    /// Odd primes in `high_interval`.
    pub interval_high_primes: u64,
    /// `ne/2 − 2·ne/ln ne`, unclamped.
    pub mismatch_count_formula: f64,
    pub formula_negative: bool,
    /// Ordered odd pairs summing to `ne` that are not both prime.
    pub mismatch_count_exact: u64,
    /// Ordered prime cells `(p, q)` with `p + q = ne`.
    pub surviving_prime_pairs: u64,
    /// Elimination is impossible: at least one prime cell survives.
    pub contradiction: bool,
}

impl DeletionAudit {
    /// Every check the audit encodes holds.
    pub fn consistent(&self) -> bool {
        self.contradiction && self.interval_low_primes >= 1 && self.interval_high_primes >= 1
    }
}

/// Half-intervals split by `ne mod 4`: `[1, ne/2 − 1]` and `[ne/2 + 1, ne − 1]`
/// when `4 | ne`, otherwise `[1, ne/2]` and `[ne/2 + 2, ne − 1]`.
pub fn audit_intervals(ne: u64) -> ([u64; 2], [u64; 2]) {
    let half = ne / 2;
    if ne.is_multiple_of(4) {
        ([1, half - 1], [half + 1, ne - 1])
    } else {
        ([1, half], [half + 2, ne - 1])
    }
}

/// Shared sieve for a batch of audits up to some bound.
pub struct AuditContext {
    bitmap: PrimeBitmap,
    odd_primes: Vec<u64>,
}

impl AuditContext {
    pub fn new(max_ne: u64) -> Self {
        let bitmap = PrimeBitmap::new(max_ne);
        let odd_primes = bitmap.odd_primes().collect();
        AuditContext { bitmap, odd_primes }
    }

    fn odd_primes_in(&self, [a, b]: [u64; 2]) -> u64 {
        if a > b {
            return 0;
        }
        let from = self.odd_primes.partition_point(|&p| p < a);
        let to = self.odd_primes.partition_point(|&p| p <= b);
        (to - from) as u64
    }

    pub fn audit(&self, ne: u64) -> Result<DeletionAudit> {
        require_even(ne, 6)?;
        if ne > self.bitmap.limit() {
            return Err(Error::Precondition(format!(
                "audit context covers ne <= {}, got {ne}",
                self.bitmap.limit()
            )));
        }
        let (low_interval, high_interval) = audit_intervals(ne);
        let rows_required = ne / 2;
        let end = self.odd_primes.partition_point(|&p| p < ne);
        let surviving = self.odd_primes[..end]
            .iter()
            .filter(|&&p| self.bitmap.is_prime(ne - p) && ne - p > 2)
            .count() as u64;
        let x = ne as f64;
        let formula = x / 2.0 - 2.0 * (x / x.ln());
        Ok(DeletionAudit {
            ne,
            rows_required_for_elimination: rows_required,
            low_interval,
            high_interval,
            interval_low_primes: self.odd_primes_in(low_interval),
            interval_high_primes: self.odd_primes_in(high_interval),
            mismatch_count_formula: formula,
            formula_negative: formula < 0.0,
            mismatch_count_exact: rows_required - surviving,
            surviving_prime_pairs: surviving,
            contradiction: surviving >= 1,
        })
    }
}

pub fn deletion_audit(ne: u64) -> Result<DeletionAudit> {
    require_even(ne, 6)?;
    check_sieve_guard(ne)?;
    AuditContext::new(ne).audit(ne)
}

/// Audits every even `ne` in `[lo, hi]`, ascending.
pub fn audit_range(lo: u64, hi: u64, exec: Exec) -> Result<Vec<DeletionAudit>> {
    require_even(lo, 6)?;
    require_even(hi, 6)?;
    if lo > hi {
        return Err(Error::Domain(format!("audit range [{lo}, {hi}] is empty")));
    }
    check_sieve_guard(hi)?;
    let count = (hi - lo) / 2 + 1;
    if count > AUDIT_RANGE_GUARD {
        return Err(Error::Guard {
            what: "audit range length",
            value: count,
            guard_name: "AUDIT_RANGE_GUARD",
            guard: AUDIT_RANGE_GUARD,
        });
    }
    let ctx = AuditContext::new(hi);
    exec.map_range(0..count, |k| ctx.audit(lo + 2 * k))
        .into_iter()
        .collect()
}
