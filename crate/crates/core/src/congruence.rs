//! Congruence systems `ne ≡ b (mod m)` built from the pairings `m + b = ne`.
//!
//! The odd-complete system pairs every odd modulus `1, 3, ..., ne − 1` with
//! the residue `ne − m`; the prime-extended system keeps only the odd prime
//! moduli. Residues are stored as the paired value `ne − m`, not reduced
//! modulo `m`, so a row reads `34 = 31 (mod 3)`.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{require_even, Error, Result};
use crate::exec::Exec;
use crate::primes::{check_sieve_guard, is_prime, PrimeBitmap};

/// Row limit for dense odd-complete systems.
pub const ODD_COMPLETE_ROW_GUARD: u64 = 1_000_000;

/// Primitive arithmetic used by the row checks.
pub mod arith {
    pub fn sum(x: u64, y: u64) -> Option<u64> {
        x.checked_add(y)
    }

    /// Truncated subtraction: `x ∸ y = max(x − y, 0)`.
    pub fn monus(x: u64, y: u64) -> u64 {
        x.saturating_sub(y)
    }

    pub fn abs_diff(x: u64, y: u64) -> u64 {
        x.abs_diff(y)
    }

    /// `x | y`; zero divides only zero.
    pub fn divides(x: u64, y: u64) -> bool {
        if x == 0 {
            y == 0
        } else {
            y.is_multiple_of(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CongruenceRow {
    pub modulus: u64,
    pub residue: u64,
    /// Set for prime-extended systems: whether the paired residue is prime.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residue_is_prime: Option<bool>,
}

impl CongruenceRow {
    pub fn new(modulus: u64, residue: u64) -> Self {
        CongruenceRow {
            modulus,
            residue,
            residue_is_prime: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    OddComplete,
    PrimeExtended,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CongruenceSystem {
    ne: u64,
    kind: SystemKind,
    rows: Vec<CongruenceRow>,
}

impl CongruenceSystem {
    /// Builds a system from arbitrary rows (sorted by modulus). No checks are
    /// applied; use [`check_properties`] to audit it.
    pub fn from_rows(ne: u64, kind: SystemKind, mut rows: Vec<CongruenceRow>) -> Self {
        rows.sort_by_key(|r| r.modulus);
        CongruenceSystem { ne, kind, rows }
    }

    pub fn ne(&self) -> u64 {
        self.ne
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn rows(&self) -> &[CongruenceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One row per line: `<ne> = <residue> (mod <modulus>)`.
impl fmt::Display for CongruenceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{} = {} (mod {})", self.ne, row.residue, row.modulus)?;
        }
        Ok(())
    }
}

pub fn build_odd_complete(ne: u64) -> Result<CongruenceSystem> {
    require_even(ne, 4)?;
    let rows = ne / 2;
    if rows > ODD_COMPLETE_ROW_GUARD {
        return Err(Error::Guard {
            what: "odd-complete row count",
            value: rows,
            guard_name: "ODD_COMPLETE_ROW_GUARD",
            guard: ODD_COMPLETE_ROW_GUARD,
        });
    }
    let rows = (1..ne)
        .step_by(2)
        .map(|k| CongruenceRow::new(k, ne - k))
        .collect();
    Ok(CongruenceSystem {
        ne,
        kind: SystemKind::OddComplete,
        rows,
    })
}

/// One row `(p, ne − p)` per odd prime `p ≤ ne − 3`, with residue primality.
/// The residue-1 row of `p = ne − 1` is left out.
pub fn build_mod_m(ne: u64) -> Result<CongruenceSystem> {
    require_even(ne, 6)?;
    check_sieve_guard(ne)?;
    let primes = PrimeBitmap::new(ne);
    let rows = primes
        .odd_primes()
        .take_while(|&p| p <= ne - 3)
        .map(|p| {
            let residue = ne - p;
            CongruenceRow {
                modulus: p,
                residue,
                residue_is_prime: Some(primes.is_prime(residue)),
            }
        })
        .collect();
    Ok(CongruenceSystem {
        ne,
        kind: SystemKind::PrimeExtended,
        rows,
    })
}

/// `modulus | (ne − residue)` and `modulus + residue = ne`.
pub fn verify_row(ne: u64, row: &CongruenceRow) -> bool {
    if row.modulus == 0 || row.residue > ne {
        return false;
    }
    arith::sum(row.modulus, row.residue) == Some(ne)
        && arith::divides(row.modulus, arith::monus(ne, row.residue))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub uniqueness: bool,
    pub closure: bool,
    pub symmetry: Symmetry,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.uniqueness && self.closure && self.symmetry != Symmetry::Fails
    }
}

pub fn check_properties(sys: &CongruenceSystem) -> PropertyReport {
    check_properties_with(sys, Exec::default())
}

pub fn check_properties_with(sys: &CongruenceSystem, exec: Exec) -> PropertyReport {
    let ne = sys.ne;
    let rows = &sys.rows;
    let mut seen = HashSet::with_capacity(rows.len());
    let uniqueness = rows.iter().all(|r| seen.insert(r.modulus));
    let closure = exec.all_range(0..rows.len() as u64, |i| {
        let row = &rows[i as usize];
        verify_row(ne, row) && (1..ne).contains(&row.residue)
    });
    let symmetry = match sys.kind {
        SystemKind::PrimeExtended => Symmetry::NotApplicable,
        SystemKind::OddComplete => {
            let pairs: HashSet<(u64, u64)> = rows.iter().map(|r| (r.modulus, r.residue)).collect();
            if pairs.iter().all(|&(m, b)| pairs.contains(&(b, m))) {
                Symmetry::Holds
            } else {
                Symmetry::Fails
            }
        }
    };
    PropertyReport {
        uniqueness,
        closure,
        symmetry,
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modular inverse of `a` modulo `m` for coprime inputs.
fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (i128::from(a % m), i128::from(m));
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(i128::from(m)) as u64)
}

/// Least non-negative solution of `S ≡ residue (mod modulus)` for every
/// `(modulus, residue)` pair. Moduli must be positive and pairwise coprime and
/// their product must fit in a `u64`.
pub fn crt_solve(rows: &[(u64, u64)]) -> Result<u64> {
    if let Some(&(m, _)) = rows.iter().find(|(m, _)| *m == 0) {
        return Err(Error::Domain(format!("modulus {m} must be positive")));
    }
    for (i, &(a, _)) in rows.iter().enumerate() {
        for &(b, _) in &rows[i + 1..] {
            let g = gcd(a, b);
            if g != 1 {
                return Err(Error::NotCoprime {
                    first: a,
                    second: b,
                    gcd: g,
                });
            }
        }
    }
    let mut solution: u64 = 0;
    let mut product: u64 = 1;
    for &(m, b) in rows {
        let next = product.checked_mul(m).ok_or_else(|| {
            Error::Overflow(format!("modulus product exceeds u64 at modulus {m}"))
        })?;
        // solution + product * t ≡ b (mod m)
        let target =
            (i128::from(b % m) - i128::from(solution % m)).rem_euclid(i128::from(m)) as u64;
        let inv = mod_inverse(product % m, m).expect("coprime moduli have inverses");
        let t = (u128::from(target) * u128::from(inv) % u128::from(m)) as u64;
        solution += product * t;
        product = next;
    }
    Ok(solution)
}

/// Whether every residue of a prime-extended system is itself prime-checked
/// consistently with [`is_prime`].
pub fn residue_flags_consistent(sys: &CongruenceSystem) -> bool {
    sys.rows.iter().all(|r| {
        r.residue_is_prime
            .is_none_or(|flag| flag == is_prime(r.residue))
    })
}
