//! Random-selection estimate of how many partner candidates `r` must be
//! examined before a prime partner turns up with probability `θ`.
//!
//! Selecting `r` of `N` candidates without repetition misses every match
//! with probability `∏(1 − i/N) ≈ exp(−r(r − 1)/2N)`. Dropping the linear
//! term and taking `N = ne/2` gives `r ≈ √(ne · ln(1/(1 − θ)))`. Published
//! tables print the coefficient `√ln(1/(1 − θ))` to three decimals and then
//! round `r`; [`r_of_theta`] follows the same two-step rounding.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{require_even, Error, Result};
use crate::partitions::{phi_with, Counting};

/// Probabilities used by the published comparison table.
pub const TABLE1_THETAS: [f64; 3] = [0.2, 0.5, 0.99];

/// Published `(ne, partition count)` pairs of the comparison table.
pub const PUBLISHED_PHI: [(u64, u64); 11] = [
    (100, 6),
    (2688, 88),
    (6000, 178),
    (30000, 602),
    (60000, 1084),
    (100000, 810),
    (300000, 3915),
    (560000, 3971),
    (3000000, 27502),
    (60000000, 371226),
    (1000000000, 2274205),
];

/// Rows above this bound are not partition-counted by default.
pub const DEFAULT_TABLE_PHI_MAX: u64 = 1_000_000;

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "theta must lie in (0, 1), got {theta}"
        )))
    }
}

fn log_odds(theta: f64) -> f64 {
    (1.0 / (1.0 - theta)).ln()
}

/// `√ln(1/(1 − θ))` rounded half-up to three decimals.
pub fn coefficient(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(round_half_up(log_odds(theta).sqrt() * 1000.0) / 1000.0)
}

/// Unrounded `√(ne · ln(1/(1 − θ)))`.
pub fn r_continuous(ne: u64, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((ne as f64 * log_odds(theta)).sqrt())
}

pub fn r_of_theta(ne: u64, theta: f64) -> Result<u64> {
    Ok(estimate(ne, theta)?.r_rounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub ne: u64,
    pub theta: f64,
    pub coefficient: f64,
    pub r_continuous: f64,
    pub r_rounded: u64,
}

pub fn estimate(ne: u64, theta: f64) -> Result<Estimate> {
    require_even(ne, 4)?;
    let coefficient = coefficient(theta)?;
    let r_continuous = coefficient * (ne as f64).sqrt();
    Ok(Estimate {
        ne,
        theta,
        coefficient,
        r_continuous,
        r_rounded: round_half_up(r_continuous) as u64,
    })
}

/// `1 − exp(−r(r − 1)/2n)`.
pub fn success_probability(r: f64, n: f64) -> Result<f64> {
    if !(r >= 1.0 && n >= 1.0) {
        return Err(Error::Domain(format!(
            "success_probability needs r >= 1 and n >= 1, got r = {r}, n = {n}"
        )));
    }
    Ok(-(-(r * (r - 1.0)) / (2.0 * n)).exp_m1())
}

/// Exact inverse of [`success_probability`] in `r`:
/// the `r ≥ 1` solving `r(r − 1) = 2n · ln(1/(1 − θ))`.
pub fn selections_for_probability(theta: f64, n: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((1.0 + (1.0 + 8.0 * n * log_odds(theta)).sqrt()) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub ne: u64,
    pub r: Vec<u64>,
    pub phi_computed: Option<u64>,
    pub phi_published: Option<u64>,
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub thetas: Vec<f64>,
    pub rows: Vec<Table1Row>,
}

#[derive(Debug, Clone, Copy)]
pub struct Table1Options {
    /// Rows with `ne` above this bound skip the partition count.
    pub phi_max: u64,
    pub counting: Counting,
}

impl Default for Table1Options {
    fn default() -> Self {
        Table1Options {
            phi_max: DEFAULT_TABLE_PHI_MAX,
            counting: Counting::default(),
        }
    }
}

pub fn published_phi(ne: u64) -> Option<u64> {
    PUBLISHED_PHI
        .iter()
        .find(|(n, _)| *n == ne)
        .map(|&(_, v)| v)
}

pub fn default_table1_rows() -> Vec<u64> {
    PUBLISHED_PHI.iter().map(|&(ne, _)| ne).collect()
}

pub fn table1(rows: &[u64], thetas: &[f64], opts: Table1Options) -> Result<Table1> {
    let rows = rows
        .iter()
        .map(|&ne| {
            let r = thetas
                .iter()
                .map(|&t| r_of_theta(ne, t))
                .collect::<Result<Vec<_>>>()?;
            let phi_computed = if ne <= opts.phi_max {
                Some(phi_with(ne, opts.counting)?)
            } else {
                None
            };
            let phi_published = published_phi(ne);
            let agree = phi_computed.zip(phi_published).map(|(c, p)| c == p);
            Ok(Table1Row {
                ne,
                r,
                phi_computed,
                phi_published,
                agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1 {
        thetas: thetas.to_vec(),
        rows,
    })
}

impl Table1 {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("ne");
        for t in &self.thetas {
            let _ = write!(h, ",r_theta_{t}");
        }
        h.push_str(",phi_computed,phi_paper,agree");
        h
    }

    /// CSV rendering; unknown cells are left empty.
    pub fn to_csv(&self) -> String {
        fn cell<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let mut out = self.csv_header();
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{}", row.ne);
            for r in &row.r {
                let _ = write!(out, ",{r}");
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                cell(row.phi_computed),
                cell(row.phi_published),
                cell(row.agree)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        assert_eq!(coefficient(0.10).unwrap(), 0.325);
        assert_eq!(coefficient(0.50).unwrap(), 0.833);
        assert_eq!(coefficient(0.99).unwrap(), 2.146);
        assert_eq!(coefficient(0.2).unwrap(), 0.472);
        for bad in [0.0, 1.0, 100.0, -0.5, f64::NAN] {
            assert!(matches!(coefficient(bad), Err(Error::Domain(_))), "{bad}");
        }
    }

    #[test]
    fn r_examples() {
        assert_eq!(r_of_theta(100, 0.5).unwrap(), 8);
        assert_eq!(r_of_theta(560000, 0.99).unwrap(), 1606);
        assert_eq!(r_of_theta(1_000_000_000, 0.2).unwrap(), 14926);
        // unrounded coefficient would give a different cell
        assert_eq!(
            r_continuous(1_000_000_000, 0.2).unwrap().round() as u64,
            14938
        );
        assert!(r_of_theta(101, 0.5).is_err());
    }

    #[test]
    fn success_probability_examples() {
        assert_eq!(success_probability(1.0, 7.0).unwrap(), 0.0);
        assert_eq!(success_probability(1.0, 1e9).unwrap(), 0.0);
        let p = success_probability(100.0, 5000.0).unwrap();
        assert!((p - (1.0 - (-0.99f64).exp())).abs() < 1e-9);
        assert!((p - 0.628_423_5).abs() < 1e-6);
        assert!(success_probability(0.5, 10.0).is_err());
        assert!(success_probability(2.0, 0.0).is_err());
    }

    #[test]
    fn exact_inverse_round_trip() {
        for theta in [0.1, 0.5, 0.9, 0.99] {
            for n in [10.0, 5e5, 1e9] {
                let r = selections_for_probability(theta, n).unwrap();
                let back = success_probability(r, n).unwrap();
                assert!((back - theta).abs() < 1e-9, "{theta} {n} {back}");
            }
        }
    }

    #[test]
    fn monotone_in_theta() {
        let thetas = [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99, 0.999];
        for ne in (4..=1_000_000u64).step_by(4_998) {
            let rs: Vec<u64> = thetas.iter().map(|&t| r_of_theta(ne, t).unwrap()).collect();
            assert!(rs.windows(2).all(|w| w[0] <= w[1]), "{ne}: {rs:?}");
        }
    }

    #[test]
    fn scaling_bound() {
        for theta in TABLE1_THETAS {
            let c = coefficient(theta).unwrap();
            for ne in [100u64, 10_000, 1_000_000, 100_000_000] {
                let root = (ne as f64).sqrt();
                let r = r_of_theta(ne, theta).unwrap() as f64;
                assert!((r / root - c).abs() <= 0.5 / root + 1e-12);
            }
        }
    }

    #[test]
    fn strictly_increasing_in_r() {
        for n in [1.0, 50.0, 5e5] {
            let ps: Vec<f64> = (1..400)
                .map(|r| success_probability(r as f64, n).unwrap())
                .collect();
            assert!(ps.windows(2).all(|w| w[1] > w[0] || w[0] == 1.0), "{n}");
        }
        let ps: Vec<f64> = (1..2000)
            .map(|r| success_probability(r as f64, 5e5).unwrap())
            .collect();
        assert!(ps.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn table_rows_and_csv() {
        let t = table1(&[12, 100], &TABLE1_THETAS, Table1Options::default()).unwrap();
        assert_eq!(t.rows[0].phi_published, None);
        assert_eq!(t.rows[0].agree, None);
        assert_eq!(t.rows[0].phi_computed, Some(1));
        assert_eq!(t.rows[1].r, vec![5, 8, 21]);
        assert_eq!(t.rows[1].agree, Some(true));
        assert_eq!(
            t.to_csv(),
            "ne,r_theta_0.2,r_theta_0.5,r_theta_0.99,phi_computed,phi_paper,agree\n\
             12,2,3,7,1,,\n\
             100,5,8,21,6,6,true\n"
        );
    }

    #[test]
    fn table_skips_large_phi() {
        let opts = Table1Options {
            phi_max: 1000,
            ..Default::default()
        };
        let t = table1(&[2688], &TABLE1_THETAS, opts).unwrap();
        assert_eq!(t.rows[0].phi_computed, None);
        assert_eq!(t.rows[0].phi_published, Some(88));
        assert_eq!(t.rows[0].agree, None);
    }
}
