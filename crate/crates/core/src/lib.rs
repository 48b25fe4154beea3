//! Goldbach partition machinery: prime sieving, congruence systems, partition
//! counting, the probabilistic `r(θ)` estimator, odd-sum matrices and a
//! tape machine that scans even numbers for prime matchings.
//!
//! Every data-parallel loop goes through [`Exec`]. With the `parallel`
//! feature (on by default) `Exec::Parallel` runs on the ambient rayon pool;
//! without it every path runs sequentially and produces identical output.

pub mod congruence;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod machine;
pub mod matrices;
pub mod partitions;
pub mod primes;

pub use error::{Error, Result};
pub use exec::Exec;
