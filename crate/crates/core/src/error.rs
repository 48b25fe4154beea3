use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured resource guard would be exceeded.
    #[error("{what} = {value} exceeds guard {guard_name} = {guard}")]
    Guard {
        what: &'static str,
        value: u64,
        guard_name: &'static str,
        guard: u64,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("moduli {first} and {second} are not coprime (gcd {gcd})")]
    NotCoprime { first: u64, second: u64, gcd: u64 },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("machine is halted")]
    Halted,
}

impl Error {
    /// True for errors that stem from resource limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Guard { .. } | Error::Overflow(_))
    }
}

pub(crate) fn require_even(ne: u64, min: u64) -> Result<()> {
    if !ne.is_multiple_of(2) {
        return Err(Error::Domain(format!("{ne} is not even")));
    }
    if ne < min {
        return Err(Error::Domain(format!("{ne} is below the minimum {min}")));
    }
    Ok(())
}
