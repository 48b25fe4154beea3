//! A tape machine over the even numbers `4, 6, 8, ...`.
//!
//! Cell `i` of the tape holds the even number `2i + 4`. At each cell the
//! controller looks for a prime pair summing to the cell's value. On success
//! the register reads `T`, the cell is stamped and the head moves right. On
//! failure the head re-reads the cell `recheck_count` times; only a unanimous
//! run of `F` results halts the machine. A halt would be a Goldbach
//! counterexample, so [`run`] is an empirical scan, not a proof.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::primes::{is_prime, PrimeBitmap};

/// Largest `limit_even` accepted by [`run`] (one sieve bit per odd number).
pub const MACHINE_LIMIT_GUARD: u64 = 1 << 32;

pub type Witness = (u64, u64);

/// Controller scan formulations. All three find the pair with the smallest
/// prime first and report it as `(smaller, larger)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Shift the seed split `(1, ne − 1)` by `k = 2, 4, ...`: test
    /// `(1 + k, ne − 1 − k)`.
    Basis1,
    /// Scan `K = 3, 5, ...` and test `K` and `ne − K`.
    Basis2,
    /// Scan the larger element `K = ne − 3, ne − 5, ...` and test `K` and
    /// `|K − ne|`.
    Basis3,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Basis1, Strategy::Basis2, Strategy::Basis3];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Basis1 => "basis1",
            Strategy::Basis2 => "basis2",
            Strategy::Basis3 => "basis3",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basis1" => Ok(Strategy::Basis1),
            "basis2" => Ok(Strategy::Basis2),
            "basis3" => Ok(Strategy::Basis3),
            other => Err(Error::Domain(format!(
                "unknown controller {other:?} (expected basis1, basis2 or basis3)"
            ))),
        }
    }
}

/// Source of primality answers for the controllers.
pub trait Primality: Sync {
    fn is_prime(&self, n: u64) -> bool;
}

impl Primality for PrimeBitmap {
    #[inline]
    fn is_prime(&self, n: u64) -> bool {
        PrimeBitmap::is_prime(self, n)
    }
}

/// Miller–Rabin on every query; no precomputation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectPrimality;

impl Primality for DirectPrimality {
    fn is_prime(&self, n: u64) -> bool {
        is_prime(n)
    }
}

fn two_split<P: Primality>(primes: &P, ne: u64, allow_two: bool) -> Option<Witness> {
    (allow_two && ne >= 4 && primes.is_prime(ne - 2)).then_some((2, ne - 2))
}

fn basis1<P: Primality>(primes: &P, ne: u64) -> Option<Witness> {
    let (x, y) = (1, ne - 1);
    (2..)
        .step_by(2)
        .map(|k| (x + k, y - k))
        .take_while(|&(a, b)| a <= b)
        .find(|&(a, b)| primes.is_prime(a) && primes.is_prime(b))
}

fn basis2<P: Primality>(primes: &P, ne: u64) -> Option<Witness> {
    (3..)
        .step_by(2)
        .take_while(|&k| k <= ne - k)
        .find(|&k| primes.is_prime(k) && primes.is_prime(ne - k))
        .map(|k| (k, ne - k))
}

fn basis3<P: Primality>(primes: &P, ne: u64) -> Option<Witness> {
    if ne < 6 {
        return None;
    }
    let mut k = ne - 3;
    while 2 * k >= ne {
        let partner = k.abs_diff(ne);
        if primes.is_prime(k) && primes.is_prime(partner) {
            return Some((partner, k));
        }
        k -= 2;
    }
    None
}

/// Evaluates the matching predicate for `ne` under `strategy`.
pub fn controller_eval_with<P: Primality>(
    primes: &P,
    ne: u64,
    strategy: Strategy,
    allow_two: bool,
) -> Option<Witness> {
    if ne < 4 || !ne.is_multiple_of(2) {
        return None;
    }
    if let Some(w) = two_split(primes, ne, allow_two) {
        return Some(w);
    }
    match strategy {
        Strategy::Basis1 => basis1(primes, ne),
        Strategy::Basis2 => basis2(primes, ne),
        Strategy::Basis3 => basis3(primes, ne),
    }
}

pub fn controller_eval(ne: u64, strategy: Strategy, allow_two: bool) -> Option<Witness> {
    controller_eval_with(&DirectPrimality, ne, strategy, allow_two)
}

/// What the machine consults at each cell.
pub trait Controller {
    fn eval(&mut self, ne: u64) -> Option<Witness>;

    fn name(&self) -> String;
}

pub struct BasisController<P> {
    strategy: Strategy,
    allow_two: bool,
    primes: P,
}

impl<P: Primality> BasisController<P> {
    pub fn new(strategy: Strategy, allow_two: bool, primes: P) -> Self {
        BasisController {
            strategy,
            allow_two,
            primes,
        }
    }
}

impl<P: Primality> Controller for BasisController<P> {
    fn eval(&mut self, ne: u64) -> Option<Witness> {
        controller_eval_with(&self.primes, ne, self.strategy, self.allow_two)
    }

    fn name(&self) -> String {
        self.strategy.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MachineConfig {
    pub start_even: u64,
    pub limit_even: u64,
    pub controller: Strategy,
    pub recheck_count: u32,
    pub allow_two: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            start_even: 6,
            limit_even: 1000,
            controller: Strategy::Basis2,
            recheck_count: 3,
            allow_two: false,
        }
    }
}

impl MachineConfig {
    pub fn new(start_even: u64, limit_even: u64, controller: Strategy) -> Self {
        MachineConfig {
            start_even,
            limit_even,
            controller,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.start_even.is_multiple_of(2) || !self.limit_even.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "tape bounds must be even, got {}..{}",
                self.start_even, self.limit_even
            )));
        }
        if self.start_even < 4 || self.start_even > self.limit_even {
            return Err(Error::Domain(format!(
                "need 4 <= start <= limit, got {}..{}",
                self.start_even, self.limit_even
            )));
        }
        if self.recheck_count == 0 {
            return Err(Error::Domain("recheck_count must be at least 1".into()));
        }
        if self.limit_even > MACHINE_LIMIT_GUARD {
            return Err(Error::Guard {
                what: "machine limit",
                value: self.limit_even,
                guard_name: "MACHINE_LIMIT_GUARD",
                guard: MACHINE_LIMIT_GUARD,
            });
        }
        Ok(())
    }

    pub fn cells(&self) -> u64 {
        (self.limit_even - self.start_even) / 2 + 1
    }
}

/// Tape cell index of an even number (`4 ↦ 0`).
pub fn cell_index(even: u64) -> u64 {
    (even - 4) / 2
}

pub fn cell_value(index: u64) -> u64 {
    2 * index + 4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Register {
    /// Initial state, before the first cell is read.
    Q0,
    T,
    F,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub head_index: u64,
    pub current_even: u64,
    pub register: Register,
    pub witness: Option<Witness>,
    pub step_count: u64,
    pub halted: bool,
    /// Re-read results of the most recent cell that failed its first read.
    pub recheck_log: Vec<Register>,
    /// Stamps written so far, starting at the first visited cell.
    pub tape: Vec<Register>,
}

pub struct Machine<C> {
    config: MachineConfig,
    controller: C,
}

impl<C: Controller> Machine<C> {
    pub fn new(config: MachineConfig, controller: C) -> Result<Self> {
        config.validate()?;
        Ok(Machine { config, controller })
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn initial_state(&self) -> MachineState {
        let head_index = cell_index(self.config.start_even);
        MachineState {
            head_index,
            current_even: cell_value(head_index),
            register: Register::Q0,
            witness: None,
            step_count: 0,
            halted: false,
            recheck_log: Vec::new(),
            tape: Vec::new(),
        }
    }

    /// Reads the cell under the head and applies the transition.
    pub fn step(&mut self, mut state: MachineState) -> Result<MachineState> {
        if state.halted {
            return Err(Error::Halted);
        }
        let ne = state.current_even;
        state.recheck_log.clear();
        let mut found = self.controller.eval(ne);
        if found.is_none() {
            // leftward "abnormal" re-reads of the same cell
            for _ in 0..self.config.recheck_count {
                let again = self.controller.eval(ne);
                state.recheck_log.push(if again.is_some() {
                    Register::T
                } else {
                    Register::F
                });
                if again.is_some() {
                    found = again;
                    break;
                }
            }
        }
        state.step_count += 1;
        match found {
            Some(w) => {
                state.register = Register::T;
                state.witness = Some(w);
                state.tape.push(Register::T);
                state.head_index += 1;
                state.current_even = cell_value(state.head_index);
            }
            None => {
                state.register = Register::F;
                state.witness = None;
                state.tape.push(Register::F);
                state.halted = true;
            }
        }
        Ok(state)
    }

    pub fn run(&mut self) -> RunReport {
        self.run_inner(None::<&mut io::Sink>)
            .expect("sink writes are infallible")
    }

    /// Runs while streaming one trace line per cell: `<ne>\tT\t<p>+<q>` or
    /// `<ne>\tF`.
    pub fn run_traced<W: Write>(&mut self, trace: &mut W) -> io::Result<RunReport> {
        self.run_inner(Some(trace))
    }

    fn run_inner<W: Write>(&mut self, mut trace: Option<&mut W>) -> io::Result<RunReport> {
        let started = Instant::now();
        let mut state = self.initial_state();
        let mut failures = Vec::new();
        let mut first_witnesses = BTreeMap::new();
        let mut cells = 0;
        while state.current_even <= self.config.limit_even {
            let ne = state.current_even;
            state = self.step(state).expect("loop never steps a halted machine");
            cells += 1;
            match state.witness {
                Some((p, q)) if !state.halted => {
                    first_witnesses.insert(ne, (p, q));
                    if let Some(w) = trace.as_deref_mut() {
                        writeln!(w, "{ne}\tT\t{p}+{q}")?;
                    }
                }
                _ => {
                    failures.push(ne);
                    if let Some(w) = trace.as_deref_mut() {
                        writeln!(w, "{ne}\tF")?;
                    }
                    break;
                }
            }
        }
        Ok(RunReport {
            start: self.config.start_even,
            limit: self.config.limit_even,
            controller: self.controller.name(),
            cells,
            halted: state.halted,
            failures,
            first_witnesses,
            elapsed: started.elapsed(),
        })
    }
}

fn as_millis<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(d.as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub start: u64,
    pub limit: u64,
    pub controller: String,
    pub cells: u64,
    pub failures: Vec<u64>,
    pub halted: bool,
    #[serde(rename = "elapsed_ms", serialize_with = "as_millis")]
    pub elapsed: Duration,
    #[serde(skip)]
    pub first_witnesses: BTreeMap<u64, Witness>,
}

impl RunReport {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        RunReport {
            elapsed: Duration::ZERO,
            ..self.clone()
        } == RunReport {
            elapsed: Duration::ZERO,
            ..other.clone()
        }
    }
}

fn sieve_for(config: &MachineConfig) -> Result<PrimeBitmap> {
    config.validate()?;
    Ok(PrimeBitmap::new(config.limit_even))
}

pub fn run(config: MachineConfig) -> Result<RunReport> {
    let primes = sieve_for(&config)?;
    let controller = BasisController::new(config.controller, config.allow_two, primes);
    Ok(Machine::new(config, controller)?.run())
}

pub fn run_traced<W: Write>(config: MachineConfig, trace: &mut W) -> Result<io::Result<RunReport>> {
    let primes = sieve_for(&config)?;
    let controller = BasisController::new(config.controller, config.allow_two, primes);
    Ok(Machine::new(config, controller)?.run_traced(trace))
}

/// Whether all three strategies agree on presence and witness for every
/// even in the configured range.
pub fn cross_check(config: MachineConfig) -> Result<bool> {
    cross_check_with(config, Exec::default())
}

pub fn cross_check_with(config: MachineConfig, exec: Exec) -> Result<bool> {
    let primes = sieve_for(&config)?;
    let evens = 0..config.cells();
    let scan = |strategy: Strategy| {
        exec.map_range(evens.clone(), |k| {
            controller_eval_with(
                &primes,
                config.start_even + 2 * k,
                strategy,
                config.allow_two,
            )
        })
    };
    let (first, (second, third)) = exec.join(
        || scan(Strategy::Basis1),
        || exec.join(|| scan(Strategy::Basis2), || scan(Strategy::Basis3)),
    );
    Ok(first == second && second == third)
}
