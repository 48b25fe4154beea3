//! Argument parsing and dispatch for the `goldbach` binary.
//!
//! Exit codes: `0` success, `1` usage or domain error, `2` an even number
//! without a prime-pair witness was found, `3` resource or internal error.

use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use goldbach_core::congruence::{build_mod_m, crt_solve};
use goldbach_core::estimator::{
    default_table1_rows, table1, Table1Options, DEFAULT_TABLE_PHI_MAX, TABLE1_THETAS,
};
use goldbach_core::machine::{
    BasisController, Controller, Machine, MachineConfig, RunReport, Strategy,
};
use goldbach_core::matrices::{audit_range, build_matrix, MatrixKind};
use goldbach_core::partitions::{goldbach_pairs, phi_scan_with, write_phi_csv, Counting};
use goldbach_core::primes::{prime_count_with, sieve_with, PrimeBitmap};
use goldbach_core::{Error, Exec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

pub const THREADS_ENV: &str = "GNETM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "goldbach", version, about = "Goldbach partition toolkit")]
pub struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, value_enum, global = true)]
    pub output: Option<Output>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<NonZeroUsize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primes up to a limit.
    Primes {
        limit: u64,
        /// Print only how many there are.
        #[arg(long)]
        count: bool,
    },
    /// Prime pairs summing to an even number.
    Partitions {
        ne: u64,
        #[arg(long)]
        allow_two: bool,
    },
    /// Partition counts for every even number in a range, as CSV.
    PhiScan {
        lo: u64,
        hi: u64,
        #[arg(long)]
        allow_two: bool,
    },
    /// Prime-modulus congruence system of an even number.
    Modm { ne: u64 },
    /// Solve simultaneous congruences given as `modulus:residue`.
    Crt {
        #[arg(required = true, value_parser = parse_congruence)]
        rows: Vec<(u64, u64)>,
    },
    /// Selection-count estimates with partition counts.
    Table1 {
        #[arg(long, value_delimiter = ',')]
        rows: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
        /// Rows above this bound skip the partition count.
        #[arg(long, default_value_t = DEFAULT_TABLE_PHI_MAX)]
        phi_max: u64,
    },
    /// Render an odd-sum matrix.
    Matrix {
        ne: u64,
        #[arg(long, default_value = "full", value_parser = parse_kind)]
        kind: MatrixKind,
    },
    /// Deletion audits for every even number in a range.
    Audit { lo: u64, hi: u64 },
    /// Run the tape machine over a range of even numbers.
    RunMachine(MachineArgs),
    /// Time sieve and scan workloads sequentially and in parallel.
    Bench {
        #[arg(long, default_value_t = 10_000_000)]
        sieve_n: u64,
        #[arg(long, default_value_t = 100_000)]
        scan_n: u64,
    },
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    #[arg(long, default_value_t = 6)]
    pub start: u64,
    #[arg(long)]
    pub limit: u64,
    #[arg(long, default_value = "basis2", value_parser = parse_strategy)]
    pub controller: Strategy,
    /// Re-reads of a cell before a failure is accepted.
    #[arg(long, default_value_t = 3)]
    pub recheck: u32,
    /// Stream one line per cell.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub allow_two: bool,
}

fn parse_congruence(s: &str) -> Result<(u64, u64), String> {
    let (m, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected modulus:residue, got {s:?}"))?;
    let m = m
        .trim()
        .parse()
        .map_err(|e| format!("bad modulus {m:?}: {e}"))?;
    let b = b
        .trim()
        .parse()
        .map_err(|e| format!("bad residue {b:?}: {e}"))?;
    Ok((m, b))
}

fn parse_kind(s: &str) -> Result<MatrixKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Successful outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// Some even number `≥ 6` had no prime-pair witness.
    Falsified,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Done => EXIT_OK,
            Status::Falsified => EXIT_FALSIFIED,
        }
    }

    fn from_falsified(falsified: bool) -> Self {
        if falsified {
            Status::Falsified
        } else {
            Status::Done
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_resource() || *e == Error::Halted => EXIT_RESOURCE,
            Failure::Core(_) => EXIT_USAGE,
            Failure::Io(_) => EXIT_RESOURCE,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Exit code for a machine run: `2` iff it halted on an unwitnessed cell.
pub fn machine_exit_code(report: &RunReport) -> i32 {
    Status::from_falsified(report.halted).code()
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
        }
    };
    let result = with_threads(cli.threads, || execute(&cli, out));
    match result {
        Ok(status) => status.code(),
        Err(failure) => {
            let _ = writeln!(err, "error: {failure}");
            failure.code()
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(
    threads: Option<NonZeroUsize>,
    f: impl FnOnce() -> Result<R, Failure> + Send,
) -> Result<R, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.get());
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Io(io::Error::other(e)))?;
    pool.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(
    _threads: Option<NonZeroUsize>,
    f: impl FnOnce() -> Result<R, Failure> + Send,
) -> Result<R, Failure> {
    f()
}

fn exec_for(threads: Option<NonZeroUsize>) -> Exec {
    match threads {
        Some(n) if n.get() == 1 => Exec::Sequential,
        _ => Exec::default(),
    }
}

/// Runs an already parsed command. The caller owns the worker pool.
pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<Status, Failure> {
    let exec = exec_for(cli.threads);
    let output = cli.output;
    match &cli.command {
        Command::Primes { limit, count } => primes(*limit, *count, output, exec, out),
        Command::Partitions { ne, allow_two } => partitions(*ne, *allow_two, output, out),
        Command::PhiScan { lo, hi, allow_two } => {
            let opts = Counting {
                allow_two: *allow_two,
                exec,
            };
            phi_scan(*lo, *hi, opts, output, out)
        }
        Command::Modm { ne } => modm(*ne, output, out),
        Command::Crt { rows } => {
            let x = crt_solve(rows)?;
            match output.unwrap_or(Output::Text) {
                Output::Json => writeln!(out, "{}", json!({ "solution": x }))?,
                Output::Csv => writeln!(out, "solution\n{x}")?,
                Output::Text => writeln!(out, "{x}")?,
            }
            Ok(Status::Done)
        }
        Command::Table1 {
            rows,
            thetas,
            phi_max,
        } => {
            let rows = rows.clone().unwrap_or_else(default_table1_rows);
            let thetas = thetas.clone().unwrap_or_else(|| TABLE1_THETAS.to_vec());
            let opts = Table1Options {
                phi_max: *phi_max,
                counting: Counting {
                    allow_two: false,
                    exec,
                },
            };
            let table = table1(&rows, &thetas, opts)?;
            match output.unwrap_or(Output::Csv) {
                Output::Json => writeln!(out, "{}", serde_json::to_string(&table)?)?,
                Output::Csv | Output::Text => write!(out, "{}", table.to_csv())?,
            }
            let falsified = table
                .rows
                .iter()
                .any(|r| r.ne >= 6 && r.phi_computed == Some(0));
            Ok(Status::from_falsified(falsified))
        }
        Command::Matrix { ne, kind } => matrix(*ne, *kind, output, out),
        Command::Audit { lo, hi } => audit(*lo, *hi, exec, output, out),
        Command::RunMachine(args) => run_machine_command(args, output, out),
        Command::Bench { sieve_n, scan_n } => bench(*sieve_n, *scan_n, out),
    }
}

fn primes(
    limit: u64,
    count_only: bool,
    output: Option<Output>,
    exec: Exec,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let output = output.unwrap_or(Output::Text);
    if count_only {
        let count = prime_count_with(limit, exec)?;
        match output {
            Output::Json => writeln!(out, "{}", json!({ "limit": limit, "count": count }))?,
            Output::Csv => writeln!(out, "limit,count\n{limit},{count}")?,
            Output::Text => writeln!(out, "{count}")?,
        }
        return Ok(Status::Done);
    }
    let table = sieve_with(limit, exec)?;
    let mut out = io::BufWriter::new(out);
    match output {
        Output::Json => {
            let payload =
                json!({ "limit": limit, "count": table.count(), "primes": table.primes() });
            writeln!(out, "{payload}")?;
        }
        Output::Csv | Output::Text => {
            if output == Output::Csv {
                writeln!(out, "prime")?;
            }
            for p in table.primes() {
                writeln!(out, "{p}")?;
            }
        }
    }
    out.flush()?;
    Ok(Status::Done)
}

fn partitions(
    ne: u64,
    allow_two: bool,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let set = goldbach_pairs(ne, allow_two)?;
    match output.unwrap_or(Output::Text) {
        Output::Json => writeln!(out, "{}", serde_json::to_string(&set)?)?,
        Output::Csv => {
            writeln!(out, "p,q")?;
            for (p, q) in &set.pairs {
                writeln!(out, "{p},{q}")?;
            }
        }
        Output::Text => {
            for (p, q) in &set.pairs {
                writeln!(out, "{ne} = {p} + {q}")?;
            }
            writeln!(out, "phi={}", set.phi)?;
        }
    }
    Ok(Status::from_falsified(ne >= 6 && set.phi == 0))
}

fn phi_scan(
    lo: u64,
    hi: u64,
    opts: Counting,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let scan = phi_scan_with(lo, hi, opts)?;
    let mut falsified = false;
    let records = scan.inspect(|&(ne, phi)| falsified |= ne >= 6 && phi == 0);
    let mut out = io::BufWriter::new(out);
    match output.unwrap_or(Output::Csv) {
        Output::Json => {
            for (ne, phi) in records {
                writeln!(out, "{}", json!({ "ne": ne, "phi": phi }))?;
            }
        }
        Output::Csv | Output::Text => write_phi_csv(&mut out, records)?,
    }
    out.flush()?;
    Ok(Status::from_falsified(falsified))
}

fn modm(ne: u64, output: Option<Output>, out: &mut (dyn Write + Send)) -> Result<Status, Failure> {
    let sys = build_mod_m(ne)?;
    match output.unwrap_or(Output::Text) {
        Output::Json => writeln!(out, "{}", serde_json::to_string(&sys)?)?,
        Output::Csv => {
            writeln!(out, "modulus,residue,residue_is_prime")?;
            for row in sys.rows() {
                let flag = row
                    .residue_is_prime
                    .map(|b| b.to_string())
                    .unwrap_or_default();
                writeln!(out, "{},{},{flag}", row.modulus, row.residue)?;
            }
        }
        Output::Text => write!(out, "{sys}")?,
    }
    Ok(Status::Done)
}

fn matrix(
    ne: u64,
    kind: MatrixKind,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let m = build_matrix(ne, kind)?;
    match output.unwrap_or(Output::Text) {
        Output::Json => {
            let payload = json!({
                "ne": ne,
                "kind": kind,
                "row_labels": m.row_labels(),
                "col_labels": m.col_labels(),
                "cells": m.to_dense()?,
            });
            writeln!(out, "{payload}")?;
        }
        Output::Csv => {
            for row in m.to_dense()? {
                let cells: Vec<String> = row.iter().map(u64::to_string).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Output::Text => write!(out, "{}", m.render()?)?,
    }
    Ok(Status::Done)
}

const AUDIT_CSV_HEADER: &str = "ne,rows_required_for_elimination,low_interval_lo,low_interval_hi,\
high_interval_lo,high_interval_hi,interval_low_primes,interval_high_primes,\
mismatch_count_formula,formula_negative,mismatch_count_exact,surviving_prime_pairs,contradiction";

fn audit(
    lo: u64,
    hi: u64,
    exec: Exec,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let audits = audit_range(lo, hi, exec)?;
    let mut out = io::BufWriter::new(out);
    match output.unwrap_or(Output::Json) {
        Output::Json | Output::Text => {
            for a in &audits {
                writeln!(out, "{}", serde_json::to_string(a)?)?;
            }
        }
        Output::Csv => {
            writeln!(out, "{AUDIT_CSV_HEADER}")?;
            for a in &audits {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    a.ne,
                    a.rows_required_for_elimination,
                    a.low_interval[0],
                    a.low_interval[1],
                    a.high_interval[0],
                    a.high_interval[1],
                    a.interval_low_primes,
                    a.interval_high_primes,
                    a.mismatch_count_formula,
                    a.formula_negative,
                    a.mismatch_count_exact,
                    a.surviving_prime_pairs,
                    a.contradiction
                )?;
            }
        }
    }
    out.flush()?;
    Ok(Status::from_falsified(
        audits.iter().any(|a| !a.contradiction),
    ))
}

fn run_machine_command(
    args: &MachineArgs,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let config = MachineConfig {
        start_even: args.start,
        limit_even: args.limit,
        controller: args.controller,
        recheck_count: args.recheck,
        allow_two: args.allow_two,
    };
    config.validate()?;
    let controller = BasisController::new(
        config.controller,
        config.allow_two,
        PrimeBitmap::new(config.limit_even),
    );
    let mut machine = Machine::new(config, controller)?;
    run_machine(&mut machine, args.trace, output, out)
}

/// Runs `machine`, prints the report and maps a halt to [`Status::Falsified`].
pub fn run_machine<C: Controller>(
    machine: &mut Machine<C>,
    trace: bool,
    output: Option<Output>,
    out: &mut (dyn Write + Send),
) -> Result<Status, Failure> {
    let mut out = io::BufWriter::new(out);
    let report = if trace {
        machine.run_traced(&mut out)?
    } else {
        machine.run()
    };
    match output.unwrap_or(Output::Text) {
        Output::Json => writeln!(out, "{}", serde_json::to_string(&report)?)?,
        Output::Csv => {
            writeln!(
                out,
                "start,limit,controller,cells,failures,halted,elapsed_ms"
            )?;
            let failures: Vec<String> = report.failures.iter().map(u64::to_string).collect();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                report.start,
                report.limit,
                report.controller,
                report.cells,
                failures.join(";"),
                report.halted,
                report.elapsed.as_millis()
            )?;
        }
        Output::Text => {
            writeln!(
                out,
                "controller={} range={}..{} cells={} failures={:?} halted={}",
                report.controller,
                report.start,
                report.limit,
                report.cells,
                report.failures,
                report.halted
            )?;
        }
    }
    out.flush()?;
    Ok(Status::from_falsified(report.halted))
}

fn bench(sieve_n: u64, scan_n: u64, out: &mut (dyn Write + Send)) -> Result<Status, Failure> {
    writeln!(out, "task,n,elapsed_ms,throughput")?;
    let modes = [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ];
    for (name, exec) in modes {
        let started = Instant::now();
        sieve_with(sieve_n, exec)?;
        row(out, &format!("sieve_{name}"), sieve_n, started)?;
    }
    let hi = scan_n.max(4) / 2 * 2;
    for (name, exec) in modes {
        let started = Instant::now();
        let opts = Counting {
            allow_two: false,
            exec,
        };
        let records = phi_scan_with(4, hi, opts)?.count() as u64;
        row(out, &format!("phi_scan_{name}"), records, started)?;
    }
    Ok(Status::Done)
}

fn row(out: &mut dyn Write, task: &str, n: u64, started: Instant) -> io::Result<()> {
    let secs = started.elapsed().as_secs_f64();
    let throughput = if secs > 0.0 {
        n as f64 / secs
    } else {
        f64::INFINITY
    };
    writeln!(out, "{task},{n},{:.3},{throughput:.1}", secs * 1e3)
}
