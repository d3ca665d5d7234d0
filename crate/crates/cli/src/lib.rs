//! The `blocksum` command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 when a verification fails, 2 for usage and
//! domain errors, 3 when a resource cap is hit.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use blocksum_core::{Error, PrimeOrdering, SeriesPoint};

mod commands;
pub mod output;

use output::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "blocksum", version, about = "Block-ordered squarefree sums, Euler products and rearrangements")]
pub struct Cli {
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Evaluate outside the domain a computation is defined on; results are
    /// marked exploratory where applicable.
    #[arg(long, global = true)]
    pub unsafe_domain: bool,

    /// Worker threads for parallel sums.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// `key = value` defaults for z, ordering, threads, window, m_max, k_max.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Prime ordering file: one prime per line, the prefix of the ordering.
    #[arg(long, global = true)]
    pub ordering: Option<PathBuf>,

    /// Not supported: nothing here is random.
    #[arg(long, global = true, hide = true)]
    pub seed: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Odd primes up to a limit.
    Sieve {
        #[arg(long, value_parser = parse_count)]
        limit: u64,
    },
    /// The induced ordering of the odd squarefree numbers.
    Qseq {
        #[arg(long, value_parser = parse_count)]
        count: u64,
    },
    /// Partial sums of the signed series over the induced ordering.
    Theta {
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[command(flatten)]
        z: ZArg,
        /// Checkpoint every k terms instead of at powers of two.
        #[arg(long, value_parser = parse_count)]
        every: Option<u64>,
    },
    /// Partial sums of the alternating eta series.
    Eta {
        #[arg(long = "K", value_parser = parse_count)]
        k: u64,
        #[command(flatten)]
        z: ZArg,
        /// Emit the midpoint of the last two partial sums instead of a trace.
        #[arg(long)]
        midpoint: bool,
    },
    /// Euler product partials `prod_{i<=m} (1 - p_i^{-z})`.
    Euler {
        #[arg(long, value_parser = parse_count)]
        m: u64,
        #[command(flatten)]
        z: ZArg,
    },
    /// Greedy rearrangement of the prime series; writes an ordering prefix.
    Rearrange {
        #[command(flatten)]
        z: ZArg,
        /// Defaults to the increasing-order partial sum over the same number of primes.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        target: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_count)]
        steps: u64,
        #[arg(long, value_parser = parse_count)]
        window: Option<u64>,
    },
    /// Run identity checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Shorthand for `--format`.
        #[arg(long, value_enum)]
        report: Option<Format>,
        #[command(flatten)]
        z: ZArg,
        /// Largest block index for the euler and theta suites.
        #[arg(long, value_parser = parse_count)]
        m_max: Option<u64>,
        /// Largest k for the fk suite.
        #[arg(long, value_parser = parse_count)]
        k_max: Option<u64>,
        /// Tolerance for the floating-point suites (theta 1e-9, pow2 1e-12 by default).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Psi, the f-phi prefix and Omega for a range of K.
    OmegaScan {
        #[command(flatten)]
        z: ZArg,
        #[arg(long = "K-from", value_parser = parse_count)]
        k_from: u64,
        #[arg(long = "K-to", value_parser = parse_count)]
        k_to: u64,
        #[arg(long, default_value = "product")]
        route: String,
    },
    /// Phase-bucket counts and reciprocal sums over the odd primes.
    Equidist {
        #[arg(long = "N", value_parser = parse_count)]
        n: u64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long = "K", default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
    },
    /// A single term `phi(k) = (-1)^{k-1} k^{-z}`.
    Phi {
        #[arg(long, value_parser = parse_count)]
        k: u64,
        #[command(flatten)]
        z: ZArg,
    },
    /// Psi(K), the product over `U_{m(K)}` times the eta partial.
    Psi {
        #[arg(long = "K", value_parser = parse_count)]
        k: u64,
        #[command(flatten)]
        z: ZArg,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ZArg {
    /// Complex exponent as `x,y`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub z: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Euler,
    Fk,
    Counts,
    Theta,
    Pow2,
}

/// Accepts plain integers and exact float notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(v as u64),
        _ => Err(format!("expected a non-negative integer, got {s:?}")),
    }
}

/// Parses `x,y`.
pub fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in {s:?}"));
    Ok((parse(a)?, parse(b)?))
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Parse(_) | Error::Hypothesis(_) => EXIT_USAGE,
            Error::Resource(_) | Error::Io(_) => EXIT_RESOURCE,
        };
        Self { code, message: e.to_string() }
    }
}

const CONFIG_KEYS: [&str; 6] = ["z", "ordering", "threads", "window", "m_max", "k_max"];

/// `key = value` lines; `#` starts a comment line.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if !CONFIG_KEYS.contains(&k) {
            return Err(Failure::usage(format!(
                "config line {}: unknown key {k:?} (known: {})",
                i + 1,
                CONFIG_KEYS.join(", ")
            )));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Settings shared by every subcommand after flags and config are merged.
pub(crate) struct Context {
    pub config: BTreeMap<String, String>,
    pub ordering: PrimeOrdering,
    pub ordering_path: Option<PathBuf>,
    pub unsafe_domain: bool,
    pub format: Format,
}

impl Context {
    pub fn z(&self, flag: &ZArg) -> Result<SeriesPoint, Failure> {
        let (x, y) = match (flag.z, self.config.get("z")) {
            (Some(z), _) => z,
            (None, Some(s)) => parse_complex(s).map_err(Failure::usage)?,
            (None, None) => return Err(Failure::usage("missing --z x,y")),
        };
        let z = SeriesPoint::new(x, y);
        Ok(if self.unsafe_domain { z.with_override() } else { z })
    }

    /// Flag value, else config value, else the default.
    pub fn count(&self, flag: Option<u64>, key: &str, default: u64) -> Result<u64, Failure> {
        match (flag, self.config.get(key)) {
            (Some(v), _) => Ok(v),
            (None, Some(s)) => parse_count(s).map_err(|e| Failure::usage(format!("config {key}: {e}"))),
            (None, None) => Ok(default),
        }
    }

    pub fn ordering_label(&self) -> String {
        match &self.ordering_path {
            Some(p) => p.display().to_string(),
            None => "increasing".into(),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure { code: EXIT_RESOURCE, message: format!("{}: {e}", path.display()) }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure { code: EXIT_RESOURCE, message: e.to_string() })
        }
    }
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    if cli.seed.is_some() {
        return Err(Failure::usage("--seed is not accepted: every computation is deterministic"));
    }
    let config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let ordering_path = cli.ordering.clone().or_else(|| config.get("ordering").map(PathBuf::from));
    let ordering = match &ordering_path {
        Some(p) => PrimeOrdering::load(p).map_err(|e| match e {
            Error::Io(m) => Failure::usage(m),
            other => other.into(),
        })?,
        None => PrimeOrdering::increasing(),
    };
    let threads = match (cli.threads, config.get("threads")) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(
            s.parse::<usize>()
                .map_err(|_| Failure::usage(format!("config threads: bad value {s:?}")))?,
        ),
        (None, None) => None,
    };
    let format = match &cli.command {
        Command::Verify { report: Some(f), .. } => *f,
        _ => cli.format.unwrap_or(Format::Csv),
    };
    let ctx = Context { config, ordering, ordering_path, unsafe_domain: cli.unsafe_domain, format };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be >= 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Failure { code: EXIT_RESOURCE, message: e.to_string() })?;
    let outcome = pool.install(|| commands::dispatch(&cli.command, &ctx))?;
    emit(cli.out.as_deref(), &outcome.text)?;
    Ok(if outcome.verified { EXIT_OK } else { EXIT_VERIFY })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("blocksum: {}", f.message);
            f.code
        }
    }
}
