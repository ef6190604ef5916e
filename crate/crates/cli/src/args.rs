use std::ops::RangeInclusive;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use coboson::schmidt::{
    geometric_family, geometric_with_tail, read_distribution, uniform_family, zeta_family,
};
use coboson::SchmidtDistribution;

/// Truncation used for zeta distributions when `--d` is not given.
pub const DEFAULT_ZETA_D: usize = 100_000;

/// Largest coboson number accepted by ranges.
pub const MAX_N: usize = 64;

#[derive(Debug, Parser)]
#[command(
    name = "coboson",
    version,
    about = "Composite-boson normalization ratios and LOCC condensation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format (tables default to csv, reports to json).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Absolute tolerance on prefix-sum comparisons.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,

    /// Seed for random-distribution trials.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bosonic-quality indicators for a range of coboson numbers.
    Quality {
        #[command(flatten)]
        dist: DistArgs,
        /// Coboson numbers, `a..b` or a single value.
        #[arg(long)]
        n: String,
    },
    /// Majorization verdict for condensing n cobosons.
    Majorize {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long)]
        n: usize,
        /// Cap on compared prefix breakpoints.
        #[arg(long, default_value_t = 100_000)]
        max_prefixes: u64,
        /// Geometric parameter for the single-crossing test (defaults to the
        /// distribution's own z for geometric input).
        #[arg(long)]
        target_z: Option<f64>,
        /// Emit the degeneracy proof table up to this level instead
        /// (geometric family only).
        #[arg(long)]
        proof_levels: Option<usize>,
    },
    /// Zeta-family counterexample: high entanglement without majorization.
    Counterexample {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n: usize,
        /// Number of retained modes.
        #[arg(long, default_value_t = 1_000_000)]
        d: usize,
    },
    /// Compare formulas against the explicit Fock-space construction.
    Oracle {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Parameter sweep over a family.
    Scan {
        #[arg(long, value_enum)]
        family: ScanFamily,
        /// Grid of z values, `a:b[:step]` or a comma list.
        #[arg(long)]
        z: Option<String>,
        /// Grid of s values, `a:b[:step]` or a comma list.
        #[arg(long)]
        s: Option<String>,
        /// Truncation for zeta, grid of mode counts for uniform.
        #[arg(long)]
        d: Option<String>,
        /// Distribution file for `--family file`.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        n: String,
        /// Geometric tail threshold.
        #[arg(long, default_value_t = 1e-12)]
        tail: f64,
        #[arg(long, default_value_t = 100_000)]
        max_prefixes: u64,
    },
    /// Write a named distribution as a JSON distribution file.
    Family {
        #[command(flatten)]
        dist: DistArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Geometric,
    Zeta,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanFamily {
    Geometric,
    Zeta,
    Uniform,
    File,
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[arg(
        long,
        value_enum,
        conflicts_with = "file",
        required_unless_present = "file"
    )]
    pub family: Option<FamilyName>,
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Number of retained modes.
    #[arg(long)]
    pub d: Option<usize>,
    /// Geometric tail threshold used when `--d` is absent.
    #[arg(long, default_value_t = 1e-12)]
    pub tail: f64,
    /// JSON distribution file.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

/// Invalid command-line input; maps to exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

macro_rules! usage {
    ($($arg:tt)*) => {
        anyhow::Error::new($crate::args::Usage(format!($($arg)*)))
    };
}
pub(crate) use usage;

pub fn check_tail(tail: f64) -> Result<()> {
    if !(tail > 0.0 && tail <= 1e-6) {
        return Err(usage!("tail threshold must lie in (0, 1e-6], got {tail}"));
    }
    Ok(())
}

pub fn geometric(z: f64, d: Option<usize>, tail: f64) -> Result<SchmidtDistribution> {
    Ok(match d {
        Some(d) => geometric_family(z, d)?,
        None => {
            check_tail(tail)?;
            geometric_with_tail(z, tail)?
        }
    })
}

/// Zeta distribution; warns when the truncation leaves a heavy tail.
pub fn zeta(s: f64, d: Option<usize>, warnings: &mut Vec<String>) -> Result<SchmidtDistribution> {
    let dist = zeta_family(s, d.unwrap_or(DEFAULT_ZETA_D))?;
    if d.is_none() && s < 1.2 {
        warnings.push(format!(
            "zeta(s = {s}) converges slowly; truncated at the default d = {} with tail mass {:.3e} (pass --d)",
            dist.d(),
            dist.tail_mass()
        ));
    }
    Ok(dist)
}

impl DistArgs {
    pub fn build(&self, warnings: &mut Vec<String>) -> Result<SchmidtDistribution> {
        if let Some(path) = &self.file {
            return Ok(read_distribution(path)?);
        }
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| usage!("--{flag} is required for this family"))
        };
        match self.family.expect("clap enforces --family or --file") {
            FamilyName::Geometric => geometric(need(self.z, "z")?, self.d, self.tail),
            FamilyName::Zeta => zeta(need(self.s, "s")?, self.d, warnings),
            FamilyName::Uniform => {
                let d = self
                    .d
                    .ok_or_else(|| usage!("--d is required for the uniform family"))?;
                Ok(uniform_family(d)?)
            }
        }
    }
}

/// Parses `a..b` (inclusive) or a single integer; bounds within `1..=64`.
pub fn parse_n_range(text: &str) -> Result<RangeInclusive<usize>> {
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| usage!("bad coboson number {s:?}: {e}"))
    };
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let n = parse(text)?;
            (n, n)
        }
    };
    if lo < 1 || hi > MAX_N || lo > hi {
        bail!(usage!(
            "n range {text:?} must satisfy 1 <= a <= b <= {MAX_N}"
        ));
    }
    Ok(lo..=hi)
}

/// Parses `a:b[:step]` (inclusive, default step 0.01) or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| usage!("bad grid value {s:?}: {e}"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [a, b] | [a, b, _] => {
            let (a, b) = (num(a)?, num(b)?);
            let step = if parts.len() == 3 {
                num(parts[2])?
            } else {
                0.01
            };
            if !(step > 0.0) || !(b >= a) {
                bail!(usage!("grid {text:?} needs a <= b and a positive step"));
            }
            // index-based points avoid accumulated drift; the endpoint is
            // kept when it lies on the lattice up to rounding
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| round_grid(a + i as f64 * step))
                .collect()
        }
        _ => bail!(usage!("grid {text:?} is not of the form a:b[:step]")),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        bail!(usage!("grid {text:?} is empty or not finite"));
    }
    Ok(grid)
}

/// Snaps lattice points such as `0.5 + 7 * 0.01` to their short decimal form.
fn round_grid(x: f64) -> f64 {
    let snapped = (x * 1e12).round() / 1e12;
    if (snapped - x).abs() <= 1e-12 * x.abs().max(1.0) {
        snapped
    } else {
        x
    }
}
