use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use coboson::fock_oracle::{commutator_expectation, number_state, verify_annihilation, MAX_MODES};
use coboson::majorization::{
    check_majorization, first_element_test, gamma_condition, geometric_prefix_proof,
    single_crossing_test, uniform_final_test, FirstElement, GammaCondition, MajorizationVerdict,
    Outcome, SingleCrossing, UniformFinal, PROOF_CSV_HEADER,
};
use coboson::numeric::fmt_f64;
use coboson::schmidt::{
    random_distribution, read_distribution, uniform_family, zeta_family, DistributionFile,
};
use coboson::symfun::{
    departure_expectation, elementary_symmetric, epsilon_norm, f_ratio, f_ratio_bounds,
    quality_report, ChiSequence, QUALITY_CSV_HEADER,
};
use coboson::{Error, Family, SchmidtDistribution};

use crate::args::{self, parse_grid, parse_n_range, usage, DistArgs, Format, ScanFamily};
use crate::output;

/// Largest formula/oracle discrepancy tolerated by `oracle`.
pub const ORACLE_TOL: f64 = 1e-8;

pub struct Context {
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub tol: f64,
    pub seed: u64,
}

impl Context {
    fn writer(&self) -> Result<Box<dyn Write>> {
        output::open(self.out.as_deref())
    }

    fn table_format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn report_format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Majorized => 0,
        Outcome::Violated => 3,
        Outcome::InconclusiveAfterK => 4,
    }
}

fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Majorized => "Majorized",
        Outcome::Violated => "Violated",
        Outcome::InconclusiveAfterK => "InconclusiveAfterK",
    }
}

/// Clips `n` ranges at the number of modes, warning about the dropped part.
fn clip_range(lo: usize, hi: usize, d: usize, warnings: &mut Vec<String>) -> Result<usize> {
    if lo > d {
        return Err(Error::PauliBlocked { n: lo, d }.into());
    }
    if hi > d {
        warnings.push(format!(
            "n > {d} is Pauli-blocked; range truncated to {lo}..{d}"
        ));
    }
    Ok(hi.min(d))
}

fn tail_warning(
    dist: &SchmidtDistribution,
    chi: &ChiSequence,
    n: usize,
    tol: f64,
    warnings: &mut Vec<String>,
) -> Result<()> {
    if dist.tail_mass() > tol {
        let (lo, hi) = f_ratio_bounds(dist, chi, n)?;
        warnings.push(format!(
            "tail mass {:.3e} beyond d = {}: ratios refer to the retained modes; certified F_{n} in [{}, {}]",
            dist.tail_mass(),
            dist.d(),
            fmt_f64(lo),
            fmt_f64(hi)
        ));
    }
    Ok(())
}

pub fn quality(ctx: &Context, dist: &DistArgs, n: &str) -> Result<i32> {
    let mut warnings = Vec::new();
    let dist = dist.build(&mut warnings)?;
    let range = parse_n_range(n)?;
    let hi = clip_range(*range.start(), *range.end(), dist.d(), &mut warnings)?;
    let chi = elementary_symmetric(&dist, hi + 1);
    tail_warning(&dist, &chi, hi, ctx.tol, &mut warnings)?;
    warn_all(&warnings);
    let rows = (*range.start()..=hi)
        .map(|n| quality_report(&dist, &chi, n))
        .collect::<coboson::Result<Vec<_>>>()?;
    output::table(
        &mut *ctx.writer()?,
        ctx.table_format(),
        QUALITY_CSV_HEADER,
        &rows,
        |r| r.csv_row(),
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct MajorizeReport {
    #[serde(flatten)]
    verdict: MajorizationVerdict,
    family: String,
    n: usize,
    first_element: FirstElement,
    gamma_condition: Option<GammaCondition>,
    uniform_final: UniformFinal,
    single_crossing: Option<SingleCrossing>,
}

pub fn majorize(
    ctx: &Context,
    dist: &DistArgs,
    n: usize,
    max_prefixes: u64,
    target_z: Option<f64>,
    proof_levels: Option<usize>,
) -> Result<i32> {
    let mut warnings = Vec::new();
    let dist = dist.build(&mut warnings)?;
    warn_all(&warnings);
    if let Some(levels) = proof_levels {
        let Family::Geometric { z } = dist.family() else {
            bail!(usage!("--proof-levels requires the geometric family"));
        };
        let rows = geometric_prefix_proof(z, n, levels)?;
        output::table(
            &mut *ctx.writer()?,
            ctx.table_format(),
            PROOF_CSV_HEADER,
            &rows,
            |r| r.csv_row(),
        )?;
        return Ok(0);
    }
    let verdict = check_majorization(&dist, n, max_prefixes, ctx.tol)?;
    let chi = elementary_symmetric(&dist, n);
    let target = target_z.or(match dist.family() {
        Family::Geometric { z } => Some(z),
        _ => None,
    });
    let report = MajorizeReport {
        family: dist.family().to_string(),
        n,
        first_element: first_element_test(&dist, n, &chi)?,
        gamma_condition: if n >= 2 {
            Some(gamma_condition(&dist, n)?)
        } else {
            None
        },
        uniform_final: uniform_final_test(&dist, n, dist.d())?,
        single_crossing: target.map(|z| single_crossing_test(&dist, z)).transpose()?,
        verdict,
    };
    output::record(&mut *ctx.writer()?, ctx.report_format(), &report)?;
    Ok(exit_code(report.verdict.outcome))
}

#[derive(Serialize)]
struct CounterexampleReport {
    epsilon: f64,
    s: f64,
    n: usize,
    truncation_d: usize,
    tail_mass: f64,
    purity: f64,
    purity_leading_order: f64,
    purity_relative_deviation: f64,
    first_element: FirstElement,
    gamma_condition: GammaCondition,
    f_ratio_lower: f64,
    f_ratio_upper: f64,
    f_ratio_bound: f64,
    majorization_violated: bool,
    f_ratio_above_bound: bool,
}

pub fn counterexample(ctx: &Context, epsilon: f64, n: usize, d: usize) -> Result<i32> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        bail!(usage!("--epsilon must be positive, got {epsilon}"));
    }
    if n < 2 {
        bail!(usage!("--n must be at least 2"));
    }
    if n as f64 * epsilon > 1.0 {
        warn_all(&[format!(
            "n * epsilon = {} exceeds 1, outside the small-epsilon expansion",
            n as f64 * epsilon
        )]);
    }
    let s = 1.0 + epsilon;
    let dist = zeta_family(s, d)?;
    let chi = elementary_symmetric(&dist, n);
    let purity = dist
        .closed_form_purity()
        .unwrap_or_else(|| dist.total_purity());
    let leading = PI * PI / 6.0 * epsilon * epsilon;
    let first = first_element_test(&dist, n, &chi)?;
    let (f_lo, f_hi) = f_ratio_bounds(&dist, &chi, n)?;
    let bound = 1.0 - PI * PI / 6.0 * n as f64 * epsilon * epsilon;
    let report = CounterexampleReport {
        epsilon,
        s,
        n,
        truncation_d: dist.d(),
        tail_mass: dist.tail_mass(),
        purity,
        purity_leading_order: leading,
        purity_relative_deviation: (purity - leading).abs() / purity,
        first_element: first,
        gamma_condition: gamma_condition(&dist, n)?,
        f_ratio_lower: f_lo,
        f_ratio_upper: f_hi,
        f_ratio_bound: bound,
        majorization_violated: first.violated,
        f_ratio_above_bound: f_lo >= bound,
    };
    output::record(&mut *ctx.writer()?, ctx.report_format(), &report)?;
    Ok(0)
}

#[derive(Serialize)]
struct OracleRow {
    trial: usize,
    quantity: &'static str,
    formula: f64,
    oracle: f64,
    abs_diff: f64,
}

const ORACLE_CSV_HEADER: &str = "trial,quantity,formula,oracle,abs_diff";

fn oracle_rows(
    trial: usize,
    dist: &SchmidtDistribution,
    n: usize,
) -> coboson::Result<Vec<OracleRow>> {
    let chi = elementary_symmetric(dist, n + 1);
    let state = number_state(dist, n)?;
    let ann = verify_annihilation(dist, n)?;
    let pairs = [
        ("chi", chi.chi(n)?.to_f64(), state.chi),
        ("eps_norm", epsilon_norm(&chi, n)?, ann.eps_norm),
        (
            "commutator",
            departure_expectation(&chi, n)?,
            commutator_expectation(dist, n)?,
        ),
        ("alpha", f_ratio(&chi, n)?.sqrt(), ann.alpha),
        ("orthogonality", 0.0, ann.orthogonality_residual),
    ];
    Ok(pairs
        .into_iter()
        .map(|(quantity, formula, oracle)| OracleRow {
            trial,
            quantity,
            formula,
            oracle,
            abs_diff: (formula - oracle).abs(),
        })
        .collect())
}

pub fn oracle(ctx: &Context, d: usize, n: usize, trials: usize) -> Result<i32> {
    if d == 0 || d > MAX_MODES {
        return Err(
            Error::Resource(format!("oracle supports 1..={MAX_MODES} modes, got {d}")).into(),
        );
    }
    if n == 0 {
        bail!(usage!("--n must be at least 1"));
    }
    if n > d {
        return Err(Error::PauliBlocked { n, d }.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let dists = (0..trials)
        .map(|_| random_distribution(&mut rng, d))
        .collect::<coboson::Result<Vec<_>>>()?;
    let rows: Vec<OracleRow> = dists
        .par_iter()
        .enumerate()
        .map(|(t, dist)| oracle_rows(t, dist, n))
        .collect::<coboson::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    output::table(
        &mut *ctx.writer()?,
        ctx.table_format(),
        ORACLE_CSV_HEADER,
        &rows,
        |r| {
            format!(
                "{},{},{},{},{}",
                r.trial,
                r.quantity,
                fmt_f64(r.formula),
                fmt_f64(r.oracle),
                fmt_f64(r.abs_diff)
            )
        },
    )?;
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    if worst > ORACLE_TOL {
        eprintln!("error: oracle mismatch {worst:e} exceeds {ORACLE_TOL:e}");
        return Ok(1);
    }
    Ok(0)
}

#[derive(Serialize)]
struct ScanRow {
    family: String,
    param: f64,
    n: usize,
    d: usize,
    tail_mass: f64,
    purity: f64,
    f_ratio: f64,
    f_ratio_lo: f64,
    f_ratio_hi: f64,
    lower: f64,
    upper: f64,
    series: f64,
    majorize_verdict: &'static str,
    violation_index: Option<u128>,
}

const SCAN_CSV_HEADER: &str =
    "family,param,n,d,tail_mass,purity,f_ratio,f_ratio_lo,f_ratio_hi,lower,upper,series,majorize_verdict,violation_index";

impl ScanRow {
    fn csv_row(&self) -> String {
        [
            self.family.clone(),
            fmt_f64(self.param),
            self.n.to_string(),
            self.d.to_string(),
            fmt_f64(self.tail_mass),
            fmt_f64(self.purity),
            fmt_f64(self.f_ratio),
            fmt_f64(self.f_ratio_lo),
            fmt_f64(self.f_ratio_hi),
            fmt_f64(self.lower),
            fmt_f64(self.upper),
            fmt_f64(self.series),
            self.majorize_verdict.to_string(),
            self.violation_index
                .map(|k| k.to_string())
                .unwrap_or_default(),
        ]
        .join(",")
    }
}

pub struct ScanConfig {
    pub family: ScanFamily,
    pub z: Option<String>,
    pub s: Option<String>,
    pub d: Option<String>,
    pub file: Option<PathBuf>,
    pub n: String,
    pub tail: f64,
    pub max_prefixes: u64,
}

fn scan_point(
    cfg: &ScanConfig,
    tol: f64,
    param: f64,
    zeta_d: Option<usize>,
    n_lo: usize,
    n_hi: usize,
) -> Result<(Vec<ScanRow>, Vec<String>)> {
    let mut warnings = Vec::new();
    let dist = match cfg.family {
        ScanFamily::Geometric => args::geometric(param, None, cfg.tail)?,
        ScanFamily::Zeta => args::zeta(param, zeta_d, &mut warnings)?,
        ScanFamily::Uniform => uniform_family(param as usize)?,
        ScanFamily::File => read_distribution(cfg.file.as_ref().expect("checked by scan"))?,
    };
    if n_lo > dist.d() {
        warnings.push(format!(
            "{}: n >= {n_lo} is Pauli-blocked, no rows",
            dist.family()
        ));
        return Ok((Vec::new(), warnings));
    }
    let hi = clip_range(n_lo, n_hi, dist.d(), &mut warnings)?;
    let chi = elementary_symmetric(&dist, hi + 1);
    let mut rows = Vec::new();
    for n in n_lo..=hi {
        let q = quality_report(&dist, &chi, n)?;
        let (f_lo, f_hi) = f_ratio_bounds(&dist, &chi, n)?;
        let verdict = check_majorization(&dist, n, cfg.max_prefixes, tol)?;
        rows.push(ScanRow {
            family: dist.family().to_string(),
            param,
            n,
            d: dist.d(),
            tail_mass: dist.tail_mass(),
            purity: dist.total_purity(),
            // retained-mode ratios are meaningless once the tail is heavy
            f_ratio: if dist.tail_mass() > tol {
                0.5 * (f_lo + f_hi)
            } else {
                q.f_ratio
            },
            f_ratio_lo: f_lo,
            f_ratio_hi: f_hi,
            lower: q.lower_bound,
            upper: q.upper_bound,
            series: q.series_approx,
            majorize_verdict: outcome_name(verdict.outcome),
            violation_index: verdict.violation_index,
        });
    }
    Ok((rows, warnings))
}

pub fn scan(ctx: &Context, cfg: &ScanConfig) -> Result<i32> {
    let range = parse_n_range(&cfg.n)?;
    let require = |v: &Option<String>, flag: &str| {
        v.as_deref()
            .ok_or_else(|| usage!("--{flag} is required for this family"))
            .and_then(parse_grid)
    };
    let mut zeta_d = None;
    let grid = match cfg.family {
        ScanFamily::Geometric => {
            args::check_tail(cfg.tail)?;
            require(&cfg.z, "z")?
        }
        ScanFamily::Zeta => {
            if let Some(d) = &cfg.d {
                zeta_d = Some(
                    d.trim()
                        .parse::<usize>()
                        .map_err(|e| usage!("bad --d {d:?}: {e}"))?,
                );
            }
            require(&cfg.s, "s")?
        }
        ScanFamily::Uniform => {
            let grid = require(&cfg.d, "d")?;
            if grid.iter().any(|&x| x < 1.0 || x.fract() != 0.0) {
                bail!(usage!("uniform --d grid must contain positive integers"));
            }
            grid
        }
        ScanFamily::File => {
            if cfg.file.is_none() {
                bail!(usage!("--file is required for --family file"));
            }
            vec![f64::NAN]
        }
    };
    let results: Vec<(Vec<ScanRow>, Vec<String>)> = grid
        .par_iter()
        .map(|&p| scan_point(cfg, ctx.tol, p, zeta_d, *range.start(), *range.end()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (point_rows, warnings) in results {
        warn_all(&warnings);
        rows.extend(point_rows);
    }
    output::table(
        &mut *ctx.writer()?,
        ctx.table_format(),
        SCAN_CSV_HEADER,
        &rows,
        |r| r.csv_row(),
    )?;
    Ok(0)
}

pub fn family(ctx: &Context, dist: &DistArgs) -> Result<i32> {
    let mut warnings = Vec::new();
    let dist = dist.build(&mut warnings)?;
    warn_all(&warnings);
    let mut w = ctx.writer()?;
    match ctx.report_format() {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &DistributionFile::from(&dist))?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "j,lambda")?;
            for (j, l) in dist.lambdas().iter().enumerate() {
                writeln!(w, "{j},{}", fmt_f64(*l))?;
            }
            if dist.tail_mass() > 0.0 {
                eprintln!(
                    "warning: tail mass {} not listed",
                    fmt_f64(dist.tail_mass())
                );
            }
        }
    }
    w.flush()?;
    Ok(0)
}
