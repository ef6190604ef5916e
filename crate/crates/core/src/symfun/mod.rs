//! Normalization of the `N`-coboson state and the quantities built on it.
//!
//! `χ̃_N` is the `N`-th elementary symmetric polynomial of the Schmidt
//! coefficients and `χ_N = N! χ̃_N`. Two independent routes compute it:
//! the one-pass recurrence `e_k ← e_k + λ_m e_{k-1}` (authoritative) and the
//! signed Newton identity `N e_N = Σ_j (-1)^{j-1} P_j e_{N-j}` from power
//! sums, which is kept as a cross-check and reports how badly it cancelled.
//!
//! Written without signs, as `χ_N = Σ_j N^{j-1} P_j χ_{N-j}`, the Newton
//! relation is not an identity; only the alternating form is implemented.

mod quality;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{ln_factorial, LogValue, Neumaier, Scaled};
use crate::schmidt::SchmidtDistribution;

pub use quality::{quality_report, QualityReport, QUALITY_CSV_HEADER};

/// Newton-route cancellation indicator above which the result is flagged.
pub const SEVERE_CANCELLATION: f64 = 1e12;

/// Which computation produced a [`ChiSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChiSource {
    Dp,
    Newton,
    Oracle,
}

/// `χ̃_0 … χ̃_{n_max}` in signed log representation.
#[derive(Debug, Clone)]
pub struct ChiSequence {
    chi_tilde: Vec<LogValue>,
    modes: usize,
    source: ChiSource,
    cancellation: Option<Vec<f64>>,
}

impl ChiSequence {
    /// Wraps externally computed `χ̃` values (used by the Fock-space oracle).
    pub fn from_values(values: &[f64], modes: usize) -> Self {
        ChiSequence {
            chi_tilde: values.iter().map(|&v| LogValue::from_f64(v)).collect(),
            modes,
            source: ChiSource::Oracle,
            cancellation: None,
        }
    }

    pub fn n_max(&self) -> usize {
        self.chi_tilde.len() - 1
    }

    /// Number of modes of the underlying distribution.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn source(&self) -> ChiSource {
        self.source
    }

    /// `χ̃_k`. Orders beyond the number of modes are exactly zero even
    /// when they were not computed.
    pub fn chi_tilde(&self, k: usize) -> Result<LogValue> {
        if let Some(v) = self.chi_tilde.get(k) {
            Ok(*v)
        } else if k > self.modes {
            Ok(LogValue::ZERO)
        } else {
            Err(Error::OutOfRange {
                n: k,
                n_max: self.n_max(),
            })
        }
    }

    /// `χ_k = k! χ̃_k`.
    pub fn chi(&self, k: usize) -> Result<LogValue> {
        Ok(self.chi_tilde(k)? * LogValue::from_ln(ln_factorial(k as u64), 1))
    }

    pub fn values(&self) -> Vec<f64> {
        self.chi_tilde.iter().map(LogValue::to_f64).collect()
    }

    /// Per-order ratio `max |partial sum| / |result|` of the Newton route.
    pub fn cancellation(&self) -> Option<&[f64]> {
        self.cancellation.as_deref()
    }

    pub fn severe_cancellation(&self) -> bool {
        self.cancellation
            .as_ref()
            .is_some_and(|c| c.iter().any(|&x| !(x <= SEVERE_CANCELLATION)))
    }
}

/// Elementary symmetric polynomials `e_0 … e_{n_max}` of `values`, by the
/// non-negative one-pass recurrence in exponent-scaled arithmetic.
pub(crate) fn elementary_symmetric_values(values: &[f64], n_max: usize) -> Vec<LogValue> {
    let top = n_max.min(values.len());
    let mut e = vec![Scaled::ZERO; top + 1];
    e[0] = Scaled::ONE;
    for (m, &lambda) in values.iter().enumerate() {
        for k in (1..=top.min(m + 1)).rev() {
            e[k] = e[k].add_scaled(lambda, e[k - 1]);
        }
    }
    let mut out: Vec<LogValue> = e.into_iter().map(Scaled::to_log).collect();
    out.resize(n_max + 1, LogValue::ZERO);
    out
}

/// `χ̃_0 … χ̃_{n_max}` by the stable recurrence over all retained modes.
pub fn elementary_symmetric(dist: &SchmidtDistribution, n_max: usize) -> ChiSequence {
    ChiSequence {
        chi_tilde: elementary_symmetric_values(dist.lambdas(), n_max),
        modes: dist.d(),
        source: ChiSource::Dp,
        cancellation: None,
    }
}

/// `ln P_j` for `j = 1..=j_max`, shifted by the largest coefficient so no
/// term underflows before the logarithm is taken.
fn log_power_sums(lambdas: &[f64], j_max: usize) -> Vec<LogValue> {
    let ln_top = lambdas[0].ln();
    let rel: Vec<f64> = lambdas.iter().map(|l| l.ln() - ln_top).collect();
    (1..=j_max)
        .map(|j| {
            let jf = j as f64;
            let s: Neumaier = rel.iter().map(|r| (jf * r).exp()).collect();
            LogValue::from_ln(jf * ln_top + s.total().ln(), 1)
        })
        .collect()
}

/// `χ̃_0 … χ̃_{n_max}` from power sums via the signed Newton identity.
///
/// Orders above the number of modes are set to zero directly. The
/// cancellation indicator of order `N` is the summed magnitude of the
/// identity's terms over the magnitude of their sum (never below the largest
/// partial-sum ratio), multiplied by the worst indicator of the lower orders
/// it consumes, so it bounds the propagated error amplification.
///
/// The recursion runs on `γ_m = λ_m / λ_0` in plain `f64` (so that
/// `e_k(γ) = e_k(λ) / λ_0^k` stays within range) and falls back to signed
/// log-space arithmetic when it would not.
pub fn chi_from_newton(dist: &SchmidtDistribution, n_max: usize) -> ChiSequence {
    let d = dist.d();
    let top = n_max.min(d);
    let (mut e, mut cancellation) =
        newton_scaled(dist.lambdas(), top).unwrap_or_else(|| newton_log(dist.lambdas(), top));
    e.resize(n_max + 1, LogValue::ZERO);
    cancellation.resize(n_max + 1, 1.0);
    ChiSequence {
        chi_tilde: e,
        modes: d,
        source: ChiSource::Newton,
        cancellation: Some(cancellation),
    }
}

fn newton_scaled(lambdas: &[f64], top: usize) -> Option<(Vec<LogValue>, Vec<f64>)> {
    let lead = lambdas[0];
    let gamma: Vec<f64> = lambdas.iter().map(|l| l / lead).collect();
    let p: Vec<f64> = (1..=top)
        .map(|j| {
            gamma
                .iter()
                .map(|g| g.powi(j as i32))
                .collect::<Neumaier>()
                .total()
        })
        .collect();
    let mut e = vec![1.0f64];
    let mut cancellation = vec![1.0];
    for n in 1..=top {
        let mut acc = Neumaier::new();
        let mut peak = 0.0f64;
        for j in 1..=n {
            let term = p[j - 1] * e[n - j];
            acc.add(if j % 2 == 0 { -term } else { term });
            peak += term.abs();
        }
        let sum = acc.total();
        if !sum.is_finite() || !peak.is_finite() || sum.abs() < 1e-280 {
            return None;
        }
        cancellation.push(compound(&cancellation, peak / sum.abs()));
        e.push(sum / n as f64);
    }
    let ln_lead = lead.ln();
    let e = e
        .into_iter()
        .enumerate()
        .map(|(k, v)| LogValue::from_f64(v) * LogValue::from_ln(k as f64 * ln_lead, 1))
        .collect();
    Some((e, cancellation))
}

fn newton_log(lambdas: &[f64], top: usize) -> (Vec<LogValue>, Vec<f64>) {
    let p = log_power_sums(lambdas, top);
    let mut e = vec![LogValue::ONE];
    let mut cancellation = vec![1.0];
    for n in 1..=top {
        let mut acc = LogValue::ZERO;
        let mut peak = f64::NEG_INFINITY;
        for j in 1..=n {
            let mut term = p[j - 1] * e[n - j];
            if j % 2 == 0 {
                term = -term;
            }
            acc = acc.add(&term);
            peak = ln_add(peak, term.ln_abs());
        }
        let indicator = if acc.is_zero() {
            f64::INFINITY
        } else {
            (peak - acc.ln_abs()).exp()
        };
        cancellation.push(compound(&cancellation, indicator));
        e.push(acc / LogValue::from_f64(n as f64));
    }
    (e, cancellation)
}

fn compound(previous: &[f64], local: f64) -> f64 {
    local * previous.iter().copied().fold(1.0, f64::max)
}

fn ln_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `F_n = χ_n / χ_{n-1} = n χ̃_n / χ̃_{n-1}`.
///
/// Returns exactly zero when `χ_n` vanishes (Pauli blocking).
pub fn f_ratio(chi: &ChiSequence, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("F_n is defined for n >= 1"));
    }
    let prev = chi.chi_tilde(n - 1)?;
    if !prev.is_positive() {
        return Err(Error::UndefinedRatio { n: n - 1 });
    }
    let cur = chi.chi_tilde(n)?;
    if cur.is_zero() {
        return Ok(0.0);
    }
    Ok((cur * LogValue::from_f64(n as f64) / prev).to_f64())
}

/// Purity bounds `(1 - nP, 1 - P)` on `χ_{n+1}/χ_n`. The lower bound is
/// returned raw and may be negative.
pub fn f_bounds(purity: f64, n: usize) -> (f64, f64) {
    (1.0 - n as f64 * purity, 1.0 - purity)
}

/// Second-order series `1 - n P_2 + n² (P_3 - P_2²)` for the `χ` ratio.
pub fn f_series_approx(dist: &SchmidtDistribution, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("series approximation needs n >= 1"));
    }
    let p2 = dist.purity();
    let p3 = dist.power_sum(3)?;
    let nf = n as f64;
    Ok(1.0 - nf * p2 + nf * nf * (p3 - p2 * p2))
}

/// `⟨ε_n|ε_n⟩ = 1 - n χ_n/χ_{n-1} + (n-1) χ_{n+1}/χ_n`, the squared norm of
/// the part of `c|n⟩` orthogonal to `|n-1⟩`. The last term is zero when
/// `χ_n` vanishes.
pub fn epsilon_norm(chi: &ChiSequence, n: usize) -> Result<f64> {
    let f_n = f_ratio(chi, n)?;
    let next = if chi.chi_tilde(n)?.is_zero() {
        0.0
    } else {
        f_ratio(chi, n + 1)?
    };
    let value = 1.0 - n as f64 * f_n + (n as f64 - 1.0) * next;
    if value < -1e-12 {
        return Err(Error::Consistency(format!(
            "negative ⟨ε|ε⟩ = {value} at n = {n}"
        )));
    }
    Ok(value.max(0.0))
}

/// `⟨1 - [c, c†]⟩_n = 2 (1 - χ_{n+1}/χ_n)`.
pub fn departure_expectation(chi: &ChiSequence, n: usize) -> Result<f64> {
    if !chi.chi_tilde(n)?.is_positive() {
        return Err(Error::UndefinedRatio { n });
    }
    Ok(2.0 * (1.0 - f_ratio(chi, n + 1)?))
}

/// `⟨c† c⟩_n = n - (n-1)/2 ⟨1 - [c, c†]⟩_n`.
pub fn number_expectation(chi: &ChiSequence, n: usize) -> Result<f64> {
    let departure = departure_expectation(chi, n)?;
    Ok(n as f64 - (n as f64 - 1.0) / 2.0 * departure)
}

/// Chained lower bound `χ̃_n >= (1/n!) (1 - (n-1)P)^{n-1}`.
///
/// Chaining the purity bound multiplies the factors `1 - (j-1)P` for
/// `j = 2..=n`, which only preserves the inequality while all of them are
/// non-negative; once `(n-1)P >= 1` the bound returned is the trivial zero.
pub fn chi_lower_chain(purity: f64, n: usize) -> LogValue {
    if n <= 1 {
        return LogValue::ONE;
    }
    let base = 1.0 - (n as f64 - 1.0) * purity;
    if base <= 0.0 {
        return LogValue::ZERO;
    }
    LogValue::from_ln((n as f64 - 1.0) * base.ln() - ln_factorial(n as u64), 1)
}

/// Interval enclosing `χ̃_n` of the untruncated distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiBounds {
    pub lower: LogValue,
    pub upper: LogValue,
}

/// Encloses the full-distribution `χ̃_n` given the retained-mode sequence.
///
/// Splitting the modes into retained `R` and tail `T` gives
/// `e_n = Σ_k e_{n-k}(R) e_k(T)`. With tail mass `m` and normalized tail
/// purity `P_T`, each `e_k(T)` lies in
/// `[m^k/k! · max(0, 1 - (k-1)P_T)^{k-1}, m^k/k!]`.
pub fn tail_corrected_chi(
    dist: &SchmidtDistribution,
    chi: &ChiSequence,
    n: usize,
) -> Result<ChiBounds> {
    let retained = chi.chi_tilde(n)?;
    let m = dist.tail_mass();
    if m == 0.0 {
        return Ok(ChiBounds {
            lower: retained,
            upper: retained,
        });
    }
    let tail_purity = (dist.tail_power_sum(2) / (m * m)).clamp(0.0, 1.0);
    let ln_m = m.ln();
    let mut lower = LogValue::ZERO;
    let mut upper = LogValue::ZERO;
    for k in 0..=n {
        let head = chi.chi_tilde(n - k)?;
        if head.is_zero() {
            continue;
        }
        let top = LogValue::from_ln(k as f64 * ln_m - ln_factorial(k as u64), 1);
        let shape = chi_lower_chain(tail_purity, k) * LogValue::from_ln(ln_factorial(k as u64), 1);
        upper = upper.add(&(head * top));
        lower = lower.add(&(head * top * shape));
    }
    Ok(ChiBounds { lower, upper })
}

/// Interval for `F_n = n χ̃_n / χ̃_{n-1}` of the untruncated distribution.
pub fn f_ratio_bounds(
    dist: &SchmidtDistribution,
    chi: &ChiSequence,
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(domain("F_n is defined for n >= 1"));
    }
    let cur = tail_corrected_chi(dist, chi, n)?;
    let prev = tail_corrected_chi(dist, chi, n - 1)?;
    if !prev.lower.is_positive() {
        return Err(Error::UndefinedRatio { n: n - 1 });
    }
    let nf = LogValue::from_f64(n as f64);
    Ok((
        (cur.lower * nf / prev.upper).to_f64(),
        (cur.upper * nf / prev.lower).to_f64(),
    ))
}

#[cfg(test)]
mod tests;
