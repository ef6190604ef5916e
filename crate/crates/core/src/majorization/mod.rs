//! LOCC condensation of `N` cobosons: majorization of the separate-well
//! spectrum by the condensate spectrum, plus closed-form sufficient and
//! necessary tests.

mod proof;
mod stream;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{ln_binomial, LogValue, Neumaier};
use crate::schmidt::SchmidtDistribution;
use crate::symfun::{chi_lower_chain, elementary_symmetric, tail_corrected_chi, ChiSequence};

pub use proof::{geometric_prefix_proof, ProofRow, PROOF_CSV_HEADER};
pub use stream::{
    final_spectrum, initial_spectrum, Block, SpectrumKind, SpectrumStream, StreamPath, EXACT_LIMIT,
};

/// Default absolute tolerance on prefix-sum differences.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Majorized,
    Violated,
    InconclusiveAfterK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorizationVerdict {
    pub outcome: Outcome,
    /// 1-based rank of the first violating prefix.
    pub violation_index: Option<u128>,
    /// `prefix_i - prefix_f` at `violation_index`.
    pub gap: Option<f64>,
    /// Number of prefix breakpoints compared.
    pub checked_prefixes: u64,
    /// Rank reached by the walk.
    pub checked_rank: u128,
    /// Number of retained modes.
    pub truncation_d: usize,
    pub tolerance: f64,
}

impl MajorizationVerdict {
    fn new(
        outcome: Outcome,
        checked_prefixes: u64,
        checked_rank: u128,
        truncation_d: usize,
        tolerance: f64,
    ) -> Self {
        MajorizationVerdict {
            outcome,
            violation_index: None,
            gap: None,
            checked_prefixes,
            checked_rank,
            truncation_d,
            tolerance,
        }
    }
}

/// Lower bound on the full-distribution `χ̃_n`: the retained value when
/// nothing is truncated, otherwise the larger of the tail-corrected and
/// chained purity bounds.
fn chi_lower(dist: &SchmidtDistribution, chi: &ChiSequence, n: usize) -> Result<LogValue> {
    if dist.tail_mass() == 0.0 {
        return chi.chi_tilde(n);
    }
    let corrected = tail_corrected_chi(dist, chi, n)?.lower;
    let chained = chi_lower_chain(dist.total_purity(), n);
    Ok(if chained.cmp_value(&corrected).is_gt() {
        chained
    } else {
        corrected
    })
}

fn check_order(dist: &SchmidtDistribution, n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("majorization is defined for n >= 1"));
    }
    if n > dist.d() {
        return Err(Error::PauliBlocked { n, d: dist.d() });
    }
    Ok(())
}

/// Decides whether the separate-well spectrum is majorized by the condensate
/// spectrum, walking both in rank order.
///
/// Prefix differences are linear between block boundaries, so only
/// boundaries are compared (`max_prefixes` caps their number). With a
/// truncated tail heavier than `tol`, only the leading eigenvalues that
/// provably cannot be outranked by tail products are compared, final values
/// are normalized by a lower bound on the full `χ̃_n`, and the result is
/// either a certified violation or inconclusive.
pub fn check_majorization(
    dist: &SchmidtDistribution,
    n: usize,
    max_prefixes: u64,
    tol: f64,
) -> Result<MajorizationVerdict> {
    check_order(dist, n)?;
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let d = dist.d();
    let verdict = |outcome, checked, rank| MajorizationVerdict::new(outcome, checked, rank, d, tol);
    if n == 1 {
        return Ok(verdict(Outcome::Majorized, 0, 0));
    }
    let chi = elementary_symmetric(dist, n);
    let heavy = dist.tail_mass() > tol;
    let ln_norm = if heavy {
        chi_lower(dist, &chi, n)?.ln_abs()
    } else {
        chi.chi_tilde(n)?.ln_abs()
    };
    // Products involving a truncated mode are at most these values.
    let (floor_i, floor_f) = match (heavy, dist.tail_max()) {
        (true, Some(t)) => {
            let ln = dist.lambdas().iter().map(|l| l.ln());
            let lead: f64 = ln.clone().take(n - 1).sum();
            let ln_t = t.ln();
            (
                (ln_t + (n - 1) as f64 * dist.lambdas()[0].ln()).exp(),
                (ln_t + lead - ln_norm).exp(),
            )
        }
        _ => (0.0, 0.0),
    };

    let mut init = initial_spectrum(dist, n)?;
    let mut fin = stream::final_spectrum_normalized(dist, n, ln_norm)?;
    let mut bi = init.next_block();
    let mut bf = fin.next_block();
    let mut pi = Neumaier::new();
    let mut pf = Neumaier::new();
    let mut rank = 0u128;
    let mut checked = 0u64;

    loop {
        let Some(mut a) = bi else {
            let outcome = if heavy {
                Outcome::InconclusiveAfterK
            } else {
                Outcome::Majorized
            };
            return Ok(verdict(outcome, checked, rank));
        };
        if heavy && (a.value < floor_i || bf.is_none_or(|b| b.value < floor_f)) {
            return Ok(verdict(Outcome::InconclusiveAfterK, checked, rank));
        }
        if checked >= max_prefixes {
            return Ok(verdict(Outcome::InconclusiveAfterK, checked, rank));
        }
        // zero padding: an exhausted final stream contributes zeros forever
        let (vf, cf) = bf.map_or((0.0, u128::MAX), |b| (b.value, b.count));
        let step = a.count.min(cf);
        let d0 = pf.total() - pi.total();
        let mut end_i = pi;
        end_i.add(step as f64 * a.value);
        let mut end_f = pf;
        end_f.add(step as f64 * vf);
        checked += 1;

        if end_i.total() - end_f.total() > tol {
            let slope = a.value - vf;
            let mut t = (((d0 + tol) / slope).floor() as u128)
                .saturating_add(1)
                .clamp(1, step);
            let gap_at = |t: u128| {
                let mut gi = pi;
                gi.add(t as f64 * a.value);
                let mut gf = pf;
                gf.add(t as f64 * vf);
                gi.total() - gf.total()
            };
            while t > 1 && gap_at(t - 1) > tol {
                t -= 1;
            }
            while t < step && gap_at(t) <= tol {
                t += 1;
            }
            return Ok(MajorizationVerdict {
                violation_index: Some(rank + t),
                gap: Some(gap_at(t)),
                ..verdict(Outcome::Violated, checked, rank + t)
            });
        }

        pi = end_i;
        pf = end_f;
        rank = rank.saturating_add(step);
        a.count -= step;
        bi = if a.count == 0 {
            init.next_block()
        } else {
            Some(a)
        };
        if let Some(mut b) = bf {
            b.count -= step;
            bf = if b.count == 0 {
                fin.next_block()
            } else {
                Some(b)
            };
        }

        // remaining initial mass cannot overturn the current headroom
        if !heavy {
            let remaining = (1.0 - pi.total()).max(0.0);
            if remaining <= pf.total() - pi.total() + tol {
                return Ok(verdict(Outcome::Majorized, checked, rank));
            }
        }
    }
}

/// Comparison of the largest eigenvalues of the two spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstElement {
    /// `λ_0^n` exceeds the leading condensate eigenvalue.
    pub violated: bool,
    /// `ln λ_0^n - ln(λ_0⋯λ_{n-1} / χ̃_n)`.
    pub gap: f64,
    /// `λ_0^n - λ_0⋯λ_{n-1} / χ̃_n`.
    pub difference: f64,
}

/// Compares `λ_0^n` with `λ_0⋯λ_{n-1}/χ̃_n` in log space.
///
/// For a truncated distribution `χ̃_n` is replaced by a lower bound on the
/// full value, which can only enlarge the condensate eigenvalue, so a
/// reported violation still holds for the untruncated distribution.
pub fn first_element_test(
    dist: &SchmidtDistribution,
    n: usize,
    chi: &ChiSequence,
) -> Result<FirstElement> {
    check_order(dist, n)?;
    let ln = |j: usize| dist.lambdas()[j].ln();
    let ln_i = n as f64 * ln(0);
    let norm = chi_lower(dist, chi, n)?;
    if !norm.is_positive() {
        return Err(Error::UndefinedRatio { n });
    }
    let ln_f = (0..n).map(ln).sum::<f64>() - norm.ln_abs();
    let gap = ln_i - ln_f;
    Ok(FirstElement {
        violated: gap > 0.0,
        gap,
        difference: ln_i.exp() - ln_f.exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaCondition {
    pub fails_majorization: bool,
    /// `ln(γ_1⋯γ_{n-1})` with `γ_j = λ_j / λ_0`.
    pub ln_lhs: f64,
    /// `ln((1/n!)(1 - (n-1)P)^{n-1})`, `-inf` once the bound is trivial.
    pub ln_rhs: f64,
}

/// Sufficient condition for a first-element violation:
/// `γ_1⋯γ_{n-1} < (1/n!)(1 - (n-1)P)^{n-1}` with `P` the full purity.
pub fn gamma_condition(dist: &SchmidtDistribution, n: usize) -> Result<GammaCondition> {
    if n < 2 {
        return Err(domain("gamma condition requires n >= 2"));
    }
    check_order(dist, n)?;
    let l = dist.lambdas();
    let ln0 = l[0].ln();
    let ln_lhs: f64 = l[1..n].iter().map(|x| x.ln() - ln0).sum();
    let rhs = chi_lower_chain(dist.total_purity(), n);
    let ln_rhs = if rhs.is_zero() {
        f64::NEG_INFINITY
    } else {
        rhs.ln_abs()
    };
    Ok(GammaCondition {
        fails_majorization: ln_lhs < ln_rhs,
        ln_lhs,
        ln_rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformFinal {
    pub sufficient: bool,
    /// Filling fraction `n / d`.
    pub mu: f64,
}

/// Sufficient condition `λ_0^n <= 1/C(d,n)`: the initial spectrum is then
/// majorized by the uniform vector on `C(d,n)` entries, which in turn is
/// majorized by any condensate spectrum supported on at most that many.
///
/// Requires `d` at least the number of retained modes.
pub fn uniform_final_test(dist: &SchmidtDistribution, n: usize, d: usize) -> Result<UniformFinal> {
    if n == 0 {
        return Err(domain("uniform-final test requires n >= 1"));
    }
    if n > d {
        return Err(Error::PauliBlocked { n, d });
    }
    if d < dist.d() {
        return Err(domain(format!(
            "d = {d} is smaller than the {} retained modes",
            dist.d()
        )));
    }
    Ok(UniformFinal {
        sufficient: n as f64 * dist.largest().ln() <= -ln_binomial(d as u64, n as u64),
        mu: n as f64 / d as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleCrossing {
    pub majorized_by_geometric: bool,
    pub crossing_count: usize,
}

/// Single-crossing criterion against the geometric law restricted to the
/// retained modes and renormalized, `(1-z) z^j / (1 - z^d)`.
///
/// Equal totals, `λ_0` not above the target and at most one sign change of
/// `λ_j - target_j` imply `dist ≺ target`.
pub fn single_crossing_test(dist: &SchmidtDistribution, z: f64) -> Result<SingleCrossing> {
    if !(z > 0.0 && z < 1.0) {
        return Err(domain(format!(
            "single-crossing test requires 0 < z < 1, got {z}"
        )));
    }
    let d = dist.d();
    let scale = (1.0 - z) / (1.0 - z.powi(d as i32));
    let mut crossings = 0;
    let mut last_sign = 0.0f64;
    for (j, &l) in dist.lambdas().iter().enumerate() {
        let target = scale * z.powi(j as i32);
        let diff = l - target;
        if diff.abs() <= 4.0 * f64::EPSILON * target {
            continue;
        }
        let sign = diff.signum();
        if last_sign != 0.0 && sign != last_sign {
            crossings += 1;
        }
        last_sign = sign;
    }
    let lead_ok = dist.largest() <= scale * (1.0 + 4.0 * f64::EPSILON);
    Ok(SingleCrossing {
        majorized_by_geometric: lead_ok && crossings <= 1,
        crossing_count: crossings,
    })
}
