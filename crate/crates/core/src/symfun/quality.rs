use serde::{Deserialize, Serialize};

use super::{
    departure_expectation, epsilon_norm, f_bounds, f_ratio, f_series_approx, number_expectation,
    ChiSequence,
};
use crate::error::Result;
use crate::numeric::fmt_f64;
use crate::schmidt::SchmidtDistribution;

pub const QUALITY_CSV_HEADER: &str = "n,f_ratio,lower,upper,series,eps_norm,departure,number_exp";

/// Bosonic-quality indicators of the `n`-coboson state.
///
/// `f_ratio` and `alpha` refer to `χ_n/χ_{n-1}`; `lower_bound`,
/// `upper_bound`, `departure` and `number_exp` involve `χ_{n+1}/χ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub n: usize,
    pub f_ratio: f64,
    pub alpha: f64,
    pub eps_norm: f64,
    pub departure: f64,
    pub number_exp: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub series_approx: f64,
    pub family: String,
}

impl QualityReport {
    pub fn csv_row(&self) -> String {
        [
            self.n.to_string(),
            fmt_f64(self.f_ratio),
            fmt_f64(self.lower_bound),
            fmt_f64(self.upper_bound),
            fmt_f64(self.series_approx),
            fmt_f64(self.eps_norm),
            fmt_f64(self.departure),
            fmt_f64(self.number_exp),
        ]
        .join(",")
    }
}

/// Builds the report for order `n`; `chi` must reach order `n + 1` unless
/// that order is Pauli-blocked.
pub fn quality_report(
    dist: &SchmidtDistribution,
    chi: &ChiSequence,
    n: usize,
) -> Result<QualityReport> {
    let f = f_ratio(chi, n)?;
    let purity = dist.purity();
    let (lower_bound, upper_bound) = f_bounds(purity, n);
    Ok(QualityReport {
        n,
        f_ratio: f,
        alpha: f.sqrt(),
        eps_norm: epsilon_norm(chi, n)?,
        departure: departure_expectation(chi, n)?,
        number_exp: number_expectation(chi, n)?,
        lower_bound,
        upper_bound,
        series_approx: f_series_approx(dist, n)?,
        family: dist.family().to_string(),
    })
}
