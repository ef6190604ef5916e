//! Schmidt-coefficient distributions: the occupation probabilities `λ_n` of
//! the paired modes of a single coboson.
//!
//! A [`SchmidtDistribution`] keeps the retained coefficients sorted in
//! non-increasing order together with the probability mass cut away when an
//! infinite family is truncated. The tail is tracked rather than
//! renormalized so that truncated values can be compared honestly with the
//! closed forms of the infinite families.
//!
//! The quantities `P_j = Σ λ^j` are called power sums here. They are
//! sometimes described as complete symmetric polynomials, but that name
//! belongs to a different family; `P_2` is the purity.

mod file;
pub mod zeta;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::{compensated_sum, Neumaier};

pub use file::{read_distribution, write_distribution, DistributionFile};
pub use zeta::{hurwitz_zeta, riemann_zeta};

/// Absolute tolerance on `Σλ + tail_mass = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Named family a distribution was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// `λ_j = (1 - z) z^j`
    Geometric {
        z: f64,
    },
    /// `λ_j = (j + 1)^{-s} / ζ(s)`
    Zeta {
        s: f64,
    },
    Uniform,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Geometric { z } => write!(f, "geometric({z})"),
            Family::Zeta { s } => write!(f, "zeta({s})"),
            Family::Uniform => write!(f, "uniform"),
            Family::Custom => write!(f, "custom"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let param = |prefix: &str| -> Option<Result<f64>> {
            let inner = s
                .strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?;
            Some(inner.trim().parse::<f64>().map_err(|e| {
                Error::InvalidDistribution(format!("bad family parameter in {s:?}: {e}"))
            }))
        };
        if let Some(z) = param("geometric") {
            return Ok(Family::Geometric { z: z? });
        }
        if let Some(v) = param("zeta") {
            return Ok(Family::Zeta { s: v? });
        }
        match s {
            "uniform" => Ok(Family::Uniform),
            "custom" => Ok(Family::Custom),
            other => Err(Error::InvalidDistribution(format!(
                "unknown family {other:?}"
            ))),
        }
    }
}

/// Sorted, normalized Schmidt coefficients of one coboson.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDistribution {
    lambdas: Vec<f64>,
    tail_mass: f64,
    family: Family,
}

impl SchmidtDistribution {
    /// Validates raw parts: every entry positive and finite, non-increasing
    /// order, `tail_mass` in `[0, 1)` and total mass one.
    pub fn from_parts(lambdas: Vec<f64>, tail_mass: f64, family: Family) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidDistribution(msg));
        if lambdas.is_empty() {
            return invalid("no coefficients".into());
        }
        for (j, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() || !(f64::MIN_POSITIVE..=1.0).contains(&l) {
                return invalid(format!("lambda[{j}] = {l} is not in (0, 1]"));
            }
        }
        if let Some(j) = lambdas.windows(2).position(|w| w[1] > w[0]) {
            return invalid(format!(
                "coefficients not non-increasing at index {}: {} > {}",
                j + 1,
                lambdas[j + 1],
                lambdas[j]
            ));
        }
        if !(0.0..1.0).contains(&tail_mass) {
            return invalid(format!("tail_mass {tail_mass} is not in [0, 1)"));
        }
        let total = compensated_sum(lambdas.iter().copied()) + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return invalid(format!("total mass {total} differs from 1"));
        }
        let dist = SchmidtDistribution {
            lambdas,
            tail_mass,
            family,
        };
        dist.check_family()?;
        Ok(dist)
    }

    fn check_family(&self) -> Result<()> {
        let mismatch = |j: usize, expected: f64| {
            Error::InvalidDistribution(format!(
                "family {} predicts lambda[{j}] = {expected}, found {}",
                self.family, self.lambdas[j]
            ))
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(f64::MIN_POSITIVE);
        match self.family {
            Family::Geometric { z } => {
                check_geometric_param(z)?;
                for (j, &l) in self.lambdas.iter().enumerate() {
                    let expected = (1.0 - z) * z.powi(j as i32);
                    if !close(l, expected) {
                        return Err(mismatch(j, expected));
                    }
                }
            }
            Family::Zeta { s } => {
                check_zeta_param(s)?;
                let zeta = riemann_zeta(s)?;
                for (j, &l) in self.lambdas.iter().enumerate() {
                    let expected = ((j + 1) as f64).powf(-s) / zeta;
                    if !close(l, expected) {
                        return Err(mismatch(j, expected));
                    }
                }
            }
            Family::Uniform => {
                let expected = 1.0 / self.d() as f64;
                if let Some(j) = self.lambdas.iter().position(|&l| !close(l, expected)) {
                    return Err(mismatch(j, expected));
                }
                if self.tail_mass != 0.0 {
                    return Err(Error::InvalidDistribution(
                        "uniform family has no tail".into(),
                    ));
                }
            }
            Family::Custom => {}
        }
        Ok(())
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Number of retained modes.
    pub fn d(&self) -> usize {
        self.lambdas.len()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn largest(&self) -> f64 {
        self.lambdas[0]
    }

    /// `P = Σ λ_j²` over retained modes.
    pub fn purity(&self) -> f64 {
        self.power_sum_unchecked(2)
    }

    /// `P_j = Σ λ_m^j` over retained modes.
    pub fn power_sum(&self, j: u32) -> Result<f64> {
        if j == 0 {
            return Err(domain("power sums start at j = 1"));
        }
        Ok(self.power_sum_unchecked(j))
    }

    fn power_sum_unchecked(&self, j: u32) -> f64 {
        compensated_sum(self.lambdas.iter().map(|l| l.powi(j as i32)))
    }

    /// Shannon entropy `-Σ λ ln λ` over retained modes, in nats.
    pub fn entropy(&self) -> f64 {
        compensated_sum(self.lambdas.iter().map(|&l| -l * l.ln()))
    }

    /// Closed-form purity of the untruncated family, when one exists.
    pub fn closed_form_purity(&self) -> Option<f64> {
        match self.family {
            Family::Geometric { z } => Some((1.0 - z) / (1.0 + z)),
            Family::Zeta { s } => {
                let zs = riemann_zeta(s).ok()?;
                Some(riemann_zeta(2.0 * s).ok()? / (zs * zs))
            }
            Family::Uniform => Some(1.0 / self.d() as f64),
            Family::Custom => None,
        }
    }

    /// `Σ_{m >= d} λ_m^j`, the power sum of the truncated tail.
    ///
    /// Zero for finite distributions; closed forms for the named families.
    pub fn tail_power_sum(&self, j: u32) -> f64 {
        if self.tail_mass == 0.0 || j == 0 {
            return 0.0;
        }
        let d = self.d() as f64;
        let jf = f64::from(j);
        match self.family {
            Family::Geometric { z } => {
                (1.0 - z).powi(j as i32) * z.powf(jf * d) / (1.0 - z.powi(j as i32))
            }
            Family::Zeta { s } => match (riemann_zeta(s), hurwitz_zeta(jf * s, d + 1.0)) {
                (Ok(zs), Ok(h)) => h / zs.powi(j as i32),
                _ => f64::NAN,
            },
            // Without a model for the tail the only safe statement is the
            // bound tail_mass^j (all mass in one mode).
            Family::Uniform | Family::Custom => self.tail_mass.powi(j as i32),
        }
    }

    /// Largest coefficient in the truncated tail, if any.
    pub fn tail_max(&self) -> Option<f64> {
        if self.tail_mass == 0.0 {
            return None;
        }
        let d = self.d();
        Some(match self.family {
            Family::Geometric { z } => (1.0 - z) * z.powi(d as i32),
            Family::Zeta { s } => {
                ((d + 1) as f64).powf(-s) / riemann_zeta(s).unwrap_or(f64::INFINITY)
            }
            Family::Uniform | Family::Custom => self.tail_mass.min(self.lambdas[d - 1]),
        })
    }

    /// Purity of the full (untruncated) distribution: retained plus tail.
    pub fn total_purity(&self) -> f64 {
        self.purity() + self.tail_power_sum(2)
    }
}

fn check_geometric_param(z: f64) -> Result<()> {
    if z > 0.0 && z < 1.0 {
        Ok(())
    } else {
        Err(domain(format!(
            "geometric family requires 0 < z < 1, got {z}"
        )))
    }
}

fn check_zeta_param(s: f64) -> Result<()> {
    if s > 1.0 && s.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "zeta family requires s > 1 (series diverges), got {s}"
        )))
    }
}

fn check_modes(d: usize) -> Result<()> {
    if d == 0 {
        Err(domain("number of modes d must be at least 1"))
    } else {
        Ok(())
    }
}

/// Geometric family `λ_j = (1 - z) z^j` truncated to `d` modes.
pub fn geometric_family(z: f64, d: usize) -> Result<SchmidtDistribution> {
    check_geometric_param(z)?;
    check_modes(d)?;
    let lambdas: Vec<f64> = (0..d)
        .map(|j| (1.0 - z) * z.powi(j as i32))
        .take_while(|&l| l >= f64::MIN_POSITIVE)
        .collect();
    let tail_mass = z.powi(lambdas.len() as i32);
    Ok(SchmidtDistribution {
        lambdas,
        tail_mass,
        family: Family::Geometric { z },
    })
}

/// Geometric family truncated at the smallest `d` with `z^d <= threshold`.
pub fn geometric_with_tail(z: f64, threshold: f64) -> Result<SchmidtDistribution> {
    check_geometric_param(z)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(domain(format!(
            "tail threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let mut d = (threshold.ln() / z.ln()).ceil().max(1.0) as usize;
    while z.powi(d as i32) > threshold {
        d += 1;
    }
    geometric_family(z, d)
}

/// Zeta family `λ_j = 1 / ((j + 1)^s ζ(s))` truncated to `d` modes.
pub fn zeta_family(s: f64, d: usize) -> Result<SchmidtDistribution> {
    check_zeta_param(s)?;
    check_modes(d)?;
    let zeta = riemann_zeta(s)?;
    let lambdas: Vec<f64> = (0..d)
        .map(|j| ((j + 1) as f64).powf(-s) / zeta)
        .take_while(|&l| l >= f64::MIN_POSITIVE)
        .collect();
    let tail_mass = hurwitz_zeta(s, lambdas.len() as f64 + 1.0)? / zeta;
    Ok(SchmidtDistribution {
        lambdas,
        tail_mass,
        family: Family::Zeta { s },
    })
}

/// `d` equally occupied modes.
pub fn uniform_family(d: usize) -> Result<SchmidtDistribution> {
    check_modes(d)?;
    Ok(SchmidtDistribution {
        lambdas: vec![1.0 / d as f64; d],
        tail_mass: 0.0,
        family: Family::Uniform,
    })
}

/// Normalizes arbitrary non-negative weights: zeros dropped, entries scaled
/// to unit sum and stably sorted into non-increasing order.
pub fn from_weights(raw: &[f64]) -> Result<SchmidtDistribution> {
    if let Some((j, w)) = raw
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
    {
        return Err(domain(format!(
            "weight[{j}] = {w} is negative or not finite"
        )));
    }
    let total = compensated_sum(raw.iter().copied());
    if !(total > 0.0) {
        return Err(domain("weights are empty or all zero"));
    }
    let mut lambdas: Vec<f64> = raw
        .iter()
        .map(|w| w / total)
        .filter(|&l| l >= f64::MIN_POSITIVE)
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    // Renormalize after dropping denormals so the invariant holds exactly.
    let mut acc = Neumaier::new();
    lambdas.iter().for_each(|&l| acc.add(l));
    let kept = acc.total();
    if kept != 1.0 {
        lambdas.iter_mut().for_each(|l| *l /= kept);
    }
    Ok(SchmidtDistribution {
        lambdas,
        tail_mass: 0.0,
        family: Family::Custom,
    })
}

/// Random finite distribution on `d` modes with a randomly chosen skew.
///
/// Weights are `u^p` with `u` uniform on (0, 1] and `p` uniform on [0, 6],
/// which spans near-uniform spectra through sharply peaked ones.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<SchmidtDistribution> {
    check_modes(d)?;
    let p: f64 = rng.random_range(0.0..6.0);
    let weights: Vec<f64> = (0..d)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            u.powf(p).max(1e-6)
        })
        .collect();
    from_weights(&weights)
}
