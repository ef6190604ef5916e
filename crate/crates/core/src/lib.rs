//! Composite bosons built from two distinguishable fermions.
//!
//! Given the Schmidt coefficients `λ_n` of a single coboson, this crate
//! computes the normalization sequence `χ_N` of the `N`-coboson state and the
//! quantities derived from it, the purity bounds on `χ_{N+1}/χ_N`, and the
//! majorization test deciding whether `N` cobosons held in separate wells can
//! be condensed into one well by local operations and classical
//! communication. Every `χ`-based formula is checked against an explicit
//! second-quantized construction in [`fock_oracle`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock_oracle;
pub mod majorization;
pub mod numeric;
pub mod schmidt;
pub mod symfun;

pub use error::{Error, Result};
pub use schmidt::{Family, SchmidtDistribution};
