//! Explicit two-species fermionic Fock space for small `d`.
//!
//! Basis states are pairs of occupation bitmasks `(mask_A, mask_B)`. Signs
//! follow a global Jordan–Wigner string: a ladder operator on global
//! position `p` picks up `(-1)` per occupied position below `p`. The default
//! ordering places every A mode before every B mode.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{domain, Error, Result};
use crate::numeric::compensated_sum;
use crate::schmidt::SchmidtDistribution;

/// Largest number of modes per species accepted by the oracle.
pub const MAX_MODES: usize = 12;

/// Largest number of modes for the unrestricted `4^d` space.
pub const MAX_FULL_MODES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// All `4^d` occupation pairs.
    Full,
    /// States with `mask_A = mask_B`, the ones `c†` reaches from the vacuum.
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeOrdering {
    /// `A_0 … A_{d-1} B_0 … B_{d-1}`
    AThenB,
    /// `B_{d-1} … B_0 A_{d-1} … A_0`
    Reversed,
}

/// One fermionic ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub species: Species,
    pub mode: usize,
    pub create: bool,
}

impl Ladder {
    pub fn create(species: Species, mode: usize) -> Self {
        Ladder {
            species,
            mode,
            create: true,
        }
    }

    pub fn annihilate(species: Species, mode: usize) -> Self {
        Ladder {
            species,
            mode,
            create: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    d: usize,
    sector: Sector,
    ordering: ModeOrdering,
    basis: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), usize>,
}

impl FockSpace {
    pub fn new(d: usize, sector: Sector, ordering: ModeOrdering) -> Result<Self> {
        if d == 0 {
            return Err(domain("Fock space needs at least one mode"));
        }
        let limit = match sector {
            Sector::Full => MAX_FULL_MODES,
            Sector::Paired => MAX_MODES,
        };
        if d > limit {
            return Err(Error::Resource(format!(
                "{d} modes exceed the {sector:?}-sector limit of {limit}"
            )));
        }
        let masks = 1u32 << d;
        let basis: Vec<(u32, u32)> = match sector {
            Sector::Full => (0..masks)
                .flat_map(|a| (0..masks).map(move |b| (a, b)))
                .collect(),
            Sector::Paired => (0..masks).map(|m| (m, m)).collect(),
        };
        let index = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(FockSpace {
            d,
            sector,
            ordering,
            basis,
            index,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn ordering(&self) -> ModeOrdering {
        self.ordering
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[(u32, u32)] {
        &self.basis
    }

    pub fn index_of(&self, mask_a: u32, mask_b: u32) -> Option<usize> {
        self.index.get(&(mask_a, mask_b)).copied()
    }

    pub fn vacuum(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension()];
        v[self.index[&(0, 0)]] = 1.0;
        v
    }

    fn position(&self, species: Species, mode: usize) -> usize {
        let d = self.d;
        match (self.ordering, species) {
            (ModeOrdering::AThenB, Species::A) => mode,
            (ModeOrdering::AThenB, Species::B) => d + mode,
            (ModeOrdering::Reversed, Species::A) => 2 * d - 1 - mode,
            (ModeOrdering::Reversed, Species::B) => d - 1 - mode,
        }
    }

    fn occupied_below(&self, (a, b): (u32, u32), p: usize) -> u32 {
        let below = |mask: u32, species| {
            (0..self.d)
                .filter(|&m| mask >> m & 1 == 1 && self.position(species, m) < p)
                .count() as u32
        };
        below(a, Species::A) + below(b, Species::B)
    }

    /// Applies one ladder operator to a raw occupation pair.
    fn apply_ladder(&self, state: (u32, u32), op: Ladder) -> Option<(f64, (u32, u32))> {
        let bit = 1u32 << op.mode;
        let mask = match op.species {
            Species::A => state.0,
            Species::B => state.1,
        };
        let occupied = mask & bit != 0;
        if occupied == op.create {
            return None;
        }
        let sign = if self.occupied_below(state, self.position(op.species, op.mode)).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let flipped = mask ^ bit;
        Some(match op.species {
            Species::A => (sign, (flipped, state.1)),
            Species::B => (sign, (state.0, flipped)),
        })
    }

    /// Applies a product of ladder operators, rightmost first.
    fn apply_word(&self, state: (u32, u32), word: &[Ladder]) -> Option<(f64, (u32, u32))> {
        word.iter().rev().try_fold((1.0, state), |(sign, s), &op| {
            self.apply_ladder(s, op).map(|(sg, next)| (sign * sg, next))
        })
    }

    /// Matrix of `Σ coeff · word` restricted to this space.
    pub fn operator(&self, terms: &[(f64, Vec<Ladder>)]) -> Result<SparseOperator> {
        for (_, word) in terms {
            if let Some(op) = word.iter().find(|op| op.mode >= self.d) {
                return Err(domain(format!(
                    "mode {} outside a {}-mode space",
                    op.mode, self.d
                )));
            }
        }
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for (col, &state) in self.basis.iter().enumerate() {
            for (coeff, word) in terms {
                if let Some((sign, out)) = self.apply_word(state, word) {
                    if let Some(row) = self.index_of(out.0, out.1) {
                        *acc.entry((row, col)).or_insert(0.0) += sign * coeff;
                    }
                }
            }
        }
        let mut entries: Vec<(usize, usize, f64)> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        Ok(SparseOperator {
            dim: self.dimension(),
            entries,
        })
    }
}

/// Operator as `(row, column, amplitude)` triples over a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseOperator {
    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim,
            entries: (0..dim).map(|i| (i, i, 1.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(r, c, x) in &self.entries {
            out[r] += x * v[c];
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        SparseOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|&(r, c, x)| (c, r, x)).collect(),
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &SparseOperator) -> Self {
        let mut by_row: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for &(r, c, x) in &self.entries {
            by_row.entry(c).or_default().push((r, x));
        }
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(k, c, y) in &other.entries {
            if let Some(rows) = by_row.get(&k) {
                for &(r, x) in rows {
                    *acc.entry((r, c)).or_insert(0.0) += x * y;
                }
            }
        }
        let mut entries: Vec<_> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        SparseOperator {
            dim: self.dim,
            entries,
        }
    }

    pub fn add(&self, other: &SparseOperator) -> Self {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(r, c, x) in self.entries.iter().chain(&other.entries) {
            *acc.entry((r, c)).or_insert(0.0) += x;
        }
        let mut entries: Vec<_> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        entries.sort_by_key(|&(r, c, _)| (c, r));
        SparseOperator {
            dim: self.dim,
            entries,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.dim]; self.dim];
        for &(r, c, x) in &self.entries {
            m[r][c] += x;
        }
        m
    }
}

pub fn creation(space: &FockSpace, species: Species, mode: usize) -> Result<SparseOperator> {
    space.operator(&[(1.0, vec![Ladder::create(species, mode)])])
}

pub fn annihilation(space: &FockSpace, species: Species, mode: usize) -> Result<SparseOperator> {
    space.operator(&[(1.0, vec![Ladder::annihilate(species, mode)])])
}

fn check_fits(space: &FockSpace, dist: &SchmidtDistribution) -> Result<()> {
    if dist.d() > space.d() {
        return Err(Error::Resource(format!(
            "distribution has {} modes, Fock space only {}",
            dist.d(),
            space.d()
        )));
    }
    Ok(())
}

/// `c† = Σ_m √λ_m a†_m b†_m` over the retained modes.
pub fn build_coboson_op(space: &FockSpace, dist: &SchmidtDistribution) -> Result<SparseOperator> {
    check_fits(space, dist)?;
    let terms: Vec<_> = dist
        .lambdas()
        .iter()
        .enumerate()
        .map(|(m, l)| {
            (
                l.sqrt(),
                vec![Ladder::create(Species::A, m), Ladder::create(Species::B, m)],
            )
        })
        .collect();
    space.operator(&terms)
}

/// `Δ = Σ_m λ_m (a†_m a_m + b†_m b_m)`.
pub fn deviation_op(space: &FockSpace, dist: &SchmidtDistribution) -> Result<SparseOperator> {
    check_fits(space, dist)?;
    let mut terms = Vec::new();
    for (m, &l) in dist.lambdas().iter().enumerate() {
        for species in [Species::A, Species::B] {
            terms.push((
                l,
                vec![Ladder::create(species, m), Ladder::annihilate(species, m)],
            ));
        }
    }
    space.operator(&terms)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn default_space(dist: &SchmidtDistribution) -> Result<FockSpace> {
    FockSpace::new(dist.d(), Sector::Paired, ModeOrdering::AThenB)
}

/// Normalized `|N = n⟩` and `χ_n = ‖c†^n|0⟩‖² / n!`.
#[derive(Debug, Clone)]
pub struct NumberState {
    pub vector: Vec<f64>,
    pub chi: f64,
}

pub fn number_state(dist: &SchmidtDistribution, n: usize) -> Result<NumberState> {
    number_state_in(&default_space(dist)?, dist, n)
}

pub fn number_state_in(
    space: &FockSpace,
    dist: &SchmidtDistribution,
    n: usize,
) -> Result<NumberState> {
    let c_dag = build_coboson_op(space, dist)?;
    number_state_with(space, &c_dag, dist, n)
}

fn number_state_with(
    space: &FockSpace,
    c_dag: &SparseOperator,
    dist: &SchmidtDistribution,
    n: usize,
) -> Result<NumberState> {
    let mut v = space.vacuum();
    for _ in 0..n {
        v = c_dag.apply(&v);
    }
    let norm2 = dot(&v, &v);
    if norm2 == 0.0 {
        return Err(Error::PauliBlocked { n, d: dist.d() });
    }
    let inv = norm2.sqrt().recip();
    v.iter_mut().for_each(|x| *x *= inv);
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    Ok(NumberState {
        vector: v,
        chi: norm2 / factorial,
    })
}

/// Decomposition `c|N⟩ = α_N √N |N-1⟩ + |ε_N⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annihilation {
    pub alpha: f64,
    /// `⟨ε_N|ε_N⟩`
    pub eps_norm: f64,
    /// `|⟨N-1|ε_N⟩|`
    pub orthogonality_residual: f64,
}

pub fn verify_annihilation(dist: &SchmidtDistribution, n: usize) -> Result<Annihilation> {
    verify_annihilation_in(&default_space(dist)?, dist, n)
}

pub fn verify_annihilation_in(
    space: &FockSpace,
    dist: &SchmidtDistribution,
    n: usize,
) -> Result<Annihilation> {
    if n == 0 {
        return Err(domain("annihilation needs n >= 1"));
    }
    let c_dag = build_coboson_op(space, dist)?;
    let upper = number_state_with(space, &c_dag, dist, n)?;
    let lower = number_state_with(space, &c_dag, dist, n - 1)?;
    let lowered = c_dag.adjoint().apply(&upper.vector);
    let overlap = dot(&lower.vector, &lowered);
    let eps: Vec<f64> = lowered
        .iter()
        .zip(&lower.vector)
        .map(|(w, l)| w - overlap * l)
        .collect();
    Ok(Annihilation {
        alpha: overlap / (n as f64).sqrt(),
        eps_norm: dot(&eps, &eps),
        orthogonality_residual: dot(&lower.vector, &eps).abs(),
    })
}

/// `⟨N|Δ|N⟩`, which equals `⟨1 - [c, c†]⟩_N` for a normalized distribution.
pub fn commutator_expectation(dist: &SchmidtDistribution, n: usize) -> Result<f64> {
    commutator_expectation_in(&default_space(dist)?, dist, n)
}

pub fn commutator_expectation_in(
    space: &FockSpace,
    dist: &SchmidtDistribution,
    n: usize,
) -> Result<f64> {
    let state = number_state_in(space, dist, n)?;
    let delta = deviation_op(space, dist)?;
    Ok(dot(&state.vector, &delta.apply(&state.vector)))
}

/// Largest `d` accepted by [`exact_chi`].
pub const MAX_EXACT_MODES: usize = 4;

/// Exact `χ_n = ‖c†^n|0⟩‖² / n!` for rational `λ`.
///
/// `c†^n|0⟩` has amplitude `k_S · Π_{m∈S} √λ_m` on the paired state of each
/// `n`-subset `S`, with `k_S` an integer; the squared norm is therefore the
/// rational `Σ_S k_S² Π_{m∈S} λ_m`.
pub fn exact_chi(lambdas: &[BigRational], n: usize) -> Result<BigRational> {
    let d = lambdas.len();
    if d == 0 || d > MAX_EXACT_MODES {
        return Err(Error::Resource(format!(
            "exact mode supports 1..={MAX_EXACT_MODES} modes, got {d}"
        )));
    }
    if lambdas.iter().any(|l| l <= &BigRational::zero()) {
        return Err(domain("exact mode requires positive coefficients"));
    }
    let space = FockSpace::new(d, Sector::Paired, ModeOrdering::AThenB)?;
    let pairs: Vec<Vec<Ladder>> = (0..d)
        .map(|m| vec![Ladder::create(Species::A, m), Ladder::create(Species::B, m)])
        .collect();
    let mut coeffs: HashMap<u32, BigInt> = HashMap::from([(0, BigInt::one())]);
    for _ in 0..n {
        let mut next: HashMap<u32, BigInt> = HashMap::new();
        for (&mask, k) in &coeffs {
            for word in &pairs {
                if let Some((sign, (a, _))) = space.apply_word((mask, mask), word) {
                    let entry = next.entry(a).or_insert_with(BigInt::zero);
                    if sign > 0.0 {
                        *entry += k;
                    } else {
                        *entry -= k;
                    }
                }
            }
        }
        coeffs = next;
    }
    let mut norm2 = BigRational::zero();
    for (mask, k) in coeffs {
        let weight = (0..d)
            .filter(|m| mask >> m & 1 == 1)
            .fold(BigRational::one(), |acc, m| acc * &lambdas[m]);
        norm2 += BigRational::from_integer(&k * &k) * weight;
    }
    let factorial = (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k));
    Ok(norm2 / BigRational::from_integer(factorial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schmidt::{from_weights, uniform_family};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn single_mode_pair_is_pauli_blocked() {
        let dist = from_weights(&[1.0]).unwrap();
        let space = default_space(&dist).unwrap();
        let c = build_coboson_op(&space, &dist).unwrap();
        let one = c.apply(&space.vacuum());
        assert_eq!(one[space.index_of(1, 1).unwrap()], 1.0);
        assert!(c.apply(&one).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_mode_norms() {
        let dist = from_weights(&[0.6, 0.4]).unwrap();
        let space = default_space(&dist).unwrap();
        let c = build_coboson_op(&space, &dist).unwrap();
        let v1 = c.apply(&space.vacuum());
        assert_close(dot(&v1, &v1), 1.0, 1e-15);
        let v2 = c.apply(&v1);
        assert_close(dot(&v2, &v2), 0.96, 1e-15);
        assert_close(number_state(&dist, 2).unwrap().chi, 0.48, 1e-15);
    }

    #[test]
    fn number_state_examples() {
        assert_close(
            number_state(&uniform_family(4).unwrap(), 2).unwrap().chi,
            0.75,
            1e-15,
        );
        assert_close(
            number_state(&from_weights(&[0.5, 0.3, 0.2]).unwrap(), 1)
                .unwrap()
                .chi,
            1.0,
            1e-15,
        );
        assert!(matches!(
            number_state(&from_weights(&[0.6, 0.4]).unwrap(), 3),
            Err(Error::PauliBlocked { n: 3, d: 2 })
        ));
    }

    #[test]
    fn annihilation_examples() {
        let r = verify_annihilation(&from_weights(&[0.6, 0.4]).unwrap(), 2).unwrap();
        assert_close(r.eps_norm, 0.04, 1e-14);
        assert!(r.orthogonality_residual < 1e-13);

        let r = verify_annihilation(&from_weights(&[0.5, 0.3, 0.2]).unwrap(), 1).unwrap();
        assert_close(r.eps_norm, 0.0, 1e-15);
        assert_close(r.alpha, 1.0, 1e-15);

        let r = verify_annihilation(&uniform_family(6).unwrap(), 2).unwrap();
        assert_close(r.alpha * r.alpha, 5.0 / 6.0, 1e-14);
    }

    #[test]
    fn commutator_examples() {
        assert_close(
            commutator_expectation(&from_weights(&[1.0]).unwrap(), 1).unwrap(),
            2.0,
            1e-15,
        );
        assert_close(
            commutator_expectation(&uniform_family(4).unwrap(), 1).unwrap(),
            0.5,
            1e-15,
        );
        assert_close(
            commutator_expectation(&from_weights(&[0.6, 0.4]).unwrap(), 2).unwrap(),
            2.0,
            1e-14,
        );
    }

    #[test]
    fn anticommutation_relations_hold_in_full_space() {
        for ordering in [ModeOrdering::AThenB, ModeOrdering::Reversed] {
            for d in 1..=4 {
                let space = FockSpace::new(d, Sector::Full, ordering).unwrap();
                let dim = space.dimension();
                let ops: Vec<_> = [Species::A, Species::B]
                    .into_iter()
                    .flat_map(|s| (0..d).map(move |m| (s, m)))
                    .collect();
                for &(x, m) in &ops {
                    let lower = annihilation(&space, x, m).unwrap();
                    for &(y, k) in &ops {
                        let raise = creation(&space, y, k).unwrap();
                        let anti = lower.compose(&raise).add(&raise.compose(&lower));
                        let expected = if (x, m) == (y, k) {
                            SparseOperator::identity(dim)
                        } else {
                            SparseOperator {
                                dim,
                                entries: vec![],
                            }
                        };
                        assert_eq!(
                            anti.to_dense(),
                            expected.to_dense(),
                            "d={d} {x:?}{m} {y:?}{k}"
                        );

                        let raise2 = creation(&space, x, m).unwrap();
                        let same = raise.compose(&raise2).add(&raise2.compose(&raise));
                        assert!(same.entries().is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn paired_sector_reproduces_full_space() {
        let dist = from_weights(&[0.45, 0.3, 0.15, 0.1]).unwrap();
        let full = FockSpace::new(4, Sector::Full, ModeOrdering::AThenB).unwrap();
        let paired = FockSpace::new(4, Sector::Paired, ModeOrdering::AThenB).unwrap();
        for n in 0..=4 {
            let f = number_state_in(&full, &dist, n).unwrap();
            let p = number_state_in(&paired, &dist, n).unwrap();
            assert_close(f.chi, p.chi, 1e-15);
            // everything reached from the vacuum lies in the paired sector
            for (i, &(a, b)) in full.basis().iter().enumerate() {
                if a != b {
                    assert_eq!(f.vector[i], 0.0);
                }
            }
            assert_close(
                commutator_expectation_in(&full, &dist, n).unwrap(),
                commutator_expectation_in(&paired, &dist, n).unwrap(),
                1e-14,
            );
        }
    }

    #[test]
    fn scalars_do_not_depend_on_mode_ordering() {
        let dist = from_weights(&[0.35, 0.25, 0.2, 0.12, 0.08]).unwrap();
        let fwd = FockSpace::new(5, Sector::Paired, ModeOrdering::AThenB).unwrap();
        let rev = FockSpace::new(5, Sector::Paired, ModeOrdering::Reversed).unwrap();
        for n in 1..=5 {
            assert_close(
                number_state_in(&fwd, &dist, n).unwrap().chi,
                number_state_in(&rev, &dist, n).unwrap().chi,
                1e-15,
            );
            let a = verify_annihilation_in(&fwd, &dist, n).unwrap();
            let b = verify_annihilation_in(&rev, &dist, n).unwrap();
            assert_close(a.alpha.abs(), b.alpha.abs(), 1e-14);
            assert_close(a.eps_norm, b.eps_norm, 1e-14);
            assert_close(
                commutator_expectation_in(&fwd, &dist, n).unwrap(),
                commutator_expectation_in(&rev, &dist, n).unwrap(),
                1e-14,
            );
        }
    }

    #[test]
    fn exact_mode_matches_hand_values() {
        let two = [rat(3, 5), rat(2, 5)];
        assert_eq!(exact_chi(&two, 2).unwrap(), rat(12, 25));
        assert_eq!(exact_chi(&two, 3).unwrap(), rat(0, 1));
        let quarter = vec![rat(1, 4); 4];
        // χ_2 = 2! · C(4,2) / 16
        assert_eq!(exact_chi(&quarter, 2).unwrap(), rat(3, 4));
        assert!(exact_chi(&vec![rat(1, 5); 5], 2).is_err());
    }

    #[test]
    fn oversized_spaces_are_refused() {
        assert!(matches!(
            FockSpace::new(13, Sector::Paired, ModeOrdering::AThenB),
            Err(Error::Resource(_))
        ));
        assert!(matches!(
            FockSpace::new(7, Sector::Full, ModeOrdering::AThenB),
            Err(Error::Resource(_))
        ));
    }
}
