use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{binomial_u128, Neumaier};
use crate::schmidt::{Family, SchmidtDistribution};
use crate::symfun::ChiSequence;

/// Largest number of blocks materialized by the exact enumeration.
pub const EXACT_LIMIT: u128 = 4_000_000;

/// Work budget (`n² d`) for the degeneracy-level paths.
const LEVEL_WORK_LIMIT: u128 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Initial,
    Final,
}

/// A run of `count` equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub value: f64,
    pub count: u128,
}

/// How a stream produces its blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamPath {
    /// Full sorted list materialized up front.
    Exact,
    /// Best-first search over index tuples.
    Lazy,
    /// Geometric family: one block per power of `z`.
    Level,
    /// Uniform family: a single block.
    Uniform,
}

/// Eigenvalues of a reduced spectrum in non-increasing order.
///
/// The initial stream ranges over products `λ_{n_1}⋯λ_{n_N}` of the retained
/// modes with repetitions (the `d^N` spectrum of `N` independent cobosons);
/// the final stream over products with distinct indices divided by the
/// normalization (the `C(d,N)` non-zero eigenvalues of the condensate).
/// Iterating yields single eigenvalues with their running prefix sum;
/// [`SpectrumStream::next_block`] yields runs of equal values.
pub struct SpectrumStream {
    kind: SpectrumKind,
    path: StreamPath,
    total_dimension: u128,
    emitted_count: u128,
    prefix: Neumaier,
    source: Source,
    pending: Option<Block>,
}

enum Source {
    Blocks(std::vec::IntoIter<Block>),
    Lazy(LazyProducts),
}

impl SpectrumStream {
    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn path(&self) -> StreamPath {
        self.path
    }

    /// `d^N` for the initial stream, `C(d,N)` for the final one (saturating).
    pub fn total_dimension(&self) -> u128 {
        self.total_dimension
    }

    pub fn emitted_count(&self) -> u128 {
        self.emitted_count
    }

    pub fn prefix_sum(&self) -> f64 {
        self.prefix.total()
    }

    /// Upper bound on the mass not yet emitted.
    pub fn remaining_mass(&self) -> f64 {
        (1.0 - self.prefix.total()).max(0.0)
    }

    /// Next run of equal eigenvalues, or `None` once exhausted.
    pub fn next_block(&mut self) -> Option<Block> {
        let block = match self.pending.take() {
            Some(b) => Some(b),
            None => self.pull(),
        }?;
        self.record(block);
        Some(block)
    }

    fn pull(&mut self) -> Option<Block> {
        loop {
            let b = match &mut self.source {
                Source::Blocks(it) => it.next(),
                Source::Lazy(lazy) => lazy.next_block(),
            }?;
            if b.count > 0 {
                return Some(b);
            }
        }
    }

    fn record(&mut self, block: Block) {
        self.emitted_count = self.emitted_count.saturating_add(block.count);
        self.prefix.add(block.count as f64 * block.value);
    }

    /// Shannon entropy of the remaining eigenvalues; consumes the stream.
    pub fn entropy(mut self) -> f64 {
        let mut acc = Neumaier::new();
        while let Some(b) = self.next_block() {
            if b.value > 0.0 {
                acc.add(-(b.count as f64) * b.value * b.value.ln());
            }
        }
        acc.total()
    }
}

impl Iterator for SpectrumStream {
    type Item = (f64, f64);

    /// Yields `(eigenvalue, prefix sum through it)`.
    fn next(&mut self) -> Option<(f64, f64)> {
        let mut block = match self.pending.take() {
            Some(b) => b,
            None => self.pull()?,
        };
        block.count -= 1;
        let value = block.value;
        if block.count > 0 {
            self.pending = Some(block);
        }
        self.record(Block { value, count: 1 });
        Some((value, self.prefix.total()))
    }
}

/// Spectrum of `N` cobosons in separate wells over the retained modes.
pub fn initial_spectrum(dist: &SchmidtDistribution, n: usize) -> Result<SpectrumStream> {
    if n == 0 {
        return Err(domain("spectra are defined for n >= 1"));
    }
    let d = dist.d();
    let total_dimension = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let ln: Vec<f64> = dist.lambdas().iter().map(|l| l.ln()).collect();
    let make = |path, blocks: Vec<Block>| SpectrumStream {
        kind: SpectrumKind::Initial,
        path,
        total_dimension,
        emitted_count: 0,
        prefix: Neumaier::new(),
        source: Source::Blocks(blocks.into_iter()),
        pending: None,
    };
    if dist.family() == Family::Uniform && total_dimension < u128::MAX {
        let value = (n as f64 * ln[0]).exp();
        return Ok(make(
            StreamPath::Uniform,
            vec![Block {
                value,
                count: total_dimension,
            }],
        ));
    }
    if let Family::Geometric { z } = dist.family() {
        if let Some(counts) = composition_counts(d, n) {
            let base = n as f64 * (1.0 - z).ln();
            let blocks = level_blocks(&counts, base, z.ln());
            return Ok(make(StreamPath::Level, blocks));
        }
    }
    if binomial_u128((d + n - 1) as u64, n as u64) <= EXACT_LIMIT {
        let mut blocks = Vec::new();
        enumerate_tuples(&ln, n, false, &mut |sum, idx| {
            blocks.push(Block {
                value: sum.exp(),
                count: multinomial(idx),
            })
        });
        sort_blocks(&mut blocks);
        return Ok(make(StreamPath::Exact, blocks));
    }
    Ok(SpectrumStream {
        source: Source::Lazy(LazyProducts::new(ln, n, false, 0.0)),
        ..make(StreamPath::Lazy, Vec::new())
    })
}

/// Spectrum of the `N`-coboson condensate, normalized by `χ̃_N` from `chi`.
pub fn final_spectrum(
    dist: &SchmidtDistribution,
    n: usize,
    chi: &ChiSequence,
) -> Result<SpectrumStream> {
    if n == 0 {
        return Err(domain("spectra are defined for n >= 1"));
    }
    if n > dist.d() {
        return Err(Error::PauliBlocked { n, d: dist.d() });
    }
    let norm = chi.chi_tilde(n)?;
    if !norm.is_positive() {
        return Err(Error::UndefinedRatio { n });
    }
    final_spectrum_normalized(dist, n, norm.ln_abs())
}

/// Final spectrum with products divided by `exp(ln_norm)`.
pub(crate) fn final_spectrum_normalized(
    dist: &SchmidtDistribution,
    n: usize,
    ln_norm: f64,
) -> Result<SpectrumStream> {
    let d = dist.d();
    if n > d {
        return Err(Error::PauliBlocked { n, d });
    }
    let total_dimension = binomial_u128(d as u64, n as u64);
    let ln: Vec<f64> = dist.lambdas().iter().map(|l| l.ln()).collect();
    let make = |path, blocks: Vec<Block>| SpectrumStream {
        kind: SpectrumKind::Final,
        path,
        total_dimension,
        emitted_count: 0,
        prefix: Neumaier::new(),
        source: Source::Blocks(blocks.into_iter()),
        pending: None,
    };
    if dist.family() == Family::Uniform && total_dimension < u128::MAX {
        let value = (n as f64 * ln[0] - ln_norm).exp();
        return Ok(make(
            StreamPath::Uniform,
            vec![Block {
                value,
                count: total_dimension,
            }],
        ));
    }
    if let Family::Geometric { z } = dist.family() {
        if let Some(counts) = gaussian_binomial_counts(d, n) {
            let shift = (n * (n - 1) / 2) as f64;
            let base = n as f64 * (1.0 - z).ln() + shift * z.ln() - ln_norm;
            let blocks = level_blocks(&counts, base, z.ln());
            return Ok(make(StreamPath::Level, blocks));
        }
    }
    if total_dimension <= EXACT_LIMIT {
        let mut blocks = Vec::new();
        enumerate_tuples(&ln, n, true, &mut |sum, _| {
            blocks.push(Block {
                value: (sum - ln_norm).exp(),
                count: 1,
            })
        });
        sort_blocks(&mut blocks);
        return Ok(make(StreamPath::Exact, blocks));
    }
    Ok(SpectrumStream {
        source: Source::Lazy(LazyProducts::new(ln, n, true, ln_norm)),
        ..make(StreamPath::Lazy, Vec::new())
    })
}

fn sort_blocks(blocks: &mut [Block]) {
    blocks.sort_by(|a, b| b.value.total_cmp(&a.value));
}

fn level_blocks(counts: &[u128], base: f64, ln_z: f64) -> Vec<Block> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(l, &count)| Block {
            value: (base + l as f64 * ln_z).exp(),
            count,
        })
        .collect()
}

/// Coefficients of `(1 + q + … + q^{d-1})^n`: how many index tuples sum to `l`.
fn composition_counts(d: usize, n: usize) -> Option<Vec<u128>> {
    if (n as u128).pow(2) * d as u128 > LEVEL_WORK_LIMIT {
        return None;
    }
    let mut poly = vec![1u128];
    for _ in 0..n {
        let mut next = vec![0u128; poly.len() + d - 1];
        let mut window = 0u128;
        for (l, slot) in next.iter_mut().enumerate() {
            if l < poly.len() {
                window = window.checked_add(poly[l])?;
            }
            if l >= d {
                window -= poly[l - d];
            }
            *slot = window;
        }
        poly = next;
    }
    Some(poly)
}

/// Coefficients of the Gaussian binomial `[d choose n]_q`: how many
/// `n`-subsets of `0..d` have index sum `n(n-1)/2 + l`.
fn gaussian_binomial_counts(d: usize, n: usize) -> Option<Vec<u128>> {
    if (n as u128).pow(2) * d as u128 > LEVEL_WORK_LIMIT {
        return None;
    }
    let m = d - n;
    let mut poly = vec![1i128];
    for k in 1..=n {
        // multiply by (1 - q^{m+k}), then divide exactly by (1 - q^k)
        let shift = m + k;
        let mut prod = vec![0i128; poly.len() + shift];
        for (i, &c) in poly.iter().enumerate() {
            prod[i] = prod[i].checked_add(c)?;
            prod[i + shift] = prod[i + shift].checked_sub(c)?;
        }
        let len = prod.len() - k;
        let mut quot = vec![0i128; len];
        for i in 0..len {
            let carry = if i >= k { quot[i - k] } else { 0 };
            quot[i] = prod[i].checked_add(carry)?;
        }
        poly = quot;
    }
    poly.into_iter().map(|c| u128::try_from(c).ok()).collect()
}

/// Calls `visit(Σ ln λ, indices)` for every non-decreasing (or strictly
/// increasing when `distinct`) index tuple of length `n`.
fn enumerate_tuples(ln: &[f64], n: usize, distinct: bool, visit: &mut dyn FnMut(f64, &[u32])) {
    fn rec(
        ln: &[f64],
        n: usize,
        distinct: bool,
        start: usize,
        sum: f64,
        idx: &mut Vec<u32>,
        visit: &mut dyn FnMut(f64, &[u32]),
    ) {
        if idx.len() == n {
            visit(sum, idx);
            return;
        }
        let left = n - idx.len();
        let end = if distinct {
            ln.len() + 1 - left
        } else {
            ln.len()
        };
        for j in start..end {
            idx.push(j as u32);
            rec(
                ln,
                n,
                distinct,
                if distinct { j + 1 } else { j },
                sum + ln[j],
                idx,
                visit,
            );
            idx.pop();
        }
    }
    rec(ln, n, distinct, 0, 0.0, &mut Vec::with_capacity(n), visit);
}

/// Number of orderings of a sorted multi-index: `n! / Π m_i!`.
fn multinomial(sorted: &[u32]) -> u128 {
    let mut count = 1u128;
    let mut placed = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let run = sorted[i..].iter().take_while(|&&x| x == sorted[i]).count();
        placed += run as u64;
        count = count.saturating_mul(binomial_u128(placed, run as u64));
        i += run;
    }
    count
}

struct Entry {
    value: f64,
    idx: Vec<u32>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Best-first enumeration of index tuples by decreasing product.
///
/// Each successor raises one index by one, which never increases the
/// product, so heap order is non-increasing. Values are
/// `exp(Σ ln λ - offset)` summed in index order; floating addition and
/// `exp` are monotone, so the ordering survives rounding.
struct LazyProducts {
    ln: Vec<f64>,
    distinct: bool,
    offset: f64,
    heap: BinaryHeap<Entry>,
    seen: HashSet<Vec<u32>>,
}

impl LazyProducts {
    fn new(ln: Vec<f64>, n: usize, distinct: bool, offset: f64) -> Self {
        let start: Vec<u32> = if distinct {
            (0..n as u32).collect()
        } else {
            vec![0; n]
        };
        let mut lazy = LazyProducts {
            ln,
            distinct,
            offset,
            heap: BinaryHeap::new(),
            seen: HashSet::new(),
        };
        lazy.push(start);
        lazy
    }

    fn push(&mut self, idx: Vec<u32>) {
        if self.seen.contains(&idx) {
            return;
        }
        let sum = idx.iter().fold(0.0, |acc, &j| acc + self.ln[j as usize]);
        self.seen.insert(idx.clone());
        self.heap.push(Entry {
            value: (sum - self.offset).exp(),
            idx,
        });
    }

    fn next_block(&mut self) -> Option<Block> {
        let Entry { value, idx } = self.heap.pop()?;
        let d = self.ln.len() as u32;
        for p in 0..idx.len() {
            let raised = idx[p] + 1;
            let limit = match idx.get(p + 1) {
                Some(&next) if self.distinct => next,
                Some(&next) => next + 1,
                None => d,
            };
            if raised < limit {
                let mut succ = idx.clone();
                succ[p] = raised;
                self.push(succ);
            }
        }
        let count = if self.distinct { 1 } else { multinomial(&idx) };
        Some(Block { value, count })
    }
}
