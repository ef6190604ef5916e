use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::numeric::{binomial_u128, fmt_f64, Neumaier};

pub const PROOF_CSV_HEADER: &str = "l,g_i,g_f,prefix_i,prefix_f,margin";

/// Prefix margin below which the table contradicts the degeneracy argument.
const MARGIN_FLOOR: f64 = -1e-12;

/// One degeneracy level `z^l` of the untruncated geometric family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofRow {
    pub l: usize,
    /// Initial-spectrum degeneracy `C(l+n-1, l)`.
    pub g_i: u128,
    /// Final-spectrum degeneracy: partitions of `l` into at most `n` parts.
    pub g_f: u128,
    /// Initial mass through level `l`.
    pub prefix_i: f64,
    /// Final mass over the same number of leading eigenvalues.
    pub prefix_f: f64,
    /// Smallest `prefix_f - prefix_i` over the ranks of level `l`.
    pub margin: f64,
}

impl ProofRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.l,
            self.g_i,
            self.g_f,
            fmt_f64(self.prefix_i),
            fmt_f64(self.prefix_f),
            fmt_f64(self.margin)
        )
    }
}

/// Partitions of `l` into at most `n` parts, for `l = 0..len`, from the
/// generating function `Π_{k=1..n} 1/(1 - q^k)`.
fn partition_counts(n: usize, len: usize) -> Vec<u128> {
    let mut p = vec![0u128; len];
    if len > 0 {
        p[0] = 1;
    }
    for k in 1..=n {
        for l in k..len {
            p[l] = p[l].saturating_add(p[l - k]);
        }
    }
    p
}

/// Level-by-level prefix comparison for the infinite geometric family.
///
/// Level `l` of the initial spectrum holds `C(l+n-1, l)` copies of
/// `(1-z)^n z^l`; level `l` of the condensate holds one copy of
/// `z^l Π_{j=1..n}(1 - z^j)` per partition of `l` into at most `n` parts.
/// Both spectra are walked in rank order and the margin of each row is the
/// minimum prefix difference over the ranks covered by initial level `l`.
///
/// Both spectra sum to one, so `prefix_f - prefix_i` equals the difference
/// of the un-emitted tail masses; margins are evaluated that way because
/// the prefixes themselves round to one long before the table ends.
pub fn geometric_prefix_proof(z: f64, n: usize, l_max: usize) -> Result<Vec<ProofRow>> {
    if !(z > 0.0 && z < 1.0) {
        return Err(domain(format!("proof table requires 0 < z < 1, got {z}")));
    }
    if n < 2 {
        return Err(domain("proof table requires n >= 2"));
    }
    let ln_z = z.ln();
    let ln_init = n as f64 * (1.0 - z).ln();
    let ln_final: f64 = (1..=n).map(|j| (1.0 - z.powi(j as i32)).ln()).sum();
    let g_i = |l: usize| binomial_u128((l + n - 1) as u64, l as u64);

    // last final level the rank walk reaches
    let ranks: u128 = (0..=l_max).map(g_i).sum();
    let mut parts = partition_counts(n, l_max + 1);
    let mut reached = 0u128;
    let mut last_f = 0usize;
    loop {
        if last_f >= parts.len() {
            parts = partition_counts(n, 2 * parts.len());
        }
        reached += parts[last_f];
        if reached >= ranks {
            break;
        }
        last_f += 1;
    }

    // levels summed for the tails: far enough that the omitted terms are
    // negligible next to the smallest tail used
    let needed = l_max.max(last_f) + 1;
    let ln_term = |count: u128, base: f64, l: usize| (count as f64).ln() + base + l as f64 * ln_z;
    let mut top = needed;
    loop {
        if top >= parts.len() {
            parts = partition_counts(n, (2 * parts.len()).max(top + 1));
        }
        let cutoff = |base: f64, count_at: &dyn Fn(usize) -> u128| {
            ln_term(count_at(top), base, top) < ln_term(count_at(needed), base, needed) - 60.0
        };
        let part_at = |l: usize| parts[l];
        if cutoff(ln_init, &g_i) && cutoff(ln_final, &part_at) {
            break;
        }
        top += 64;
    }
    let tails = |base: f64, count_at: &dyn Fn(usize) -> u128| {
        let mut after = vec![0.0; top + 1];
        let mut acc = Neumaier::new();
        for l in (0..top).rev() {
            let c = count_at(l + 1);
            if c > 0 {
                acc.add(ln_term(c, base, l + 1).exp());
            }
            after[l] = acc.total();
        }
        after
    };
    let tail_i = tails(ln_init, &g_i);
    let part_at = |l: usize| parts[l];
    let tail_f = tails(ln_final, &part_at);
    let value_i = |l: usize| (ln_init + l as f64 * ln_z).exp();
    let value_f = |l: usize| (ln_final + l as f64 * ln_z).exp();

    let mut fl = 0usize;
    let mut f_left = parts[0];
    let mut rows = Vec::with_capacity(l_max + 1);
    for l in 0..=l_max {
        let count = g_i(l);
        let vi = value_i(l);
        let mut left = count;
        let mut margin = f64::INFINITY;
        while left > 0 {
            while f_left == 0 {
                fl += 1;
                f_left = parts[fl];
            }
            let step = left.min(f_left);
            left -= step;
            f_left -= step;
            let rest_i = tail_i[l] + left as f64 * vi;
            let rest_f = tail_f[fl] + f_left as f64 * value_f(fl);
            margin = margin.min(rest_i - rest_f);
        }
        if margin < MARGIN_FLOOR {
            return Err(Error::Consistency(format!(
                "geometric prefix margin {margin:e} at z = {z}, n = {n}, level {l}"
            )));
        }
        let rest_f = tail_f[fl] + f_left as f64 * value_f(fl);
        rows.push(ProofRow {
            l,
            g_i: count,
            g_f: parts[l],
            prefix_i: 1.0 - tail_i[l],
            prefix_f: 1.0 - rest_f,
            margin,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Partitions of `l` into at most `n` parts by direct enumeration of
    /// non-increasing part sequences.
    fn count_partitions(l: usize, n: usize, max_part: usize) -> u128 {
        if l == 0 {
            return 1;
        }
        if n == 0 {
            return 0;
        }
        (1..=max_part.min(l))
            .map(|p| count_partitions(l - p, n - 1, p))
            .sum()
    }

    #[test]
    fn degeneracy_examples() {
        let rows = geometric_prefix_proof(0.5, 2, 3).unwrap();
        assert_eq!((rows[0].g_i, rows[0].g_f), (1, 1));
        assert_eq!((rows[1].g_i, rows[1].g_f), (2, 1));
        let rows = geometric_prefix_proof(0.5, 3, 3).unwrap();
        assert_eq!((rows[3].g_i, rows[3].g_f), (10, 3));
    }

    #[test]
    fn partition_dp_matches_enumeration() {
        for n in 1..=6 {
            let dp = partition_counts(n, 25);
            for (l, &c) in dp.iter().enumerate() {
                assert_eq!(c, count_partitions(l, n, l), "l={l} n={n}");
            }
        }
    }

    #[test]
    fn margins_are_non_negative_across_the_grid() {
        for zi in 1..=99 {
            let z = zi as f64 / 100.0;
            for n in 2..=8 {
                let rows = geometric_prefix_proof(z, n, 64).unwrap();
                assert!(rows.iter().all(|r| r.margin >= 0.0), "z={z} n={n}");
            }
        }
    }

    #[test]
    fn prefixes_approach_one() {
        let rows = geometric_prefix_proof(0.3, 2, 200).unwrap();
        let last = rows.last().unwrap();
        assert!((last.prefix_i - 1.0).abs() < 1e-12);
        assert!(last.prefix_f <= 1.0 + 1e-12);
    }

    #[test]
    fn csv_row_has_header_arity() {
        let rows = geometric_prefix_proof(0.7, 3, 2).unwrap();
        let row = rows[2].csv_row();
        assert_eq!(row.split(',').count(), PROOF_CSV_HEADER.split(',').count());
        assert!(row.starts_with("2,6,2,"));
    }
}
