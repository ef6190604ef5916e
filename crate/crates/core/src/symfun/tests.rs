use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::schmidt::{
    from_weights, geometric_family, geometric_with_tail, random_distribution, uniform_family,
};

/// Sum over all `k`-subsets of the products of their entries, for every `k`.
fn subset_oracle(values: &[f64]) -> Vec<f64> {
    let d = values.len();
    let mut out = vec![0.0; d + 1];
    for mask in 0u32..(1 << d) {
        let prod: f64 = (0..d)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| values[i])
            .product();
        out[mask.count_ones() as usize] += prod;
    }
    out
}

fn subset_oracle_exact(values: &[BigRational]) -> Vec<BigRational> {
    let d = values.len();
    let mut out = vec![BigRational::zero(); d + 1];
    for mask in 0u32..(1 << d) {
        let mut prod = BigRational::one();
        for (i, v) in values.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prod *= v;
            }
        }
        out[mask.count_ones() as usize] += prod;
    }
    out
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

#[test]
fn two_mode_sequence_matches_subset_enumeration() {
    let exact = subset_oracle_exact(&[ratio(3, 5), ratio(2, 5)]);
    assert_eq!(exact[2], ratio(6, 25));
    let dist = from_weights(&[0.6, 0.4]).unwrap();
    let chi = elementary_symmetric(&dist, 3);
    let v = chi.values();
    assert_eq!(v.len(), 4);
    assert_eq!(v[0], 1.0);
    assert!((v[1] - 1.0).abs() < 1e-15);
    assert!((v[2] - exact[2].to_f64().unwrap()).abs() < 1e-15);
    assert_eq!(v[3], 0.0);
    assert_eq!(chi.source(), ChiSource::Dp);
}

#[test]
fn uniform_second_order_counts_equal_products() {
    let chi = elementary_symmetric(&uniform_family(4).unwrap(), 2);
    assert!((chi.values()[2] - 0.375).abs() < 1e-15);
}

#[test]
fn recurrence_matches_enumeration_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in 1..=10 {
        let dist = random_distribution(&mut rng, d).unwrap();
        let oracle = subset_oracle(dist.lambdas());
        let chi = elementary_symmetric(&dist, d + 2);
        for k in 0..=d {
            assert!(rel_err(chi.values()[k], oracle[k]) < 1e-13, "d={d} k={k}");
        }
        assert_eq!(chi.values()[d + 1], 0.0);
        assert_eq!(chi.values()[d + 2], 0.0);
    }
}

#[test]
fn geometric_matches_closed_form() {
    for z in [0.3, 0.7, 0.95] {
        let dist = geometric_with_tail(z, 1e-15).unwrap();
        let chi = elementary_symmetric(&dist, 10);
        for n in 1..=10i32 {
            let denom: f64 = (1..=n).map(|j| 1.0 - z.powi(j)).product();
            let closed = z.powi(n * (n - 1) / 2) * (1.0 - z).powi(n) / denom;
            assert!(
                rel_err(chi.values()[n as usize], closed) < 1e-10,
                "z={z} n={n}"
            );
        }
    }
}

#[test]
fn deep_orders_do_not_underflow() {
    // χ̃_400 of 2000 equal modes is C(2000, 400)/2000^400, far below f64 range.
    let chi = elementary_symmetric(&uniform_family(2000).unwrap(), 400);
    let expected = crate::numeric::ln_binomial(2000, 400) - 400.0 * 2000f64.ln();
    let got = chi.chi_tilde(400).unwrap();
    assert!(expected < -700.0);
    assert!((got.ln_abs() - expected).abs() < 1e-9 * expected.abs());
}

#[test]
fn newton_route_examples() {
    let dist = from_weights(&[0.6, 0.4]).unwrap();
    let chi = chi_from_newton(&dist, 2);
    assert!((chi.values()[2] - 0.24).abs() < 1e-15);
    assert!((chi.values()[1] - dist.power_sum(1).unwrap()).abs() < 1e-15);
    let u = chi_from_newton(&uniform_family(4).unwrap(), 4);
    assert!(rel_err(u.values()[4], 4f64.powi(-4)) < 1e-12);
    assert_eq!(u.source(), ChiSource::Newton);
    let blocked = chi_from_newton(&dist, 4);
    assert_eq!(blocked.values()[3], 0.0);
}

#[test]
fn routes_agree_when_cancellation_is_mild() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    for _ in 0..200 {
        let d = rand::Rng::random_range(&mut rng, 1..=64);
        let dist = random_distribution(&mut rng, d).unwrap();
        let dp = elementary_symmetric(&dist, 16);
        let nw = chi_from_newton(&dist, 16);
        let ind = nw.cancellation().unwrap();
        for k in 0..=16.min(d) {
            if ind[k] < 1e6 {
                compared += 1;
                assert!(
                    rel_err(nw.values()[k], dp.values()[k]) < 1e-10,
                    "d={d} k={k}"
                );
            }
        }
    }
    assert!(compared > 1000);
}

#[test]
fn newton_flags_catastrophic_cancellation() {
    let chi = chi_from_newton(&uniform_family(64).unwrap(), 64);
    assert!(chi.severe_cancellation());
    assert!(!chi_from_newton(&from_weights(&[0.6, 0.4]).unwrap(), 2).severe_cancellation());
}

#[test]
fn second_ratio_is_one_minus_purity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let d = rand::Rng::random_range(&mut rng, 1..=64);
        let dist = random_distribution(&mut rng, d).unwrap();
        let chi = elementary_symmetric(&dist, 2);
        assert!((f_ratio(&chi, 2).unwrap() - (1.0 - dist.purity())).abs() < 1e-12);
    }
}

#[test]
fn uniform_ratios_match_binomial_closed_form() {
    for d in 1..=8usize {
        let dist = uniform_family(d).unwrap();
        let oracle = subset_oracle(dist.lambdas());
        let chi = elementary_symmetric(&dist, d + 1);
        for n in 0..d {
            let expected = (d - n) as f64 / d as f64;
            let from_oracle = (n + 1) as f64 * oracle[n + 1] / oracle[n];
            assert!((from_oracle - expected).abs() < 1e-13);
            assert!((f_ratio(&chi, n + 1).unwrap() - expected).abs() < 1e-13);
        }
    }
}

#[test]
fn ratio_past_pauli_limit() {
    let chi = elementary_symmetric(&from_weights(&[0.6, 0.4]).unwrap(), 4);
    assert_eq!(f_ratio(&chi, 3).unwrap(), 0.0);
    assert!(matches!(
        f_ratio(&chi, 4),
        Err(Error::UndefinedRatio { n: 3 })
    ));
    assert!(f_ratio(&chi, 0).is_err());
    let short = elementary_symmetric(&uniform_family(10).unwrap(), 2);
    assert!(matches!(f_ratio(&short, 3), Err(Error::OutOfRange { .. })));
}

#[test]
fn bounds_examples() {
    let (lo, hi) = f_bounds(0.1, 5);
    assert!((lo - 0.5).abs() < 1e-15 && (hi - 0.9).abs() < 1e-15);
    assert_eq!(f_bounds(1.0, 1), (0.0, 0.0));
    for d in [5usize, 10, 40] {
        let chi = elementary_symmetric(&uniform_family(d).unwrap(), d);
        for n in 1..d {
            let (lo, _) = f_bounds(1.0 / d as f64, n);
            assert!((f_ratio(&chi, n + 1).unwrap() - lo).abs() < 1e-13);
        }
    }
}

#[test]
fn series_examples() {
    let u = uniform_family(100).unwrap();
    let series = f_series_approx(&u, 5).unwrap();
    assert!((series - 0.95).abs() < 1e-14);
    let chi = elementary_symmetric(&u, 6);
    assert!((f_ratio(&chi, 6).unwrap() - 0.95).abs() < 1e-14);
    // Ideal-boson limit.
    let wide = uniform_family(1_000_000).unwrap();
    assert!((f_series_approx(&wide, 3).unwrap() - 1.0).abs() < 1e-5);
    assert!(f_series_approx(&u, 0).is_err());
}

#[test]
fn series_tracks_ratio_for_wide_geometric() {
    let g = geometric_with_tail(0.99, 1e-14).unwrap();
    let chi = elementary_symmetric(&g, 11);
    let n = 10usize;
    let p2 = g.purity();
    let err = (f_ratio(&chi, n).unwrap() - f_series_approx(&g, n).unwrap()).abs();
    assert!(err <= 50.0 * (n as f64 * p2).powi(3), "err {err}");
}

#[test]
fn epsilon_norm_examples() {
    let chi = elementary_symmetric(&from_weights(&[0.6, 0.4]).unwrap(), 3);
    assert!((epsilon_norm(&chi, 2).unwrap() - 0.04).abs() < 1e-14);
    assert!(epsilon_norm(&chi, 1).unwrap().abs() < 1e-15);
    for d in 2..=10usize {
        let chi = elementary_symmetric(&uniform_family(d).unwrap(), d + 1);
        // c|n⟩ is exactly proportional to |n-1⟩ for equal coefficients.
        for n in 1..=d {
            assert!(epsilon_norm(&chi, n).unwrap().abs() < 1e-13, "d={d} n={n}");
        }
    }
    let wide = elementary_symmetric(&uniform_family(1_000_000).unwrap(), 4);
    assert!(epsilon_norm(&wide, 3).unwrap() < 1e-5);
}

#[test]
fn departure_and_number_examples() {
    let single = elementary_symmetric(&uniform_family(1).unwrap(), 2);
    assert_eq!(departure_expectation(&single, 1).unwrap(), 2.0);
    assert!(matches!(
        departure_expectation(&single, 2),
        Err(Error::UndefinedRatio { n: 2 })
    ));
    for d in [2usize, 6, 50] {
        let chi = elementary_symmetric(&uniform_family(d).unwrap(), 4);
        assert!((departure_expectation(&chi, 1).unwrap() - 2.0 / d as f64).abs() < 1e-14);
        assert_eq!(number_expectation(&chi, 1).unwrap(), 1.0);
    }
    let six = elementary_symmetric(&uniform_family(6).unwrap(), 4);
    assert!((number_expectation(&six, 3).unwrap() - 2.0).abs() < 1e-14);
    let wide = elementary_symmetric(&uniform_family(1_000_000).unwrap(), 5);
    assert!(departure_expectation(&wide, 4).unwrap() < 1e-5);
    assert!((number_expectation(&wide, 4).unwrap() - 4.0).abs() < 1e-4);
}

#[test]
fn chain_bound_examples() {
    assert_eq!(chi_lower_chain(0.3, 1), LogValue::ONE);
    for n in 1..10u64 {
        let expected = -ln_factorial(n);
        assert!((chi_lower_chain(0.0, n as usize).ln_abs() - expected).abs() < 1e-13);
    }
    let g = geometric_with_tail(0.9, 1e-14).unwrap();
    let chi = elementary_symmetric(&g, 4);
    let bound = chi_lower_chain(g.purity(), 4);
    assert!(bound.to_f64() <= chi.values()[4]);
    // Past (n-1)P >= 1 the chained bound degenerates to zero.
    assert!(chi_lower_chain(1.0, 3).is_zero());
    assert!(chi_lower_chain(0.6, 3).is_zero());
}

#[test]
fn tail_corrected_bounds_enclose_the_infinite_geometric() {
    for (z, d) in [(0.7, 5usize), (0.9, 20), (0.99, 200)] {
        let g = geometric_family(z, d).unwrap();
        let chi = elementary_symmetric(&g, 6);
        for n in 1..=6i32 {
            let b = tail_corrected_chi(&g, &chi, n as usize).unwrap();
            let denom: f64 = (1..=n).map(|j| 1.0 - z.powi(j)).product();
            let closed = z.powi(n * (n - 1) / 2) * (1.0 - z).powi(n) / denom;
            assert!(b.lower.to_f64() <= closed * (1.0 + 1e-12), "z={z} n={n}");
            assert!(b.upper.to_f64() >= closed * (1.0 - 1e-12), "z={z} n={n}");
            assert!(chi.values()[n as usize] <= b.lower.to_f64() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn tail_corrected_bounds_are_consistent_across_cutoffs() {
    let coarse = crate::schmidt::zeta_family(1.05, 1_000).unwrap();
    let fine = crate::schmidt::zeta_family(1.05, 200_000).unwrap();
    let cc = elementary_symmetric(&coarse, 6);
    let cf = elementary_symmetric(&fine, 6);
    for n in 1..=6 {
        let a = tail_corrected_chi(&coarse, &cc, n).unwrap();
        let b = tail_corrected_chi(&fine, &cf, n).unwrap();
        assert!(a.lower.ln_abs() <= b.upper.ln_abs() + 1e-12);
        assert!(b.lower.ln_abs() <= a.upper.ln_abs() + 1e-12);
        assert!(b.upper.ln_abs() - b.lower.ln_abs() < 1e-6);
    }
    let (lo, hi) = f_ratio_bounds(&fine, &cf, 4).unwrap();
    assert!(lo <= hi && hi - lo < 1e-6);
}

#[test]
fn quality_report_for_uniform() {
    let u = uniform_family(100).unwrap();
    let chi = elementary_symmetric(&u, 6);
    let r = quality_report(&u, &chi, 5).unwrap();
    assert!((r.f_ratio - 0.96).abs() < 1e-14);
    assert!((r.alpha * r.alpha - r.f_ratio).abs() <= 1e-14 * r.f_ratio);
    assert!((r.lower_bound - 0.95).abs() < 1e-14);
    assert_eq!(r.family, "uniform");
    let row = r.csv_row();
    let first: Vec<f64> = row.split(',').take(2).map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 5.0);
    assert_eq!(first[1], r.f_ratio);
    assert_eq!(
        row.split(',').count(),
        QUALITY_CSV_HEADER.split(',').count()
    );
}
