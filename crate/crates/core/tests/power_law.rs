mod common;

use common::{chi_square_gof, chi_square_two_sample, dyadic_histogram, fine_histogram};
use htga::exact::search_radius_window_probability;
use htga::power_law::{
    capped_upper, normalization, partial_power_sum, PowerLaw, SamplerStrategy, MAX_UPPER,
};
use proptest::prelude::*;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 1_000_000;

fn direct_sum(a: u64, b: u64, beta: f64) -> f64 {
    // smallest terms first
    (a..=b).rev().map(|i| (i as f64).powf(-beta)).sum()
}

#[test]
fn partial_sums_match_direct_summation() {
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        for (a, b) in [(1, 1), (1, 2), (3, 17), (1, 999_999), (500, 900_000)] {
            let want = direct_sum(a, b, beta);
            let got = partial_power_sum(a, b, beta);
            assert!(
                (got / want - 1.0).abs() < 1e-12,
                "beta {beta} [{a}, {b}]: {got} vs {want}"
            );
        }
    }
    assert_eq!(partial_power_sum(1, 1, 3.0), 1.0);
    assert_eq!(partial_power_sum(1, 2, 1.0), 1.5);
}

#[test]
fn long_sums_lie_within_integral_brackets() {
    let b = 1_000_000_000u64;
    // Σ_{i>b} i^-2 lies in [1/(b+1), 1/b]
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let got = partial_power_sum(1, b, 2.0);
    let (lo, hi) = (zeta2 - 1.0 / b as f64, zeta2 - 1.0 / (b + 1) as f64);
    assert!(got >= lo * (1.0 - 1e-15) && got <= hi * (1.0 + 1e-15));
    assert!((got / (0.5 * (lo + hi)) - 1.0).abs() < 1e-9);

    for beta in [1.5, 2.5] {
        let head_end = 1_000_000u64;
        let head = direct_sum(1, head_end, beta);
        let integral = |x: f64, y: f64| (x.powf(1.0 - beta) - y.powf(1.0 - beta)) / (beta - 1.0);
        let lower = head + integral(head_end as f64 + 1.0, b as f64 + 1.0);
        let upper = head + integral(head_end as f64, b as f64);
        let got = partial_power_sum(1, b, beta);
        assert!(
            got >= lower && got <= upper,
            "beta {beta}: {lower} <= {got} <= {upper}"
        );
        assert!((upper - lower) / got < 1e-9);
    }
}

#[test]
fn normalization_examples() {
    assert_eq!(normalization(2.0, 1), 1.0);
    assert!((normalization(1.0, 2) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(normalization(0.0, 4), 0.25);
}

#[test]
fn pmf_sums_to_one() {
    for beta in [0.0, 0.5, 1.0, 1.5, 2.0, 2.1, 3.0] {
        for u in [1u64, 2, 10, 1000, 1 << 16, 1 << 20] {
            let d = PowerLaw::new(beta, u).unwrap();
            let total: f64 = (1..=u).rev().map(|i| d.pmf(i)).sum();
            assert!((total - 1.0).abs() < 1e-9, "beta {beta} u {u}: {total}");
        }
        for u in [1u64 << 40, MAX_UPPER] {
            let d = PowerLaw::new(beta, u).unwrap();
            let bins = 64 - u.leading_zeros();
            let total: f64 = (0..bins)
                .map(|j| d.mass(1 << j, ((1u128 << (j + 1)) - 1).min(u as u128) as u64))
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "beta {beta} u {u}: {total}");
        }
    }
}

#[test]
fn pmf_and_expectation_examples() {
    let d = PowerLaw::new(1.0, 2).unwrap();
    assert!((d.pmf(1) - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(d.pmf(3), 0.0);
    let d = PowerLaw::new(2.0, 100).unwrap();
    let c = 1.0 / direct_sum(1, 100, 2.0);
    assert!((d.pmf(10) / (c * 0.01) - 1.0).abs() < 1e-14);
    for beta in [0.0, 1.0, 2.5] {
        assert_eq!(PowerLaw::new(beta, 1).unwrap().expectation(), 1.0);
    }
    assert!((PowerLaw::new(0.0, 3).unwrap().expectation() - 2.0).abs() < 1e-15);
}

#[test]
fn degenerate_support_always_samples_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for beta in [0.0, 1.0, 3.0] {
        let d = PowerLaw::new(beta, 1).unwrap();
        assert!((0..1000).all(|_| d.sample(&mut rng) == 1));
    }
}

#[test]
fn two_point_law_frequency() {
    let d = PowerLaw::new(1.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ones = (0..DRAWS).filter(|_| d.sample(&mut rng) == 1).count() as f64;
    let p = 2.0 / 3.0;
    let sigma = (p * (1.0 - p) / DRAWS as f64).sqrt();
    assert!((ones / DRAWS as f64 - p).abs() < 3.0 * sigma);
}

#[test]
fn chi_square_huge_support() {
    let d = PowerLaw::new(2.0, 1 << 40).unwrap();
    let (counts, probs) = dyadic_histogram(&d, DRAWS, 11);
    let p = chi_square_gof(&counts, &probs);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn chi_square_across_exponents() {
    for (i, (beta, u)) in [
        (0.5, 1u64 << 16),
        (1.0, 1 << 30),
        (1.1, MAX_UPPER),
        (2.1, MAX_UPPER),
    ]
    .into_iter()
    .enumerate()
    {
        let d = PowerLaw::new(beta, u).unwrap();
        let (counts, probs) = fine_histogram(&d, DRAWS, 100 + i as u64);
        let p = chi_square_gof(&counts, &probs);
        assert!(p > 0.001, "beta {beta} u {u}: p = {p}");
    }
}

#[test]
fn table_and_rejection_samplers_agree() {
    for beta in [0.5, 1.5, 2.5] {
        let u = 1 << 16;
        let table = PowerLaw::with_strategy(beta, u, SamplerStrategy::Table).unwrap();
        let rejection = PowerLaw::with_strategy(beta, u, SamplerStrategy::Rejection).unwrap();
        let (a, _) = fine_histogram(&table, DRAWS, 21);
        let (b, probs) = fine_histogram(&rejection, DRAWS, 22);
        let p = chi_square_two_sample(&a, &b);
        assert!(p > 0.001, "beta {beta}: two-sample p = {p}");
        let p = chi_square_gof(&b, &probs);
        assert!(p > 0.001, "beta {beta}: rejection fit p = {p}");
    }
}

#[test]
fn capped_upper_limit() {
    assert_eq!(capped_upper(10), 1024);
    assert_eq!(capped_upper(63), MAX_UPPER);
    assert_eq!(capped_upper(448), MAX_UPPER);
}

fn assert_band(name: &str, ratios: &[f64], lo: f64, hi: f64) {
    for &r in ratios {
        assert!(
            r >= lo && r <= hi,
            "{name}: ratio {r} outside [{lo}, {hi}] in {ratios:?}"
        );
    }
}

const LEMMA1_GRID: [(u64, u64); 10] = [
    (1, 1),
    (1, 10),
    (1, 1000),
    (2, 3),
    (5, 50),
    (10, 10),
    (10, 10_000),
    (100, 200),
    (1000, 1_000_000),
    (10_000, 1_000_000_000),
];

/// Ratios of partial sums to their asymptotic order over [`LEMMA1_GRID`].
fn partial_sum_ratios(beta: f64) -> Vec<f64> {
    LEMMA1_GRID
        .iter()
        .map(|&(a, b)| {
            let (a, b1) = (a as f64, (b + 1) as f64);
            let order = if beta < 1.0 {
                b1.powf(1.0 - beta) - a.powf(1.0 - beta)
            } else if beta == 1.0 {
                (b1 / a).ln()
            } else {
                a.powf(1.0 - beta) - b1.powf(1.0 - beta)
            };
            partial_power_sum(a as u64, b1 as u64 - 1, beta) / order
        })
        .collect()
}

#[test]
fn partial_sum_orders() {
    assert_band("beta 0.5", &partial_sum_ratios(0.5), 1.9, 2.5);
    assert_band("beta 1", &partial_sum_ratios(1.0), 1.0, 1.5);
    assert_band("beta 2.5", &partial_sum_ratios(2.5), 0.6, 1.6);
}

fn decade_uppers() -> Vec<u64> {
    (2..=8).map(|e| 10u64.pow(e)).collect()
}

#[test]
fn normalization_orders() {
    let us = decade_uppers();
    let ratios = |beta: f64, order: &dyn Fn(f64) -> f64| -> Vec<f64> {
        us.iter()
            .map(|&u| normalization(beta, u) / order(u as f64))
            .collect()
    };
    assert_band("beta 0.5", &ratios(0.5, &|u| u.powf(-0.5)), 0.45, 0.6);
    assert_band("beta 1", &ratios(1.0, &|u| 1.0 / (u + 1.0).ln()), 0.85, 1.0);
    assert_band("beta 1.5", &ratios(1.5, &|_| 1.0), 0.35, 0.45);
    assert_band("beta 2.5", &ratios(2.5, &|_| 1.0), 0.7, 0.8);
}

#[test]
fn expectation_orders() {
    let us = decade_uppers();
    let ratios = |beta: f64, order: &dyn Fn(f64) -> f64| -> Vec<f64> {
        us.iter()
            .map(|&u| PowerLaw::new(beta, u).unwrap().expectation() / order(u as f64))
            .collect()
    };
    assert_band("beta 0.5", &ratios(0.5, &|u| u), 0.3, 0.4);
    // u / ln u, not u: the normalization alone contributes 1 / ln u
    assert_band("beta 1", &ratios(1.0, &|u| u / (u + 1.0).ln()), 0.85, 1.0);
    assert_band("beta 1.5", &ratios(1.5, &|u| u.sqrt()), 0.7, 0.8);
    assert_band("beta 2", &ratios(2.0, &|u| (u + 1.0).ln()), 0.6, 0.7);
    assert_band("beta 2.5", &ratios(2.5, &|_| 1.0), 1.7, 2.0);
}

#[test]
fn search_radius_window_orders() {
    let u_s = 1000u64;
    let ks = [2u64, 4, 8, 16, 32];
    let ratios = |beta: f64, order: &dyn Fn(f64) -> f64| -> Vec<f64> {
        let d = PowerLaw::new(beta, u_s).unwrap();
        ks.iter()
            .map(|&k| search_radius_window_probability(&d, k) / order(k as f64))
            .collect()
    };
    let u = u_s as f64;
    assert_band("beta 0.5", &ratios(0.5, &|k| (k / u).powf(0.5)), 0.4, 0.7);
    assert_band("beta 1", &ratios(1.0, &|_| 1.0 / u.ln()), 0.6, 1.05);
    // decays like k^(1 - beta)
    assert_band("beta 1.5", &ratios(1.5, &|k| k.powf(-0.5)), 0.2, 0.4);
    assert_band("beta 2.5", &ratios(2.5, &|k| k.powf(-1.5)), 0.3, 0.6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_non_increasing(beta in 0.0f64..4.0, u in 1u64..5000, i in 1u64..5000) {
        let d = PowerLaw::new(beta, u).unwrap();
        prop_assert!(d.pmf(i + 1) <= d.pmf(i));
    }

    #[test]
    fn samples_stay_in_support(beta in 0.0f64..4.0, log2_u in 0u32..64, seed: u64) {
        let d = PowerLaw::new(beta, capped_upper(log2_u)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2000 {
            let x = d.sample(&mut rng);
            prop_assert!(x >= 1 && x <= d.upper());
        }
    }

    #[test]
    fn mass_is_additive(beta in 0.0f64..3.0, a in 1u64..10_000, len1 in 0u64..10_000, len2 in 1u64..10_000_000) {
        let d = PowerLaw::new(beta, 1 << 30).unwrap();
        let (b, c) = (a + len1, a + len1 + len2);
        let whole = d.mass(a, c);
        let split = d.mass(a, b) + d.mass(b + 1, c);
        prop_assert!((whole - split).abs() <= 1e-12 * whole.max(1e-300) + 1e-15);
    }
}
