#![allow(dead_code)]

use htga::engine::{rng_for_seed, static_step, PhaseStrategy, StaticParams};
use htga::exact::{self, EscapeParams};
use htga::objective::{jump, local_optimum_start};
use htga::power_law::PowerLaw;
use htga::{BitString, JumpParams, Problem};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_p(stat: f64, df: usize) -> f64 {
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat)
}

/// Merges adjacent bins (from the right) until each expects at least 5.
fn merge_bins(observed: &[u64], probs: &[f64], total: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &p) in observed.iter().zip(probs).rev() {
        o += ob as f64;
        e += p * total;
        if e >= 5.0 {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match obs.last_mut() {
            Some(last) => {
                *last += o;
                *exp.last_mut().unwrap() += e;
            }
            None => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    (obs, exp)
}

/// Goodness-of-fit p-value of `observed` counts against bin probabilities.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let (obs, exp) = merge_bins(observed, probs, total as f64);
    let stat: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    chi_square_p(stat, obs.len() - 1)
}

/// Two-sample homogeneity p-value for equally sized samples.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let (ka, kb) = (
        (nb as f64 / na as f64).sqrt(),
        (na as f64 / nb as f64).sqrt(),
    );
    let mut bins = Vec::new();
    let (mut x, mut y) = (0u64, 0u64);
    for (&u, &v) in a.iter().zip(b) {
        x += u;
        y += v;
        if x + y >= 10 {
            bins.push((x, y));
            x = 0;
            y = 0;
        }
    }
    if x + y > 0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += x;
                last.1 += y;
            }
            None => bins.push((x, y)),
        }
    }
    let stat: f64 = bins
        .iter()
        .map(|&(u, v)| (ka * u as f64 - kb * v as f64).powi(2) / (u + v) as f64)
        .sum();
    chi_square_p(stat, bins.len() - 1)
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Natural log of a positive big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(r: &BigRational) -> f64 {
    let num = r.numer().to_biguint().unwrap();
    let den = r.denom().to_biguint().unwrap();
    ln_big(&num) - ln_big(&den)
}

/// Probability that flipping `ell` uniformly chosen positions among `n`
/// flips all of the first `k`, by enumerating every `ell`-subset.
pub fn q_m_by_enumeration(n: u32, k: u32, ell: u32) -> BigRational {
    let zero_mask = (1u32 << k) - 1;
    let (mut hits, mut total) = (0u64, 0u64);
    for subset in 0u32..(1 << n) {
        if subset.count_ones() == ell {
            total += 1;
            hits += (subset & zero_mask == zero_mask) as u64;
        }
    }
    BigRational::new(BigInt::from(hits), BigInt::from(total))
}

/// Jump fitness by table lookup, built from the case definition.
pub fn jump_table(n: usize, k: usize) -> Vec<i64> {
    (0..=n)
        .map(|m| {
            if m <= n - k || m == n {
                (k + m) as i64
            } else {
                (n - m) as i64
            }
        })
        .collect()
}

pub fn bits_of(mask: u32, n: usize) -> BitString {
    BitString::from_bits((0..n).map(|i| mask >> i & 1 == 1))
}

pub fn check_jump_table(n: usize, k: usize) -> usize {
    let params = JumpParams::new(n, k).unwrap();
    let table = jump_table(n, k);
    (0u32..1 << n)
        .filter(|&mask| jump(params, &bits_of(mask, n)) != table[mask.count_ones() as usize])
        .count()
}

/// Outcome of simulating single static iterations from the local optimum.
#[derive(Debug)]
pub struct EscapeCheck {
    pub frequency: f64,
    pub exact: f64,
    pub sigma: f64,
}

impl EscapeCheck {
    pub fn z(&self) -> f64 {
        (self.frequency - self.exact).abs() / self.sigma
    }
}

pub fn escape_check(
    n: usize,
    k: usize,
    sp: StaticParams,
    iterations: u64,
    seed: u64,
) -> EscapeCheck {
    let params = JumpParams::new(n, k).unwrap();
    let problem = Problem::Jump(params);
    let mut rng = rng_for_seed(seed);
    let mut hits = 0u64;
    for _ in 0..iterations {
        let mut x = local_optimum_start(params, &mut rng);
        static_step(
            &mut x,
            &problem,
            &sp,
            PhaseStrategy::Auto,
            u64::MAX,
            &mut rng,
        )
        .unwrap();
        hits += (x.ones() == n) as u64;
    }
    let exact = exact::escape_probability_static(params, &EscapeParams::from(&sp))
        .unwrap()
        .exp();
    EscapeCheck {
        frequency: hits as f64 / iterations as f64,
        exact,
        sigma: (exact * (1.0 - exact) / iterations as f64).sqrt(),
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Counts of draws in `[2^j, 2^{j+1})` plus the analytic bin masses.
pub fn dyadic_histogram(dist: &PowerLaw, draws: usize, seed: u64) -> (Vec<u64>, Vec<f64>) {
    let bins = 64 - dist.upper().leading_zeros() as usize;
    let mut counts = vec![0u64; bins];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let x = dist.sample(&mut rng);
        assert!((1..=dist.upper()).contains(&x));
        counts[63 - x.leading_zeros() as usize] += 1;
    }
    let probs = (0..bins)
        .map(|j| {
            dist.mass(
                1 << j,
                ((1u128 << (j + 1)) - 1).min(u64::MAX as u128) as u64,
            )
        })
        .collect();
    (counts, probs)
}

/// Counts of each value up to 64, then dyadic bins above.
pub fn fine_histogram(dist: &PowerLaw, draws: usize, seed: u64) -> (Vec<u64>, Vec<f64>) {
    let mut edges: Vec<(u64, u64)> = (1..=64).map(|i| (i, i)).collect();
    let mut lo = 65;
    while lo <= dist.upper() {
        let hi = (lo * 2 - 1).min(dist.upper());
        edges.push((lo, hi));
        lo = hi + 1;
    }
    let mut counts = vec![0u64; edges.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        let x = dist.sample(&mut rng);
        let bin = edges.partition_point(|&(_, hi)| hi < x);
        counts[bin] += 1;
    }
    let probs = edges.iter().map(|&(lo, hi)| dist.mass(lo, hi)).collect();
    (counts, probs)
}
