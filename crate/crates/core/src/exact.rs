//! Exact one-iteration escape probability from the local optimum of `Jump_k`.
//!
//! For static parameters `(p, c, λ_m, λ_c)` the probability that one iteration
//! of the (1+(λ,λ)) GA jumps from the local optimum to the global optimum is
//!
//! ```text
//! P = Σ_ℓ p_ℓ · p_m(ℓ) · p_c(ℓ)
//! ```
//!
//! with `ℓ ~ Bin(n, p)`, `q_m(ℓ) = C(n-k, ℓ-k) / C(n, ℓ)` the chance that one
//! mutant flips all `k` zero-bits, `p_m(ℓ) = q_m^λ_m` on the valley range
//! `k < ℓ < 2k` (every mutant must be good there) and `1 - (1 - q_m)^λ_m`
//! otherwise, and `p_c(ℓ) = 1 - (1 - c^k (1-c)^(ℓ-k))^λ_c`.
//!
//! Everything is evaluated in natural-log space; population sizes are real
//! numbers so that values such as `128^64` are representable.

use thiserror::Error;

use crate::engine::HyperParams;
use crate::objective::{JumpParams, ObjectiveError};
use crate::power_law::{PowerLaw, PowerLawError};

/// Terms this many nats below the running maximum are dropped.
pub const TRUNCATION_NATS: f64 = 60.0;

/// Heavy-tailed sums are carried out term by term up to this many support points.
pub const DIRECT_SUPPORT_LIMIT: u64 = 1_000_000;

/// Relative tail mass tolerated when a heavy-tailed support is truncated.
pub const TAIL_TOLERANCE: f64 = 1e-12;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Re-anchor the `log q_m` recurrence every this many steps.
const RESYNC_INTERVAL: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("flip count ℓ = {ell} exceeds n = {n}")]
    EllExceedsN { n: u64, ell: u64 },
    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{name} = {value} must be a finite number >= 1")]
    InvalidLambda { name: &'static str, value: f64 },
    #[error("tail mass {tail:e} of {which} beyond {limit} terms exceeds tolerance {tolerance:e}")]
    TruncationNotMet {
        which: &'static str,
        limit: u64,
        tail: f64,
        tolerance: f64,
    },
    #[error(transparent)]
    PowerLaw(#[from] PowerLawError),
    #[error(transparent)]
    Problem(#[from] ObjectiveError),
}

/// Stirling-series remainder `ln n! - ((n + 1/2) ln n - n + ln sqrt(2π))`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let ln_fact: f64 = (2..=n as u64).map(|i| (i as f64).ln()).sum();
        return ln_fact - (n + 0.5) * n.ln() + n - HALF_LN_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / m) + m - x`, accurate when `x ≈ m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// `ln Pr[Bin(n, p) = ell]` by the saddle-point expansion, relative accuracy
/// close to machine precision for all `n`.
pub fn log_p_ell(n: u64, p: f64, ell: u64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    if ell > n {
        return f64::NEG_INFINITY;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if ell == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if ell == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if ell == 0 {
        return nf * (-p).ln_1p();
    }
    if ell == n {
        return nf * p.ln();
    }
    let x = ell as f64;
    let lc = stirlerr(nf) - stirlerr(x) - stirlerr(nf - x) - bd0(x, nf * p) - bd0(nf - x, nf * q);
    let lf = 2.0 * HALF_LN_2PI + x.ln() + (-x / nf).ln_1p();
    lc - 0.5 * lf
}

/// `ln q_m(ℓ) = ln (C(n-k, ℓ-k) / C(n, ℓ)) = Σ_{i<k} ln((ℓ-i)/(n-i))`.
///
/// Returns `-inf` for `ℓ < k`.
pub fn log_q_m(n: u64, k: u64, ell: u64) -> Result<f64, ExactError> {
    if ell > n {
        return Err(ExactError::EllExceedsN { n, ell });
    }
    if ell < k {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_q_m_unchecked(n, k, ell))
}

fn log_q_m_unchecked(n: u64, k: u64, ell: u64) -> f64 {
    let gap = (n - ell) as f64;
    (0..k).map(|i| (-gap / (n - i) as f64).ln_1p()).sum()
}

/// `ln(-ln(1 - q))` from `ln q`.
fn log_hazard(log_q: f64) -> f64 {
    if log_q == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if log_q >= 0.0 {
        f64::INFINITY
    } else if log_q < -700.0 {
        // -ln(1-q) = q (1 + q/2 + ...), and q/2 is below double resolution here
        log_q
    } else {
        (-(-log_q.exp()).ln_1p()).ln()
    }
}

/// `ln(1 - e^-t)` from `ln t`.
fn log_one_minus_exp_neg(log_t: f64) -> f64 {
    if log_t == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_t < -40.0 {
        return log_t - 0.5 * log_t.exp();
    }
    let t = log_t.exp();
    if t > 40.0 {
        (-(-t).exp()).ln_1p()
    } else {
        (-(-t).exp_m1()).ln()
    }
}

/// `ln(1 - (1 - q)^λ)` from `ln q` and `ln λ`.
pub fn log_one_minus_pow(log_q: f64, log_lambda: f64) -> f64 {
    log_one_minus_exp_neg(log_lambda + log_hazard(log_q))
}

/// Static (1+(λ,λ)) GA parameters for the exact model. Population sizes are
/// real so that astronomically large values can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeParams {
    pub p: f64,
    pub c: f64,
    pub lambda_m: f64,
    pub lambda_c: f64,
}

impl EscapeParams {
    pub fn validate(&self) -> Result<(), ExactError> {
        for (name, value) in [("p", self.p), ("c", self.c)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ExactError::InvalidProbability { name, value });
            }
        }
        for (name, value) in [("lambda_m", self.lambda_m), ("lambda_c", self.lambda_c)] {
            if !value.is_finite() || value < 1.0 {
                return Err(ExactError::InvalidLambda { name, value });
            }
        }
        Ok(())
    }

    pub fn cost_per_iteration(&self) -> f64 {
        self.lambda_m + self.lambda_c
    }
}

impl From<&crate::engine::StaticParams> for EscapeParams {
    fn from(sp: &crate::engine::StaticParams) -> Self {
        Self {
            p: sp.p,
            c: sp.c,
            lambda_m: sp.lambda_m as f64,
            lambda_c: sp.lambda_c as f64,
        }
    }
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `ln q_c(ℓ) = k ln c + (ℓ - k) ln(1 - c)`.
fn log_q_c(k: u64, ell: u64, c: f64) -> f64 {
    let head = k as f64 * c.ln();
    if ell == k {
        head
    } else {
        head + (ell - k) as f64 * (-c).ln_1p()
    }
}

/// `ln p_m(ℓ)` given `ln q_m(ℓ)`.
fn log_p_m(k: u64, ell: u64, log_qm: f64, lambda_m: f64, log_lambda_m: f64) -> f64 {
    if ell < k {
        f64::NEG_INFINITY
    } else if ell > k && ell < 2 * k {
        if log_qm == 0.0 {
            0.0
        } else {
            lambda_m * log_qm
        }
    } else {
        log_one_minus_pow(log_qm, log_lambda_m)
    }
}

/// `ln P` for static parameters, summing ℓ upward from `k` and dropping terms
/// that fall [`TRUNCATION_NATS`] below the running maximum.
pub fn escape_probability_static(params: JumpParams, sp: &EscapeParams) -> Result<f64, ExactError> {
    sp.validate()?;
    Ok(static_log_p(params, sp, true))
}

/// As [`escape_probability_static`] but over every `ℓ` in `k..=n`.
pub fn escape_probability_static_untruncated(
    params: JumpParams,
    sp: &EscapeParams,
) -> Result<f64, ExactError> {
    sp.validate()?;
    Ok(static_log_p(params, sp, false))
}

fn static_log_p(params: JumpParams, sp: &EscapeParams, truncate: bool) -> f64 {
    let n = params.n() as u64;
    let k = params.k() as u64;
    let (log_lm, log_lc) = (sp.lambda_m.ln(), sp.lambda_c.ln());
    let mode = (n as f64 + 1.0) * sp.p;
    let mut sum = LogSum::new();
    let mut log_qm = log_q_m_unchecked(n, k, k);
    for (step, ell) in (k..=n).enumerate() {
        if step > 0 {
            log_qm = if step % RESYNC_INTERVAL == 0 {
                log_q_m_unchecked(n, k, ell)
            } else {
                log_qm + (k as f64 / (ell - k) as f64).ln_1p()
            };
        }
        let lp = log_p_ell(n, sp.p, ell);
        if lp == f64::NEG_INFINITY {
            if truncate && ell as f64 > mode {
                break;
            }
            continue;
        }
        if truncate && lp < sum.max - TRUNCATION_NATS {
            if ell as f64 > mode {
                break;
            }
            continue;
        }
        let lpm = log_p_m(k, ell, log_qm, sp.lambda_m, log_lm);
        let lpc = log_one_minus_pow(log_q_c(k, ell, sp.c), log_lc);
        sum.add(lp + lpm + lpc);
    }
    sum.value()
}

/// Exact heavy-tailed prediction from the local optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyTailedPrediction {
    /// `ln P_ht`, the per-iteration escape probability.
    pub log_p: f64,
    /// `E[λ]` of the population-size law.
    pub expected_lambda: f64,
    /// `E[T_I] = 1 / P_ht`.
    pub expected_iterations: f64,
    /// `E[T_f] = 2 E[λ] / P_ht` by Wald's identity.
    pub expected_evals: f64,
}

/// Number of support points to sum and a check that the rest is negligible.
fn summation_limit(dist: &PowerLaw) -> u64 {
    dist.upper().min(DIRECT_SUPPORT_LIMIT)
}

/// `P_ht = Σ_s Σ_λ Pr[s] Pr[λ] P(p = c = sqrt(s/n), λ_m = λ_c = λ)`.
pub fn escape_probability_heavy_tailed(
    params: JumpParams,
    hp: &HyperParams,
) -> Result<HeavyTailedPrediction, ExactError> {
    let s_dist = PowerLaw::new(hp.beta_s, hp.u_s)?;
    let lambda_dist = PowerLaw::new(hp.beta_lambda, hp.u_lambda)?;
    let n = params.n() as u64;
    let k = params.k() as u64;
    let s_limit = summation_limit(&s_dist);
    let lambda_limit = summation_limit(&lambda_dist);
    // P_ht <= 1, so a tail above the absolute tolerance can never pass
    for (which, dist, limit) in [
        ("s", &s_dist, s_limit),
        ("lambda", &lambda_dist, lambda_limit),
    ] {
        if limit < dist.upper() {
            let tail = dist.mass(limit + 1, dist.upper());
            if tail > TAIL_TOLERANCE {
                return Err(ExactError::TruncationNotMet {
                    which,
                    limit,
                    tail,
                    tolerance: TAIL_TOLERANCE,
                });
            }
        }
    }

    let lambda_weights: Vec<(f64, f64)> = (1..=lambda_limit)
        .map(|l| ((l as f64).ln(), lambda_dist.pmf(l).ln()))
        .collect();

    struct EllTerm {
        ell: u64,
        log_p_ell: f64,
        log_qm: f64,
        log_qc: f64,
    }

    let mut total = LogSum::new();
    for s in 1..=s_limit {
        let log_ps = s_dist.pmf(s).ln();
        let rate = (s as f64 / n as f64).sqrt().min(1.0);
        let terms: Vec<EllTerm> = (k..=n)
            .filter_map(|ell| {
                let lp = log_p_ell(n, rate, ell);
                (lp > f64::NEG_INFINITY).then(|| EllTerm {
                    ell,
                    log_p_ell: lp,
                    log_qm: log_q_m_unchecked(n, k, ell),
                    log_qc: log_q_c(k, ell, rate),
                })
            })
            .collect();
        for &(log_lambda, log_pl) in &lambda_weights {
            let lambda = log_lambda.exp();
            let mut inner = LogSum::new();
            for t in &terms {
                let lpm = log_p_m(k, t.ell, t.log_qm, lambda, log_lambda);
                let lpc = log_one_minus_pow(t.log_qc, log_lambda);
                inner.add(t.log_p_ell + lpm + lpc);
            }
            total.add(log_ps + log_pl + inner.value());
        }
    }

    let log_p = total.value();
    let p_partial = log_p.exp();
    for (which, dist, limit) in [
        ("s", &s_dist, s_limit),
        ("lambda", &lambda_dist, lambda_limit),
    ] {
        if limit < dist.upper() {
            let tail = dist.mass(limit + 1, dist.upper());
            if tail > TAIL_TOLERANCE * p_partial {
                return Err(ExactError::TruncationNotMet {
                    which,
                    limit,
                    tail,
                    tolerance: TAIL_TOLERANCE * p_partial,
                });
            }
        }
    }

    let expected_lambda = lambda_dist.expectation();
    let expected_iterations = (-log_p).exp();
    Ok(HeavyTailedPrediction {
        log_p,
        expected_lambda,
        expected_iterations,
        expected_evals: 2.0 * expected_lambda * expected_iterations,
    })
}

/// `Pr[s ∈ [k..2k]]` for the search-radius law.
pub fn search_radius_window_probability(s_dist: &PowerLaw, k: u64) -> f64 {
    s_dist.mass(k, 2 * k)
}

/// Rounding applied to the non-integer reference population size `sqrt(n/k)^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaRounding {
    #[default]
    Nearest,
    Floor,
    Ceil,
}

/// Reference population size `sqrt(n/k)^k`, rounded and at least 1.
pub fn reference_lambda(n: u64, k: u64, rounding: LambdaRounding) -> f64 {
    let raw = (n as f64 / k as f64).sqrt().powi(k as i32);
    let rounded = match rounding {
        LambdaRounding::Nearest => raw.round(),
        LambdaRounding::Floor => raw.floor(),
        LambdaRounding::Ceil => raw.ceil(),
    };
    rounded.max(1.0)
}

/// `p = 2^δ sqrt(k/n)`, `c = 2^-δ sqrt(k/n)`, so that `p c n = k`.
pub fn perturbed_rates(n: u64, k: u64, delta: f64) -> (f64, f64) {
    let base = (k as f64 / n as f64).sqrt();
    let scale = delta.exp2();
    (base * scale, base / scale)
}

/// Half-integer δ strictly inside `±log2 sqrt(n/k)`.
pub fn delta_grid(n: u64, k: u64) -> Vec<f64> {
    let limit = (n as f64 / k as f64).sqrt().log2();
    let steps = (2.0 * limit).ceil() as i64;
    (-steps..=steps)
        .map(|j| j as f64 / 2.0)
        .filter(|d| d.abs() < limit - 1e-12)
        .collect()
}

/// One evaluated parameter point of the δ sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPoint {
    pub n: u64,
    pub k: u64,
    pub delta: f64,
    pub p: f64,
    pub c: f64,
    pub lambda_m: f64,
    pub lambda_c: f64,
    pub log_p: f64,
    pub log_expected_evals: f64,
    pub expected_evals: f64,
    /// `E[T_f] / E[T_f at δ = 0]`.
    pub ratio: f64,
}

/// Evaluates one point; `baseline_log_evals` is `ln E[T_f]` at δ = 0, or
/// `None` when this point is itself the baseline.
pub fn exact_point(
    n: u64,
    k: u64,
    delta: f64,
    lambda: f64,
    baseline_log_evals: Option<f64>,
) -> Result<ExactPoint, ExactError> {
    let params = JumpParams::new(n as usize, k as usize)?;
    let (p, c) = perturbed_rates(n, k, delta);
    let sp = EscapeParams {
        p,
        c,
        lambda_m: lambda,
        lambda_c: lambda,
    };
    evaluate_point(params, sp, delta, baseline_log_evals)
}

/// Evaluates arbitrary static parameters; `delta` is only recorded.
pub fn evaluate_point(
    params: JumpParams,
    sp: EscapeParams,
    delta: f64,
    baseline_log_evals: Option<f64>,
) -> Result<ExactPoint, ExactError> {
    let (n, k) = (params.n() as u64, params.k() as u64);
    let log_p = escape_probability_static(params, &sp)?;
    let log_expected_evals = sp.cost_per_iteration().ln() - log_p;
    let ratio = match baseline_log_evals {
        Some(base) => (log_expected_evals - base).exp(),
        None => 1.0,
    };
    Ok(ExactPoint {
        n,
        k,
        delta,
        p: sp.p,
        c: sp.c,
        lambda_m: sp.lambda_m,
        lambda_c: sp.lambda_c,
        log_p,
        log_expected_evals,
        expected_evals: log_expected_evals.exp(),
        ratio,
    })
}

/// Runtime ratios over `deltas` relative to δ = 0, with
/// `λ_m = λ_c = sqrt(n/k)^k` rounded per `rounding`.
pub fn figure2_sweep(
    n: u64,
    k: u64,
    deltas: &[f64],
    rounding: LambdaRounding,
) -> Result<Vec<ExactPoint>, ExactError> {
    use rayon::prelude::*;
    let lambda = reference_lambda(n, k, rounding);
    let base = exact_point(n, k, 0.0, lambda, None)?;
    deltas
        .par_iter()
        .map(|&delta| {
            if delta == 0.0 {
                Ok(base)
            } else {
                exact_point(n, k, delta, lambda, Some(base.log_expected_evals))
            }
        })
        .collect()
}

/// Header of the exact-point CSV.
pub const EXACT_CSV_HEADER: [&str; 9] = [
    "n",
    "k",
    "delta",
    "p",
    "c",
    "lambda",
    "log_P",
    "expected_evals",
    "ratio",
];

impl ExactPoint {
    /// CSV fields, floats at 17 significant digits.
    pub fn csv_record(&self) -> [String; 9] {
        let g = |x: f64| format!("{x:.16e}");
        [
            self.n.to_string(),
            self.k.to_string(),
            g(self.delta),
            g(self.p),
            g(self.c),
            g(self.lambda_m),
            g(self.log_p),
            g(self.expected_evals),
            g(self.ratio),
        ]
    }
}
