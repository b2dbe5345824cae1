//! Truncated discrete power-law distributions `pow(beta, u)`.
//!
//! `Pr[X = i] = C * i^-beta` for `i` in `1..=u`, with `C` the reciprocal of the
//! generalized harmonic partial sum. Supports upper limits up to `2^63 - 1`.
//!
//! Small supports are sampled from a cumulative table; the part of the
//! support above [`TABLE_LIMIT`] is split into roughly dyadic blocks, a block
//! is chosen by its exact mass and a value inside it is drawn by
//! acceptance-rejection against the true pmf.

use std::sync::Arc;

use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

/// Largest supported upper limit. Larger requested limits (`2^n`, `n > 63`)
/// are represented by this cap, see [`capped_upper`].
pub const MAX_UPPER: u64 = i64::MAX as u64;

/// Supports up to this size are sampled entirely from a cumulative table.
pub const TABLE_LIMIT: u64 = 1 << 20;

/// Ranges with at least this many terms use the Euler-Maclaurin tail.
const DIRECT_SUM_TERMS: u64 = 1_000_000;

/// Start of the Euler-Maclaurin tail when it is used.
const EULER_MACLAURIN_START: u64 = 1024;

/// Beyond this value `f64` can no longer represent every integer.
const EXACT_F64_INTEGERS: u64 = 1 << 53;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerLawError {
    #[error("power-law exponent must be a finite non-negative number, got {0}")]
    InvalidExponent(f64),
    #[error("power-law upper limit must be at least 1")]
    ZeroUpper,
    #[error("power-law upper limit {0} exceeds the supported maximum 2^63 - 1")]
    UpperTooLarge(u64),
    #[error("table sampling requires an upper limit of at most {TABLE_LIMIT}, got {0}")]
    TableTooLarge(u64),
}

/// `2^log2` saturated at [`MAX_UPPER`].
pub fn capped_upper(log2: u32) -> u64 {
    if log2 >= 63 {
        MAX_UPPER
    } else {
        1u64 << log2
    }
}

/// Compensated summation.
#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// `(expm1(g * t)) / g`, continuous at `g = 0`.
fn expm1_over(g: f64, t: f64) -> f64 {
    if g == 0.0 {
        t
    } else {
        (g * t).exp_m1() / g
    }
}

/// `∫_lo^hi x^-beta dx` for `1 <= lo <= hi`.
fn power_integral(lo: f64, hi: f64, beta: f64) -> f64 {
    let log_ratio = ((hi - lo) / lo).ln_1p();
    lo.powf(1.0 - beta) * expm1_over(1.0 - beta, log_ratio)
}

/// `Σ_{i=a..b} i^-beta`.
///
/// Ranges with fewer than 10^6 terms are summed directly. Longer ranges are
/// summed directly up to 1024 and closed with an Euler-Maclaurin expansion
/// carried to the sixth derivative, which keeps the relative error far below
/// 1e-9. Negative exponents are accepted as well (used for moments).
pub fn partial_power_sum(a: u64, b: u64, beta: f64) -> f64 {
    assert!(a >= 1 && a <= b, "partial_power_sum requires 1 <= a <= b");
    if b - a < DIRECT_SUM_TERMS {
        return direct_sum(a, b, beta);
    }
    let m = a.max(EULER_MACLAURIN_START);
    let mut acc = Neumaier::default();
    if m > a {
        acc.add(direct_sum(a, m - 1, beta));
    }
    acc.add(euler_maclaurin(m, b, beta));
    acc.value()
}

fn direct_sum(a: u64, b: u64, beta: f64) -> f64 {
    let mut acc = Neumaier::default();
    // smallest terms first for decreasing summands
    if beta >= 0.0 {
        for i in (a..=b).rev() {
            acc.add((i as f64).powf(-beta));
        }
    } else {
        for i in a..=b {
            acc.add((i as f64).powf(-beta));
        }
    }
    acc.value()
}

fn euler_maclaurin(m: u64, b: u64, beta: f64) -> f64 {
    let (mf, bf) = (m as f64, b as f64);
    let f = |x: f64| x.powf(-beta);
    // odd derivatives of x^-beta
    let d1 = |x: f64| -beta * x.powf(-beta - 1.0);
    let d3 = |x: f64| -beta * (beta + 1.0) * (beta + 2.0) * x.powf(-beta - 3.0);
    let d5 = |x: f64| {
        -beta * (beta + 1.0) * (beta + 2.0) * (beta + 3.0) * (beta + 4.0) * x.powf(-beta - 5.0)
    };
    let mut acc = Neumaier::default();
    acc.add(power_integral(mf, bf, beta));
    acc.add(0.5 * (f(mf) + f(bf)));
    acc.add((d1(bf) - d1(mf)) / 12.0);
    acc.add(-(d3(bf) - d3(mf)) / 720.0);
    acc.add((d5(bf) - d5(mf)) / 30240.0);
    acc.value()
}

/// `C_{beta,u} = 1 / Σ_{j=1..u} j^-beta`.
pub fn normalization(beta: f64, upper: u64) -> f64 {
    1.0 / partial_power_sum(1, upper, beta)
}

/// How a [`PowerLaw`] draws samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerStrategy {
    /// Table for the first [`TABLE_LIMIT`] values, block rejection above.
    #[default]
    Auto,
    /// Whole support from a cumulative table; `u <= TABLE_LIMIT` only.
    Table,
    /// Whole support by block selection and rejection, no table.
    Rejection,
}

#[derive(Debug)]
struct Block {
    lo: u64,
    hi: u64,
}

#[derive(Debug)]
struct Sampler {
    /// Cumulative weights `Σ_{j<=i} j^-beta` for `i` in `1..=head.len()`.
    head: Vec<f64>,
    blocks: Vec<Block>,
    /// Cumulative masses of the head (first entry, if present) and blocks.
    region_cdf: Vec<f64>,
}

/// Truncated discrete power law `pow(beta, upper)` with cached normalization.
///
/// Immutable after construction; clones share the sampling table.
#[derive(Debug, Clone)]
pub struct PowerLaw {
    beta: f64,
    upper: u64,
    norm: f64,
    sampler: Arc<Sampler>,
}

impl PowerLaw {
    pub fn new(beta: f64, upper: u64) -> Result<Self, PowerLawError> {
        Self::with_strategy(beta, upper, SamplerStrategy::Auto)
    }

    pub fn with_strategy(
        beta: f64,
        upper: u64,
        strategy: SamplerStrategy,
    ) -> Result<Self, PowerLawError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(PowerLawError::InvalidExponent(beta));
        }
        if upper == 0 {
            return Err(PowerLawError::ZeroUpper);
        }
        if upper > MAX_UPPER {
            return Err(PowerLawError::UpperTooLarge(upper));
        }
        let head_len = match strategy {
            SamplerStrategy::Auto => upper.min(TABLE_LIMIT),
            SamplerStrategy::Table if upper > TABLE_LIMIT => {
                return Err(PowerLawError::TableTooLarge(upper))
            }
            SamplerStrategy::Table => upper,
            SamplerStrategy::Rejection => 0,
        };

        let mut head = Vec::with_capacity(head_len as usize);
        let mut running = 0.0;
        for i in 1..=head_len {
            running += (i as f64).powf(-beta);
            head.push(running);
        }

        let mut blocks = Vec::new();
        let mut lo = head_len + 1;
        while lo <= upper {
            let hi = lo.saturating_mul(2).saturating_sub(1).min(upper);
            blocks.push(Block { lo, hi });
            if hi == upper {
                break;
            }
            lo = hi + 1;
        }

        let mut region_cdf = Vec::with_capacity(blocks.len() + 1);
        let mut total = Neumaier::default();
        if head_len > 0 {
            total.add(partial_power_sum(1, head_len, beta));
            region_cdf.push(total.value());
        }
        for block in &blocks {
            total.add(partial_power_sum(block.lo, block.hi, beta));
            region_cdf.push(total.value());
        }

        Ok(Self {
            beta,
            upper,
            norm: 1.0 / total.value(),
            sampler: Arc::new(Sampler {
                head,
                blocks,
                region_cdf,
            }),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn upper(&self) -> u64 {
        self.upper
    }

    /// The normalization constant `C_{beta,u}`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn pmf(&self, i: u64) -> f64 {
        if i == 0 || i > self.upper {
            0.0
        } else {
            self.norm * (i as f64).powf(-self.beta)
        }
    }

    /// `Pr[lo <= X <= hi]`, clipped to the support.
    pub fn mass(&self, lo: u64, hi: u64) -> f64 {
        let lo = lo.max(1);
        let hi = hi.min(self.upper);
        if lo > hi {
            0.0
        } else {
            self.norm * partial_power_sum(lo, hi, self.beta)
        }
    }

    pub fn expectation(&self) -> f64 {
        self.norm * partial_power_sum(1, self.upper, self.beta - 1.0)
    }

    fn sample_head<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let head = &self.sampler.head;
        let r = rng.random::<f64>() * head[head.len() - 1];
        let idx = head.partition_point(|&c| c <= r);
        idx.min(head.len() - 1) as u64 + 1
    }

    fn sample_block<R: Rng + ?Sized>(&self, block: &Block, rng: &mut R) -> u64 {
        let beta = self.beta;
        if beta == 0.0 {
            return rng.random_range(block.lo..=block.hi);
        }
        if block.lo >= EXACT_F64_INTEGERS {
            // pmf varies by at most 2^beta inside the block
            loop {
                let i = rng.random_range(block.lo..=block.hi);
                let accept = (block.lo as f64 / i as f64).powf(beta);
                if rng.random::<f64>() <= accept {
                    return i;
                }
            }
        }
        // Continuous envelope y^-beta on [lo, hi + 1), rounded down.
        let lo = block.lo as f64;
        let g = 1.0 - beta;
        let span = ((block.hi + 1 - block.lo) as f64 / lo).ln_1p();
        let total = expm1_over(g, span);
        let bound = (1.0 / lo).ln_1p() * beta;
        loop {
            let t = rng.random::<f64>();
            let log_y = if g == 0.0 {
                t * span
            } else {
                (t * g * total).ln_1p() / g
            };
            let y = lo * log_y.exp();
            let i = (y.floor() as u64).clamp(block.lo, block.hi);
            let fi = i as f64;
            // i^-beta / ∫_i^{i+1} x^-beta dx, scaled by the envelope bound
            let cell = expm1_over(g, (1.0 / fi).ln_1p());
            let accept = (-bound).exp() / (fi * cell);
            if rng.random::<f64>() <= accept {
                return i;
            }
        }
    }
}

impl Distribution<u64> for PowerLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.upper == 1 {
            return 1;
        }
        let s = &*self.sampler;
        if s.blocks.is_empty() {
            return self.sample_head(rng);
        }
        let total = s.region_cdf[s.region_cdf.len() - 1];
        let r = rng.random::<f64>() * total;
        let region = s
            .region_cdf
            .partition_point(|&c| c <= r)
            .min(s.region_cdf.len() - 1);
        let has_head = !s.head.is_empty();
        match (has_head, region) {
            (true, 0) => self.sample_head(rng),
            (true, r) => self.sample_block(&s.blocks[r - 1], rng),
            (false, r) => self.sample_block(&s.blocks[r], rng),
        }
    }
}
