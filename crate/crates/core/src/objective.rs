//! Bit-string search points and the OneMax / Jump_k functions.

use std::fmt;

use rand::Rng;
use thiserror::Error;

const WORD_BITS: usize = 64;

/// Fixed-length bit string packed into 64-bit words, with a cached one-count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
    ones: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
            ones: 0,
        }
    }

    pub fn ones_string(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(WORD_BITS)];
        let rem = len % WORD_BITS;
        if rem != 0 {
            *words.last_mut().unwrap() = (1u64 << rem) - 1;
        }
        Self {
            words,
            len,
            ones: len,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut x = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                x.set(i, true);
            }
        }
        x
    }

    /// Uniformly random string of length `len`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Vec<u64> = (0..len.div_ceil(WORD_BITS)).map(|_| rng.random()).collect();
        let rem = len % WORD_BITS;
        if rem != 0 {
            *words.last_mut().unwrap() &= (1u64 << rem) - 1;
        }
        let ones = words.iter().map(|w| w.count_ones() as usize).sum();
        Self { words, len, ones }
    }

    /// Uniformly random string with exactly `ones` one-bits.
    pub fn random_with_ones<R: Rng + ?Sized>(len: usize, ones: usize, rng: &mut R) -> Self {
        assert!(ones <= len);
        let mut x = Self::zeros(len);
        for i in rand::seq::index::sample(rng, len, ones) {
            x.set(i, true);
        }
        x
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn zeros_count(&self) -> usize {
        self.len - self.ones
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        if self.get(i) != value {
            self.flip(i);
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD_BITS);
        let word = &mut self.words[i / WORD_BITS];
        *word ^= mask;
        if *word & mask != 0 {
            self.ones += 1;
        } else {
            self.ones -= 1;
        }
    }

    pub fn flip_all<I: IntoIterator<Item = usize>>(&mut self, positions: I) {
        for i in positions {
            self.flip(i);
        }
        debug_assert_eq!(self.ones, self.recount());
    }

    /// One-count recomputed from the packed words.
    pub fn recount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &BitString) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Indices of the set (`true`) or cleared (`false`) bits.
    pub fn positions(&self, value: bool) -> Vec<usize> {
        let mut out = Vec::with_capacity(if value {
            self.ones
        } else {
            self.len - self.ones
        });
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = if value { word } else { !word };
            while bits != 0 {
                let i = w * WORD_BITS + bits.trailing_zeros() as usize;
                if i >= self.len {
                    break;
                }
                out.push(i);
                bits &= bits - 1;
            }
        }
        out
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            let s: String = (0..self.len)
                .map(|i| if self.get(i) { '1' } else { '0' })
                .collect();
            write!(f, "BitString({s})")
        } else {
            write!(f, "BitString(len={}, ones={})", self.len, self.ones)
        }
    }
}

impl std::str::FromStr for BitString {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ObjectiveError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::from_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("jump size k = {k} must be at least 2")]
    JumpTooSmall { k: usize },
    #[error("jump size k = {k} must not exceed n = {n}")]
    JumpTooLarge { n: usize, k: usize },
    #[error("dimension n must be positive")]
    EmptyDimension,
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

/// Parameters of `Jump_k` on `n` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpParams {
    n: usize,
    k: usize,
}

impl JumpParams {
    /// Accepts `2 <= k <= n`; use [`JumpParams::in_analyzed_regime`] to check `k <= n/4`.
    pub fn new(n: usize, k: usize) -> Result<Self, ObjectiveError> {
        if n == 0 {
            return Err(ObjectiveError::EmptyDimension);
        }
        if k < 2 {
            return Err(ObjectiveError::JumpTooSmall { k });
        }
        if k > n {
            return Err(ObjectiveError::JumpTooLarge { n, k });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn in_analyzed_regime(&self) -> bool {
        4 * self.k <= self.n
    }
}

/// Number of one-bits.
pub fn onemax(x: &BitString) -> usize {
    x.ones()
}

/// `Jump_k` as a function of the one-count.
pub fn jump_value(params: JumpParams, ones: usize) -> i64 {
    let (n, k) = (params.n as i64, params.k as i64);
    let om = ones as i64;
    if om <= n - k || om == n {
        om + k
    } else {
        n - om
    }
}

pub fn jump(params: JumpParams, x: &BitString) -> i64 {
    debug_assert_eq!(x.len(), params.n);
    jump_value(params, x.ones())
}

pub fn is_local_optimum(params: JumpParams, x: &BitString) -> bool {
    x.ones() == params.n - params.k
}

pub fn random_bitstring<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    BitString::random(n, rng)
}

/// Uniform string with exactly `n - k` one-bits.
pub fn local_optimum_start<R: Rng + ?Sized>(params: JumpParams, rng: &mut R) -> BitString {
    BitString::random_with_ones(params.n, params.n - params.k, rng)
}

/// A unitation objective: the value depends only on the one-count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    OneMax { n: usize },
    Jump(JumpParams),
}

impl Problem {
    pub fn n(&self) -> usize {
        match *self {
            Problem::OneMax { n } => n,
            Problem::Jump(p) => p.n,
        }
    }

    #[inline]
    pub fn value(&self, ones: usize) -> i64 {
        match *self {
            Problem::OneMax { .. } => ones as i64,
            Problem::Jump(p) => jump_value(p, ones),
        }
    }

    pub fn fitness(&self, x: &BitString) -> i64 {
        self.value(x.ones())
    }

    pub fn optimum_value(&self) -> i64 {
        self.value(self.n())
    }

    /// Jump size, or `None` for OneMax.
    pub fn jump_size(&self) -> Option<usize> {
        match *self {
            Problem::OneMax { .. } => None,
            Problem::Jump(p) => Some(p.k),
        }
    }
}
