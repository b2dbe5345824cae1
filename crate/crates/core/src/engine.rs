//! The (1+(λ,λ)) GA with heavy-tailed or static parameters, and the (1+1) EA.
//!
//! Offspring are never materialized as full bit strings. A mutant is the
//! parent plus a set of flipped positions, and a crossover offspring is the
//! parent plus a subset of the mutation winner's flipped positions, so every
//! fitness value follows from the parent's one-count in `O(ℓ)`.
//!
//! Each phase can run naively (one draw per offspring) or aggregated (draw
//! the winner directly from the law of the best of λ offspring). Both give
//! the same distribution over outcomes.

use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::objective::{BitString, Problem};
use crate::power_law::{capped_upper, PowerLaw, PowerLawError, MAX_UPPER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid {name} distribution: {source}")]
    Distribution {
        name: &'static str,
        source: PowerLawError,
    },
    #[error("{name} = {value} must lie in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("{name} must be at least 1")]
    ZeroPopulation { name: &'static str },
    #[error("start string has length {got}, expected {expected}")]
    StartLength { expected: usize, got: usize },
}

/// Hyperparameters `(β_s, u_s, β_λ, u_λ)` of the heavy-tailed GA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub beta_s: f64,
    pub u_s: u64,
    pub beta_lambda: f64,
    pub u_lambda: u64,
}

impl HyperParams {
    /// `β_s = 1.1`, `u_s = n`, `β_λ = 2.1`, `u_λ = 2^63 - 1`.
    pub fn recommended(n: usize) -> Self {
        Self {
            beta_s: 1.1,
            u_s: n as u64,
            beta_lambda: 2.1,
            u_lambda: MAX_UPPER,
        }
    }

    /// `u_λ = 2^log2_u_lambda`, saturated at `2^63 - 1`.
    pub fn with_lambda_log2(mut self, log2_u_lambda: u32) -> Self {
        self.u_lambda = capped_upper(log2_u_lambda);
        self
    }
}

/// Fixed `(p, c, λ_m, λ_c)` for the static-parameter GA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticParams {
    pub p: f64,
    pub c: f64,
    pub lambda_m: u64,
    pub lambda_c: u64,
}

impl StaticParams {
    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, value) in [("p", self.p), ("c", self.c)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(EngineError::InvalidProbability { name, value });
            }
        }
        if self.lambda_m == 0 {
            return Err(EngineError::ZeroPopulation { name: "lambda_m" });
        }
        if self.lambda_c == 0 {
            return Err(EngineError::ZeroPopulation { name: "lambda_c" });
        }
        Ok(())
    }

    /// `p = 2^δ sqrt(k/n)`, `c = 2^-δ sqrt(k/n)`, each clamped to 1.
    pub fn from_delta(n: usize, k: usize, delta: f64, lambda: u64) -> Self {
        let (p, c) = crate::exact::perturbed_rates(n as u64, k as u64, delta);
        Self {
            p: p.min(1.0),
            c: c.min(1.0),
            lambda_m: lambda,
            lambda_c: lambda,
        }
    }

    pub fn cost_per_iteration(&self) -> u64 {
        self.lambda_m + self.lambda_c
    }
}

/// Values drawn at the start of one heavy-tailed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationDraw {
    pub s: u64,
    pub lambda: u64,
    pub ell: usize,
}

/// How offspring populations are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseStrategy {
    /// One draw per offspring.
    Naive,
    /// Sample the winner from the law of the best of λ offspring.
    Aggregated,
    /// Whichever of the two is cheaper for the drawn `ℓ` and `λ`.
    #[default]
    Auto,
}

/// Mutation operator of the (1+1) EA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mutation {
    /// Standard bit mutation with rate `chi / n`.
    Standard { chi: f64 },
    /// Rate `α / n` with `α ~ pow(beta, n/2)` drawn per iteration.
    HeavyTailed { beta: f64 },
}

/// When a run stops successfully.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Target {
    /// The all-ones string, the unique optimum of OneMax and Jump_k.
    #[default]
    Optimum,
    /// Any string with at least this many one-bits.
    OnesAtLeast(usize),
}

impl Target {
    fn reached(&self, x: &BitString) -> bool {
        match *self {
            Target::Optimum => x.ones() == x.len(),
            Target::OnesAtLeast(m) => x.ones() >= m,
        }
    }
}

/// Initial search point of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Random,
    LocalOptimum,
    AllOnes,
    Given(BitString),
}

/// Outcome of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RunResult {
    /// Completed iterations, `T_I`.
    pub iterations: u64,
    /// Fitness evaluations charged, `T_f`.
    pub evaluations: u64,
    pub success: bool,
    pub best_fitness: i64,
    pub seed: u64,
}

/// Signalled when an iteration needs more evaluations than remain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("iteration needs {needed} evaluations but only {remaining} remain")]
pub struct BudgetExceeded {
    pub needed: u64,
    pub remaining: u64,
}

/// The generator used for every run; seeded per trial.
pub type RunRng = ChaCha8Rng;

pub fn rng_for_seed(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flipped positions of a mutant relative to its parent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diff {
    /// Positions that were 0 in the parent.
    pub gained: Vec<usize>,
    /// Positions that were 1 in the parent.
    pub lost: Vec<usize>,
}

impl Diff {
    pub fn len(&self) -> usize {
        self.gained.len() + self.lost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, x: &mut BitString) {
        x.flip_all(self.gained.iter().chain(&self.lost).copied());
    }
}

/// Law of the fitness of one offspring, as sorted distinct values with masses.
struct OutcomeLaw {
    values: Vec<i64>,
    probs: Vec<f64>,
}

impl OutcomeLaw {
    fn from_pairs(mut pairs: Vec<(i64, f64)>) -> Self {
        pairs.sort_by_key(|&(v, _)| v);
        let mut values = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        Self { values, probs }
    }

    /// Fitness of the best of `count` independent offspring.
    fn sample_best<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> i64 {
        let total: f64 = self.probs.iter().sum();
        // Pr[max <= v_i] = F_i^count, with F_i = 1 - (mass above i)
        let log_u = (1.0 - rng.random::<f64>()).ln();
        let mut above = 0.0;
        let mut log_cdf = vec![0.0; self.values.len()];
        for i in (0..self.values.len()).rev() {
            log_cdf[i] = (-(above / total).min(1.0)).ln_1p();
            above += self.probs[i];
        }
        let idx = log_cdf.partition_point(|&lf| count as f64 * lf < log_u);
        self.values[idx.min(self.values.len() - 1)]
    }
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if r < w {
            return i;
        }
        r -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn binomial_weights(trials: usize, c: f64) -> Vec<f64> {
    (0..=trials as u64)
        .map(|a| crate::exact::log_p_ell(trials as u64, c, a).exp())
        .collect()
}

fn choose<R: Rng + ?Sized>(pool: &[usize], count: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Keeps one maximizer, uniformly among ties.
struct Best<T> {
    fitness: i64,
    ties: u64,
    item: Option<T>,
}

impl<T> Best<T> {
    fn new() -> Self {
        Self {
            fitness: i64::MIN,
            ties: 0,
            item: None,
        }
    }

    /// Returns true if the candidate should replace the current winner.
    fn offer<R: Rng + ?Sized>(&mut self, fitness: i64, rng: &mut R) -> bool {
        if fitness > self.fitness {
            self.fitness = fitness;
            self.ties = 1;
            true
        } else if fitness == self.fitness {
            self.ties += 1;
            rng.random_range(0..self.ties) == 0
        } else {
            false
        }
    }
}

fn mutation_phase<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    ell: usize,
    lambda: u64,
    strategy: PhaseStrategy,
    rng: &mut R,
) -> Diff {
    if ell == 0 {
        return Diff::default();
    }
    let n = x.len();
    let aggregated = match strategy {
        PhaseStrategy::Naive => false,
        PhaseStrategy::Aggregated => true,
        PhaseStrategy::Auto => (lambda as f64) * ell as f64 > 4.0 * n as f64,
    };
    let diff = if aggregated {
        mutation_aggregated(x, problem, ell, lambda, rng)
    } else {
        mutation_naive(x, problem, ell, lambda, rng)
    };
    #[cfg(debug_assertions)]
    {
        let mut mutant = x.clone();
        diff.apply(&mut mutant);
        debug_assert_eq!(
            mutant.hamming(x),
            ell,
            "mutant must differ in exactly ℓ bits"
        );
    }
    diff
}

fn mutation_naive<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    ell: usize,
    lambda: u64,
    rng: &mut R,
) -> Diff {
    let n = x.len();
    let mut best = Best::new();
    for _ in 0..lambda {
        let flips = index::sample(rng, n, ell);
        let gained = flips.iter().filter(|&i| !x.get(i)).count();
        let fitness = problem.value(x.ones() + 2 * gained - ell);
        if best.offer(fitness, rng) {
            best.item = Some(flips);
        }
    }
    let mut diff = Diff::default();
    for i in best.item.expect("lambda >= 1") {
        if x.get(i) {
            diff.lost.push(i);
        } else {
            diff.gained.push(i);
        }
    }
    diff
}

fn mutation_aggregated<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    ell: usize,
    lambda: u64,
    rng: &mut R,
) -> Diff {
    let n = x.len();
    let zeros = x.zeros_count();
    let ones = x.ones();
    // gained ones j ~ Hypergeometric(n, zeros, ℓ)
    let j_lo = ell.saturating_sub(ones);
    let j_hi = ell.min(zeros);
    let log_total = ln_binomial(n as u64, ell as u64);
    let weights: Vec<f64> = (j_lo..=j_hi)
        .map(|j| {
            (ln_binomial(zeros as u64, j as u64) + ln_binomial(ones as u64, (ell - j) as u64)
                - log_total)
                .exp()
        })
        .collect();
    let fitness_of = |j: usize| problem.value(ones + 2 * j - ell);
    let law = OutcomeLaw::from_pairs(
        (j_lo..=j_hi)
            .zip(&weights)
            .map(|(j, &w)| (fitness_of(j), w))
            .collect(),
    );
    let winner = law.sample_best(lambda, rng);
    let conditional: Vec<f64> = (j_lo..=j_hi)
        .zip(&weights)
        .map(|(j, &w)| if fitness_of(j) == winner { w } else { 0.0 })
        .collect();
    let j = j_lo + pick_weighted(&conditional, rng);
    Diff {
        gained: choose(&x.positions(false), j, rng),
        lost: choose(&x.positions(true), ell - j, rng),
    }
}

/// Positions of `winner` that the crossover winner takes from the mutant.
fn crossover_phase<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    winner: &Diff,
    c: f64,
    lambda: u64,
    strategy: PhaseStrategy,
    rng: &mut R,
) -> Diff {
    if winner.is_empty() {
        return Diff::default();
    }
    let (g, l) = (winner.gained.len(), winner.lost.len());
    let aggregated = match strategy {
        PhaseStrategy::Naive => false,
        PhaseStrategy::Aggregated => true,
        PhaseStrategy::Auto => {
            (lambda as f64) * winner.len() as f64 > ((g + 1) * (l + 1)) as f64 + 64.0
        }
    };
    if aggregated {
        crossover_aggregated(x, problem, winner, c, lambda, rng)
    } else {
        crossover_naive(x, problem, winner, c, lambda, rng)
    }
}

fn crossover_naive<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    winner: &Diff,
    c: f64,
    lambda: u64,
    rng: &mut R,
) -> Diff {
    let mut best = Best::new();
    let mut scratch = Diff::default();
    for _ in 0..lambda {
        scratch.gained.clear();
        scratch.lost.clear();
        for &i in &winner.gained {
            if rng.random::<f64>() < c {
                scratch.gained.push(i);
            }
        }
        for &i in &winner.lost {
            if rng.random::<f64>() < c {
                scratch.lost.push(i);
            }
        }
        let fitness = problem.value(x.ones() + scratch.gained.len() - scratch.lost.len());
        if best.offer(fitness, rng) {
            best.item = Some(std::mem::take(&mut scratch));
        }
    }
    best.item.expect("lambda >= 1")
}

fn crossover_aggregated<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    winner: &Diff,
    c: f64,
    lambda: u64,
    rng: &mut R,
) -> Diff {
    let (g, l) = (winner.gained.len(), winner.lost.len());
    let wa = binomial_weights(g, c);
    let wb = binomial_weights(l, c);
    // net change d = a - b ranges over [-l, g]
    let mut wd = vec![0.0; g + l + 1];
    for (a, &pa) in wa.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (b, &pb) in wb.iter().enumerate() {
            wd[a + l - b] += pa * pb;
        }
    }
    let ones = x.ones();
    let fitness_of = |shifted: usize| problem.value(ones + shifted - l);
    let law = OutcomeLaw::from_pairs(
        wd.iter()
            .enumerate()
            .map(|(d, &w)| (fitness_of(d), w))
            .collect(),
    );
    let best = law.sample_best(lambda, rng);
    let conditional: Vec<f64> = wd
        .iter()
        .enumerate()
        .map(|(d, &w)| if fitness_of(d) == best { w } else { 0.0 })
        .collect();
    let shifted = pick_weighted(&conditional, rng);
    // a - b = shifted - l
    let pairs: Vec<(usize, f64)> = (0..=g)
        .filter_map(|a| {
            let b = (a + l).checked_sub(shifted)?;
            (b <= l).then(|| (a, wa[a] * wb[b]))
        })
        .collect();
    let weights: Vec<f64> = pairs.iter().map(|&(_, w)| w).collect();
    let a = pairs[pick_weighted(&weights, rng)].0;
    let b = a + l - shifted;
    Diff {
        gained: choose(&winner.gained, a, rng),
        lost: choose(&winner.lost, b, rng),
    }
}

/// One mutation plus crossover round; returns the crossover winner's flips
/// relative to `x`, before the acceptance test.
#[allow(clippy::too_many_arguments)]
pub fn lambda_lambda_offspring<R: Rng + ?Sized>(
    x: &BitString,
    problem: &Problem,
    ell: usize,
    lambda_m: u64,
    lambda_c: u64,
    c: f64,
    strategy: PhaseStrategy,
    rng: &mut R,
) -> Diff {
    let mutant = mutation_phase(x, problem, ell, lambda_m, strategy, rng);
    crossover_phase(x, problem, &mutant, c, lambda_c, strategy, rng)
}

/// Applies `y` to `x` if it is not worse. Returns whether it was accepted.
fn accept_if_not_worse(x: &mut BitString, problem: &Problem, y: &Diff) -> bool {
    let before = problem.fitness(x);
    let y_fitness = problem.value(x.ones() + y.gained.len() - y.lost.len());
    if y_fitness >= before {
        y.apply(x);
        assert!(problem.fitness(x) >= before, "elitism violated");
        true
    } else {
        false
    }
}

fn draw_flip_count<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> usize {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n as u64, p)
            .expect("valid binomial parameters")
            .sample(rng) as usize
    }
}

/// Result of one heavy-tailed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationReport {
    pub draw: IterationDraw,
    pub evals: u64,
    pub accepted: bool,
}

/// The heavy-tailed (1+(λ,λ)) GA with its two power-law samplers.
#[derive(Debug, Clone)]
pub struct HeavyTailedGa {
    hp: HyperParams,
    s_dist: PowerLaw,
    lambda_dist: PowerLaw,
    strategy: PhaseStrategy,
}

impl HeavyTailedGa {
    pub fn new(hp: HyperParams) -> Result<Self, EngineError> {
        let s_dist = PowerLaw::new(hp.beta_s, hp.u_s)
            .map_err(|source| EngineError::Distribution { name: "s", source })?;
        let lambda_dist = PowerLaw::new(hp.beta_lambda, hp.u_lambda).map_err(|source| {
            EngineError::Distribution {
                name: "lambda",
                source,
            }
        })?;
        Ok(Self {
            hp,
            s_dist,
            lambda_dist,
            strategy: PhaseStrategy::Auto,
        })
    }

    pub fn with_strategy(mut self, strategy: PhaseStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn s_distribution(&self) -> &PowerLaw {
        &self.s_dist
    }

    pub fn lambda_distribution(&self) -> &PowerLaw {
        &self.lambda_dist
    }

    /// `p = c = min(1, sqrt(s / n))`.
    pub fn rate_for(s: u64, n: usize) -> f64 {
        (s as f64 / n as f64).sqrt().min(1.0)
    }

    /// One iteration with freshly sampled `s` and `λ`. When `remaining`
    /// evaluations cannot pay for `2λ`, `x` is left unchanged.
    pub fn step<R: Rng + ?Sized>(
        &self,
        x: &mut BitString,
        problem: &Problem,
        remaining: u64,
        rng: &mut R,
    ) -> Result<IterationReport, BudgetExceeded> {
        let s = self.s_dist.sample(rng);
        let lambda = self.lambda_dist.sample(rng);
        self.step_with(x, problem, s, lambda, remaining, rng)
    }

    /// One iteration with `s` and `λ` fixed by the caller.
    pub fn step_with<R: Rng + ?Sized>(
        &self,
        x: &mut BitString,
        problem: &Problem,
        s: u64,
        lambda: u64,
        remaining: u64,
        rng: &mut R,
    ) -> Result<IterationReport, BudgetExceeded> {
        let needed = lambda.saturating_mul(2);
        if needed > remaining {
            return Err(BudgetExceeded { needed, remaining });
        }
        let rate = Self::rate_for(s, x.len());
        let ell = draw_flip_count(x.len(), rate, rng);
        let y = lambda_lambda_offspring(x, problem, ell, lambda, lambda, rate, self.strategy, rng);
        let accepted = accept_if_not_worse(x, problem, &y);
        Ok(IterationReport {
            draw: IterationDraw { s, lambda, ell },
            evals: needed,
            accepted,
        })
    }
}

/// One heavy-tailed iteration on a copy of `x`.
pub fn ht_gga_iteration<R: Rng + ?Sized>(
    x: &BitString,
    ga: &HeavyTailedGa,
    problem: &Problem,
    remaining: u64,
    rng: &mut R,
) -> Result<(BitString, IterationDraw, u64), BudgetExceeded> {
    let mut next = x.clone();
    let report = ga.step(&mut next, problem, remaining, rng)?;
    Ok((next, report.draw, report.evals))
}

fn initial_point<R: Rng + ?Sized>(
    problem: &Problem,
    start: &Start,
    rng: &mut R,
) -> Result<BitString, EngineError> {
    let n = problem.n();
    Ok(match start {
        Start::Random => BitString::random(n, rng),
        Start::AllOnes => BitString::ones_string(n),
        Start::LocalOptimum => {
            let k = problem.jump_size().unwrap_or(0);
            BitString::random_with_ones(n, n - k, rng)
        }
        Start::Given(x) => {
            if x.len() != n {
                return Err(EngineError::StartLength {
                    expected: n,
                    got: x.len(),
                });
            }
            x.clone()
        }
    })
}

/// Budget and stopping rule of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunLimits {
    pub budget: u64,
    pub target: Target,
}

impl RunLimits {
    pub fn budget(budget: u64) -> Self {
        Self {
            budget,
            target: Target::Optimum,
        }
    }
}

/// Drives `step` until the target is reached or the budget runs out. A step
/// that cannot be paid for charges the remaining budget and ends the run.
fn drive<F>(
    problem: &Problem,
    mut x: BitString,
    limits: RunLimits,
    seed: u64,
    mut step: F,
) -> RunResult
where
    F: FnMut(&mut BitString, u64) -> Result<u64, BudgetExceeded>,
{
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut best = problem.fitness(&x);
    let mut success = limits.target.reached(&x);
    while !success && evaluations < limits.budget {
        match step(&mut x, limits.budget - evaluations) {
            Ok(evals) => {
                iterations += 1;
                evaluations += evals;
                let f = problem.fitness(&x);
                assert!(f >= best, "best-so-far fitness decreased");
                best = f;
                success = limits.target.reached(&x);
            }
            Err(_) => {
                evaluations = limits.budget;
                break;
            }
        }
    }
    RunResult {
        iterations,
        evaluations,
        success,
        best_fitness: best,
        seed,
    }
}

pub fn run_heavy_tailed(
    problem: &Problem,
    ga: &HeavyTailedGa,
    start: &Start,
    limits: RunLimits,
    seed: u64,
) -> Result<RunResult, EngineError> {
    let mut rng = rng_for_seed(seed);
    let x = initial_point(problem, start, &mut rng)?;
    Ok(drive(problem, x, limits, seed, |x, remaining| {
        ga.step(x, problem, remaining, &mut rng).map(|r| r.evals)
    }))
}

/// One static-parameter iteration in place; returns the evaluations charged.
pub fn static_step<R: Rng + ?Sized>(
    x: &mut BitString,
    problem: &Problem,
    sp: &StaticParams,
    strategy: PhaseStrategy,
    remaining: u64,
    rng: &mut R,
) -> Result<u64, BudgetExceeded> {
    let needed = sp.cost_per_iteration();
    if needed > remaining {
        return Err(BudgetExceeded { needed, remaining });
    }
    let ell = draw_flip_count(x.len(), sp.p, rng);
    let y = lambda_lambda_offspring(
        x,
        problem,
        ell,
        sp.lambda_m,
        sp.lambda_c,
        sp.c,
        strategy,
        rng,
    );
    accept_if_not_worse(x, problem, &y);
    Ok(needed)
}

pub fn run_static(
    problem: &Problem,
    sp: &StaticParams,
    start: &Start,
    limits: RunLimits,
    seed: u64,
) -> Result<RunResult, EngineError> {
    sp.validate()?;
    let mut rng = rng_for_seed(seed);
    let x = initial_point(problem, start, &mut rng)?;
    Ok(drive(problem, x, limits, seed, |x, remaining| {
        static_step(x, problem, sp, PhaseStrategy::Auto, remaining, &mut rng)
    }))
}

/// Samples the flip count of one (1+1) EA mutation.
pub struct OnePlusOne {
    mutation: Mutation,
    alpha: Option<PowerLaw>,
}

impl OnePlusOne {
    pub fn new(mutation: Mutation, n: usize) -> Result<Self, EngineError> {
        let alpha = match mutation {
            Mutation::Standard { chi } => {
                let rate = chi / n as f64;
                if !(0.0..=1.0).contains(&rate) {
                    return Err(EngineError::InvalidProbability {
                        name: "chi / n",
                        value: rate,
                    });
                }
                None
            }
            Mutation::HeavyTailed { beta } => Some(
                PowerLaw::new(beta, (n as u64 / 2).max(1)).map_err(|source| {
                    EngineError::Distribution {
                        name: "alpha",
                        source,
                    }
                })?,
            ),
        };
        Ok(Self { mutation, alpha })
    }

    fn flip_count<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> usize {
        let rate = match (&self.mutation, &self.alpha) {
            (Mutation::Standard { chi }, _) => chi / n as f64,
            (_, Some(alpha)) => alpha.sample(rng) as f64 / n as f64,
            _ => unreachable!(),
        };
        draw_flip_count(n, rate.min(1.0), rng)
    }

    pub fn step<R: Rng + ?Sized>(&self, x: &mut BitString, problem: &Problem, rng: &mut R) -> bool {
        let n = x.len();
        let ell = self.flip_count(n, rng);
        let mut diff = Diff::default();
        for i in index::sample(rng, n, ell) {
            if x.get(i) {
                diff.lost.push(i);
            } else {
                diff.gained.push(i);
            }
        }
        accept_if_not_worse(x, problem, &diff)
    }
}

pub fn run_one_plus_one(
    problem: &Problem,
    mutation: Mutation,
    start: &Start,
    limits: RunLimits,
    seed: u64,
) -> Result<RunResult, EngineError> {
    let ea = OnePlusOne::new(mutation, problem.n())?;
    let mut rng = rng_for_seed(seed);
    let x = initial_point(problem, start, &mut rng)?;
    Ok(drive(problem, x, limits, seed, |x, _| {
        ea.step(x, problem, &mut rng);
        Ok(1)
    }))
}

/// `x` with exactly `ell` distinct uniformly chosen bits flipped.
pub fn flip_exactly<R: Rng + ?Sized>(x: &BitString, ell: usize, rng: &mut R) -> BitString {
    let mut y = x.clone();
    y.flip_all(index::sample(rng, x.len(), ell));
    y
}

/// Each bit from `mutant` with probability `c`, otherwise from `parent`.
pub fn biased_crossover<R: Rng + ?Sized>(
    parent: &BitString,
    mutant: &BitString,
    c: f64,
    rng: &mut R,
) -> BitString {
    assert_eq!(parent.len(), mutant.len());
    BitString::from_bits((0..parent.len()).map(|i| {
        if rng.random::<f64>() < c {
            mutant.get(i)
        } else {
            parent.get(i)
        }
    }))
}
