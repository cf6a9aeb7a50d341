//! Distributions and moments of the aggregate active count of an ensemble.
//!
//! An arm is an ensemble of `N` independent, identically parameterized
//! two-state chains, and every consumer of this module cares about one
//! scalar: the number of active processes `Y`. Conditioned on observing
//! `Y = j` some `m` steps ago, the present count is the sum of two
//! independent binomials — survivors of the `j` active processes and
//! recruits from the `N - j` inactive ones:
//!
//! ```text
//!     Y(h + m) | Y(h) = j   ~   Binomial(j, q_m) ⊕ Binomial(N - j, p_m)
//! ```
//!
//! with `(q_m, p_m)` from [`chain::qm_pm`]. This module materializes that
//! law exactly (in log space, so it stays finite far past the range where
//! binomial coefficients overflow), its mean, its `m → ∞` binomial limit,
//! and the large-ensemble limits in which the recruit component becomes
//! Poisson: for activation probability `alpha_bar / N` and fixed `j`, the
//! count `m` steps after an observation converges, as `N → ∞`, to
//!
//! ```text
//!     Binomial(j, (1 - beta)^m) ⊕ Poisson((alpha_bar / beta) (1 - (1 - beta)^m))
//! ```
//!
//! and its continuous-time analog replaces `(1 - beta)^m` with
//! `e^{-beta_bar * tau}`. Samplers for the exact per-process step and the
//! aggregate-count step round out the module; the simulator uses them as
//! ground truth.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::chain::{self, ChainParams, RateParams};
use crate::fmath;

/// Errors from aggregate-count operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleError {
    /// An ensemble size of zero was supplied.
    ZeroProcesses,
    /// An observed count exceeded the ensemble size.
    CountOutOfRange {
        /// The offending count.
        count: u32,
        /// The ensemble size it must not exceed.
        n_processes: u32,
    },
}

impl fmt::Display for EnsembleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnsembleError::ZeroProcesses => {
                write!(f, "ensemble must contain at least one process")
            }
            EnsembleError::CountOutOfRange { count, n_processes } => write!(
                f,
                "count {count} exceeds the ensemble size {n_processes}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EnsembleError {}

/// An arm: `N` independent chains sharing one set of transition parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    params: ChainParams,
    n_processes: u32,
}

impl EnsembleSpec {
    /// Builds an ensemble description.
    ///
    /// # Errors
    ///
    /// Returns [`EnsembleError::ZeroProcesses`] when `n_processes` is 0.
    pub fn new(params: ChainParams, n_processes: u32) -> Result<Self, EnsembleError> {
        if n_processes == 0 {
            return Err(EnsembleError::ZeroProcesses);
        }
        Ok(Self { params, n_processes })
    }

    /// Shared per-process transition parameters.
    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Number of processes in the ensemble.
    pub fn n_processes(&self) -> u32 {
        self.n_processes
    }
}

/// A probability mass function over active-process counts.
///
/// The support is the contiguous integer range starting at
/// [`support_offset`](Self::support_offset); `truncated` records whether an
/// infinite-support law was cut off (in which case the total mass falls
/// short of 1 by at most the truncation tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    support_offset: u32,
    probabilities: Vec<f64>,
    truncated: bool,
}

impl CountDistribution {
    /// Builds a distribution from a contiguous block of probabilities.
    ///
    /// # Panics
    ///
    /// Panics if `probabilities` is empty; nonnegativity and normalization
    /// are the caller's responsibility and checked only in debug builds.
    pub fn new(support_offset: u32, probabilities: Vec<f64>, truncated: bool) -> Self {
        assert!(!probabilities.is_empty(), "a pmf needs at least one atom");
        debug_assert!(probabilities.iter().all(|&p| p >= 0.0));
        Self { support_offset, probabilities, truncated }
    }

    /// Smallest count in the support.
    pub fn support_offset(&self) -> u32 {
        self.support_offset
    }

    /// Largest count in the support.
    pub fn max_count(&self) -> u32 {
        self.support_offset + (self.probabilities.len() as u32 - 1)
    }

    /// Probabilities over the contiguous support.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Whether an infinite-support law was truncated to produce this pmf.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Probability of exactly `count`; zero outside the stored support.
    pub fn probability_of(&self, count: u32) -> f64 {
        if count < self.support_offset {
            return 0.0;
        }
        self.probabilities
            .get((count - self.support_offset) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// Total stored mass; 1 up to rounding unless truncated.
    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Mean count.
    pub fn mean(&self) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (f64::from(self.support_offset) + i as f64) * p)
            .sum()
    }

    /// Variance of the count.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let x = f64::from(self.support_offset) + i as f64;
                (x - mean) * (x - mean) * p
            })
            .sum()
    }
}

/// Total-variation distance between two count distributions:
/// `0.5 * Σ_y |a(y) − b(y)|` over the union of their supports.
pub fn tv_distance(a: &CountDistribution, b: &CountDistribution) -> f64 {
    let lo = a.support_offset().min(b.support_offset());
    let hi = a.max_count().max(b.max_count());
    let mut sum = 0.0;
    for y in lo..=hi {
        sum += fmath::abs(a.probability_of(y) - b.probability_of(y));
    }
    0.5 * sum
}

/// A Binomial ⊕ Poisson mixture: the large-ensemble limit of the
/// conditional count law.
///
/// `Binomial(binomial_trials, binomial_p)` carries the surviving processes
/// of the last observation and `Poisson(poisson_mean)` the recruits that
/// activated since. The fields are plain data; the constructors
/// [`limit_law_discrete`] and [`limit_law_continuous`] guarantee the
/// invariants `binomial_p ∈ [0, 1]` and `poisson_mean ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitLaw {
    /// Number of trials of the binomial component.
    pub binomial_trials: u32,
    /// Success probability of the binomial component.
    pub binomial_p: f64,
    /// Mean of the Poisson component.
    pub poisson_mean: f64,
}

/// Log-probability mass of `Binomial(n, p)` at `k`.
///
/// Exact at the boundary values `p = 0` and `p = 1` (point masses at 0 and
/// `n`), and `-∞` for `k > n`.
pub fn log_binomial_pmf(n: u32, k: u32, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    fmath::ln_binomial(u64::from(n), u64::from(k))
        + f64::from(k) * fmath::ln(p)
        + f64::from(n - k) * fmath::ln_1p(-p)
}

/// Exact law of the count `m` steps after observing `j` active processes.
///
/// Computed as the convolution of `Binomial(j, q_m)` (survivors) with
/// `Binomial(N − j, p_m)` (recruits). All terms are assembled in log space
/// and only exponentiated at the end, so the result stays accurate for
/// ensembles far beyond the size where raw binomial coefficients overflow.
/// The returned pmf covers the full support `0..=N` and sums to 1 up to
/// rounding.
///
/// # Errors
///
/// Returns [`EnsembleError::CountOutOfRange`] when `j` exceeds the ensemble
/// size.
pub fn conditional_pmf(
    spec: &EnsembleSpec,
    j: u32,
    m: u64,
) -> Result<CountDistribution, EnsembleError> {
    let n = spec.n_processes();
    if j > n {
        return Err(EnsembleError::CountOutOfRange { count: j, n_processes: n });
    }
    let (q, p) = chain::qm_pm(spec.params(), m);

    let survivors: Vec<f64> = (0..=j).map(|z| log_binomial_pmf(j, z, q)).collect();
    let recruits: Vec<f64> = (0..=(n - j)).map(|w| log_binomial_pmf(n - j, w, p)).collect();

    let mut probs = Vec::with_capacity(n as usize + 1);
    let mut window: Vec<f64> = Vec::with_capacity(j as usize + 1);
    for y in 0..=n {
        window.clear();
        let z_lo = y.saturating_sub(n - j);
        let z_hi = j.min(y);
        for z in z_lo..=z_hi {
            window.push(survivors[z as usize] + recruits[(y - z) as usize]);
        }
        probs.push(fmath::exp(fmath::log_sum_exp(&window)));
    }
    Ok(CountDistribution::new(0, probs, false))
}

/// Expected count `m` steps after observing `j` active processes:
///
/// ```text
///     E[Y(h + m) | Y(h) = j] = N·pi + r^m (j − N·pi)
/// ```
///
/// where `pi` is the stationary active fraction and `r` the decay factor —
/// the observation's excess over the stationary mean decays geometrically.
///
/// # Errors
///
/// Returns [`EnsembleError::CountOutOfRange`] when `j` exceeds the ensemble
/// size.
pub fn conditional_mean(spec: &EnsembleSpec, j: u32, m: u64) -> Result<f64, EnsembleError> {
    let n = spec.n_processes();
    if j > n {
        return Err(EnsembleError::CountOutOfRange { count: j, n_processes: n });
    }
    let (_, pi_active) = chain::stationary_distribution(spec.params());
    let anchor = f64::from(n) * pi_active;
    let rm = fmath::signed_pow(spec.params().decay(), m);
    Ok(anchor + rm * (f64::from(j) - anchor))
}

/// Stationary law of the count: `Binomial(N, pi)` with `pi` the stationary
/// active fraction. The conditional law converges to this from any starting
/// count.
pub fn asymptotic_pmf(spec: &EnsembleSpec) -> CountDistribution {
    let n = spec.n_processes();
    let (_, pi_active) = chain::stationary_distribution(spec.params());
    let probs: Vec<f64> = (0..=n)
        .map(|y| fmath::exp(log_binomial_pmf(n, y, pi_active)))
        .collect();
    CountDistribution::new(0, probs, false)
}

/// Large-ensemble limit of the discrete-time conditional law.
///
/// For ensembles whose per-process activation probability vanishes as
/// `alpha_bar / N` while `beta` stays fixed, the count `m` steps after
/// observing `j` converges (as `N → ∞`, `j` fixed) to
/// `Binomial(j, (1 − beta)^m) ⊕ Poisson((alpha_bar / beta)(1 − (1 − beta)^m))`.
///
/// # Panics
///
/// Panics if `alpha_bar` is not finite and positive or `beta` is not
/// strictly inside `(0, 1)`.
pub fn limit_law_discrete(alpha_bar: f64, beta: f64, j: u32, m: u64) -> LimitLaw {
    assert!(
        alpha_bar > 0.0 && alpha_bar.is_finite(),
        "alpha_bar = {alpha_bar} must be finite and strictly positive"
    );
    assert!(
        beta > 0.0 && beta < 1.0,
        "beta = {beta} must lie strictly inside (0, 1)"
    );
    let keep = fmath::signed_pow(1.0 - beta, m);
    LimitLaw {
        binomial_trials: j,
        binomial_p: keep,
        poisson_mean: (alpha_bar / beta) * (1.0 - keep),
    }
}

/// Continuous-time analog of [`limit_law_discrete`]: after a time span
/// `tau` the survival probability is `e^{−beta_bar·tau}` and the recruit
/// mean `(alpha_bar / beta_bar)(1 − e^{−beta_bar·tau})`.
///
/// # Panics
///
/// Panics if `tau` is negative or non-finite.
pub fn limit_law_continuous(rates: &RateParams, j: u32, tau: f64) -> LimitLaw {
    assert!(
        tau >= 0.0 && tau.is_finite(),
        "time span tau = {tau} must be finite and nonnegative"
    );
    let keep = fmath::exp(-rates.beta_bar() * tau);
    LimitLaw {
        binomial_trials: j,
        binomial_p: keep,
        poisson_mean: (rates.alpha_bar() / rates.beta_bar()) * (1.0 - keep),
    }
}

/// Smallest cutoff `t` such that `P(Poisson(mean) > t) < tolerance`,
/// located by a Chernoff bound and then refined with exact tail sums.
fn poisson_cutoff(mean: f64, tolerance: f64) -> usize {
    if mean == 0.0 {
        return 0;
    }
    // Chernoff bound for t > mean: P(W ≥ t) ≤ exp(−mean + t(1 + ln mean − ln t)).
    // Grow the cap until the bound undershoots the tolerance with three
    // orders of headroom, so the mass beyond the cap is negligible in the
    // exact refinement below.
    let log_target = fmath::ln(tolerance) + fmath::ln(1e-3);
    let mut cap = mean.max(1.0) as usize + 1;
    loop {
        cap *= 2;
        let t = cap as f64;
        if -mean + t * (1.0 + fmath::ln(mean) - fmath::ln(t)) < log_target {
            break;
        }
    }
    // Exact refinement: walk down from the cap accumulating tail mass; stop
    // at the largest k whose inclusion pushes the tail to the tolerance.
    let ln_mean = fmath::ln(mean);
    let mut tail = tolerance * 1e-3; // conservative stand-in for the beyond-cap mass
    for k in (0..=cap).rev() {
        tail += fmath::exp(-mean + k as f64 * ln_mean - fmath::ln_gamma(k as f64 + 1.0));
        if tail >= tolerance {
            return k;
        }
    }
    0
}

/// Materializes a Binomial ⊕ Poisson law as an explicit pmf.
///
/// The Poisson component is truncated at the smallest cutoff whose omitted
/// tail mass stays below `tail_tolerance` (Chernoff bound first, exact tail
/// sums for the final position); the result is flagged
/// [`truncated`](CountDistribution::truncated) and its total mass falls
/// short of 1 by less than the tolerance.
///
/// # Panics
///
/// Panics if `tail_tolerance` is outside `(0, 1e−3]`.
pub fn limit_law_pmf(law: &LimitLaw, tail_tolerance: f64) -> CountDistribution {
    assert!(
        tail_tolerance > 0.0 && tail_tolerance <= 1e-3,
        "tail tolerance {tail_tolerance} must lie in (0, 1e-3]"
    );
    let j = law.binomial_trials;
    let survivors: Vec<f64> = (0..=j)
        .map(|z| log_binomial_pmf(j, z, law.binomial_p))
        .collect();

    let cutoff = poisson_cutoff(law.poisson_mean, tail_tolerance);
    let ln_mean = if law.poisson_mean > 0.0 { fmath::ln(law.poisson_mean) } else { 0.0 };
    let recruits: Vec<f64> = (0..=cutoff)
        .map(|k| {
            if law.poisson_mean == 0.0 {
                if k == 0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                -law.poisson_mean + k as f64 * ln_mean - fmath::ln_gamma(k as f64 + 1.0)
            }
        })
        .collect();

    let support_len = j as usize + cutoff + 1;
    let mut probs = Vec::with_capacity(support_len);
    let mut window: Vec<f64> = Vec::with_capacity(j as usize + 1);
    for y in 0..support_len {
        window.clear();
        let z_lo = y.saturating_sub(cutoff);
        let z_hi = (j as usize).min(y);
        for z in z_lo..=z_hi {
            window.push(survivors[z] + recruits[y - z]);
        }
        probs.push(fmath::exp(fmath::log_sum_exp(&window)));
    }
    CountDistribution::new(0, probs, true)
}

/// Packed per-process activity states of one ensemble (one bit per
/// process).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessStates {
    words: Vec<u64>,
    len: u32,
}

impl ProcessStates {
    /// An ensemble of `len` processes, all inactive.
    pub fn all_inactive(len: u32) -> Self {
        let words = vec![0u64; (len as usize).div_ceil(64)];
        Self { words, len }
    }

    /// An ensemble whose first `active` processes are active and the rest
    /// inactive — a canonical state with a given count.
    ///
    /// # Panics
    ///
    /// Panics if `active > len`.
    pub fn with_leading_active(len: u32, active: u32) -> Self {
        assert!(active <= len, "cannot activate {active} of {len} processes");
        let mut states = Self::all_inactive(len);
        for i in 0..active {
            states.set(i, true);
        }
        states
    }

    /// Each process active independently with probability `p` — used to
    /// draw stationary or uniform-random initial states.
    pub fn sample_iid<R: Rng + ?Sized>(len: u32, p: f64, rng: &mut R) -> Self {
        let mut states = Self::all_inactive(len);
        for i in 0..len {
            if rng.gen::<f64>() < p {
                states.set(i, true);
            }
        }
        states
    }

    /// Number of processes.
    pub fn len(&self) -> u32 {
        self.len
    }

    /// Whether the ensemble is empty (it never is when built through
    /// [`EnsembleSpec`], which rejects zero processes).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Activity of process `i`.
    ///
    /// # Panics
    ///
    /// Panics if `i` is out of range.
    pub fn get(&self, i: u32) -> bool {
        assert!(i < self.len, "process index {i} out of range for {}", self.len);
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// Sets the activity of process `i`.
    ///
    /// # Panics
    ///
    /// Panics if `i` is out of range.
    pub fn set(&mut self, i: u32, active: bool) {
        assert!(i < self.len, "process index {i} out of range for {}", self.len);
        let word = &mut self.words[(i / 64) as usize];
        if active {
            *word |= 1 << (i % 64);
        } else {
            *word &= !(1 << (i % 64));
        }
    }

    /// Number of active processes (the observable count `Y`).
    pub fn active_count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }
}

/// Advances every process of the ensemble by one step.
///
/// Each process flips independently — active ones deactivate with
/// probability `beta`, inactive ones activate with probability `alpha` —
/// consuming exactly one uniform draw per process, so a fixed generator
/// stream yields an identical trajectory on every run.
///
/// # Panics
///
/// Panics if the state length differs from the ensemble size.
pub fn sample_ensemble_step<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    state: &ProcessStates,
    rng: &mut R,
) -> ProcessStates {
    assert_eq!(
        state.len(),
        spec.n_processes(),
        "state length must match the ensemble size"
    );
    let alpha = spec.params().alpha();
    let beta = spec.params().beta();
    let mut next = ProcessStates::all_inactive(state.len());
    for i in 0..state.len() {
        let u: f64 = rng.gen();
        let active = if state.get(i) { u >= beta } else { u < alpha };
        if active {
            next.set(i, true);
        }
    }
    next
}

/// Advances the aggregate count by one step without tracking individual
/// processes: survivors ~ `Binomial(active, 1 − beta)` plus recruits ~
/// `Binomial(N − active, alpha)`.
///
/// This is the exact one-step count law, so count trajectories sampled this
/// way are distributionally indistinguishable from counting a per-process
/// simulation — at cost independent of `N` per draw, which is what makes
/// very large ensembles simulable.
///
/// # Panics
///
/// Panics if `active` exceeds the ensemble size.
pub fn sample_count_step<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    active: u32,
    rng: &mut R,
) -> u32 {
    let n = spec.n_processes();
    assert!(active <= n, "count {active} exceeds the ensemble size {n}");
    let alpha = spec.params().alpha();
    let beta = spec.params().beta();
    let survivors = Binomial::new(u64::from(active), 1.0 - beta)
        .expect("1 - beta is a valid probability")
        .sample(rng);
    let recruits = Binomial::new(u64::from(n - active), alpha)
        .expect("alpha is a valid probability")
        .sample(rng);
    (survivors + recruits) as u32
}
