//! Maximum-likelihood parameter estimation from activity traces.
//!
//! Two observation models are covered. When per-process bit histories are
//! available, [`mle_from_bits`] applies the closed-form Markov-chain
//! estimator: each rate is the fraction of one-step transitions that left
//! its state. When only aggregate counts are recorded — the usual case,
//! since monitoring hardware reports how *many* processes are active, not
//! which — [`mle_from_counts`] maximizes the exact one-step count
//! likelihood numerically: a coarse log-spaced grid pass followed by
//! deterministic compass refinement in log-parameter space.
//!
//! Both estimators clamp to `[1e-6, 1 - 1e-6]` so the fitted values are
//! always valid [`ChainParams`], and both are pure functions of the trace:
//! per-arm fits parallelize trivially.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::chain::ChainParams;
use crate::ensemble::ProcessStates;
use crate::fmath;

/// Fitted probabilities are clamped into `[CLAMP, 1 - CLAMP]`.
pub const CLAMP: f64 = 1e-6;

/// Coarse-search grid resolution per axis.
const GRID_POINTS: usize = 50;
/// Coarse-search grid range (log-spaced).
const GRID_LO: f64 = 1e-5;
const GRID_HI: f64 = 0.99;
/// Initial compass-search step in log-parameter units.
const REFINE_INITIAL_STEP: f64 = 0.5;
/// Refinement stops once the log-space step shrinks below this.
const REFINE_MIN_STEP: f64 = 1e-9;
/// Hard cap on refinement likelihood evaluations.
const REFINE_MAX_EVALS: usize = 20_000;

/// Errors from trace validation and estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimateError {
    /// Timestamp and count sequences have different lengths.
    LengthMismatch {
        /// Number of timestamps.
        timestamps: usize,
        /// Number of counts.
        counts: usize,
    },
    /// A count exceeds the ensemble size.
    CountOutOfRange {
        /// Position of the offending count.
        index: usize,
        /// The count.
        count: u32,
        /// The ensemble size.
        n_processes: u32,
    },
    /// Timestamps must be strictly increasing.
    NonIncreasingTimestamps {
        /// Position of the first violation.
        index: usize,
    },
    /// The closed-form transition estimator requires uniformly spaced
    /// rows.
    NonUniformSampling,
    /// A state is never occupied, so its exit rate cannot be estimated.
    Inestimable {
        /// Whether the unoccupied state is the active one.
        active: bool,
    },
}

impl fmt::Display for EstimateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimateError::LengthMismatch { timestamps, counts } => {
                write!(f, "{timestamps} timestamps but {counts} counts")
            }
            EstimateError::CountOutOfRange { index, count, n_processes } => {
                write!(
                    f,
                    "count {count} at position {index} exceeds ensemble size {n_processes}"
                )
            }
            EstimateError::NonIncreasingTimestamps { index } => {
                write!(f, "timestamp at position {index} does not increase")
            }
            EstimateError::NonUniformSampling => {
                write!(f, "transition counting requires uniformly spaced rows")
            }
            EstimateError::Inestimable { active } => {
                let (state, rate) =
                    if *active { ("active", "deactivation") } else { ("inactive", "activation") };
                write!(
                    f,
                    "no time step starts in the {state} state, so the {rate} probability \
                     is inestimable"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EstimateError {}

/// An aggregate activity record for one arm: how many of its processes
/// were active at each sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityTrace {
    arm_id: u32,
    timestamps: Vec<f64>,
    counts: Vec<u32>,
    n_processes: u32,
}

impl ActivityTrace {
    /// Builds a validated trace.
    ///
    /// # Errors
    ///
    /// [`EstimateError::LengthMismatch`] unless `timestamps` and `counts`
    /// have equal lengths, [`EstimateError::NonIncreasingTimestamps`] on
    /// the first order violation, and [`EstimateError::CountOutOfRange`]
    /// on the first count above `n_processes`.
    pub fn new(
        arm_id: u32,
        timestamps: Vec<f64>,
        counts: Vec<u32>,
        n_processes: u32,
    ) -> Result<Self, EstimateError> {
        if timestamps.len() != counts.len() {
            return Err(EstimateError::LengthMismatch {
                timestamps: timestamps.len(),
                counts: counts.len(),
            });
        }
        for (index, window) in timestamps.windows(2).enumerate() {
            if !(window[1] > window[0]) {
                return Err(EstimateError::NonIncreasingTimestamps { index: index + 1 });
            }
        }
        for (index, &count) in counts.iter().enumerate() {
            if count > n_processes {
                return Err(EstimateError::CountOutOfRange { index, count, n_processes });
            }
        }
        Ok(Self { arm_id, timestamps, counts, n_processes })
    }

    /// The arm this trace belongs to.
    pub fn arm_id(&self) -> u32 {
        self.arm_id
    }

    /// Sample times, strictly increasing.
    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    /// Aggregate active counts, one per timestamp.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// The ensemble size.
    pub fn n_processes(&self) -> u32 {
        self.n_processes
    }

    /// Number of sample points.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Whether the trace has no points.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(CLAMP, 1.0 - CLAMP)
}

/// Closed-form transition-count estimator from per-process bit histories.
///
/// Each row holds every process's state at one sample time; consecutive
/// rows must be one transition apart (`dt_uniform` asserts this — rows
/// sampled at uneven intervals cannot be pooled into single-step
/// transition counts). The estimates are the empirical exit frequencies
///
/// - activation: `(# of 0→1 transitions) / (# of process-steps starting inactive)`,
/// - deactivation: `(# of 1→0 transitions) / (# of process-steps starting active)`,
///
/// clamped into `[1e-6, 1 - 1e-6]` so the result is always a valid
/// parameter pair.
///
/// # Errors
///
/// [`EstimateError::NonUniformSampling`] when `dt_uniform` is false, and
/// [`EstimateError::Inestimable`] when no process-step starts in one of
/// the states (for example an all-zeros trace never exercises
/// deactivation).
///
/// # Panics
///
/// Panics if fewer than two rows are given or the rows disagree on the
/// number of processes.
pub fn mle_from_bits(rows: &[ProcessStates], dt_uniform: bool) -> Result<ChainParams, EstimateError> {
    assert!(rows.len() >= 2, "transition counting needs at least two rows");
    let width = rows[0].len();
    assert!(
        rows.iter().all(|row| row.len() == width),
        "every row must cover the same processes"
    );
    if !dt_uniform {
        return Err(EstimateError::NonUniformSampling);
    }

    let mut from_inactive = 0u64;
    let mut activations = 0u64;
    let mut from_active = 0u64;
    let mut deactivations = 0u64;
    for pair in rows.windows(2) {
        for i in 0..width {
            let before = pair[0].get(i);
            let after = pair[1].get(i);
            if before {
                from_active += 1;
                if !after {
                    deactivations += 1;
                }
            } else {
                from_inactive += 1;
                if after {
                    activations += 1;
                }
            }
        }
    }

    if from_inactive == 0 {
        return Err(EstimateError::Inestimable { active: false });
    }
    if from_active == 0 {
        return Err(EstimateError::Inestimable { active: true });
    }
    let alpha = clamp_probability(activations as f64 / from_inactive as f64);
    let beta = clamp_probability(deactivations as f64 / from_active as f64);
    Ok(ChainParams::new(alpha, beta).expect("clamped probabilities are valid"))
}

/// A count-level maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMleFit {
    params: ChainParams,
    log_likelihood: f64,
    boundary: bool,
}

impl CountMleFit {
    /// The fitted parameters.
    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    /// Log-likelihood of the trace at the fitted parameters.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// True when the trace was degenerate (constant at 0 or at the
    /// ensemble size) and the affected parameter was clamped rather than
    /// estimated.
    pub fn boundary(&self) -> bool {
        self.boundary
    }
}

/// Precomputed log-factorials for exact binomial coefficients.
struct LnFactorial(Vec<f64>);

impl LnFactorial {
    fn up_to(n: u32) -> Self {
        let mut table = Vec::with_capacity(n as usize + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += fmath::ln(f64::from(k));
            table.push(acc);
        }
        Self(table)
    }

    fn ln_choose(&self, n: u32, k: u32) -> f64 {
        debug_assert!(k <= n);
        self.0[n as usize] - self.0[k as usize] - self.0[(n - k) as usize]
    }
}

/// Distinct one-step transitions `(from, to)` with multiplicities.
fn dedup_transitions(counts: &[u32]) -> Vec<(u32, u32, f64)> {
    let mut seen: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for pair in counts.windows(2) {
        *seen.entry((pair[0], pair[1])).or_insert(0) += 1;
    }
    seen.into_iter().map(|((from, to), times)| (from, to, times as f64)).collect()
}

/// Exact log of the one-step count transition probability
/// `P(to | from)`: stayers are Binomial(from, 1−β) and recruits are
/// Binomial(N−from, α), so the transition is their convolution.
fn ln_transition(
    table: &LnFactorial,
    n: u32,
    from: u32,
    to: u32,
    alpha: f64,
    beta: f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    let stay = 1.0 - beta; // active process stays active
    let ln_stay = fmath::ln(stay);
    let ln_leave = fmath::ln(beta);
    let ln_join = fmath::ln(alpha);
    let ln_idle = fmath::ln(1.0 - alpha);

    let idle = n - from;
    let k_lo = to.saturating_sub(idle);
    let k_hi = from.min(to);
    debug_assert!(k_lo <= k_hi, "transition support is never empty");
    scratch.clear();
    for k in k_lo..=k_hi {
        // k survivors among `from`, (to − k) recruits among `idle`.
        let recruits = to - k;
        let term = table.ln_choose(from, k)
            + f64::from(k) * ln_stay
            + f64::from(from - k) * ln_leave
            + table.ln_choose(idle, recruits)
            + f64::from(recruits) * ln_join
            + f64::from(idle - recruits) * ln_idle;
        scratch.push(term);
    }
    fmath::log_sum_exp(scratch)
}

/// Log-likelihood of the deduplicated transitions at `(alpha, beta)`.
fn count_log_likelihood(
    table: &LnFactorial,
    n: u32,
    transitions: &[(u32, u32, f64)],
    alpha: f64,
    beta: f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    transitions
        .iter()
        .map(|&(from, to, times)| {
            times * ln_transition(table, n, from, to, alpha, beta, scratch)
        })
        .sum()
}

/// Count-level maximum-likelihood estimation of the chain parameters.
///
/// Maximizes the exact likelihood of the observed count sequence under
/// the one-step aggregate law (consecutive samples one decision step
/// apart): a survivor binomial plus a recruit binomial. The search is a
/// deterministic two-stage procedure — a 50×50 log-spaced grid over both
/// probabilities, seeded additionally with `init`, followed by compass
/// refinement in log-parameter space bounded to the clamp box — so equal
/// traces always produce bit-identical fits.
///
/// Degenerate traces (constant at 0 or at the ensemble size) pin the
/// identified parameter at the clamp boundary, keep the other at its
/// `init` value since the data say nothing about it, and mark the fit
/// with [`CountMleFit::boundary`].
///
/// # Errors
///
/// Propagates [`ActivityTrace`] construction failures only; estimation
/// itself always produces a fit.
///
/// # Panics
///
/// Panics if the trace has fewer than two points or its ensemble size is
/// zero.
pub fn mle_from_counts(trace: &ActivityTrace, init: &ChainParams) -> Result<CountMleFit, EstimateError> {
    assert!(trace.len() >= 2, "likelihood needs at least two samples");
    let n = trace.n_processes();
    assert!(n >= 1, "the ensemble must contain at least one process");

    let table = LnFactorial::up_to(n);
    let transitions = dedup_transitions(trace.counts());
    let mut scratch = Vec::with_capacity(n as usize + 1);
    let mut evaluate = |alpha: f64, beta: f64| -> f64 {
        count_log_likelihood(&table, n, &transitions, alpha, beta, &mut scratch)
    };

    // Degenerate traces: the likelihood factors through one parameter.
    let all_zero = trace.counts().iter().all(|&c| c == 0);
    let all_full = trace.counts().iter().all(|&c| c == n);
    if all_zero || all_full {
        let (alpha, beta) = if all_zero {
            (CLAMP, clamp_probability(init.beta()))
        } else {
            (clamp_probability(init.alpha()), CLAMP)
        };
        let log_likelihood = evaluate(alpha, beta);
        let params = ChainParams::new(alpha, beta).expect("clamped probabilities are valid");
        return Ok(CountMleFit { params, log_likelihood, boundary: true });
    }

    // Stage 1: coarse log-spaced grid, plus the caller's guess.
    let ratio = fmath::ln(GRID_HI / GRID_LO) / (GRID_POINTS as f64 - 1.0);
    let grid: Vec<f64> =
        (0..GRID_POINTS).map(|i| GRID_LO * fmath::exp(ratio * i as f64)).collect();
    let mut best = (
        clamp_probability(init.alpha()),
        clamp_probability(init.beta()),
    );
    let mut best_ll = evaluate(best.0, best.1);
    for &alpha in &grid {
        for &beta in &grid {
            let ll = evaluate(alpha, beta);
            if ll > best_ll {
                best = (alpha, beta);
                best_ll = ll;
            }
        }
    }

    // Stage 2: compass search on (ln α, ln β), clamped to the box.
    let lo = fmath::ln(CLAMP);
    let hi = fmath::ln(1.0 - CLAMP);
    let mut u = fmath::ln(best.0);
    let mut v = fmath::ln(best.1);
    let mut step = REFINE_INITIAL_STEP;
    let mut evals = 0usize;
    while step >= REFINE_MIN_STEP && evals < REFINE_MAX_EVALS {
        let mut moved = false;
        for (du, dv) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let cu = (u + du).clamp(lo, hi);
            let cv = (v + dv).clamp(lo, hi);
            if cu == u && cv == v {
                continue;
            }
            let ll = evaluate(fmath::exp(cu), fmath::exp(cv));
            evals += 1;
            if ll > best_ll {
                best_ll = ll;
                u = cu;
                v = cv;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }

    let params = ChainParams::new(fmath::exp(u), fmath::exp(v))
        .expect("the search box lies inside the valid parameter region");
    Ok(CountMleFit { params, log_likelihood: best_ll, boundary: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{self, EnsembleSpec};
    use crate::rng::{Domain, SeedTree};

    fn bit_rows(bits: &[u8]) -> Vec<ProcessStates> {
        bits.iter()
            .map(|&b| {
                let mut row = ProcessStates::all_inactive(1);
                row.set(0, b == 1);
                row
            })
            .collect()
    }

    /// Simulates an ensemble forward, recording every row.
    fn synthetic_rows(
        params: ChainParams,
        n: u32,
        steps: usize,
        seed_a: u64,
        seed_b: u64,
    ) -> Vec<ProcessStates> {
        let spec = EnsembleSpec::new(params, n).unwrap();
        let tree = SeedTree::new(0xfeed);
        let mut rng = tree.stream(Domain::Synthetic, seed_a, seed_b, 0);
        let (_, pi) = crate::chain::stationary_distribution(&params);
        let mut state = ProcessStates::sample_iid(n, pi, &mut rng);
        let mut rows = Vec::with_capacity(steps + 1);
        rows.push(state.clone());
        for _ in 0..steps {
            state = ensemble::sample_ensemble_step(&spec, &state, &mut rng);
            rows.push(state.clone());
        }
        rows
    }

    fn counts_of(rows: &[ProcessStates]) -> Vec<u32> {
        rows.iter().map(ProcessStates::active_count).collect()
    }

    fn trace_from_counts(counts: Vec<u32>, n: u32) -> ActivityTrace {
        let times: Vec<f64> = (0..counts.len()).map(|i| i as f64).collect();
        ActivityTrace::new(0, times, counts, n).unwrap()
    }

    #[test]
    fn traces_validate_their_invariants() {
        assert!(matches!(
            ActivityTrace::new(0, vec![0.0, 1.0], vec![1], 5),
            Err(EstimateError::LengthMismatch { timestamps: 2, counts: 1 })
        ));
        assert!(matches!(
            ActivityTrace::new(0, vec![0.0, 1.0, 1.0], vec![1, 2, 3], 5),
            Err(EstimateError::NonIncreasingTimestamps { index: 2 })
        ));
        assert!(matches!(
            ActivityTrace::new(0, vec![0.0, 1.0], vec![1, 9], 5),
            Err(EstimateError::CountOutOfRange { index: 1, count: 9, n_processes: 5 })
        ));
        let trace = ActivityTrace::new(3, vec![0.0, 0.5, 2.0], vec![1, 0, 5], 5).unwrap();
        assert_eq!(trace.arm_id(), 3);
        assert_eq!(trace.len(), 3);
    }

    #[test]
    fn an_alternating_bit_trace_estimates_both_rates_at_the_clamp() {
        // 0,1,0,1,0: every transition flips, so both empirical rates are 1
        // and clamp to 1 − 1e-6.
        let params = mle_from_bits(&bit_rows(&[0, 1, 0, 1, 0]), true).unwrap();
        assert_eq!(params.alpha(), 1.0 - CLAMP);
        assert_eq!(params.beta(), 1.0 - CLAMP);
    }

    #[test]
    fn hand_counted_transitions_match_the_closed_form() {
        // 0,0,1,1,0 → two steps start inactive (one activates), two start
        // active (one deactivates).
        let params = mle_from_bits(&bit_rows(&[0, 0, 1, 1, 0]), true).unwrap();
        assert!((params.alpha() - 0.5).abs() < 1e-15);
        assert!((params.beta() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unoccupied_states_are_inestimable() {
        assert_eq!(
            mle_from_bits(&bit_rows(&[0, 0, 0, 0]), true),
            Err(EstimateError::Inestimable { active: true })
        );
        assert_eq!(
            mle_from_bits(&bit_rows(&[1, 1, 1]), true),
            Err(EstimateError::Inestimable { active: false })
        );
        assert_eq!(
            mle_from_bits(&bit_rows(&[0, 1, 0]), false),
            Err(EstimateError::NonUniformSampling)
        );
    }

    #[test]
    fn bit_level_estimates_recover_synthetic_parameters() {
        let truth = ChainParams::new(0.2, 0.4).unwrap();
        let rows = synthetic_rows(truth, 100, 1000, 1, 0);
        let fit = mle_from_bits(&rows, true).unwrap();
        assert!((fit.alpha() - 0.2).abs() < 0.05, "alpha {}", fit.alpha());
        assert!((fit.beta() - 0.4).abs() < 0.05, "beta {}", fit.beta());
    }

    #[test]
    fn transition_probabilities_match_the_ensemble_law() {
        // The deduplicated-likelihood kernel must agree with the full
        // one-step conditional distribution.
        let params = ChainParams::new(0.17, 0.42).unwrap();
        let spec = EnsembleSpec::new(params, 12).unwrap();
        let table = LnFactorial::up_to(12);
        let mut scratch = Vec::new();
        for from in 0..=12u32 {
            let pmf = ensemble::conditional_pmf(&spec, from, 1).unwrap();
            for to in 0..=12u32 {
                let expected = pmf.probability_of(to);
                let got =
                    fmath::exp(ln_transition(&table, 12, from, to, 0.17, 0.42, &mut scratch));
                assert!(
                    (expected - got).abs() < 1e-12,
                    "P({to}|{from}): {expected} vs {got}"
                );
            }
        }
    }

    #[test]
    fn count_level_estimates_recover_synthetic_parameters() {
        let truth = ChainParams::new(0.2, 0.3).unwrap();
        let rows = synthetic_rows(truth, 100, 500, 2, 0);
        let trace = trace_from_counts(counts_of(&rows), 100);
        let init = ChainParams::new(0.1, 0.5).unwrap();
        let fit = mle_from_counts(&trace, &init).unwrap();
        let (a, b) = (fit.params().alpha(), fit.params().beta());
        assert!((a - 0.2).abs() < 0.07, "alpha {a}");
        assert!((b - 0.3).abs() < 0.07, "beta {b}");
        assert!(!fit.boundary());

        // The optimum the search reports cannot fall below the truth.
        let table = LnFactorial::up_to(100);
        let transitions = dedup_transitions(trace.counts());
        let mut scratch = Vec::new();
        let at_truth = count_log_likelihood(&table, 100, &transitions, 0.2, 0.3, &mut scratch);
        assert!(fit.log_likelihood() >= at_truth - 1e-9);
        assert!(fit.log_likelihood().is_finite());
    }

    #[test]
    fn the_reported_optimum_beats_its_neighbors() {
        let truth = ChainParams::new(0.15, 0.5).unwrap();
        let rows = synthetic_rows(truth, 40, 400, 3, 0);
        let trace = trace_from_counts(counts_of(&rows), 40);
        let init = ChainParams::new(0.3, 0.3).unwrap();
        let fit = mle_from_counts(&trace, &init).unwrap();

        let table = LnFactorial::up_to(40);
        let transitions = dedup_transitions(trace.counts());
        let mut scratch = Vec::new();
        for da in [-1, 0, 1] {
            for db in [-1, 0, 1] {
                let alpha =
                    clamp_probability(fit.params().alpha() * (1.0 + 0.005 * f64::from(da)));
                let beta =
                    clamp_probability(fit.params().beta() * (1.0 + 0.005 * f64::from(db)));
                let ll =
                    count_log_likelihood(&table, 40, &transitions, alpha, beta, &mut scratch);
                assert!(
                    fit.log_likelihood() >= ll - 1e-9,
                    "neighbor ({alpha}, {beta}) scores {ll} above {}",
                    fit.log_likelihood()
                );
            }
        }
    }

    #[test]
    fn single_process_count_fits_match_the_bit_closed_form() {
        let truth = ChainParams::new(0.3, 0.6).unwrap();
        let rows = synthetic_rows(truth, 1, 2000, 4, 0);
        let bits = mle_from_bits(&rows, true).unwrap();
        let trace = trace_from_counts(counts_of(&rows), 1);
        let init = ChainParams::new(0.5, 0.5).unwrap();
        let fit = mle_from_counts(&trace, &init).unwrap();
        assert!((fit.params().alpha() - bits.alpha()).abs() < 1e-3);
        assert!((fit.params().beta() - bits.beta()).abs() < 1e-3);
    }

    #[test]
    fn degenerate_traces_return_clamped_boundary_fits() {
        let init = ChainParams::new(0.25, 0.35).unwrap();
        let zeros = trace_from_counts(vec![0; 20], 8);
        let fit = mle_from_counts(&zeros, &init).unwrap();
        assert!(fit.boundary());
        assert_eq!(fit.params().alpha(), CLAMP);
        assert_eq!(fit.params().beta(), 0.35);
        assert!(fit.log_likelihood().is_finite());

        let full = trace_from_counts(vec![8; 20], 8);
        let fit = mle_from_counts(&full, &init).unwrap();
        assert!(fit.boundary());
        assert_eq!(fit.params().alpha(), 0.25);
        assert_eq!(fit.params().beta(), CLAMP);
    }

    /// Median of the per-replicate estimation errors.
    fn median(mut errors: Vec<f64>) -> f64 {
        errors.sort_by(f64::total_cmp);
        errors[errors.len() / 2]
    }

    #[test]
    fn bit_estimates_sharpen_with_trace_length() {
        let truth = ChainParams::new(0.2, 0.4).unwrap();
        let mut medians = Vec::new();
        for (tag, steps) in [(0u64, 100usize), (1, 1000), (2, 10_000)] {
            let errors: Vec<f64> = (0..50)
                .map(|rep| {
                    let rows = synthetic_rows(truth, 20, steps, 10 + tag, rep);
                    let fit = mle_from_bits(&rows, true).unwrap();
                    (fit.alpha() - 0.2).abs().max((fit.beta() - 0.4).abs())
                })
                .collect();
            medians.push(median(errors));
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians {medians:?}"
        );
    }

    #[test]
    fn count_estimates_sharpen_with_trace_length() {
        let truth = ChainParams::new(0.2, 0.4).unwrap();
        let init = ChainParams::new(0.1, 0.6).unwrap();
        let mut medians = Vec::new();
        for (tag, steps) in [(0u64, 100usize), (1, 1000), (2, 10_000)] {
            let errors: Vec<f64> = (0..50)
                .map(|rep| {
                    let rows = synthetic_rows(truth, 6, steps, 20 + tag, rep);
                    let trace = trace_from_counts(counts_of(&rows), 6);
                    let fit = mle_from_counts(&trace, &init).unwrap();
                    (fit.params().alpha() - 0.2)
                        .abs()
                        .max((fit.params().beta() - 0.4).abs())
                })
                .collect();
            medians.push(median(errors));
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians {medians:?}"
        );
    }
}
