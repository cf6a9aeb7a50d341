//! Per-arm sufficient statistics and belief propagation.
//!
//! Observing an arm reveals its exact count; every step it goes unobserved
//! only ages that information. Because all processes of an arm share one
//! transition law, the pair *(last observed count, elapsed delay)* is a
//! sufficient statistic for the arm's current count distribution — nothing
//! about the unobserved interim can refine it. [`BeliefState`] is that
//! pair, in a discrete (integer step) or continuous (real time span)
//! regime.
//!
//! A full per-process belief — one marginal activity probability per
//! process — is also provided as [`BeliefMatrix`] for consumers that
//! sample latent states rather than score sufficient statistics.
//! Collapsing it onto an exact observation and propagating it forward
//! commute with the aggregate law: the sum of propagated marginals equals
//! the conditional mean of the count, which is precisely the sufficiency
//! claim in testable form.

use alloc::vec::Vec;
use core::fmt;

use crate::chain::{self, ChainParams};
use crate::ensemble::ProcessStates;

/// Delay counters refuse to pass this many steps (2³²); a run that long is
/// a bug upstream, and an explicit error beats silent wraparound.
pub const MAX_DELAY_STEPS: u64 = 1 << 32;

/// Errors from belief construction and updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeliefError {
    /// An observation exceeded the arm's process count.
    ObservationOutOfRange {
        /// The offending observation.
        observed: u32,
        /// Largest valid count for the arm.
        max_count: u32,
    },
    /// A delay increment was invalid for the belief's regime: discrete
    /// beliefs age in whole single steps, continuous ones by positive real
    /// spans.
    IncrementMismatch {
        /// The offending increment.
        dt: f64,
    },
    /// A delay counter reached [`MAX_DELAY_STEPS`].
    DelayOverflow,
    /// A continuous delay was negative or non-finite.
    SpanOutOfRange {
        /// The offending span.
        tau: f64,
    },
    /// A belief-matrix marginal lay outside `[0, 1]`.
    MarginalOutOfRange {
        /// The offending probability.
        value: f64,
    },
}

impl fmt::Display for BeliefError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeliefError::ObservationOutOfRange { observed, max_count } => write!(
                f,
                "observed count {observed} exceeds the arm's {max_count} processes"
            ),
            BeliefError::IncrementMismatch { dt } => write!(
                f,
                "delay increment {dt} does not fit the belief's regime \
                 (discrete beliefs age by exactly 1, continuous ones by a positive span)"
            ),
            BeliefError::DelayOverflow => {
                write!(f, "delay counter reached {MAX_DELAY_STEPS} steps")
            }
            BeliefError::SpanOutOfRange { tau } => {
                write!(f, "delay span {tau} must be finite and nonnegative")
            }
            BeliefError::MarginalOutOfRange { value } => {
                write!(f, "belief marginal {value} must lie in [0, 1]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BeliefError {}

/// Elapsed time since the last observation, tagged by regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    /// Whole steps in the discrete regime.
    Steps(u64),
    /// A real time span in the continuous regime.
    Span(f64),
}

/// The per-arm sufficient statistic: last observed count plus the delay
/// since it was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefState {
    last_observation: u32,
    delay: Delay,
}

impl BeliefState {
    /// A discrete-regime belief: count `observed` seen `delay` steps ago.
    ///
    /// # Errors
    ///
    /// Returns [`BeliefError::DelayOverflow`] if `delay` reaches
    /// [`MAX_DELAY_STEPS`].
    pub fn discrete(observed: u32, delay: u64) -> Result<Self, BeliefError> {
        if delay >= MAX_DELAY_STEPS {
            return Err(BeliefError::DelayOverflow);
        }
        Ok(Self { last_observation: observed, delay: Delay::Steps(delay) })
    }

    /// A continuous-regime belief: count `observed` seen a time span `tau`
    /// ago.
    ///
    /// # Errors
    ///
    /// Returns [`BeliefError::SpanOutOfRange`] if `tau` is negative or
    /// non-finite.
    pub fn continuous(observed: u32, tau: f64) -> Result<Self, BeliefError> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(BeliefError::SpanOutOfRange { tau });
        }
        Ok(Self { last_observation: observed, delay: Delay::Span(tau) })
    }

    /// The count recorded at the last observation.
    pub fn last_observation(&self) -> u32 {
        self.last_observation
    }

    /// Elapsed delay since the last observation.
    pub fn delay(&self) -> Delay {
        self.delay
    }

    /// Delay in steps, if this belief is in the discrete regime.
    pub fn delay_steps(&self) -> Option<u64> {
        match self.delay {
            Delay::Steps(m) => Some(m),
            Delay::Span(_) => None,
        }
    }

    /// Delay as a time span, if this belief is in the continuous regime.
    pub fn delay_span(&self) -> Option<f64> {
        match self.delay {
            Delay::Steps(_) => None,
            Delay::Span(tau) => Some(tau),
        }
    }

    /// Replaces the belief after observing the arm: the new sufficient
    /// statistic is the fresh observation with zero delay, in the same
    /// regime.
    ///
    /// `max_count` is the arm's process count for finite arms; pass `None`
    /// for limit-regime arms, whose counts are unbounded.
    ///
    /// # Errors
    ///
    /// Returns [`BeliefError::ObservationOutOfRange`] if the observation
    /// exceeds `max_count`.
    pub fn update_selected(
        &self,
        observed: u32,
        max_count: Option<u32>,
    ) -> Result<Self, BeliefError> {
        if let Some(max) = max_count {
            if observed > max {
                return Err(BeliefError::ObservationOutOfRange { observed, max_count: max });
            }
        }
        let delay = match self.delay {
            Delay::Steps(_) => Delay::Steps(0),
            Delay::Span(_) => Delay::Span(0.0),
        };
        Ok(Self { last_observation: observed, delay })
    }

    /// Ages the belief of an arm that went unobserved: the observation
    /// stands, the delay grows. Discrete beliefs accept only `dt = 1`
    /// (whole steps); continuous ones any positive finite span.
    ///
    /// # Errors
    ///
    /// - [`BeliefError::IncrementMismatch`] on a fractional discrete step
    ///   or a nonpositive/non-finite span.
    /// - [`BeliefError::DelayOverflow`] when a discrete delay reaches
    ///   [`MAX_DELAY_STEPS`].
    pub fn update_unselected(&self, dt: f64) -> Result<Self, BeliefError> {
        let delay = match self.delay {
            Delay::Steps(m) => {
                if dt != 1.0 {
                    return Err(BeliefError::IncrementMismatch { dt });
                }
                if m + 1 >= MAX_DELAY_STEPS {
                    return Err(BeliefError::DelayOverflow);
                }
                Delay::Steps(m + 1)
            }
            Delay::Span(tau) => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(BeliefError::IncrementMismatch { dt });
                }
                Delay::Span(tau + dt)
            }
        };
        Ok(Self { last_observation: self.last_observation, delay })
    }
}

/// Full per-process belief: one marginal activity probability per process.
///
/// Marginals are sufficient for everything downstream because the
/// processes are independent and two-state, so each process's belief is a
/// single number.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMatrix {
    marginals: Vec<f64>,
}

impl BeliefMatrix {
    /// Builds a belief from per-process activity probabilities.
    ///
    /// # Errors
    ///
    /// Returns [`BeliefError::MarginalOutOfRange`] if any entry falls
    /// outside `[0, 1]`.
    pub fn new(marginals: Vec<f64>) -> Result<Self, BeliefError> {
        for &p in &marginals {
            if !(0.0..=1.0).contains(&p) {
                return Err(BeliefError::MarginalOutOfRange { value: p });
            }
        }
        Ok(Self { marginals })
    }

    /// Per-process activity probabilities.
    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// Number of processes covered.
    pub fn len(&self) -> usize {
        self.marginals.len()
    }

    /// Whether the belief covers no processes.
    pub fn is_empty(&self) -> bool {
        self.marginals.is_empty()
    }

    /// Expected active count under this belief: the sum of marginals.
    pub fn expected_count(&self) -> f64 {
        self.marginals.iter().sum()
    }
}

/// Propagates every marginal forward through `steps` unobserved steps:
/// a process active with probability `p` is active `steps` later with
/// probability `p·q_steps + (1 − p)·p_steps`.
pub fn propagate_matrix(
    belief: &BeliefMatrix,
    params: &ChainParams,
    steps: u64,
) -> BeliefMatrix {
    let (q, p_react) = chain::qm_pm(params, steps);
    let marginals = belief
        .marginals()
        .iter()
        .map(|&p| p * q + (1.0 - p) * p_react)
        .collect();
    BeliefMatrix { marginals }
}

/// Collapses an exact observation onto a belief: every marginal becomes
/// the observed bit, 0 or 1.
pub fn collapse_matrix(observed_state: &ProcessStates) -> BeliefMatrix {
    let marginals = (0..observed_state.len())
        .map(|i| if observed_state.get(i) { 1.0 } else { 0.0 })
        .collect();
    BeliefMatrix { marginals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{self, EnsembleSpec};
    use crate::rng::{Domain, SeedTree};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn selection_resets_the_statistic_to_the_fresh_observation() {
        let belief = BeliefState::discrete(3, 7).unwrap();
        let updated = belief.update_selected(5, Some(10)).unwrap();
        assert_eq!(updated.last_observation(), 5);
        assert_eq!(updated.delay_steps(), Some(0));

        let idle = BeliefState::discrete(0, 0).unwrap();
        let still_idle = idle.update_selected(0, Some(10)).unwrap();
        assert_eq!(still_idle.last_observation(), 0);
        assert_eq!(still_idle.delay_steps(), Some(0));

        assert!(matches!(
            belief.update_selected(11, Some(10)),
            Err(BeliefError::ObservationOutOfRange { observed: 11, max_count: 10 })
        ));
        // Limit-regime arms have no ceiling.
        assert!(belief.update_selected(1_000_000, None).is_ok());

        let continuous = BeliefState::continuous(2, 0.5).unwrap();
        let updated = continuous.update_selected(4, Some(10)).unwrap();
        assert_eq!(updated.delay_span(), Some(0.0));
    }

    #[test]
    fn idle_arms_age_by_regime_appropriate_increments() {
        let discrete = BeliefState::discrete(3, 7).unwrap();
        let aged = discrete.update_unselected(1.0).unwrap();
        assert_eq!(aged.last_observation(), 3);
        assert_eq!(aged.delay_steps(), Some(8));
        assert!(matches!(
            discrete.update_unselected(0.5),
            Err(BeliefError::IncrementMismatch { .. })
        ));

        let continuous = BeliefState::continuous(2, 0.5).unwrap();
        let aged = continuous.update_unselected(0.25).unwrap();
        assert_eq!(aged.delay_span(), Some(0.75));
        assert!(continuous.update_unselected(0.0).is_err());
        assert!(continuous.update_unselected(-0.25).is_err());
        assert!(continuous.update_unselected(f64::NAN).is_err());
    }

    #[test]
    fn delay_counters_error_out_instead_of_wrapping() {
        assert!(matches!(
            BeliefState::discrete(1, MAX_DELAY_STEPS),
            Err(BeliefError::DelayOverflow)
        ));
        let nearly_stale = BeliefState::discrete(1, MAX_DELAY_STEPS - 2).unwrap();
        let stale = nearly_stale.update_unselected(1.0).unwrap();
        assert!(matches!(stale.update_unselected(1.0), Err(BeliefError::DelayOverflow)));

        assert!(BeliefState::continuous(1, f64::INFINITY).is_err());
        assert!(BeliefState::continuous(1, -1.0).is_err());
    }

    #[test]
    fn matrix_propagation_follows_the_chain_closed_forms() {
        let params = ChainParams::new(0.2, 0.3).unwrap();
        let belief = BeliefMatrix::new(alloc::vec![0.0, 0.25, 0.5, 1.0]).unwrap();

        let unchanged = propagate_matrix(&belief, &params, 0);
        assert_eq!(unchanged.marginals(), belief.marginals());

        let settled = propagate_matrix(&belief, &params, 100_000);
        let (_, pi_active) = chain::stationary_distribution(&params);
        for &p in settled.marginals() {
            assert!((p - pi_active).abs() < 1e-9);
        }

        for m in [1u64, 3, 10] {
            let (q, p_react) = chain::qm_pm(&params, m);
            let stepped = propagate_matrix(&belief, &params, m);
            assert!((stepped.marginals()[3] - q).abs() < 1e-15);
            assert!((stepped.marginals()[0] - p_react).abs() < 1e-15);
        }
    }

    #[test]
    fn collapsing_reproduces_the_observed_bit_pattern() {
        let empty = ProcessStates::all_inactive(5);
        assert_eq!(collapse_matrix(&empty).marginals(), &[0.0; 5]);

        let full = ProcessStates::with_leading_active(5, 5);
        assert_eq!(collapse_matrix(&full).marginals(), &[1.0; 5]);

        let mut mixed = ProcessStates::all_inactive(5);
        mixed.set(1, true);
        mixed.set(4, true);
        assert_eq!(collapse_matrix(&mixed).marginals(), &[0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn marginals_outside_the_unit_interval_are_rejected() {
        assert!(BeliefMatrix::new(alloc::vec![0.5, 1.3]).is_err());
        assert!(BeliefMatrix::new(alloc::vec![-0.1]).is_err());
        assert!(BeliefMatrix::new(alloc::vec![f64::NAN]).is_err());
        assert!(BeliefMatrix::new(alloc::vec![]).unwrap().is_empty());
    }

    proptest! {
        /// The scalar statistic and the full matrix agree on the expected
        /// count: sufficiency in testable form.
        #[test]
        fn sufficient_statistic_agrees_with_matrix_propagation(
            alpha in 1e-3f64..0.999,
            beta in 1e-3f64..0.999,
            n in 1u32..=60,
            j_frac in 0.0f64..=1.0,
            m in 0u64..=40,
            scramble in any::<u64>(),
        ) {
            let params = ChainParams::new(alpha, beta).unwrap();
            let spec = EnsembleSpec::new(params, n).unwrap();
            let j = ((f64::from(n) * j_frac) as u32).min(n);

            // Any state with exactly j active bits must give the same
            // aggregate prediction; scatter the bits pseudo-randomly.
            let mut state = ProcessStates::all_inactive(n);
            let mut placed = 0u32;
            let mut rng = SeedTree::new(scramble).stream(Domain::Mc, 0, 0, 0);
            while placed < j {
                let i = rng.gen_range(0..n);
                if !state.get(i) {
                    state.set(i, true);
                    placed += 1;
                }
            }

            let propagated = propagate_matrix(&collapse_matrix(&state), &params, m);
            let mean = ensemble::conditional_mean(&spec, j, m).unwrap();
            prop_assert!((propagated.expected_count() - mean).abs() < 1e-10);
        }

        /// Aging is additive in the delay for both regimes.
        #[test]
        fn aging_accumulates_additively(
            j in 0u32..1000,
            a in 1u64..30,
            b in 1u64..30,
            tau_a in 1e-3f64..10.0,
            tau_b in 1e-3f64..10.0,
        ) {
            let mut stepwise = BeliefState::discrete(j, 0).unwrap();
            for _ in 0..(a + b) {
                stepwise = stepwise.update_unselected(1.0).unwrap();
            }
            prop_assert_eq!(stepwise.delay_steps(), Some(a + b));

            let mut spanwise = BeliefState::continuous(j, 0.0).unwrap();
            spanwise = spanwise.update_unselected(tau_a).unwrap();
            spanwise = spanwise.update_unselected(tau_b).unwrap();
            let direct = BeliefState::continuous(j, 0.0)
                .unwrap()
                .update_unselected(tau_a + tau_b)
                .unwrap();
            let gap = (spanwise.delay_span().unwrap() - direct.delay_span().unwrap()).abs();
            prop_assert!(gap < 1e-12);
        }
    }
}
