//! Arm-selection policies: the closed-form restless index and the
//! baselines it is measured against.
//!
//! The centerpiece is the index family built on one observation: whenever
//! an arm's conditional expected reward is affine in the last observation,
//! `E[Y | j, m] = C(m) + j·D(m)`, the subsidy that makes the decision
//! entity indifferent between observing and skipping the arm has the
//! closed form implemented by [`whittle_general`]. Three specializations
//! cover the supported arm dynamics (finite ensembles, their
//! vanishing-activation limit, and the continuous-time limit); with
//! discount `gamma = 0` every one of them collapses to the conditional
//! mean, i.e. the myopic rule.
//!
//! [`select`] turns per-arm scores into decisions for all nine policy ids:
//! the four index policies plus round-robin, ε-greedy, UCB, Thompson
//! sampling over the propagated belief, and the clairvoyant genie used as
//! the regret reference. All learning policies share the same warm-up
//! (observe each arm once, in order, during the first steps; the genie,
//! which reads the true state, is exempt) and the same deterministic
//! tie-break (lowest arm position wins), so runs are reproducible
//! bit-for-bit given a seed.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::belief::BeliefState;
use crate::chain::{self, RateParams};
use crate::ensemble::EnsembleSpec;
use crate::fmath;

/// Exploration probability of the ε-greedy baseline.
pub const DEFAULT_EPSILON: f64 = 0.15;

/// Confidence multiplier of the UCB baseline (two-sided 95% normal
/// quantile).
pub const UCB_CONFIDENCE: f64 = 1.96;

/// Errors from index evaluation and arm selection.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyError {
    /// The discount factor was outside `[0, 1)` or made the index
    /// denominator vanish.
    DegenerateDiscount {
        /// The offending discount.
        gamma: f64,
    },
    /// A belief's regime (discrete/continuous) did not match the arm's
    /// dynamics.
    RegimeMismatch {
        /// The regime the operation needed.
        expected: &'static str,
    },
    /// A belief's observation exceeded the arm's process count.
    CountOutOfRange {
        /// The offending count.
        count: u32,
        /// The ensemble size it must not exceed.
        n_processes: u32,
    },
    /// A limit-regime parameter was invalid.
    LimitParameterOutOfRange {
        /// Which parameter was rejected.
        name: &'static str,
        /// The offending value.
        value: f64,
    },
    /// A policy id string did not name any known policy.
    UnknownPolicy(String),
    /// No arms were supplied.
    EmptyArmSet,
    /// The number of arms to select was zero or exceeded the arm count.
    InvalidTopL {
        /// Requested selection size.
        requested: u32,
        /// Number of arms available.
        available: u32,
    },
    /// The policy cannot run on the given arm dynamics.
    UnsupportedPolicy {
        /// The policy that was asked for.
        policy: PolicyId,
        /// Why it cannot serve this arm set.
        reason: &'static str,
    },
    /// The genie policy needs every arm's true count.
    MissingGroundTruth {
        /// Position of the arm without a latent count.
        position: u32,
    },
    /// The exploration probability was outside `[0, 1]`.
    EpsilonOutOfRange {
        /// The offending value.
        epsilon: f64,
    },
}

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyError::DegenerateDiscount { gamma } => {
                write!(f, "discount factor {gamma} is degenerate (must lie in [0, 1) and keep the index denominator positive)")
            }
            PolicyError::RegimeMismatch { expected } => {
                write!(f, "belief regime does not match the arm: expected {expected}")
            }
            PolicyError::CountOutOfRange { count, n_processes } => {
                write!(f, "count {count} exceeds the ensemble size {n_processes}")
            }
            PolicyError::LimitParameterOutOfRange { name, value } => {
                write!(f, "{name} = {value} is invalid for a limit-regime arm")
            }
            PolicyError::UnknownPolicy(s) => write!(f, "unknown policy id {s:?}"),
            PolicyError::EmptyArmSet => write!(f, "at least one arm is required"),
            PolicyError::InvalidTopL { requested, available } => {
                write!(f, "cannot select {requested} of {available} arms")
            }
            PolicyError::UnsupportedPolicy { policy, reason } => {
                write!(f, "policy {policy} is unavailable here: {reason}")
            }
            PolicyError::MissingGroundTruth { position } => {
                write!(f, "genie needs the true count of every arm; arm {position} has none")
            }
            PolicyError::EpsilonOutOfRange { epsilon } => {
                write!(f, "exploration probability {epsilon} must lie in [0, 1]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PolicyError {}

/// The dynamics of one arm, which pick the matching index formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmDynamics {
    /// A finite ensemble of `N` chains with known per-step parameters.
    Finite(EnsembleSpec),
    /// The large-ensemble limit with vanishing activation: aggregate
    /// activation rate `alpha_bar`, per-process deactivation probability
    /// `beta`.
    DiscreteLimit {
        /// Aggregate activation rate.
        alpha_bar: f64,
        /// Per-process deactivation probability.
        beta: f64,
    },
    /// The continuous-time large-ensemble limit, scored by the
    /// continuous-time index and simulated as `n_processes` rate-driven
    /// processes.
    ContinuousLimit {
        /// Aggregate activation and per-process deactivation rates.
        rates: RateParams,
        /// Ground-truth ensemble size used when the arm is simulated.
        n_processes: u32,
    },
}

/// One arm: an identifier for reporting plus its dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmConfig {
    arm_id: u32,
    dynamics: ArmDynamics,
}

impl ArmConfig {
    /// A finite-ensemble arm.
    pub fn finite(arm_id: u32, spec: EnsembleSpec) -> Self {
        Self { arm_id, dynamics: ArmDynamics::Finite(spec) }
    }

    /// A discrete-time limit arm.
    ///
    /// # Errors
    ///
    /// Returns [`PolicyError::LimitParameterOutOfRange`] unless
    /// `alpha_bar` is finite and positive and `beta` lies strictly inside
    /// `(0, 1)`.
    pub fn discrete_limit(arm_id: u32, alpha_bar: f64, beta: f64) -> Result<Self, PolicyError> {
        if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
            return Err(PolicyError::LimitParameterOutOfRange {
                name: "alpha_bar",
                value: alpha_bar,
            });
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(PolicyError::LimitParameterOutOfRange { name: "beta", value: beta });
        }
        Ok(Self { arm_id, dynamics: ArmDynamics::DiscreteLimit { alpha_bar, beta } })
    }

    /// A continuous-time limit arm backed by `n_processes` processes.
    ///
    /// # Panics
    ///
    /// Panics if `n_processes` is zero.
    pub fn continuous_limit(arm_id: u32, rates: RateParams, n_processes: u32) -> Self {
        assert!(n_processes >= 1, "a continuous arm needs at least one process");
        Self { arm_id, dynamics: ArmDynamics::ContinuousLimit { rates, n_processes } }
    }

    /// The reporting identifier.
    pub fn arm_id(&self) -> u32 {
        self.arm_id
    }

    /// The arm's dynamics.
    pub fn dynamics(&self) -> &ArmDynamics {
        &self.dynamics
    }

    /// Largest observable count, `None` for discrete-limit arms
    /// (unbounded Poisson-style counts).
    pub fn max_count(&self) -> Option<u32> {
        match self.dynamics {
            ArmDynamics::Finite(spec) => Some(spec.n_processes()),
            ArmDynamics::DiscreteLimit { .. } => None,
            ArmDynamics::ContinuousLimit { n_processes, .. } => Some(n_processes),
        }
    }

    /// Long-run expected count of the arm — the anchor every index decays
    /// toward as information ages.
    pub fn stationary_mean(&self) -> f64 {
        match self.dynamics {
            ArmDynamics::Finite(spec) => {
                let (_, pi_active) = chain::stationary_distribution(spec.params());
                f64::from(spec.n_processes()) * pi_active
            }
            ArmDynamics::DiscreteLimit { alpha_bar, beta } => alpha_bar / beta,
            ArmDynamics::ContinuousLimit { rates, .. } => rates.alpha_bar() / rates.beta_bar(),
        }
    }
}

/// Reward statistics a baseline tracks for one arm (Welford streaming
/// moments).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BaselineStats {
    pulls: u64,
    mean: f64,
    m2: f64,
}

impl BaselineStats {
    /// Fresh statistics: no pulls yet.
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one observed reward into the running moments.
    pub fn record(&mut self, reward: f64) {
        self.pulls += 1;
        let delta = reward - self.mean;
        self.mean += delta / self.pulls as f64;
        self.m2 += delta * (reward - self.mean);
    }

    /// Number of times the arm was pulled.
    pub fn pull_count(&self) -> u64 {
        self.pulls
    }

    /// Mean observed reward (0 before any pull).
    pub fn sample_mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance of observed rewards; defined as 0 until
    /// two pulls exist, which keeps confidence bonuses deterministic.
    pub fn sample_variance(&self) -> f64 {
        if self.pulls >= 2 {
            self.m2 / (self.pulls - 1) as f64
        } else {
            0.0
        }
    }

    /// Upper confidence score `mean + c·sqrt(variance / pulls)`.
    ///
    /// Before the first pull the score is `+∞` (unbounded optimism); the
    /// shared warm-up makes that state unreachable in simulation.
    pub fn ucb_score(&self, confidence: f64) -> f64 {
        if self.pulls == 0 {
            return f64::INFINITY;
        }
        self.mean + confidence * fmath::sqrt(self.sample_variance() / self.pulls as f64)
    }
}

/// Identifiers of the available policies; the strings are the exact ids
/// accepted in configuration files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyId {
    /// Closed-form index matched to each arm's exact dynamics.
    Whittle,
    /// The vanishing-activation discrete-time index formula, applied even
    /// to finite arms (their aggregate rate is `N·alpha`).
    WhittleLimitDiscrete,
    /// The continuous-time limit index formula.
    WhittleLimitContinuous,
    /// The index with discount 0: pick the largest conditional mean.
    Myopic,
    /// Cycle through arms in fixed order.
    RoundRobin,
    /// Exploit the best sample mean, explore uniformly with probability ε.
    EpsilonGreedy,
    /// Sample-mean plus confidence bonus.
    BayesUcb,
    /// Sample latent counts from the propagated belief, pick the largest.
    Thompson,
    /// Clairvoyant reference: observes every arm's true count.
    Genie,
}

impl PolicyId {
    /// All policies, in a stable order.
    pub const ALL: [PolicyId; 9] = [
        PolicyId::Whittle,
        PolicyId::WhittleLimitDiscrete,
        PolicyId::WhittleLimitContinuous,
        PolicyId::Myopic,
        PolicyId::RoundRobin,
        PolicyId::EpsilonGreedy,
        PolicyId::BayesUcb,
        PolicyId::Thompson,
        PolicyId::Genie,
    ];

    /// The canonical id string.
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyId::Whittle => "whittle",
            PolicyId::WhittleLimitDiscrete => "whittle-limit-discrete",
            PolicyId::WhittleLimitContinuous => "whittle-limit-continuous",
            PolicyId::Myopic => "myopic",
            PolicyId::RoundRobin => "round-robin",
            PolicyId::EpsilonGreedy => "epsilon-greedy",
            PolicyId::BayesUcb => "bayes-ucb",
            PolicyId::Thompson => "thompson",
            PolicyId::Genie => "genie",
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyId::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PolicyError::UnknownPolicy(String::from(s)))
    }
}

/// Shared scalar knobs of the selection step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    gamma: f64,
    epsilon: f64,
    confidence: f64,
}

impl PolicyParams {
    /// Builds selection parameters with the default confidence
    /// multiplier.
    ///
    /// # Errors
    ///
    /// Returns [`PolicyError::DegenerateDiscount`] for `gamma` outside
    /// `[0, 1)` and [`PolicyError::EpsilonOutOfRange`] for `epsilon`
    /// outside `[0, 1]`.
    pub fn new(gamma: f64, epsilon: f64) -> Result<Self, PolicyError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(PolicyError::DegenerateDiscount { gamma });
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(PolicyError::EpsilonOutOfRange { epsilon });
        }
        Ok(Self { gamma, epsilon, confidence: UCB_CONFIDENCE })
    }

    /// Parameters with the default exploration probability.
    ///
    /// # Errors
    ///
    /// Same contract as [`PolicyParams::new`].
    pub fn with_gamma(gamma: f64) -> Result<Self, PolicyError> {
        Self::new(gamma, DEFAULT_EPSILON)
    }

    /// Replaces the confidence multiplier of the UCB baseline.
    ///
    /// # Panics
    ///
    /// Panics unless `confidence` is finite and non-negative.
    pub fn with_confidence(mut self, confidence: f64) -> Self {
        assert!(
            confidence >= 0.0 && confidence.is_finite(),
            "confidence multiplier must be finite and non-negative, got {confidence}"
        );
        self.confidence = confidence;
        self
    }

    /// Discount factor of the index policies.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exploration probability of ε-greedy.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Confidence multiplier of the UCB baseline.
    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

/// The outcome of one selection step: the chosen arm positions and the
/// per-arm scores that drove the choice.
///
/// Invariants: selected positions are distinct, and every selected arm's
/// score is at least every unselected arm's score. Steps where selection
/// is forced (warm-up, round-robin, exploration) record indicator scores
/// (1 selected / 0 not) so the invariant is meaningful for every decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    selected: Vec<u32>,
    scores: Vec<f64>,
}

impl PolicyDecision {
    /// Selects the `top_l` highest-scoring arms, breaking ties toward the
    /// lowest position.
    ///
    /// # Errors
    ///
    /// [`PolicyError::EmptyArmSet`] when `scores` is empty and
    /// [`PolicyError::InvalidTopL`] when `top_l` is zero or exceeds the arm
    /// count.
    pub fn from_scores(scores: Vec<f64>, top_l: u32) -> Result<Self, PolicyError> {
        let k = scores.len() as u32;
        if k == 0 {
            return Err(PolicyError::EmptyArmSet);
        }
        if top_l == 0 || top_l > k {
            return Err(PolicyError::InvalidTopL { requested: top_l, available: k });
        }
        let mut order: Vec<u32> = (0..k).collect();
        order.sort_by(|&a, &b| {
            scores[b as usize]
                .total_cmp(&scores[a as usize])
                .then(a.cmp(&b))
        });
        order.truncate(top_l as usize);
        Ok(Self { selected: order, scores })
    }

    /// A forced selection with indicator scores.
    fn forced(selected: Vec<u32>, arm_count: u32) -> Self {
        let mut scores = alloc::vec![0.0; arm_count as usize];
        for &s in &selected {
            scores[s as usize] = 1.0;
        }
        Self { selected, scores }
    }

    /// Selected arm positions, best first.
    pub fn selected(&self) -> &[u32] {
        &self.selected
    }

    /// The single best arm position.
    pub fn best(&self) -> u32 {
        self.selected[0]
    }

    /// Per-arm scores at decision time (indices, sample means, sampled
    /// counts, or 0/1 indicators, depending on the policy and phase).
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// The general restless index for an arm whose conditional expected
/// reward is affine in the last observation, `E[Y | j, m] = C(m) + j·D(m)`:
///
/// ```text
///     W(j, m; γ) = [C(m) − γ·C(m+1) + γ·C(0)] / (1 − γ·D(0))
///                + j·[D(m) − γ·D(m+1)] / (1 − γ·D(0))
/// ```
///
/// The arguments are the six function values the formula touches:
/// `c0 = C(0)`, `cm = C(m)`, `cm1 = C(m+1)` and likewise `d0`, `dm`,
/// `dm1`. At `gamma = 0` the index reduces to `C(m) + j·D(m)`, the
/// conditional mean — the myopic score.
///
/// # Errors
///
/// Returns [`PolicyError::DegenerateDiscount`] when `gamma` lies outside
/// `[0, 1)` or `1 − γ·D(0)` is not strictly positive.
#[allow(clippy::too_many_arguments)]
pub fn whittle_general(
    c0: f64,
    cm: f64,
    cm1: f64,
    d0: f64,
    dm: f64,
    dm1: f64,
    j: f64,
    gamma: f64,
) -> Result<f64, PolicyError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(PolicyError::DegenerateDiscount { gamma });
    }
    let denominator = 1.0 - gamma * d0;
    if denominator <= 0.0 {
        return Err(PolicyError::DegenerateDiscount { gamma });
    }
    Ok((cm - gamma * cm1 + gamma * c0) / denominator + j * (dm - gamma * dm1) / denominator)
}

/// Shared shape of the three closed-form indices:
/// `anchor + [(1 − γ·g) / (1 − γ)] · decay · (j − anchor)`, where `g` is
/// the one-step decay and `decay` the decay accumulated over the belief's
/// delay.
fn closed_form_index(
    anchor: f64,
    step_decay: f64,
    delay_decay: f64,
    j: f64,
    gamma: f64,
) -> Result<f64, PolicyError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(PolicyError::DegenerateDiscount { gamma });
    }
    let boost = (1.0 - gamma * step_decay) / (1.0 - gamma);
    Ok(anchor + boost * delay_decay * (j - anchor))
}

/// Closed-form index of a finite arm:
///
/// ```text
///     W(j, m; γ) = N·pi + [(1 − γ·r) / (1 − γ)] · r^m · (j − N·pi)
/// ```
///
/// with `pi` the stationary active fraction and `r` the decay factor.
///
/// # Errors
///
/// - [`PolicyError::RegimeMismatch`] unless the belief is discrete.
/// - [`PolicyError::CountOutOfRange`] if the observation exceeds `N`.
/// - [`PolicyError::DegenerateDiscount`] for `gamma` outside `[0, 1)`.
pub fn whittle_discrete(
    spec: &EnsembleSpec,
    belief: &BeliefState,
    gamma: f64,
) -> Result<f64, PolicyError> {
    let m = belief
        .delay_steps()
        .ok_or(PolicyError::RegimeMismatch { expected: "a discrete belief" })?;
    let j = belief.last_observation();
    if j > spec.n_processes() {
        return Err(PolicyError::CountOutOfRange {
            count: j,
            n_processes: spec.n_processes(),
        });
    }
    let (_, pi_active) = chain::stationary_distribution(spec.params());
    let anchor = f64::from(spec.n_processes()) * pi_active;
    let r = spec.params().decay();
    closed_form_index(anchor, r, fmath::signed_pow(r, m), f64::from(j), gamma)
}

/// Closed-form index of a discrete-time limit arm:
///
/// ```text
///     W(j, m; γ) = ᾱ/β + [(1 − γ(1 − β)) / (1 − γ)] · (1 − β)^m · (j − ᾱ/β)
/// ```
///
/// This is [`whittle_discrete`] after substituting `alpha = alpha_bar / N`
/// and letting `N → ∞`.
///
/// # Errors
///
/// - [`PolicyError::LimitParameterOutOfRange`] for invalid `alpha_bar` or
///   `beta`.
/// - [`PolicyError::RegimeMismatch`] unless the belief is discrete.
/// - [`PolicyError::DegenerateDiscount`] for `gamma` outside `[0, 1)`.
pub fn whittle_discrete_limit(
    alpha_bar: f64,
    beta: f64,
    belief: &BeliefState,
    gamma: f64,
) -> Result<f64, PolicyError> {
    if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
        return Err(PolicyError::LimitParameterOutOfRange { name: "alpha_bar", value: alpha_bar });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(PolicyError::LimitParameterOutOfRange { name: "beta", value: beta });
    }
    let m = belief
        .delay_steps()
        .ok_or(PolicyError::RegimeMismatch { expected: "a discrete belief" })?;
    let keep = 1.0 - beta;
    closed_form_index(
        alpha_bar / beta,
        keep,
        fmath::signed_pow(keep, m),
        f64::from(belief.last_observation()),
        gamma,
    )
}

/// Closed-form index of a continuous-time limit arm:
///
/// ```text
///     W(j, τ; γ) = ᾱ/β̄ + [(1 − γ·e^{−β̄}) / (1 − γ)] · e^{−β̄·τ} · (j − ᾱ/β̄)
/// ```
///
/// The one-step factor discounts over one unit of time (`e^{−β̄·1}`);
/// decision-epoch spacing is a simulator concern, not folded in here.
///
/// # Errors
///
/// - [`PolicyError::RegimeMismatch`] unless the belief is continuous.
/// - [`PolicyError::DegenerateDiscount`] for `gamma` outside `[0, 1)`.
pub fn whittle_continuous(
    rates: &RateParams,
    belief: &BeliefState,
    gamma: f64,
) -> Result<f64, PolicyError> {
    let tau = belief
        .delay_span()
        .ok_or(PolicyError::RegimeMismatch { expected: "a continuous belief" })?;
    closed_form_index(
        rates.alpha_bar() / rates.beta_bar(),
        fmath::exp(-rates.beta_bar()),
        fmath::exp(-rates.beta_bar() * tau),
        f64::from(belief.last_observation()),
        gamma,
    )
}

/// Evaluates the index formula matched to the arm's own dynamics.
///
/// # Errors
///
/// Propagates the errors of the underlying formula.
pub fn whittle_index(
    arm: &ArmConfig,
    belief: &BeliefState,
    gamma: f64,
) -> Result<f64, PolicyError> {
    match arm.dynamics() {
        ArmDynamics::Finite(spec) => whittle_discrete(spec, belief, gamma),
        ArmDynamics::DiscreteLimit { alpha_bar, beta } => {
            whittle_discrete_limit(*alpha_bar, *beta, belief, gamma)
        }
        ArmDynamics::ContinuousLimit { rates, .. } => whittle_continuous(rates, belief, gamma),
    }
}

/// Everything a policy may consult about one arm at decision time.
#[derive(Debug, Clone, Copy)]
pub struct ArmView<'a> {
    /// The arm's static configuration.
    pub config: &'a ArmConfig,
    /// Current sufficient statistic.
    pub belief: BeliefState,
    /// Reward statistics for the baselines.
    pub stats: BaselineStats,
    /// True current count, available only to the genie (simulator ground
    /// truth or recorded traces).
    pub latent_count: Option<u32>,
}

/// Picks `top_l` distinct arm positions uniformly at random (partial
/// Fisher–Yates).
fn sample_distinct<R: Rng + ?Sized>(arm_count: u32, top_l: u32, rng: &mut R) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..arm_count).collect();
    for i in 0..top_l as usize {
        let pick = rng.gen_range(i..pool.len());
        pool.swap(i, pick);
    }
    pool.truncate(top_l as usize);
    pool
}

/// Runs one selection step of the given policy.
///
/// The first steps are a shared warm-up: every arm is observed once, in
/// position order, before any policy logic runs (with `top_l` arms per
/// step the warm-up spans `ceil(K / top_l)` steps). The genie skips the
/// warm-up — it needs no observations and anchors regret at zero from the
/// first step. After warm-up:
///
/// - index policies score every arm with its matched closed form
///   ([`PolicyId::Myopic`] forces discount 0;
///   [`PolicyId::WhittleLimitDiscrete`] applies the vanishing-activation
///   formula to finite arms via `alpha_bar = N·alpha`);
/// - [`PolicyId::RoundRobin`] keeps cycling in position order;
/// - [`PolicyId::EpsilonGreedy`] explores uniformly over all arms
///   (including the incumbent) with probability ε, otherwise exploits the
///   best sample mean;
/// - [`PolicyId::BayesUcb`] scores `mean + 1.96·sqrt(variance / pulls)`;
/// - [`PolicyId::Thompson`] samples a latent count per arm from its
///   propagated belief and picks the largest (finite arms only: the
///   propagated per-process marginals take exactly two values, so the
///   sampled count is the sum of two binomials);
/// - [`PolicyId::Genie`] reads the true counts.
///
/// Ties always break toward the lowest arm position, so identical inputs
/// and generator state reproduce the identical decision.
///
/// # Errors
///
/// [`PolicyError::EmptyArmSet`] / [`PolicyError::InvalidTopL`] for
/// malformed inputs, and the per-policy errors described above.
pub fn select<R: Rng + ?Sized>(
    policy: PolicyId,
    arms: &[ArmView<'_>],
    step: u64,
    top_l: u32,
    params: &PolicyParams,
    rng: &mut R,
) -> Result<PolicyDecision, PolicyError> {
    let arm_count = arms.len() as u32;
    if arm_count == 0 {
        return Err(PolicyError::EmptyArmSet);
    }
    if top_l == 0 || top_l > arm_count {
        return Err(PolicyError::InvalidTopL { requested: top_l, available: arm_count });
    }

    let cycle = |step: u64| -> Vec<u32> {
        (0..u64::from(top_l))
            .map(|i| ((step * u64::from(top_l) + i) % u64::from(arm_count)) as u32)
            .collect()
    };

    // Shared warm-up: observe each arm once, in position order. The genie
    // is exempt — it reads the true state, has no cold start, and defines
    // the zero-regret reference at every step including the first.
    if policy != PolicyId::Genie && step * u64::from(top_l) < u64::from(arm_count) {
        return Ok(PolicyDecision::forced(cycle(step), arm_count));
    }

    match policy {
        PolicyId::RoundRobin => Ok(PolicyDecision::forced(cycle(step), arm_count)),
        PolicyId::Whittle | PolicyId::Myopic => {
            let gamma = if policy == PolicyId::Myopic { 0.0 } else { params.gamma() };
            let scores = arms
                .iter()
                .map(|arm| whittle_index(arm.config, &arm.belief, gamma))
                .collect::<Result<Vec<f64>, PolicyError>>()?;
            PolicyDecision::from_scores(scores, top_l)
        }
        PolicyId::WhittleLimitDiscrete => {
            let scores = arms
                .iter()
                .map(|arm| match arm.config.dynamics() {
                    ArmDynamics::Finite(spec) => {
                        let aggregate_rate =
                            f64::from(spec.n_processes()) * spec.params().alpha();
                        whittle_discrete_limit(
                            aggregate_rate,
                            spec.params().beta(),
                            &arm.belief,
                            params.gamma(),
                        )
                    }
                    ArmDynamics::DiscreteLimit { alpha_bar, beta } => whittle_discrete_limit(
                        *alpha_bar,
                        *beta,
                        &arm.belief,
                        params.gamma(),
                    ),
                    ArmDynamics::ContinuousLimit { .. } => Err(PolicyError::UnsupportedPolicy {
                        policy,
                        reason: "continuous-time arms need the continuous index",
                    }),
                })
                .collect::<Result<Vec<f64>, PolicyError>>()?;
            PolicyDecision::from_scores(scores, top_l)
        }
        PolicyId::WhittleLimitContinuous => {
            let scores = arms
                .iter()
                .map(|arm| match arm.config.dynamics() {
                    ArmDynamics::ContinuousLimit { rates, .. } => {
                        whittle_continuous(rates, &arm.belief, params.gamma())
                    }
                    _ => Err(PolicyError::UnsupportedPolicy {
                        policy,
                        reason: "only continuous-time arms carry a time-span belief",
                    }),
                })
                .collect::<Result<Vec<f64>, PolicyError>>()?;
            PolicyDecision::from_scores(scores, top_l)
        }
        PolicyId::EpsilonGreedy => {
            if rng.gen::<f64>() < params.epsilon() {
                Ok(PolicyDecision::forced(
                    sample_distinct(arm_count, top_l, rng),
                    arm_count,
                ))
            } else {
                let scores = arms.iter().map(|arm| arm.stats.sample_mean()).collect();
                PolicyDecision::from_scores(scores, top_l)
            }
        }
        PolicyId::BayesUcb => {
            let scores = arms
                .iter()
                .map(|arm| arm.stats.ucb_score(params.confidence()))
                .collect();
            PolicyDecision::from_scores(scores, top_l)
        }
        PolicyId::Thompson => {
            let scores = arms
                .iter()
                .map(|arm| {
                    let ArmDynamics::Finite(spec) = arm.config.dynamics() else {
                        return Err(PolicyError::UnsupportedPolicy {
                            policy,
                            reason: "belief sampling needs a finite process matrix",
                        });
                    };
                    let m = arm.belief.delay_steps().ok_or(PolicyError::RegimeMismatch {
                        expected: "a discrete belief",
                    })?;
                    let j = arm.belief.last_observation();
                    let n = spec.n_processes();
                    if j > n {
                        return Err(PolicyError::CountOutOfRange { count: j, n_processes: n });
                    }
                    // Propagated marginals: q_m for the j processes seen
                    // active, p_m for the rest. Sampling every process and
                    // summing is therefore two binomial draws.
                    let (q, p) = chain::qm_pm(spec.params(), m);
                    let survivors = Binomial::new(u64::from(j), q)
                        .expect("q_m is a valid probability")
                        .sample(rng);
                    let recruits = Binomial::new(u64::from(n - j), p)
                        .expect("p_m is a valid probability")
                        .sample(rng);
                    Ok((survivors + recruits) as f64)
                })
                .collect::<Result<Vec<f64>, PolicyError>>()?;
            PolicyDecision::from_scores(scores, top_l)
        }
        PolicyId::Genie => {
            let scores = arms
                .iter()
                .enumerate()
                .map(|(position, arm)| {
                    arm.latent_count
                        .map(f64::from)
                        .ok_or(PolicyError::MissingGroundTruth { position: position as u32 })
                })
                .collect::<Result<Vec<f64>, PolicyError>>()?;
            PolicyDecision::from_scores(scores, top_l)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble;
    use crate::rng::{Domain, SeedTree};
    use alloc::vec;
    use proptest::prelude::*;

    fn finite_arm(arm_id: u32, alpha: f64, beta: f64, n: u32) -> ArmConfig {
        let spec = EnsembleSpec::new(ChainParams::new(alpha, beta).unwrap(), n).unwrap();
        ArmConfig::finite(arm_id, spec)
    }

    fn discrete_belief(j: u32, m: u64) -> BeliefState {
        BeliefState::discrete(j, m).unwrap()
    }

    #[test]
    fn general_index_reduces_to_the_conditional_mean_without_discounting() {
        // Arbitrary affine pieces: C(m) = 2.5, C(m+1) = 3.0, D(m) = 0.4 …
        let w = whittle_general(0.0, 2.5, 3.0, 1.0, 0.4, 0.2, 6.0, 0.0).unwrap();
        assert!((w - (2.5 + 6.0 * 0.4)).abs() < 1e-15);
    }

    #[test]
    fn general_index_telescopes_constant_reward_curves() {
        // With j = 0, C constant, and D(0) = 0 the index is the constant
        // itself for every discount.
        for gamma in [0.0, 0.3, 0.9, 0.999] {
            let w = whittle_general(7.25, 7.25, 7.25, 0.0, 0.3, 0.8, 0.0, gamma).unwrap();
            assert!((w - 7.25).abs() < 1e-12, "gamma = {gamma}: {w}");
        }
    }

    #[test]
    fn general_index_matches_the_finite_closed_form() {
        let spec = EnsembleSpec::new(ChainParams::new(0.2, 0.3).unwrap(), 10).unwrap();
        let (_, pi) = chain::stationary_distribution(spec.params());
        let anchor = 10.0 * pi;
        let r = spec.params().decay();
        for (j, m, gamma) in [(8u32, 2u64, 0.5), (0, 0, 0.9), (4, 7, 0.0), (10, 1, 0.99)] {
            // The affine pieces of the conditional mean: C(m) = anchor(1 − r^m),
            // D(m) = r^m.
            let c = |mm: u64| anchor * (1.0 - fmath::signed_pow(r, mm));
            let d = |mm: u64| fmath::signed_pow(r, mm);
            let general = whittle_general(
                c(0),
                c(m),
                c(m + 1),
                d(0),
                d(m),
                d(m + 1),
                f64::from(j),
                gamma,
            )
            .unwrap();
            let closed =
                whittle_discrete(&spec, &discrete_belief(j, m), gamma).unwrap();
            assert!(
                (general - closed).abs() < 1e-10,
                "({j}, {m}, {gamma}): {general} vs {closed}"
            );
        }
    }

    #[test]
    fn degenerate_discounts_are_rejected() {
        assert!(matches!(
            whittle_general(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
            Err(PolicyError::DegenerateDiscount { .. })
        ));
        // 1 − γ·D(0) ≤ 0 with D(0) = 2, γ = 0.5.
        assert!(whittle_general(0.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 0.5).is_err());

        let spec = EnsembleSpec::new(ChainParams::new(0.2, 0.3).unwrap(), 10).unwrap();
        let belief = discrete_belief(4, 1);
        assert!(whittle_discrete(&spec, &belief, 1.0).is_err());
        assert!(whittle_discrete(&spec, &belief, -0.1).is_err());
        assert!(whittle_discrete_limit(5.0, 0.3, &belief, 1.0).is_err());
    }

    #[test]
    fn finite_index_is_myopic_at_discount_zero_and_anchored_at_stationarity() {
        let spec = EnsembleSpec::new(ChainParams::new(0.2, 0.3).unwrap(), 10).unwrap();
        for (j, m) in [(0u32, 0u64), (4, 2), (8, 5), (10, 0)] {
            let index = whittle_discrete(&spec, &discrete_belief(j, m), 0.0).unwrap();
            let mean = ensemble::conditional_mean(&spec, j, m).unwrap();
            assert!((index - mean).abs() < 1e-12);
        }

        // An observation exactly at the stationary mean has no transient:
        // the index is the anchor for every delay and discount.
        for m in [0u64, 1, 5, 50] {
            for gamma in [0.0, 0.5, 0.99] {
                let w = whittle_discrete(&spec, &discrete_belief(4, m), gamma).unwrap();
                assert!((w - 4.0).abs() < 1e-12);
            }
        }

        assert!(matches!(
            whittle_discrete(&spec, &discrete_belief(11, 0), 0.5),
            Err(PolicyError::CountOutOfRange { .. })
        ));
        let continuous = BeliefState::continuous(4, 1.0).unwrap();
        assert!(matches!(
            whittle_discrete(&spec, &continuous, 0.5),
            Err(PolicyError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn limit_index_agrees_with_large_finite_ensembles() {
        let (alpha_bar, beta, gamma) = (1.0, 0.5, 0.9);
        let finite_at = |n: u32, j: u32, m: u64| {
            let spec = EnsembleSpec::new(
                ChainParams::new(alpha_bar / f64::from(n), beta).unwrap(),
                n,
            )
            .unwrap();
            whittle_discrete(&spec, &discrete_belief(j, m), gamma).unwrap()
        };
        for (j, m) in [(0u32, 0u64), (8, 2), (20, 10), (17, 1)] {
            let belief = discrete_belief(j, m);
            let limit = whittle_discrete_limit(alpha_bar, beta, &belief, gamma).unwrap();
            let finite = finite_at(1_000_000, j, m);
            assert!((limit - finite).abs() < 1e-4, "({j}, {m}): {limit} vs {finite}");

            // And it really is a limit: the gap shrinks as N grows (up to
            // float noise on cases that agree exactly).
            let coarse = (limit - finite_at(10_000, j, m)).abs();
            let fine = (limit - finite_at(1_000_000, j, m)).abs();
            assert!(fine <= coarse + 1e-12, "({j}, {m}): {fine} vs {coarse}");
        }

        // Zero discount, zero delay → the observation itself.
        let w = whittle_discrete_limit(5.0, 0.3, &discrete_belief(9, 0), 0.0).unwrap();
        assert!((w - 9.0).abs() < 1e-12);

        // An observation at the anchor (5.0 / 0.5 = 10) pins the index
        // there for all delays.
        for m in [0u64, 3, 12] {
            let w = whittle_discrete_limit(5.0, 0.5, &discrete_belief(10, m), 0.85).unwrap();
            assert!((w - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn continuous_index_decays_toward_its_anchor() {
        let rates = RateParams::new(5.0, 0.5).unwrap();
        let anchor = 10.0;

        let fresh = BeliefState::continuous(16, 0.0).unwrap();
        assert!((whittle_continuous(&rates, &fresh, 0.0).unwrap() - 16.0).abs() < 1e-12);

        for tau in [0.0, 0.5, 4.0] {
            let at_anchor = BeliefState::continuous(10, tau).unwrap();
            let w = whittle_continuous(&rates, &at_anchor, 0.7).unwrap();
            assert!((w - anchor).abs() < 1e-12);
        }

        let stale = BeliefState::continuous(16, 500.0).unwrap();
        let w = whittle_continuous(&rates, &stale, 0.7).unwrap();
        assert!((w - anchor).abs() < 1e-9);

        let discrete = discrete_belief(16, 1);
        assert!(matches!(
            whittle_continuous(&rates, &discrete, 0.7),
            Err(PolicyError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn index_transients_are_monotone_in_observation_and_delay() {
        let spec = EnsembleSpec::new(ChainParams::new(0.2, 0.3).unwrap(), 10).unwrap();
        let anchor = 4.0;
        for gamma in [0.0, 0.5, 0.95] {
            for m in [0u64, 1, 4, 9] {
                // Affine and strictly increasing in j (positive decay).
                let mut previous = f64::NEG_INFINITY;
                for j in 0..=10u32 {
                    let w = whittle_discrete(&spec, &discrete_belief(j, m), gamma).unwrap();
                    assert!(w > previous);
                    previous = w;
                }
            }
            for j in [0u32, 2, 8, 10] {
                // The pull toward the anchor weakens as information ages.
                let mut previous = f64::INFINITY;
                for m in 0..=12u64 {
                    let w = whittle_discrete(&spec, &discrete_belief(j, m), gamma).unwrap();
                    let transient = (w - anchor).abs();
                    assert!(transient <= previous + 1e-12);
                    previous = transient;
                }
            }
        }
    }

    #[test]
    fn policy_ids_round_trip_their_canonical_strings() {
        for policy in PolicyId::ALL {
            assert_eq!(policy.as_str().parse::<PolicyId>().unwrap(), policy);
        }
        assert_eq!("whittle-limit-discrete".parse::<PolicyId>().unwrap(), PolicyId::WhittleLimitDiscrete);
        assert!(matches!(
            "wittle".parse::<PolicyId>(),
            Err(PolicyError::UnknownPolicy(_))
        ));
    }

    fn view_table<'a>(
        configs: &'a [ArmConfig],
        beliefs: &[BeliefState],
        stats: &[BaselineStats],
        latents: Option<&[u32]>,
    ) -> Vec<ArmView<'a>> {
        configs
            .iter()
            .enumerate()
            .map(|(i, config)| ArmView {
                config,
                belief: beliefs[i],
                stats: stats[i],
                latent_count: latents.map(|l| l[i]),
            })
            .collect()
    }

    #[test]
    fn warm_up_observes_each_arm_once_in_order() {
        let configs: Vec<ArmConfig> =
            (0..4).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(0, 0); 4];
        let stats = vec![BaselineStats::new(); 4];
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::with_gamma(0.9).unwrap();
        let tree = SeedTree::new(1);

        for policy in [PolicyId::Whittle, PolicyId::EpsilonGreedy, PolicyId::BayesUcb] {
            for step in 0..4u64 {
                let mut rng = tree.stream(Domain::Policy, step, 0, 0);
                let decision = select(policy, &views, step, 1, &params, &mut rng).unwrap();
                assert_eq!(decision.selected(), &[step as u32], "{policy} at {step}");
            }
        }
    }

    #[test]
    fn round_robin_cycles_in_fixed_order() {
        let configs: Vec<ArmConfig> =
            (0..3).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(0, 0); 3];
        let stats = vec![BaselineStats::new(); 3];
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::with_gamma(0.9).unwrap();
        let mut rng = SeedTree::new(1).stream(Domain::Policy, 0, 0, 0);

        let decision = select(PolicyId::RoundRobin, &views, 4, 1, &params, &mut rng).unwrap();
        assert_eq!(decision.best(), 1); // step 4 on 3 arms → position 4 mod 3

        let sequence: Vec<u32> = (0..9u64)
            .map(|h| {
                select(PolicyId::RoundRobin, &views, h, 1, &params, &mut rng)
                    .unwrap()
                    .best()
            })
            .collect();
        assert_eq!(sequence, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn myopic_selection_follows_conditional_means() {
        let configs: Vec<ArmConfig> =
            (0..2).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(9, 1), discrete_belief(2, 0)];
        let stats = vec![BaselineStats::new(); 2];
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::with_gamma(0.0).unwrap();
        let mut rng = SeedTree::new(1).stream(Domain::Policy, 0, 0, 0);

        // Past warm-up (step ≥ K): conditional means are 6.5 and 2.0.
        let decision = select(PolicyId::Myopic, &views, 5, 1, &params, &mut rng).unwrap();
        assert_eq!(decision.best(), 0);
        assert!((decision.scores()[0] - 6.5).abs() < 1e-12);
        assert!((decision.scores()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn equal_scores_break_toward_the_lowest_position() {
        let decision = PolicyDecision::from_scores(vec![3.0, 3.0, 3.0], 2).unwrap();
        assert_eq!(decision.selected(), &[0, 1]);

        let configs: Vec<ArmConfig> =
            (0..3).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(4, 1); 3];
        let stats = vec![BaselineStats::new(); 3];
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::with_gamma(0.9).unwrap();
        let mut rng = SeedTree::new(1).stream(Domain::Policy, 0, 0, 0);
        let decision = select(PolicyId::Whittle, &views, 7, 1, &params, &mut rng).unwrap();
        assert_eq!(decision.best(), 0);
    }

    #[test]
    fn malformed_selections_are_rejected() {
        let params = PolicyParams::with_gamma(0.9).unwrap();
        let mut rng = SeedTree::new(1).stream(Domain::Policy, 0, 0, 0);
        assert!(matches!(
            select(PolicyId::Whittle, &[], 0, 1, &params, &mut rng),
            Err(PolicyError::EmptyArmSet)
        ));

        let configs = vec![finite_arm(0, 0.2, 0.3, 10)];
        let beliefs = vec![discrete_belief(0, 0)];
        let stats = vec![BaselineStats::new()];
        let views = view_table(&configs, &beliefs, &stats, None);
        assert!(matches!(
            select(PolicyId::Whittle, &views, 0, 2, &params, &mut rng),
            Err(PolicyError::InvalidTopL { requested: 2, available: 1 })
        ));
        assert!(select(PolicyId::Whittle, &views, 0, 0, &params, &mut rng).is_err());

        // Genie without ground truth.
        assert!(matches!(
            select(PolicyId::Genie, &views, 1, 1, &params, &mut rng),
            Err(PolicyError::MissingGroundTruth { position: 0 })
        ));

        // Thompson needs finite arms.
        let limit_configs = vec![ArmConfig::discrete_limit(0, 5.0, 0.3).unwrap()];
        let limit_views = view_table(&limit_configs, &beliefs, &stats, None);
        assert!(matches!(
            select(PolicyId::Thompson, &limit_views, 1, 1, &params, &mut rng),
            Err(PolicyError::UnsupportedPolicy { .. })
        ));
    }

    #[test]
    fn baseline_stats_track_streaming_moments() {
        let mut stats = BaselineStats::new();
        assert_eq!(stats.pull_count(), 0);
        assert_eq!(stats.sample_variance(), 0.0);
        assert_eq!(stats.ucb_score(UCB_CONFIDENCE), f64::INFINITY);

        stats.record(4.0);
        assert_eq!(stats.pull_count(), 1);
        assert_eq!(stats.sample_mean(), 4.0);
        // One pull: variance pinned at 0, bonus collapses.
        assert_eq!(stats.sample_variance(), 0.0);
        assert_eq!(stats.ucb_score(UCB_CONFIDENCE), 4.0);

        stats.record(8.0);
        stats.record(6.0);
        assert_eq!(stats.pull_count(), 3);
        assert!((stats.sample_mean() - 6.0).abs() < 1e-12);
        assert!((stats.sample_variance() - 4.0).abs() < 1e-12);
        let expected = 6.0 + UCB_CONFIDENCE * (4.0f64 / 3.0).sqrt();
        assert!((stats.ucb_score(UCB_CONFIDENCE) - expected).abs() < 1e-12);
    }

    #[test]
    fn exploration_reaches_every_arm_including_the_incumbent() {
        let configs: Vec<ArmConfig> =
            (0..5).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(4, 1); 5];
        // Arm 3 dominates on sample means; with ε = 1 it must still be
        // displaced uniformly.
        let mut stats = vec![BaselineStats::new(); 5];
        for (i, s) in stats.iter_mut().enumerate() {
            s.record(if i == 3 { 100.0 } else { 1.0 });
        }
        let views = view_table(&configs, &beliefs, &stats, None);
        let always_explore = PolicyParams::new(0.9, 1.0).unwrap();

        let tree = SeedTree::new(17);
        let mut counts = [0u32; 5];
        let trials = 20_000u64;
        for t in 0..trials {
            let mut rng = tree.stream(Domain::Policy, t, 0, 0);
            let decision =
                select(PolicyId::EpsilonGreedy, &views, 5 + t, 1, &always_explore, &mut rng)
                    .unwrap();
            counts[decision.best() as usize] += 1;
        }
        for &c in &counts {
            let frac = f64::from(c) / trials as f64;
            assert!((frac - 0.2).abs() < 0.02, "exploration frequencies {counts:?}");
        }

        // With ε = 0 the incumbent always wins.
        let never_explore = PolicyParams::new(0.9, 0.0).unwrap();
        let mut rng = tree.stream(Domain::Policy, 0, 1, 0);
        let decision =
            select(PolicyId::EpsilonGreedy, &views, 5, 1, &never_explore, &mut rng).unwrap();
        assert_eq!(decision.best(), 3);
    }

    #[test]
    fn thompson_sampling_matches_the_conditional_law() {
        // The two-binomial shortcut must reproduce the exact conditional
        // pmf of the propagated belief.
        let spec = EnsembleSpec::new(ChainParams::new(0.2, 0.3).unwrap(), 20).unwrap();
        let configs = vec![ArmConfig::finite(0, spec)];
        let beliefs = vec![discrete_belief(12, 3)];
        let stats = vec![BaselineStats::new()];
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::with_gamma(0.9).unwrap();

        let tree = SeedTree::new(23);
        let draws = 200_000u64;
        let mut histogram = vec![0u64; 21];
        for t in 0..draws {
            let mut rng = tree.stream(Domain::Policy, t, 0, 0);
            let decision = select(PolicyId::Thompson, &views, 2, 1, &params, &mut rng).unwrap();
            histogram[decision.scores()[0] as usize] += 1;
        }
        let empirical = ensemble::CountDistribution::new(
            0,
            histogram.iter().map(|&c| c as f64 / draws as f64).collect(),
            false,
        );
        let exact = ensemble::conditional_pmf(&spec, 12, 3).unwrap();
        assert!(ensemble::tv_distance(&empirical, &exact) < 0.01);
    }

    #[test]
    fn identical_seeds_reproduce_identical_decisions() {
        let configs: Vec<ArmConfig> =
            (0..6).map(|id| finite_arm(id, 0.15, 0.4, 25)).collect();
        let beliefs: Vec<BeliefState> =
            (0..6).map(|i| discrete_belief(i * 4, u64::from(i))).collect();
        let mut stats = vec![BaselineStats::new(); 6];
        for (i, s) in stats.iter_mut().enumerate() {
            s.record(i as f64);
            s.record(i as f64 + 1.0);
        }
        let views = view_table(&configs, &beliefs, &stats, None);
        let params = PolicyParams::new(0.9, 0.3).unwrap();
        let tree = SeedTree::new(99);

        for policy in [PolicyId::Thompson, PolicyId::EpsilonGreedy, PolicyId::Whittle] {
            let mut a = tree.stream(Domain::Policy, 7, 0, 0);
            let mut b = tree.stream(Domain::Policy, 7, 0, 0);
            assert_eq!(
                select(policy, &views, 9, 2, &params, &mut a).unwrap(),
                select(policy, &views, 9, 2, &params, &mut b).unwrap(),
            );
        }
    }

    #[test]
    fn genie_reads_the_true_counts() {
        let configs: Vec<ArmConfig> =
            (0..3).map(|id| finite_arm(id, 0.2, 0.3, 10)).collect();
        let beliefs = vec![discrete_belief(0, 0); 3];
        let stats = vec![BaselineStats::new(); 3];
        let latents = [3u32, 9, 5];
        let views = view_table(&configs, &beliefs, &stats, Some(&latents));
        let params = PolicyParams::with_gamma(0.9).unwrap();
        let mut rng = SeedTree::new(1).stream(Domain::Policy, 0, 0, 0);

        let decision = select(PolicyId::Genie, &views, 4, 1, &params, &mut rng).unwrap();
        assert_eq!(decision.best(), 1);
        assert_eq!(decision.scores(), &[3.0, 9.0, 5.0]);
    }

    proptest! {
        /// Selected scores dominate unselected scores in every decision.
        #[test]
        fn selected_scores_dominate(
            scores in proptest::collection::vec(-1e6f64..1e6, 1..40),
            l_frac in 0.0f64..=1.0,
        ) {
            let k = scores.len() as u32;
            let top_l = ((f64::from(k) * l_frac) as u32).clamp(1, k);
            let decision = PolicyDecision::from_scores(scores.clone(), top_l).unwrap();
            prop_assert_eq!(decision.selected().len(), top_l as usize);

            let mut chosen = alloc::collections::BTreeSet::new();
            for &s in decision.selected() {
                prop_assert!(chosen.insert(s), "duplicate selection {s}");
            }
            let floor = decision
                .selected()
                .iter()
                .map(|&s| scores[s as usize])
                .fold(f64::INFINITY, f64::min);
            for (i, &score) in scores.iter().enumerate() {
                if !chosen.contains(&(i as u32)) {
                    prop_assert!(score <= floor);
                }
            }
        }

        /// The decision is invariant to scaling all scores by a positive
        /// constant.
        #[test]
        fn decisions_are_scale_invariant(
            scores in proptest::collection::vec(0.0f64..1e3, 2..30),
            scale in 1e-3f64..1e3,
            l_frac in 0.0f64..=1.0,
        ) {
            let k = scores.len() as u32;
            let top_l = ((f64::from(k) * l_frac) as u32).clamp(1, k);
            let base = PolicyDecision::from_scores(scores.clone(), top_l).unwrap();
            let scaled_scores: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            let scaled = PolicyDecision::from_scores(scaled_scores, top_l).unwrap();
            prop_assert_eq!(base.selected(), scaled.selected());
        }

        /// Zero-discount index selection equals conditional-mean selection.
        #[test]
        fn myopic_equivalence_on_random_tables(
            raw in proptest::collection::vec((0u32..=30, 0u64..=20), 2..12),
            alpha in 0.05f64..0.95,
            beta in 0.05f64..0.95,
        ) {
            let n = 30u32;
            let spec = EnsembleSpec::new(ChainParams::new(alpha, beta).unwrap(), n).unwrap();
            let configs: Vec<ArmConfig> = (0..raw.len() as u32)
                .map(|id| ArmConfig::finite(id, spec))
                .collect();
            let beliefs: Vec<BeliefState> = raw
                .iter()
                .map(|&(j, m)| discrete_belief(j, m))
                .collect();
            let stats = vec![BaselineStats::new(); raw.len()];
            let views = view_table(&configs, &beliefs, &stats, None);
            let params = PolicyParams::with_gamma(0.0).unwrap();

            let step = raw.len() as u64 + 3; // past warm-up
            let mut rng_a = SeedTree::new(5).stream(Domain::Policy, 0, 0, 0);
            let whittle_pick =
                select(PolicyId::Whittle, &views, step, 1, &params, &mut rng_a).unwrap();

            let means: Vec<f64> = raw
                .iter()
                .map(|&(j, m)| ensemble::conditional_mean(&spec, j, m).unwrap())
                .collect();
            let mean_pick = PolicyDecision::from_scores(means, 1).unwrap();
            prop_assert_eq!(whittle_pick.best(), mean_pick.best());
        }

        /// Top-L selection equals sorting all indices and taking the L
        /// largest.
        #[test]
        fn top_l_matches_full_sort(
            scores in proptest::collection::vec(-1e3f64..1e3, 1..25),
            l_frac in 0.0f64..=1.0,
        ) {
            let k = scores.len() as u32;
            let top_l = ((f64::from(k) * l_frac) as u32).clamp(1, k);
            let decision = PolicyDecision::from_scores(scores.clone(), top_l).unwrap();

            let mut order: Vec<u32> = (0..k).collect();
            order.sort_by(|&a, &b| {
                scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b))
            });
            prop_assert_eq!(decision.selected(), &order[..top_l as usize]);
        }
    }
}
