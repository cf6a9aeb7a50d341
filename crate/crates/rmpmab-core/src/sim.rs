//! Ground-truth environment and evaluation harness.
//!
//! The simulator evolves every arm's latent processes **every step,
//! whether or not the arm is selected** (the environments are restless),
//! serves the selected arms' aggregate counts to the policy under test,
//! and measures *strong regret*: the gap to a clairvoyant genie who
//! observes every arm's true count each epoch and always takes the
//! largest.
//!
//! Reproducibility is structural. All randomness derives from keyed
//! streams of a [`crate::rng::SeedTree`]: environment streams are keyed
//! by `(trial, arm, step)` only, so within a trial every policy faces the
//! identical sample paths and policy randomness cannot perturb the world;
//! parameter sampling, state initialization, and policy randomness each
//! use disjoint domains. Doubling the trial count leaves earlier trials'
//! traces bitwise unchanged.
//!
//! Two latent representations are used, chosen per arm by ensemble size:
//! explicit per-process bit vectors (small arms; rewards are recomputed
//! by popcount), and aggregate-count stepping that draws the survivor and
//! recruit binomials directly (large arms; identical in distribution
//! because processes are exchangeable). Discrete-limit arms evolve their
//! counts with Poisson recruitment. Continuous-time runs discretize the
//! rates on a fine grid `dt` and make decisions at coarser epoch
//! boundaries.
//!
//! Belief bookkeeping follows the decision protocol: beliefs age at the
//! start of every epoch, then the policy scores them, then selected arms
//! are observed and reset. A just-observed arm is therefore scored with
//! delay 1 at the next epoch; delay 0 never reaches a policy.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::belief::{BeliefError, BeliefState};
use crate::chain::{self, ChainError, ChainParams};
use crate::ensemble::{self, EnsembleError, EnsembleSpec, ProcessStates};
use crate::policy::{
    self, ArmConfig, ArmDynamics, ArmView, BaselineStats, PolicyError, PolicyId, PolicyParams,
};
use crate::rng::{Domain, SeedTree};

/// Arms at or below this ensemble size are simulated process-by-process;
/// larger arms step their aggregate count directly.
const AGGREGATE_SIM_THRESHOLD: u32 = 4096;

/// Errors from experiment validation and execution.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// The experiment has no arms.
    NoArms,
    /// The experiment has no policies.
    NoPolicies,
    /// At least one trial is required.
    ZeroTrials,
    /// The horizon cannot fit the warm-up phase.
    HorizonTooShort {
        /// Configured horizon.
        horizon: u64,
        /// Number of arms that must each be observed once.
        arms: u32,
    },
    /// Parameter samplers redraw chain probabilities, which only finite
    /// arms carry.
    SamplerNeedsFiniteArms,
    /// The runner cannot simulate this arm's dynamics.
    UnsupportedDynamics {
        /// What the runner expected.
        expected: &'static str,
    },
    /// The requested initialization is undefined for an arm.
    UnsupportedInit {
        /// Why it is undefined.
        reason: &'static str,
    },
    /// The decision-epoch spacing is not an integer multiple of the
    /// latent time step.
    SpacingMismatch {
        /// Latent step.
        dt: f64,
        /// Decision spacing.
        epoch_spacing: f64,
    },
    /// A policy computation failed.
    Policy(PolicyError),
    /// A chain computation failed.
    Chain(ChainError),
    /// A belief update failed.
    Belief(BeliefError),
    /// An ensemble computation failed.
    Ensemble(EnsembleError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::NoArms => write!(f, "the experiment needs at least one arm"),
            SimError::NoPolicies => write!(f, "the experiment needs at least one policy"),
            SimError::ZeroTrials => write!(f, "the experiment needs at least one trial"),
            SimError::HorizonTooShort { horizon, arms } => {
                write!(f, "horizon {horizon} cannot warm up {arms} arms")
            }
            SimError::SamplerNeedsFiniteArms => {
                write!(f, "parameter sampling requires finite-ensemble arms")
            }
            SimError::UnsupportedDynamics { expected } => {
                write!(f, "this runner only simulates {expected}")
            }
            SimError::UnsupportedInit { reason } => {
                write!(f, "initialization undefined: {reason}")
            }
            SimError::SpacingMismatch { dt, epoch_spacing } => {
                write!(
                    f,
                    "epoch spacing {epoch_spacing} is not a positive integer multiple of dt {dt}"
                )
            }
            SimError::Policy(e) => write!(f, "policy failure: {e}"),
            SimError::Chain(e) => write!(f, "chain failure: {e}"),
            SimError::Belief(e) => write!(f, "belief failure: {e}"),
            SimError::Ensemble(e) => write!(f, "ensemble failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            SimError::Policy(e) => Some(e),
            SimError::Chain(e) => Some(e),
            SimError::Belief(e) => Some(e),
            SimError::Ensemble(e) => Some(e),
            _ => None,
        }
    }
}

impl From<PolicyError> for SimError {
    fn from(e: PolicyError) -> Self {
        SimError::Policy(e)
    }
}

impl From<ChainError> for SimError {
    fn from(e: ChainError) -> Self {
        SimError::Chain(e)
    }
}

impl From<BeliefError> for SimError {
    fn from(e: BeliefError) -> Self {
        SimError::Belief(e)
    }
}

impl From<EnsembleError> for SimError {
    fn from(e: EnsembleError) -> Self {
        SimError::Ensemble(e)
    }
}

/// How latent process states are drawn at the start of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Each process starts active with its stationary probability.
    Stationary,
    /// Each process starts active with probability one half.
    UniformRandom,
    /// Every process starts in the given state.
    Fixed {
        /// Whether the processes start active.
        active: bool,
    },
}

/// How chain parameters are assigned to arms at the start of each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSampler {
    /// Arms keep the parameters in the configuration.
    Fixed,
    /// Each arm independently draws `α ~ U(0,1)` and `β ~ U(α, 1)`.
    Heterogeneous,
    /// One `(α, β)` pair drawn per trial under the heterogeneous rule and
    /// shared by every arm.
    Homogeneous,
    /// Each arm draws an aggregate activation rate `ᾱ ~ U(0,1)` and
    /// `β ~ U(ᾱ, 1)`, then uses `α = ᾱ / N`: the vanishing-activation
    /// scaling at which finite arms approach their discrete limit.
    HeterogeneousRates,
}

/// One policy to evaluate, with its scalar knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    policy: PolicyId,
    gamma: f64,
    epsilon: f64,
    confidence: f64,
    top_l: u32,
}

impl PolicySpec {
    /// Builds a policy specification.
    ///
    /// # Errors
    ///
    /// Propagates [`PolicyError`] for `gamma` outside `[0, 1)` or
    /// `epsilon` outside `[0, 1]`, and rejects `top_l = 0` as
    /// [`PolicyError::InvalidTopL`].
    pub fn new(
        policy: PolicyId,
        gamma: f64,
        epsilon: f64,
        confidence: f64,
        top_l: u32,
    ) -> Result<Self, PolicyError> {
        PolicyParams::new(gamma, epsilon)?; // reuse the range checks
        if top_l == 0 {
            return Err(PolicyError::InvalidTopL { requested: 0, available: u32::MAX });
        }
        assert!(
            confidence >= 0.0 && confidence.is_finite(),
            "confidence multiplier must be finite and non-negative, got {confidence}"
        );
        Ok(Self { policy, gamma, epsilon, confidence, top_l })
    }

    /// A single-selection specification with default exploration and
    /// confidence knobs.
    ///
    /// # Errors
    ///
    /// Same contract as [`PolicySpec::new`].
    pub fn single(policy: PolicyId, gamma: f64) -> Result<Self, PolicyError> {
        Self::new(policy, gamma, policy::DEFAULT_EPSILON, policy::UCB_CONFIDENCE, 1)
    }

    /// The policy id.
    pub fn policy(&self) -> PolicyId {
        self.policy
    }

    /// Discount factor passed to index policies.
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

    /// Number of arms selected per epoch.
    pub fn top_l(&self) -> u32 {
        self.top_l
    }

    pub(crate) fn params(&self) -> PolicyParams {
        PolicyParams::new(self.gamma, self.epsilon)
            .expect("ranges were validated at construction")
            .with_confidence(self.confidence)
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// The arms, in table order (policies address them by position).
    pub arms: Vec<ArmConfig>,
    /// Number of decision epochs per trial.
    pub horizon: u64,
    /// Number of independent Monte Carlo trials.
    pub trials: u32,
    /// Policies to evaluate on the shared sample paths.
    pub policies: Vec<PolicySpec>,
    /// Root seed of every random stream.
    pub seed: u64,
    /// Latent-state initialization.
    pub init: InitMode,
    /// Per-trial parameter assignment.
    pub sampler: ParamSampler,
}

impl ExperimentConfig {
    /// Checks the structural invariants every runner relies on.
    ///
    /// # Errors
    ///
    /// [`SimError::NoArms`], [`SimError::NoPolicies`],
    /// [`SimError::ZeroTrials`], or [`SimError::HorizonTooShort`] when the
    /// warm-up (one observation per arm) does not fit the horizon, and
    /// [`SimError::SamplerNeedsFiniteArms`] when a non-fixed sampler meets
    /// a limit-regime arm.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.policies.is_empty() {
            return Err(SimError::NoPolicies);
        }
        self.validate_structure()
    }

    /// [`ExperimentConfig::validate`] minus the policy-list check, for
    /// runs that name their policy explicitly.
    fn validate_structure(&self) -> Result<(), SimError> {
        if self.arms.is_empty() {
            return Err(SimError::NoArms);
        }
        if self.trials == 0 {
            return Err(SimError::ZeroTrials);
        }
        let arms = self.arms.len() as u32;
        if self.horizon < u64::from(arms) {
            return Err(SimError::HorizonTooShort { horizon: self.horizon, arms });
        }
        if self.sampler != ParamSampler::Fixed
            && self
                .arms
                .iter()
                .any(|arm| !matches!(arm.dynamics(), ArmDynamics::Finite(_)))
        {
            return Err(SimError::SamplerNeedsFiniteArms);
        }
        Ok(())
    }
}

/// The per-trial record of one policy's run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    rewards: Vec<f64>,
    genie_rewards: Vec<f64>,
    cumulative_regret: Vec<f64>,
    latent_counts: Option<Vec<u32>>,
}

impl TrialTrace {
    /// Reward collected by the policy at each epoch (sum over selected
    /// arms).
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// The genie benchmark at each epoch (sum of the largest latent
    /// counts).
    pub fn genie_rewards(&self) -> &[f64] {
        &self.genie_rewards
    }

    /// Cumulative strong regret after each epoch.
    pub fn cumulative_regret(&self) -> &[f64] {
        &self.cumulative_regret
    }

    /// Final cumulative strong regret.
    pub fn final_regret(&self) -> f64 {
        *self.cumulative_regret.last().expect("horizon is at least one epoch")
    }

    /// Latent counts in epoch-major order (`epoch * arms + arm`), if
    /// recording was requested.
    pub fn latent_counts(&self) -> Option<&[u32]> {
        self.latent_counts.as_deref()
    }
}

/// Whether a trial records the full latent count table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLevel {
    /// Keep only rewards and regret.
    RegretOnly,
    /// Also keep every arm's latent count at every epoch.
    LatentCounts,
}

/// Per-policy aggregate over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    mean_regret: Vec<f64>,
    stderr_regret: Vec<f64>,
    mean_reward: Vec<f64>,
    mean_genie_reward: Vec<f64>,
    trial_final_regrets: Vec<f64>,
}

impl RegretTrace {
    /// Mean cumulative strong regret at each epoch.
    pub fn mean_regret(&self) -> &[f64] {
        &self.mean_regret
    }

    /// Standard error of the cumulative regret at each epoch, computed
    /// from the dispersion of trial-level values (zero for one trial).
    pub fn stderr_regret(&self) -> &[f64] {
        &self.stderr_regret
    }

    /// Mean per-epoch policy reward.
    pub fn mean_reward(&self) -> &[f64] {
        &self.mean_reward
    }

    /// Mean per-epoch genie benchmark.
    pub fn mean_genie_reward(&self) -> &[f64] {
        &self.mean_genie_reward
    }

    /// Final cumulative regret of each trial, in trial order.
    pub fn trial_final_regrets(&self) -> &[f64] {
        &self.trial_final_regrets
    }

    /// Mean final cumulative regret.
    pub fn final_mean_regret(&self) -> f64 {
        *self.mean_regret.last().expect("horizon is at least one epoch")
    }
}

/// One policy's aggregated outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    /// The evaluated policy.
    pub policy: PolicySpec,
    /// Its aggregate trace.
    pub trace: RegretTrace,
}

/// Averages per-trial traces into a [`RegretTrace`].
///
/// # Panics
///
/// Panics if `trials` is empty or the traces disagree on horizon.
pub fn aggregate_trials(trials: &[TrialTrace]) -> RegretTrace {
    assert!(!trials.is_empty(), "aggregation needs at least one trial");
    let horizon = trials[0].cumulative_regret.len();
    assert!(
        trials.iter().all(|t| t.cumulative_regret.len() == horizon),
        "traces must share one horizon"
    );
    let count = trials.len() as f64;

    let mut mean_regret = vec![0.0f64; horizon];
    let mut mean_reward = vec![0.0f64; horizon];
    let mut mean_genie_reward = vec![0.0f64; horizon];
    for trace in trials {
        for h in 0..horizon {
            mean_regret[h] += trace.cumulative_regret[h];
            mean_reward[h] += trace.rewards[h];
            mean_genie_reward[h] += trace.genie_rewards[h];
        }
    }
    for h in 0..horizon {
        mean_regret[h] /= count;
        mean_reward[h] /= count;
        mean_genie_reward[h] /= count;
    }

    let mut stderr_regret = vec![0.0f64; horizon];
    if trials.len() > 1 {
        for (h, stderr) in stderr_regret.iter_mut().enumerate() {
            let variance = trials
                .iter()
                .map(|t| {
                    let d = t.cumulative_regret[h] - mean_regret[h];
                    d * d
                })
                .sum::<f64>()
                / (count - 1.0);
            *stderr = crate::fmath::sqrt(variance / count);
        }
    }

    RegretTrace {
        mean_regret,
        stderr_regret,
        mean_reward,
        mean_genie_reward,
        trial_final_regrets: trials.iter().map(TrialTrace::final_regret).collect(),
    }
}

/// Draws `α ~ U(0,1)`, `β ~ U(α, 1)`, rejecting boundary values the
/// parameter type cannot represent.
fn sample_parameter_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let alpha: f64 = rng.gen();
        if !(alpha > 0.0 && alpha < 1.0) {
            continue;
        }
        let beta = rng.gen_range(alpha..1.0);
        if beta > 0.0 && beta < 1.0 {
            return (alpha, beta);
        }
    }
}

/// The arm table one trial actually runs: configured arms with any
/// sampler-drawn parameters substituted. Policies score with the
/// substituted parameters, exactly as the environment evolves with them.
///
/// # Errors
///
/// [`SimError::SamplerNeedsFiniteArms`] if a non-fixed sampler meets a
/// limit-regime arm.
pub fn resolve_arms(config: &ExperimentConfig, trial: u32) -> Result<Vec<ArmConfig>, SimError> {
    let tree = SeedTree::new(config.seed);
    let substitute = |arm: &ArmConfig, params: ChainParams| -> Result<ArmConfig, SimError> {
        let ArmDynamics::Finite(spec) = arm.dynamics() else {
            return Err(SimError::SamplerNeedsFiniteArms);
        };
        let spec = EnsembleSpec::new(params, spec.n_processes())?;
        Ok(ArmConfig::finite(arm.arm_id(), spec))
    };

    match config.sampler {
        ParamSampler::Fixed => Ok(config.arms.clone()),
        ParamSampler::Homogeneous => {
            let mut rng = tree.stream(Domain::Params, u64::from(trial), 0, 0);
            let (alpha, beta) = sample_parameter_pair(&mut rng);
            let params = ChainParams::new(alpha, beta)?;
            config.arms.iter().map(|arm| substitute(arm, params)).collect()
        }
        ParamSampler::Heterogeneous => config
            .arms
            .iter()
            .enumerate()
            .map(|(position, arm)| {
                let mut rng =
                    tree.stream(Domain::Params, u64::from(trial), position as u64, 0);
                let (alpha, beta) = sample_parameter_pair(&mut rng);
                substitute(arm, ChainParams::new(alpha, beta)?)
            })
            .collect(),
        ParamSampler::HeterogeneousRates => config
            .arms
            .iter()
            .enumerate()
            .map(|(position, arm)| {
                let ArmDynamics::Finite(spec) = arm.dynamics() else {
                    return Err(SimError::SamplerNeedsFiniteArms);
                };
                let mut rng =
                    tree.stream(Domain::Params, u64::from(trial), position as u64, 0);
                let (rate, beta) = sample_parameter_pair(&mut rng);
                let alpha = rate / f64::from(spec.n_processes());
                substitute(arm, ChainParams::new(alpha, beta)?)
            })
            .collect(),
    }
}

/// Ground-truth state of one arm.
enum Latent {
    /// Explicit per-process states (small finite arms).
    Bits { spec: EnsembleSpec, states: ProcessStates },
    /// Aggregate count stepped by survivor/recruit binomials (large
    /// finite arms).
    Count { spec: EnsembleSpec, active: u32 },
    /// Unbounded count with Poisson recruitment (discrete-limit arms).
    Unbounded { alpha_bar: f64, beta: f64, active: u32 },
}

impl Latent {
    fn count(&self) -> u32 {
        match self {
            Latent::Bits { states, .. } => states.active_count(),
            Latent::Count { active, .. } | Latent::Unbounded { active, .. } => *active,
        }
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match self {
            Latent::Bits { spec, states } => {
                *states = ensemble::sample_ensemble_step(spec, states, rng);
            }
            Latent::Count { spec, active } => {
                *active = ensemble::sample_count_step(spec, *active, rng);
            }
            Latent::Unbounded { alpha_bar, beta, active } => {
                let survivors = Binomial::new(u64::from(*active), 1.0 - *beta)
                    .expect("survival probability is valid")
                    .sample(rng);
                let recruits = Poisson::new(*alpha_bar)
                    .expect("recruitment rate is positive and finite")
                    .sample(rng);
                *active = (survivors + recruits as u64) as u32;
            }
        }
    }
}

/// Builds the latent state of one arm for a trial.
fn init_latent<R: Rng + ?Sized>(
    dynamics: &ArmDynamics,
    init: InitMode,
    rng: &mut R,
) -> Result<Latent, SimError> {
    let finite = |spec: EnsembleSpec, rng: &mut R| -> Result<Latent, SimError> {
        let n = spec.n_processes();
        let activation_probability = match init {
            InitMode::Stationary => {
                let (_, pi_active) = chain::stationary_distribution(spec.params());
                pi_active
            }
            InitMode::UniformRandom => 0.5,
            InitMode::Fixed { active } => {
                return Ok(if n <= AGGREGATE_SIM_THRESHOLD {
                    let states = if active {
                        ProcessStates::with_leading_active(n, n)
                    } else {
                        ProcessStates::all_inactive(n)
                    };
                    Latent::Bits { spec, states }
                } else {
                    Latent::Count { spec, active: if active { n } else { 0 } }
                });
            }
        };
        Ok(if n <= AGGREGATE_SIM_THRESHOLD {
            let states = ProcessStates::sample_iid(n, activation_probability, rng);
            Latent::Bits { spec, states }
        } else {
            let active = Binomial::new(u64::from(n), activation_probability)
                .expect("activation probability is valid")
                .sample(rng) as u32;
            Latent::Count { spec, active }
        })
    };

    match *dynamics {
        ArmDynamics::Finite(spec) => finite(spec, rng),
        ArmDynamics::ContinuousLimit { .. } => Err(SimError::UnsupportedDynamics {
            expected: "discrete-time arms (use the continuous runner)",
        }),
        ArmDynamics::DiscreteLimit { alpha_bar, beta } => {
            let active = match init {
                InitMode::Stationary => Poisson::new(alpha_bar / beta)
                    .expect("stationary mean is positive and finite")
                    .sample(rng) as u32,
                InitMode::UniformRandom => {
                    return Err(SimError::UnsupportedInit {
                        reason: "uniform per-process states need a finite ensemble",
                    });
                }
                InitMode::Fixed { active: false } => 0,
                InitMode::Fixed { active: true } => {
                    return Err(SimError::UnsupportedInit {
                        reason: "an unbounded arm has no all-active state",
                    });
                }
            };
            Ok(Latent::Unbounded { alpha_bar, beta, active })
        }
    }
}

/// Sum of the `top_l` largest latent counts — the genie benchmark.
fn genie_benchmark(counts: &[u32], top_l: u32) -> f64 {
    let mut sorted: Vec<u32> = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted[..top_l as usize].iter().map(|&c| f64::from(c)).sum()
}

/// Shared epoch accounting for the online and offline runners: records
/// rewards, computes the genie benchmark, accumulates regret, and
/// optionally logs the per-epoch counts.
pub(crate) struct TraceBuilder {
    rewards: Vec<f64>,
    genie_rewards: Vec<f64>,
    cumulative_regret: Vec<f64>,
    latent_counts: Option<Vec<u32>>,
    regret: f64,
}

impl TraceBuilder {
    pub(crate) fn new(epochs: usize, arm_count: usize, record_latents: bool) -> Self {
        Self {
            rewards: Vec::with_capacity(epochs),
            genie_rewards: Vec::with_capacity(epochs),
            cumulative_regret: Vec::with_capacity(epochs),
            latent_counts: record_latents.then(|| Vec::with_capacity(epochs * arm_count)),
            regret: 0.0,
        }
    }

    pub(crate) fn push_epoch(&mut self, counts: &[u32], reward: f64, top_l: u32) {
        if let Some(log) = self.latent_counts.as_mut() {
            log.extend_from_slice(counts);
        }
        let genie = genie_benchmark(counts, top_l);
        self.regret += genie - reward;
        self.rewards.push(reward);
        self.genie_rewards.push(genie);
        self.cumulative_regret.push(self.regret);
    }

    pub(crate) fn finish(self) -> TrialTrace {
        TrialTrace {
            rewards: self.rewards,
            genie_rewards: self.genie_rewards,
            cumulative_regret: self.cumulative_regret,
            latent_counts: self.latent_counts,
        }
    }
}

/// Stable tag of a policy id for stream keying.
pub(crate) fn policy_ordinal(policy: PolicyId) -> u64 {
    PolicyId::ALL
        .iter()
        .position(|&p| p == policy)
        .expect("every policy id is enumerated") as u64
}

/// Runs one policy through one trial of the discrete-time protocol.
///
/// Per epoch: every belief ages by one step, the policy selects
/// `top_l` arms, the selected arms' current counts are revealed (reward,
/// belief reset, baseline statistics), the genie benchmark is taken from
/// the full latent state, and then **every** arm's processes take one
/// transition. Environment randomness is keyed by `(trial, arm, epoch)`,
/// so the sample paths are identical for every policy evaluated on this
/// trial.
///
/// # Errors
///
/// Configuration validation failures, plus policy/belief errors from
/// incompatible arm–policy pairings.
pub fn run_trial(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    trial: u32,
    record: RecordLevel,
) -> Result<TrialTrace, SimError> {
    config.validate_structure()?;
    let arms = resolve_arms(config, trial)?;
    let arm_count = arms.len();
    let tree = SeedTree::new(config.seed);
    let params = policy.params();

    let mut latents: Vec<Latent> = Vec::with_capacity(arm_count);
    for (position, arm) in arms.iter().enumerate() {
        let mut rng = tree.stream(Domain::Init, u64::from(trial), position as u64, 0);
        latents.push(init_latent(arm.dynamics(), config.init, &mut rng)?);
    }

    let mut beliefs: Vec<BeliefState> = (0..arm_count)
        .map(|_| BeliefState::discrete(0, 0).expect("zero state is valid"))
        .collect();
    let mut stats = vec![BaselineStats::new(); arm_count];

    let horizon = config.horizon as usize;
    let mut builder =
        TraceBuilder::new(horizon, arm_count, record == RecordLevel::LatentCounts);

    for epoch in 0..config.horizon {
        for belief in beliefs.iter_mut() {
            *belief = belief.update_unselected(1.0)?;
        }

        let counts: Vec<u32> = latents.iter().map(Latent::count).collect();

        let views: Vec<ArmView<'_>> = arms
            .iter()
            .enumerate()
            .map(|(position, arm)| ArmView {
                config: arm,
                belief: beliefs[position],
                stats: stats[position],
                latent_count: Some(counts[position]),
            })
            .collect();
        let mut policy_rng = tree.stream(
            Domain::Policy,
            u64::from(trial),
            epoch,
            policy_ordinal(policy.policy),
        );
        let decision = policy::select(
            policy.policy,
            &views,
            epoch,
            policy.top_l,
            &params,
            &mut policy_rng,
        )?;

        let mut reward = 0.0f64;
        for &position in decision.selected() {
            let observed = counts[position as usize];
            reward += f64::from(observed);
            let max_count = arms[position as usize].max_count();
            beliefs[position as usize] =
                beliefs[position as usize].update_selected(observed, max_count)?;
            stats[position as usize].record(f64::from(observed));
        }
        builder.push_epoch(&counts, reward, policy.top_l);

        for (position, latent) in latents.iter_mut().enumerate() {
            let mut rng = tree.stream(Domain::Env, u64::from(trial), position as u64, epoch);
            latent.step(&mut rng);
        }
    }

    Ok(builder.finish())
}

/// Runs every configured policy over every trial and aggregates.
///
/// Trials are independent given `(seed, trial)`, so callers needing
/// parallelism can fan [`run_trial`] out themselves and combine with
/// [`aggregate_trials`]; this driver is the sequential reference.
///
/// # Errors
///
/// Propagates the first trial failure.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<PolicyOutcome>, SimError> {
    config.validate()?;
    let mut outcomes = Vec::with_capacity(config.policies.len());
    for policy in &config.policies {
        let mut traces = Vec::with_capacity(config.trials as usize);
        for trial in 0..config.trials {
            traces.push(run_trial(config, policy, trial, RecordLevel::RegretOnly)?);
        }
        outcomes.push(PolicyOutcome { policy: *policy, trace: aggregate_trials(&traces) });
    }
    Ok(outcomes)
}

/// Runs one policy through one trial of the continuous-time protocol.
///
/// Latent processes take a transition every `dt` with probabilities from
/// the rate discretization; decisions happen every `epoch_spacing`
/// (`config.horizon` epochs in total), with continuous beliefs aged by
/// the spacing. Environment streams are keyed by `(trial, arm,
/// micro-step)`.
///
/// # Errors
///
/// [`SimError::UnsupportedDynamics`] unless every arm is a
/// continuous-limit arm, [`SimError::SpacingMismatch`] unless
/// `epoch_spacing` is a positive integer multiple of `dt`, plus the
/// discrete runner's validation errors.
pub fn run_continuous_trial(
    config: &ExperimentConfig,
    policy: &PolicySpec,
    trial: u32,
    dt: f64,
    epoch_spacing: f64,
    record: RecordLevel,
) -> Result<TrialTrace, SimError> {
    config.validate_structure()?;
    let steps_per_epoch = spacing_steps(dt, epoch_spacing)?;

    let tree = SeedTree::new(config.seed);
    let params = policy.params();
    let arm_count = config.arms.len();

    // Discretize each arm's rates onto the fine grid.
    let mut specs = Vec::with_capacity(arm_count);
    for arm in &config.arms {
        let ArmDynamics::ContinuousLimit { rates, n_processes } = *arm.dynamics() else {
            return Err(SimError::UnsupportedDynamics { expected: "continuous-time arms" });
        };
        let step_params = chain::discretize_rates(&rates, n_processes, dt)?;
        specs.push(EnsembleSpec::new(step_params, n_processes)?);
    }

    let mut latents: Vec<Latent> = Vec::with_capacity(arm_count);
    for (position, spec) in specs.iter().enumerate() {
        let mut rng = tree.stream(Domain::Init, u64::from(trial), position as u64, 0);
        latents.push(init_latent(&ArmDynamics::Finite(*spec), config.init, &mut rng)?);
    }

    let mut beliefs: Vec<BeliefState> = (0..arm_count)
        .map(|_| BeliefState::continuous(0, 0.0).expect("zero state is valid"))
        .collect();
    let mut stats = vec![BaselineStats::new(); arm_count];

    let horizon = config.horizon as usize;
    let mut builder =
        TraceBuilder::new(horizon, arm_count, record == RecordLevel::LatentCounts);

    for epoch in 0..config.horizon {
        for belief in beliefs.iter_mut() {
            *belief = belief.update_unselected(epoch_spacing)?;
        }

        let counts: Vec<u32> = latents.iter().map(Latent::count).collect();

        let views: Vec<ArmView<'_>> = config
            .arms
            .iter()
            .enumerate()
            .map(|(position, arm)| ArmView {
                config: arm,
                belief: beliefs[position],
                stats: stats[position],
                latent_count: Some(counts[position]),
            })
            .collect();
        let mut policy_rng = tree.stream(
            Domain::Policy,
            u64::from(trial),
            epoch,
            policy_ordinal(policy.policy),
        );
        let decision = policy::select(
            policy.policy,
            &views,
            epoch,
            policy.top_l,
            &params,
            &mut policy_rng,
        )?;

        let mut reward = 0.0f64;
        for &position in decision.selected() {
            let observed = counts[position as usize];
            reward += f64::from(observed);
            let max_count = config.arms[position as usize].max_count();
            beliefs[position as usize] =
                beliefs[position as usize].update_selected(observed, max_count)?;
            stats[position as usize].record(f64::from(observed));
        }
        builder.push_epoch(&counts, reward, policy.top_l);

        for micro in 0..steps_per_epoch {
            let micro_index = epoch * steps_per_epoch + micro;
            for (position, latent) in latents.iter_mut().enumerate() {
                let mut rng =
                    tree.stream(Domain::Env, u64::from(trial), position as u64, micro_index);
                latent.step(&mut rng);
            }
        }
    }

    Ok(builder.finish())
}

/// Runs every configured policy through the continuous-time protocol and
/// aggregates, mirroring [`run_experiment`].
///
/// # Errors
///
/// Same contract as [`run_continuous_trial`].
pub fn run_continuous(
    config: &ExperimentConfig,
    dt: f64,
    epoch_spacing: f64,
) -> Result<Vec<PolicyOutcome>, SimError> {
    config.validate()?;
    spacing_steps(dt, epoch_spacing)?;
    let mut outcomes = Vec::with_capacity(config.policies.len());
    for policy in &config.policies {
        let mut traces = Vec::with_capacity(config.trials as usize);
        for trial in 0..config.trials {
            traces.push(run_continuous_trial(
                config,
                policy,
                trial,
                dt,
                epoch_spacing,
                RecordLevel::RegretOnly,
            )?);
        }
        outcomes.push(PolicyOutcome { policy: *policy, trace: aggregate_trials(&traces) });
    }
    Ok(outcomes)
}

/// Validates the fine/coarse grid relation and returns the number of
/// latent steps per decision epoch.
fn spacing_steps(dt: f64, epoch_spacing: f64) -> Result<u64, SimError> {
    let mismatch = || SimError::SpacingMismatch { dt, epoch_spacing };
    if !(dt > 0.0 && dt.is_finite() && epoch_spacing > 0.0 && epoch_spacing.is_finite()) {
        return Err(mismatch());
    }
    let ratio = epoch_spacing / dt;
    let steps = crate::fmath::round_ties_even(ratio);
    if steps < 1.0 || crate::fmath::abs(ratio - steps) > 1e-9 * ratio.max(1.0) {
        return Err(mismatch());
    }
    Ok(steps as u64)
}
