//! Offline policy evaluation against recorded activity traces.
//!
//! Replay answers "how would this policy have done on that data": at each
//! recorded epoch the policy selects arms from its beliefs, the dataset
//! reveals the selected arms' recorded counts, and the genie benchmark is
//! the epoch's recorded maximum. Rewards come entirely from data — no
//! dynamics are simulated — but belief propagation still needs per-arm
//! chain parameters (typically fitted on a training prefix; see
//! [`ReplayDataset::split_at`]).
//!
//! The decision protocol is byte-compatible with the online simulator:
//! same warm-up, same belief aging, same policy stream keying. Replaying
//! a policy on the latent-count log of its own simulated run therefore
//! reproduces the online regret trace bitwise.
//!
//! Recorded datasets often report *percentages* of active processes
//! rather than integer counts; [`count_from_percent`] is the shared
//! coercion rule (round half to even against the declared ensemble
//! size). A synthetic generator with the shape of a 96-well microscopy
//! plate ([`generate_synthetic`]) ships so the whole offline pipeline can
//! be exercised without proprietary recordings.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::belief::{BeliefError, BeliefState};
use crate::chain::ChainParams;
use crate::ensemble::{self, EnsembleSpec};
use crate::estimate::ActivityTrace;
use crate::fmath;
use crate::policy::{self, ArmConfig, ArmView, BaselineStats, PolicyError};
use crate::rng::{Domain, SeedTree};
use crate::sim::{self, PolicySpec, RegretTrace, TrialTrace};

/// Errors from dataset validation and replay.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayError {
    /// A dataset needs at least one arm and one epoch.
    EmptyDataset,
    /// An arm's trace does not share the common timestamp grid.
    GridMismatch {
        /// The offending arm.
        arm_id: u32,
    },
    /// Two traces claim the same arm id.
    DuplicateArmId {
        /// The repeated id.
        arm_id: u32,
    },
    /// The parameter table does not cover the arms one-to-one.
    ParamCountMismatch {
        /// Parameters supplied.
        params: usize,
        /// Arms in the dataset.
        arms: usize,
    },
    /// A split point must leave both sides non-empty.
    SplitOutOfRange {
        /// Requested prefix length.
        epoch: usize,
        /// Dataset length.
        epochs: usize,
    },
    /// A percentage observation must lie in `[0, 100]`.
    PercentOutOfRange {
        /// The offending value.
        percent: f64,
    },
    /// A policy computation failed.
    Policy(PolicyError),
    /// A belief update failed.
    Belief(BeliefError),
}

impl fmt::Display for ReplayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayError::EmptyDataset => {
                write!(f, "a dataset needs at least one arm and one epoch")
            }
            ReplayError::GridMismatch { arm_id } => {
                write!(f, "arm {arm_id} does not share the dataset's timestamp grid")
            }
            ReplayError::DuplicateArmId { arm_id } => {
                write!(f, "arm id {arm_id} appears more than once")
            }
            ReplayError::ParamCountMismatch { params, arms } => {
                write!(f, "{params} parameter pairs supplied for {arms} arms")
            }
            ReplayError::SplitOutOfRange { epoch, epochs } => {
                write!(f, "split at {epoch} must fall strictly inside 0..{epochs}")
            }
            ReplayError::PercentOutOfRange { percent } => {
                write!(f, "percentage {percent} lies outside [0, 100]")
            }
            ReplayError::Policy(e) => write!(f, "policy failure: {e}"),
            ReplayError::Belief(e) => write!(f, "belief failure: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReplayError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ReplayError::Policy(e) => Some(e),
            ReplayError::Belief(e) => Some(e),
            _ => None,
        }
    }
}

impl From<PolicyError> for ReplayError {
    fn from(e: PolicyError) -> Self {
        ReplayError::Policy(e)
    }
}

impl From<BeliefError> for ReplayError {
    fn from(e: BeliefError) -> Self {
        ReplayError::Belief(e)
    }
}

/// Free-text provenance carried alongside a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetMeta {
    /// Where the recordings came from.
    pub source: String,
    /// What one count unit means.
    pub units: String,
}

/// A complete offline evaluation dataset: one activity trace per arm on
/// a shared epoch grid with no missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayDataset {
    traces: Vec<ActivityTrace>,
    meta: DatasetMeta,
}

impl ReplayDataset {
    /// Validates and wraps per-arm traces.
    ///
    /// # Errors
    ///
    /// [`ReplayError::EmptyDataset`] without at least one arm and one
    /// epoch, [`ReplayError::DuplicateArmId`] on repeated ids, and
    /// [`ReplayError::GridMismatch`] when any trace's timestamps differ
    /// from the first trace's.
    pub fn new(traces: Vec<ActivityTrace>, meta: DatasetMeta) -> Result<Self, ReplayError> {
        if traces.is_empty() || traces[0].is_empty() {
            return Err(ReplayError::EmptyDataset);
        }
        let grid = traces[0].timestamps();
        for (i, trace) in traces.iter().enumerate() {
            if trace.timestamps() != grid {
                return Err(ReplayError::GridMismatch { arm_id: trace.arm_id() });
            }
            if traces[..i].iter().any(|t| t.arm_id() == trace.arm_id()) {
                return Err(ReplayError::DuplicateArmId { arm_id: trace.arm_id() });
            }
        }
        Ok(Self { traces, meta })
    }

    /// The per-arm traces, in arm order.
    pub fn traces(&self) -> &[ActivityTrace] {
        &self.traces
    }

    /// Dataset provenance.
    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    /// Number of arms.
    pub fn arm_count(&self) -> usize {
        self.traces.len()
    }

    /// Number of decision epochs.
    pub fn epochs(&self) -> usize {
        self.traces[0].len()
    }

    /// Splits into a training prefix (`..epoch`) and an evaluation
    /// suffix (`epoch..`), so parameters fitted on the prefix can never
    /// read evaluation values.
    ///
    /// # Errors
    ///
    /// [`ReplayError::SplitOutOfRange`] unless `0 < epoch < epochs`.
    pub fn split_at(&self, epoch: usize) -> Result<(Self, Self), ReplayError> {
        let epochs = self.epochs();
        if epoch == 0 || epoch >= epochs {
            return Err(ReplayError::SplitOutOfRange { epoch, epochs });
        }
        let slice = |range: core::ops::Range<usize>| -> Vec<ActivityTrace> {
            self.traces
                .iter()
                .map(|t| {
                    ActivityTrace::new(
                        t.arm_id(),
                        t.timestamps()[range.clone()].to_vec(),
                        t.counts()[range.clone()].to_vec(),
                        t.n_processes(),
                    )
                    .expect("a slice of a valid trace is valid")
                })
                .collect()
        };
        let train = Self { traces: slice(0..epoch), meta: self.meta.clone() };
        let test = Self { traces: slice(epoch..epochs), meta: self.meta.clone() };
        Ok((train, test))
    }
}

/// Converts a recorded percentage of active processes into an integer
/// count: `percent/100 · n`, rounded half to even. A recording of 37.5%
/// over 22 500 processes is 8 437.5 and coerces to 8 438.
///
/// # Errors
///
/// [`ReplayError::PercentOutOfRange`] unless `percent` is finite and in
/// `[0, 100]`.
pub fn count_from_percent(percent: f64, n_processes: u32) -> Result<u32, ReplayError> {
    if !(percent.is_finite() && (0.0..=100.0).contains(&percent)) {
        return Err(ReplayError::PercentOutOfRange { percent });
    }
    let exact = percent / 100.0 * f64::from(n_processes);
    Ok(fmath::round_ties_even(exact) as u32)
}

/// Replays one policy over a dataset and returns its regret trace.
///
/// The protocol mirrors the online simulator epoch for epoch: beliefs age
/// by one step, the policy selects from beliefs (never from future data),
/// the selected arms' recorded counts are revealed as reward and belief
/// resets, and the genie benchmark is the sum of the epoch's `top_l`
/// largest recorded counts. Randomized policies draw from the same seeded
/// stream family the simulator uses, so replaying a policy on the
/// latent-count log of its own simulated run (same root seed, trial 0)
/// reproduces the online regret trace bitwise.
///
/// `params` supplies the belief-propagation parameters for each arm, in
/// dataset order; each arm's ensemble size comes from its trace.
///
/// # Errors
///
/// [`ReplayError::ParamCountMismatch`] unless parameters and arms pair
/// one-to-one, plus policy errors from incompatible policy–arm pairings.
pub fn replay_policy(
    dataset: &ReplayDataset,
    policy: &PolicySpec,
    params: &[ChainParams],
    seed: u64,
) -> Result<RegretTrace, ReplayError> {
    let trace = replay_trial(dataset, policy, params, seed)?;
    Ok(sim::aggregate_trials(core::slice::from_ref(&trace)))
}

/// [`replay_policy`] without the single-trace aggregation: the raw
/// per-epoch record, for bitwise comparison against online runs.
///
/// # Errors
///
/// Same contract as [`replay_policy`].
pub fn replay_trial(
    dataset: &ReplayDataset,
    policy: &PolicySpec,
    params: &[ChainParams],
    seed: u64,
) -> Result<TrialTrace, ReplayError> {
    let arm_count = dataset.arm_count();
    if params.len() != arm_count {
        return Err(ReplayError::ParamCountMismatch { params: params.len(), arms: arm_count });
    }

    let arms: Vec<ArmConfig> = dataset
        .traces
        .iter()
        .zip(params)
        .map(|(trace, &p)| {
            let spec = EnsembleSpec::new(p, trace.n_processes())
                .expect("validated parameters and a positive ensemble size");
            ArmConfig::finite(trace.arm_id(), spec)
        })
        .collect();

    let tree = SeedTree::new(seed);
    let policy_params = policy.params();
    let mut beliefs: Vec<BeliefState> = (0..arm_count)
        .map(|_| BeliefState::discrete(0, 0).expect("zero state is valid"))
        .collect();
    let mut stats = vec![BaselineStats::new(); arm_count];
    let mut builder = sim::TraceBuilder::new(dataset.epochs(), arm_count, false);

    for epoch in 0..dataset.epochs() {
        for belief in beliefs.iter_mut() {
            *belief = belief.update_unselected(1.0)?;
        }
        let counts: Vec<u32> =
            dataset.traces.iter().map(|t| t.counts()[epoch]).collect();

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
            0,
            epoch as u64,
            sim::policy_ordinal(policy.policy()),
        );
        let decision = policy::select(
            policy.policy(),
            &views,
            epoch as u64,
            policy.top_l(),
            &policy_params,
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
        builder.push_epoch(&counts, reward, policy.top_l());
    }

    Ok(builder.finish())
}

/// Shape of a generated stand-in dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    /// Number of arms (wells).
    pub arms: u32,
    /// Number of recorded epochs.
    pub epochs: u64,
    /// Processes (grid cells) per arm.
    pub n_processes: u32,
    /// Root seed for parameters and sample paths.
    pub seed: u64,
}

impl SyntheticConfig {
    /// The default stand-in shape: a 96-well plate recorded hourly for
    /// 240 epochs, 22 500 grid cells per well.
    pub fn new(seed: u64) -> Self {
        Self { arms: 96, epochs: 240, n_processes: 22_500, seed }
    }
}

/// Generates a synthetic dataset with the shape of a multi-well
/// microscopy recording, returning the dataset and the true per-arm
/// parameters that produced it.
///
/// Arms share nearly identical long-run activity (stationary occupancy
/// drawn between 29.5% and 30.5%) but differ widely in how fast they mix
/// (activation plus deactivation rates log-uniform between 0.001 and 0.5
/// per epoch). Ranking arms therefore hinges on tracking transient
/// deviations and knowing how long each arm's deviations persist — the
/// regime where belief-aware index policies separate from uninformed
/// baselines. Counts evolve by the exact aggregate law from a stationary
/// start.
///
/// # Panics
///
/// Panics unless `arms`, `epochs`, and `n_processes` are all positive.
pub fn generate_synthetic(config: &SyntheticConfig) -> (ReplayDataset, Vec<ChainParams>) {
    assert!(
        config.arms >= 1 && config.epochs >= 1 && config.n_processes >= 1,
        "the synthetic shape must be non-empty"
    );
    let tree = SeedTree::new(config.seed);
    let timestamps: Vec<f64> = (0..config.epochs).map(|h| h as f64).collect();

    let mut traces = Vec::with_capacity(config.arms as usize);
    let mut truth = Vec::with_capacity(config.arms as usize);
    for arm in 0..config.arms {
        let mut param_rng = tree.stream(Domain::Synthetic, u64::from(arm), 0, 0);
        let occupancy = param_rng.gen_range(0.295..0.305);
        let speed = fmath::exp(param_rng.gen_range(fmath::ln(0.001)..fmath::ln(0.5)));
        let params = ChainParams::new(occupancy * speed, (1.0 - occupancy) * speed)
            .expect("sub-unit products of sub-unit factors are valid probabilities");
        let spec = EnsembleSpec::new(params, config.n_processes)
            .expect("positive ensemble size");

        let mut path_rng = tree.stream(Domain::Synthetic, u64::from(arm), 1, 0);
        let mut active = Binomial::new(u64::from(config.n_processes), occupancy)
            .expect("occupancy is a probability")
            .sample(&mut path_rng) as u32;
        let mut counts = Vec::with_capacity(config.epochs as usize);
        for _ in 0..config.epochs {
            counts.push(active);
            active = ensemble::sample_count_step(&spec, active, &mut path_rng);
        }

        traces.push(
            ActivityTrace::new(arm, timestamps.clone(), counts, config.n_processes)
                .expect("generated traces satisfy their own invariants"),
        );
        truth.push(params);
    }

    let meta = DatasetMeta {
        source: String::from("synthetic well-plate generator"),
        units: String::from("active grid cells"),
    };
    let dataset = ReplayDataset::new(traces, meta).expect("generated arms share one grid");
    (dataset, truth)
}
