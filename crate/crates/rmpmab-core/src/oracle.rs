//! Independent numerical certification of the closed-form index.
//!
//! The index in [`crate::policy`] is a closed-form expression. This module
//! re-derives its values through a completely different computational
//! path so the two can be compared: a single-arm Markov decision process
//! over belief states `(j, m)` in which a per-step subsidy `λ` is paid
//! whenever the arm is left unobserved. Observing resets the belief to
//! `(y, 0)` using the exact conditional count law from
//! [`crate::ensemble`]; skipping ages it to `(j, m+1)` and collects the
//! subsidy.
//!
//! Two solvers live here:
//!
//! - [`value_iteration`] finds the optimal value table of the subsidized
//!   process (the full Bellman maximization). Sweeping the subsidy
//!   exposes the structural property the index relies on: each state
//!   flips from observe to skip exactly once as the subsidy grows.
//! - [`indifference_subsidy`] locates, by bisection, the subsidy at which
//!   observing now and observing one step later break even when all
//!   downstream play keeps observing — the reference evaluation whose
//!   break-even point the closed form expresses. Its fresh-observation
//!   value solves `V(y, 0) = y + γ·V(y, 0)` numerically; nothing is
//!   shared with the closed-form implementation.
//!
//! The delay axis is truncated at a configurable `M`; past `M` the belief
//! is effectively stationary (the transient decays geometrically), and
//! the skip action self-loops there.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ensemble::{self, CountDistribution, EnsembleError, EnsembleSpec};
use crate::fmath;

/// Transient threshold used by automatic delay truncation: `M` is the
/// smallest delay with `|decay|^M` below this.
pub const AUTO_TRUNCATION_DECAY: f64 = 1e-12;

/// Largest delay truncation the automatic rule will build.
pub const MAX_AUTO_DELAY: u32 = 65_536;

/// Iteration cap of the fixed-point solvers.
const MAX_SWEEPS: u32 = 500_000;

/// Iteration cap of the subsidy bisection (including bracket expansion).
const MAX_BISECTION_STEPS: u32 = 10_000;

/// Errors from the certification solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    /// The delay truncation must be at least 1.
    InvalidTruncation {
        /// The rejected truncation.
        max_delay: u32,
    },
    /// Automatic truncation would exceed [`MAX_AUTO_DELAY`]; pick an
    /// explicit truncation for arms this slow to mix.
    TruncationTooLarge {
        /// The delay the automatic rule asked for.
        required: u64,
    },
    /// The discount must lie in `[0, 1)`.
    DegenerateDiscount {
        /// The rejected discount.
        gamma: f64,
    },
    /// The queried state lies outside the truncated state space.
    StateOutsideTruncation {
        /// Queried observation.
        observed: u32,
        /// Queried delay.
        delay: u32,
        /// Ensemble size bound on observations.
        n_processes: u32,
        /// Truncation bound on delays.
        max_delay: u32,
    },
    /// A fixed-point solve did not converge within the iteration cap.
    NoConvergence {
        /// Sweeps performed before giving up.
        sweeps: u32,
    },
    /// The subsidy bisection could not bracket a sign change.
    BracketFailure {
        /// Final lower end.
        low: f64,
        /// Final upper end.
        high: f64,
    },
    /// An ensemble computation failed.
    Ensemble(EnsembleError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::InvalidTruncation { max_delay } => {
                write!(f, "delay truncation {max_delay} must be at least 1")
            }
            OracleError::TruncationTooLarge { required } => {
                write!(
                    f,
                    "automatic truncation needs {required} delay states (cap {MAX_AUTO_DELAY}); \
                     supply an explicit truncation"
                )
            }
            OracleError::DegenerateDiscount { gamma } => {
                write!(f, "discount {gamma} must lie in [0, 1)")
            }
            OracleError::StateOutsideTruncation { observed, delay, n_processes, max_delay } => {
                write!(
                    f,
                    "state ({observed}, {delay}) lies outside the truncated space \
                     (observations up to {n_processes}, delays up to {max_delay})"
                )
            }
            OracleError::NoConvergence { sweeps } => {
                write!(f, "fixed point not reached after {sweeps} sweeps")
            }
            OracleError::BracketFailure { low, high } => {
                write!(f, "no subsidy sign change inside [{low}, {high}]")
            }
            OracleError::Ensemble(e) => write!(f, "ensemble computation failed: {e}"),
        }
    }
}

impl From<EnsembleError> for OracleError {
    fn from(e: EnsembleError) -> Self {
        OracleError::Ensemble(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OracleError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            OracleError::Ensemble(e) => Some(e),
            _ => None,
        }
    }
}

/// The action available at each belief state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmAction {
    /// Skip the arm and collect the subsidy; the belief ages.
    Passive,
    /// Observe the arm; the belief resets to the fresh observation.
    Active,
}

/// The subsidized single-arm decision process over belief states
/// `(j, m)` with `0 ≤ j ≤ N` and `0 ≤ m ≤ M`.
///
/// At `(j, m)` the active action collects the expected count and resets
/// to `(y, 0)` with `y` drawn from the exact conditional law; the passive
/// action collects the subsidy and ages the belief to `(j, min(m+1, M))`.
/// The conditional laws and their expectations are precomputed at
/// construction.
#[derive(Debug, Clone)]
pub struct TruncatedArmMdp {
    spec: EnsembleSpec,
    max_delay: u32,
    gamma: f64,
    pmf: Vec<CountDistribution>,
    mean: Vec<f64>,
}

impl TruncatedArmMdp {
    /// Builds the truncated process with an explicit delay cap.
    ///
    /// # Errors
    ///
    /// [`OracleError::InvalidTruncation`] for `max_delay = 0`,
    /// [`OracleError::DegenerateDiscount`] for `gamma` outside `[0, 1)`,
    /// and any ensemble error from the conditional laws.
    pub fn new(spec: EnsembleSpec, max_delay: u32, gamma: f64) -> Result<Self, OracleError> {
        if max_delay == 0 {
            return Err(OracleError::InvalidTruncation { max_delay });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(OracleError::DegenerateDiscount { gamma });
        }
        let n = spec.n_processes();
        let states = (n as usize + 1) * (max_delay as usize + 1);
        let mut pmf = Vec::with_capacity(states);
        let mut mean = Vec::with_capacity(states);
        for m in 0..=max_delay {
            for j in 0..=n {
                let law = ensemble::conditional_pmf(&spec, j, u64::from(m))?;
                mean.push(law.mean());
                pmf.push(law);
            }
        }
        Ok(Self { spec, max_delay, gamma, pmf, mean })
    }

    /// Builds the process with the delay cap chosen so the belief
    /// transient has decayed below [`AUTO_TRUNCATION_DECAY`].
    ///
    /// # Errors
    ///
    /// [`OracleError::TruncationTooLarge`] when that cap would exceed
    /// [`MAX_AUTO_DELAY`], plus the errors of [`TruncatedArmMdp::new`].
    pub fn with_auto_truncation(spec: EnsembleSpec, gamma: f64) -> Result<Self, OracleError> {
        let decay = fmath::abs(spec.params().decay());
        let max_delay = if decay == 0.0 {
            1
        } else {
            let required = fmath::ceil(fmath::ln(AUTO_TRUNCATION_DECAY) / fmath::ln(decay));
            if !(required <= f64::from(MAX_AUTO_DELAY)) {
                return Err(OracleError::TruncationTooLarge { required: required as u64 });
            }
            (required as u32).max(1)
        };
        Self::new(spec, max_delay, gamma)
    }

    /// The arm the process certifies.
    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// The delay truncation `M`.
    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }

    /// The discount factor.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn n(&self) -> u32 {
        self.spec.n_processes()
    }

    /// Row-major state index with the delay as the slow axis, so the
    /// fresh-observation row `m = 0` is contiguous.
    fn idx(&self, j: u32, m: u32) -> usize {
        m as usize * (self.n() as usize + 1) + j as usize
    }

    fn check_state(&self, j: u32, m: u32) -> Result<(), OracleError> {
        if j > self.n() || m > self.max_delay {
            return Err(OracleError::StateOutsideTruncation {
                observed: j,
                delay: m,
                n_processes: self.n(),
                max_delay: self.max_delay,
            });
        }
        Ok(())
    }

    /// Expected fresh-reset continuation: `Σ_y P(y | j, m) · row0[y]`.
    fn reset_continuation(&self, j: u32, m: u32, row0: &[f64]) -> f64 {
        let law = &self.pmf[self.idx(j, m)];
        let offset = law.support_offset() as usize;
        law.probabilities()
            .iter()
            .enumerate()
            .map(|(k, &p)| p * row0[offset + k])
            .sum()
    }

    /// Value of observing at `(j, m)` given fresh-observation values.
    fn active_value(&self, j: u32, m: u32, row0: &[f64]) -> f64 {
        self.mean[self.idx(j, m)] + self.gamma * self.reset_continuation(j, m, row0)
    }

    /// Stopping threshold of the standard contraction rule: a sweep gap
    /// below `tol·(1−γ)/γ` certifies a sup-norm error below `tol`.
    fn sweep_threshold(&self, tol: f64) -> f64 {
        if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            tol * (1.0 - self.gamma) / self.gamma
        }
    }
}

/// A solved value table over the truncated state space.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n_processes: u32,
    max_delay: u32,
    values: Vec<f64>,
    actions: Vec<ArmAction>,
}

impl ValueTable {
    fn idx(&self, j: u32, m: u32) -> usize {
        assert!(
            j <= self.n_processes && m <= self.max_delay,
            "state ({j}, {m}) outside the table"
        );
        m as usize * (self.n_processes as usize + 1) + j as usize
    }

    /// Value at state `(j, m)`.
    ///
    /// # Panics
    ///
    /// Panics if the state lies outside the table.
    pub fn value(&self, j: u32, m: u32) -> f64 {
        self.values[self.idx(j, m)]
    }

    /// Maximizing action at state `(j, m)`.
    ///
    /// # Panics
    ///
    /// Panics if the state lies outside the table.
    pub fn action(&self, j: u32, m: u32) -> ArmAction {
        self.actions[self.idx(j, m)]
    }

    /// Largest observation in the table.
    pub fn n_processes(&self) -> u32 {
        self.n_processes
    }

    /// Largest delay in the table.
    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }
}

/// Solves the subsidized process at subsidy `lambda` by value iteration.
///
/// Sweeps the Bellman maximization until successive iterates differ by at
/// most `tol·(1−γ)/γ` in sup norm, which certifies a sup-norm distance
/// below `tol` from the true fixed point; the returned table's own
/// Bellman residual is below `tol·(1−γ)`.
///
/// # Panics
///
/// Panics unless `tol > 0`.
///
/// # Errors
///
/// [`OracleError::NoConvergence`] if the iteration cap is hit.
pub fn value_iteration(
    mdp: &TruncatedArmMdp,
    lambda: f64,
    tol: f64,
) -> Result<ValueTable, OracleError> {
    assert!(tol > 0.0, "tolerance must be positive, got {tol}");
    let n = mdp.n();
    let m_cap = mdp.max_delay;
    let states = (n as usize + 1) * (m_cap as usize + 1);
    let threshold = mdp.sweep_threshold(tol);

    let mut current = vec![0.0f64; states];
    let mut next = vec![0.0f64; states];
    let mut sweeps = 0u32;
    loop {
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(OracleError::NoConvergence { sweeps: MAX_SWEEPS });
        }
        let row0 = &current[..n as usize + 1];
        let mut gap = 0.0f64;
        for m in 0..=m_cap {
            // Skipping ages the belief; at the truncation edge it stays put.
            let aged = if m == m_cap { m_cap } else { m + 1 };
            for j in 0..=n {
                let passive = lambda + mdp.gamma * current[mdp.idx(j, aged)];
                let active = mdp.active_value(j, m, row0);
                let value = if active > passive { active } else { passive };
                let i = mdp.idx(j, m);
                gap = gap.max(fmath::abs(value - current[i]));
                next[i] = value;
            }
        }
        core::mem::swap(&mut current, &mut next);
        if gap <= threshold {
            break;
        }
    }

    // Extract the maximizing actions from the converged values.
    let mut actions = vec![ArmAction::Passive; states];
    let row0 = &current[..n as usize + 1];
    for m in 0..=m_cap {
        let aged_row = if m == m_cap { m_cap } else { m + 1 };
        for j in 0..=n {
            let passive = lambda + mdp.gamma * current[mdp.idx(j, aged_row)];
            let active = mdp.active_value(j, m, row0);
            actions[mdp.idx(j, m)] = if active > passive {
                ArmAction::Active
            } else {
                ArmAction::Passive
            };
        }
    }

    Ok(ValueTable { n_processes: n, max_delay: m_cap, values: current, actions })
}

/// Sup-norm Bellman residual of a table at subsidy `lambda`: how far the
/// table is from being a fixed point of one more sweep.
pub fn bellman_residual(mdp: &TruncatedArmMdp, table: &ValueTable, lambda: f64) -> f64 {
    let n = mdp.n();
    let m_cap = mdp.max_delay;
    let row0: Vec<f64> = (0..=n).map(|j| table.value(j, 0)).collect();
    let mut residual = 0.0f64;
    for m in 0..=m_cap {
        let aged = if m == m_cap { m_cap } else { m + 1 };
        for j in 0..=n {
            let passive = lambda + mdp.gamma * table.value(j, aged);
            let active = mdp.active_value(j, m, &row0);
            let value = if active > passive { active } else { passive };
            residual = residual.max(fmath::abs(value - table.value(j, m)));
        }
    }
    residual
}

/// Value table of the always-observe reference policy, solved
/// numerically: fresh-observation values satisfy `V(y, 0) = y + γ·V(y, 0)`
/// (a fresh observation repeats until the belief ages, which never
/// happens under always-observe), and every aged state observes once and
/// resets.
///
/// This is the evaluation whose break-even subsidy the closed-form index
/// expresses; [`indifference_subsidy`] bisects against it.
///
/// # Panics
///
/// Panics unless `tol > 0`.
///
/// # Errors
///
/// [`OracleError::NoConvergence`] if the iteration cap is hit.
pub fn reference_values(mdp: &TruncatedArmMdp, tol: f64) -> Result<ValueTable, OracleError> {
    assert!(tol > 0.0, "tolerance must be positive, got {tol}");
    let n = mdp.n();
    let m_cap = mdp.max_delay;
    let states = (n as usize + 1) * (m_cap as usize + 1);
    let threshold = mdp.sweep_threshold(tol);

    // The fresh-observation row is self-contained: iterate it alone.
    let mut row0 = vec![0.0f64; n as usize + 1];
    let mut sweeps = 0u32;
    loop {
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return Err(OracleError::NoConvergence { sweeps: MAX_SWEEPS });
        }
        let mut gap = 0.0f64;
        for j in 0..=n {
            let updated = mdp.active_value(j, 0, &row0);
            gap = gap.max(fmath::abs(updated - row0[j as usize]));
            row0[j as usize] = updated;
        }
        if gap <= threshold {
            break;
        }
    }

    // Aged states observe once and reset onto the fresh row.
    let mut values = vec![0.0f64; states];
    values[..n as usize + 1].copy_from_slice(&row0);
    for m in 1..=m_cap {
        for j in 0..=n {
            values[mdp.idx(j, m)] = mdp.active_value(j, m, &row0);
        }
    }

    Ok(ValueTable {
        n_processes: n,
        max_delay: m_cap,
        values,
        actions: vec![ArmAction::Active; states],
    })
}

/// The subsidy at which state `(j, m)` breaks even between observing now
/// and collecting the subsidy once before observing, with all downstream
/// play valued by the always-observe reference ([`reference_values`]).
///
/// Found by bisection on the branch gap
/// `g(λ) = [λ + γ·V_ref(j, m+1)] − V_ref(j, m)` until `|g| < tol`,
/// starting from the bracket `[min_j E[Y | j, 0] − 1, N + 1]` and
/// expanding it geometrically if the gap does not change sign inside.
///
/// # Panics
///
/// Panics unless `tol > 0`.
///
/// # Errors
///
/// [`OracleError::StateOutsideTruncation`] for states beyond the table,
/// [`OracleError::BracketFailure`] if no sign change is found, and
/// [`OracleError::NoConvergence`] from the reference solve.
pub fn indifference_subsidy(
    mdp: &TruncatedArmMdp,
    j: u32,
    m: u32,
    tol: f64,
) -> Result<f64, OracleError> {
    assert!(tol > 0.0, "tolerance must be positive, got {tol}");
    mdp.check_state(j, m)?;
    let reference = reference_values(mdp, tol / 8.0)?;

    let aged = m.min(mdp.max_delay - 1) + 1;
    let observe_now = reference.value(j, m);
    let observe_later = reference.value(j, aged);
    let gap = |lambda: f64| lambda + mdp.gamma * observe_later - observe_now;

    // Initial bracket: one-step rewards bound the index for mild
    // discounts; strong discounting can push it out, so expand on demand.
    let mut low = (0..=mdp.n())
        .map(|y| mdp.mean[mdp.idx(y, 0)])
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut high = f64::from(mdp.n()) + 1.0;
    let mut expansions = 0u32;
    while gap(low) > 0.0 || gap(high) < 0.0 {
        expansions += 1;
        if expansions > 64 {
            return Err(OracleError::BracketFailure { low, high });
        }
        let width = high - low;
        if gap(low) > 0.0 {
            low -= width;
        }
        if gap(high) < 0.0 {
            high += width;
        }
    }

    let mut steps = 0u32;
    loop {
        let mid = 0.5 * (low + high);
        let g = gap(mid);
        if fmath::abs(g) < tol {
            return Ok(mid);
        }
        steps += 1;
        if steps > MAX_BISECTION_STEPS {
            return Err(OracleError::BracketFailure { low, high });
        }
        if g < 0.0 {
            low = mid;
        } else {
            high = mid;
        }
    }
}

/// Least-squares affine fit of one delay row of a value table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    /// Fitted intercept.
    pub intercept: f64,
    /// Fitted slope in the observation.
    pub slope: f64,
    /// Euclidean norm of the fit residuals.
    pub residual: f64,
    /// Euclidean norm of the fitted row, for relative comparisons.
    pub row_norm: f64,
}

/// Fits `V(j, m) ≈ A + B·j` over `j = 0..N` for one delay row and reports
/// the fit along with its residual norm.
///
/// # Panics
///
/// Panics if `m` lies outside the table.
pub fn affine_check(table: &ValueTable, m: u32) -> AffineFit {
    let n = table.n_processes();
    let count = f64::from(n) + 1.0;
    let mean_j = f64::from(n) / 2.0;
    let mut mean_v = 0.0;
    for j in 0..=n {
        mean_v += table.value(j, m);
    }
    mean_v /= count;

    let mut covariance = 0.0;
    let mut variance_j = 0.0;
    for j in 0..=n {
        let dj = f64::from(j) - mean_j;
        covariance += dj * (table.value(j, m) - mean_v);
        variance_j += dj * dj;
    }
    let slope = if variance_j > 0.0 { covariance / variance_j } else { 0.0 };
    let intercept = mean_v - slope * mean_j;

    let mut residual_sq = 0.0;
    let mut norm_sq = 0.0;
    for j in 0..=n {
        let v = table.value(j, m);
        let fitted = intercept + slope * f64::from(j);
        residual_sq += (v - fitted) * (v - fitted);
        norm_sq += v * v;
    }
    AffineFit {
        intercept,
        slope,
        residual: fmath::sqrt(residual_sq),
        row_norm: fmath::sqrt(norm_sq),
    }
}

/// Checks empirical indexability: sweeping the subsidy upward over
/// `lambdas`, every state must switch from observe to skip at most once
/// and never switch back.
///
/// # Panics
///
/// Panics unless `lambdas` is non-empty and strictly increasing and
/// `tol > 0`.
///
/// # Errors
///
/// Propagates [`value_iteration`] failures.
pub fn passive_single_crossing(
    mdp: &TruncatedArmMdp,
    lambdas: &[f64],
    tol: f64,
) -> Result<bool, OracleError> {
    assert!(!lambdas.is_empty(), "subsidy sweep needs at least one value");
    assert!(
        lambdas.windows(2).all(|w| w[0] < w[1]),
        "subsidy sweep must be strictly increasing"
    );
    let n = mdp.n();
    let states = (n as usize + 1) * (mdp.max_delay as usize + 1);
    let mut became_passive = vec![false; states];
    for &lambda in lambdas {
        let table = value_iteration(mdp, lambda, tol)?;
        for m in 0..=mdp.max_delay {
            for j in 0..=n {
                let i = mdp.idx(j, m);
                match table.action(j, m) {
                    ArmAction::Passive => became_passive[i] = true,
                    ArmAction::Active => {
                        if became_passive[i] {
                            return Ok(false);
                        }
                    }
                }
            }
        }
    }
    Ok(true)
}
