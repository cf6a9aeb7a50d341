//! Exact algebra of a single two-state discrete-time Markov chain.
//!
//! Each process occupies state `0` (inactive) or state `1` (active). With
//! activation probability `alpha` (0 → 1 per step) and deactivation
//! probability `beta` (1 → 0 per step), the one-step transition matrix is
//! column-stochastic:
//!
//! ```text
//!     P = | 1 - alpha    beta     |
//!         |   alpha     1 - beta  |
//! ```
//!
//! Column `j` is the source state and row `i` the destination, so the state
//! distribution evolves as a column vector: `next = P * current`. Because
//! the chain has only two states, every power of `P` has a closed form
//! driven by the decay factor `r = 1 - alpha - beta`:
//!
//! ```text
//!     P^m = 1/(alpha + beta) * | beta + alpha r^m    beta - beta r^m |
//!                              | alpha - alpha r^m   alpha + beta r^m |
//! ```
//!
//! This module provides that closed form, the stationary distribution, the
//! pair of reactivation probabilities `(q_m, p_m)` used throughout the
//! belief and policy layers, and the discretization of continuous-time
//! rates into per-step probabilities. Requiring `alpha, beta ∈ (0, 1)`
//! keeps `|r| < 1`, so the chain is ergodic and every closed form here is
//! well defined.

use core::fmt;

use crate::fmath;

/// Errors from chain-parameter validation and rate discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainError {
    /// A transition probability lay outside the open interval `(0, 1)`.
    ///
    /// Values of exactly 0 or 1 are rejected rather than clamped: they
    /// break ergodicity, and the closed forms in this module rely on
    /// `|1 - alpha - beta| < 1`.
    ProbabilityOutOfRange {
        /// Which parameter was rejected (`"alpha"` or `"beta"`).
        name: &'static str,
        /// The offending value.
        value: f64,
    },
    /// A continuous-time rate was zero, negative, or non-finite.
    RateOutOfRange {
        /// Which rate was rejected (`"alpha_bar"` or `"beta_bar"`).
        name: &'static str,
        /// The offending value.
        value: f64,
    },
    /// A discretization step was zero, negative, or non-finite.
    StepOutOfRange {
        /// The offending step length.
        dt: f64,
    },
    /// Discretizing rates produced a per-step probability at or above 1;
    /// the step is too coarse for the given rates.
    StepTooLarge {
        /// Activation probability implied by the step.
        alpha: f64,
        /// Deactivation probability implied by the step.
        beta: f64,
    },
    /// An ensemble size of zero was supplied where at least one process is
    /// required.
    ZeroProcesses,
}

impl fmt::Display for ChainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainError::ProbabilityOutOfRange { name, value } => {
                write!(f, "{name} = {value} is outside the open interval (0, 1)")
            }
            ChainError::RateOutOfRange { name, value } => {
                write!(f, "{name} = {value} must be finite and strictly positive")
            }
            ChainError::StepOutOfRange { dt } => {
                write!(f, "step length dt = {dt} must be finite and strictly positive")
            }
            ChainError::StepTooLarge { alpha, beta } => write!(
                f,
                "step too coarse: implied probabilities alpha = {alpha}, beta = {beta} \
                 must both stay below 1"
            ),
            ChainError::ZeroProcesses => write!(f, "ensemble must contain at least one process"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChainError {}

/// Validated per-step transition parameters of one two-state chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    alpha: f64,
    beta: f64,
}

impl ChainParams {
    /// Builds parameters, requiring both probabilities to lie strictly
    /// inside `(0, 1)`.
    ///
    /// # Errors
    ///
    /// Returns [`ChainError::ProbabilityOutOfRange`] if either parameter is
    /// not strictly inside `(0, 1)`; NaN is rejected by the same check.
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ChainError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ChainError::ProbabilityOutOfRange { name: "alpha", value: alpha });
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(ChainError::ProbabilityOutOfRange { name: "beta", value: beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Activation probability: state 0 → 1 in one step.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Deactivation probability: state 1 → 0 in one step.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Geometric decay factor `r = 1 - alpha - beta`; valid parameters
    /// guarantee `|r| < 1`. Negative values (heavy flipping chains) are
    /// legitimate and handled throughout.
    pub fn decay(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

/// Continuous-time rates: an aggregate activation rate `alpha_bar` shared by
/// the whole ensemble and a per-process deactivation rate `beta_bar`.
///
/// The aggregate convention means that in an ensemble of `n` processes each
/// individual process activates at rate `alpha_bar / n`, which keeps the
/// expected number of active processes stable as `n` grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    alpha_bar: f64,
    beta_bar: f64,
}

impl RateParams {
    /// Builds rate parameters, requiring both rates to be finite and
    /// strictly positive.
    ///
    /// # Errors
    ///
    /// Returns [`ChainError::RateOutOfRange`] on a zero, negative, or
    /// non-finite rate.
    pub fn new(alpha_bar: f64, beta_bar: f64) -> Result<Self, ChainError> {
        if !(alpha_bar > 0.0 && alpha_bar.is_finite()) {
            return Err(ChainError::RateOutOfRange { name: "alpha_bar", value: alpha_bar });
        }
        if !(beta_bar > 0.0 && beta_bar.is_finite()) {
            return Err(ChainError::RateOutOfRange { name: "beta_bar", value: beta_bar });
        }
        Ok(Self { alpha_bar, beta_bar })
    }

    /// Aggregate activation rate of the whole ensemble.
    pub fn alpha_bar(&self) -> f64 {
        self.alpha_bar
    }

    /// Deactivation rate of each individual process.
    pub fn beta_bar(&self) -> f64 {
        self.beta_bar
    }
}

/// A dense 2×2 real matrix.
///
/// Stochastic instances follow the column convention of this module (column
/// = source state, columns sum to 1), but the type also carries
/// non-stochastic values such as continuous-time generators, whose columns
/// sum to 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwoMatrix {
    entries: [[f64; 2]; 2],
}

impl TwoByTwoMatrix {
    /// Builds a matrix from row-major entries: `entries[row][col]`.
    pub const fn new(entries: [[f64; 2]; 2]) -> Self {
        Self { entries }
    }

    /// The identity matrix.
    pub const fn identity() -> Self {
        Self::new([[1.0, 0.0], [0.0, 1.0]])
    }

    /// Entry at `(row, col)`; rows are destination states, columns source
    /// states.
    ///
    /// # Panics
    ///
    /// Panics if either index exceeds 1.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    /// Row-major view of all four entries.
    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self::new(out)
    }

    /// Matrix–vector product `self * v` with `v` a column vector.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.entries[0][0] * v[0] + self.entries[0][1] * v[1],
            self.entries[1][0] * v[0] + self.entries[1][1] * v[1],
        ]
    }

    /// Entrywise scaling `s * self`.
    pub fn scaled(&self, s: f64) -> Self {
        let e = &self.entries;
        Self::new([[s * e[0][0], s * e[0][1]], [s * e[1][0], s * e[1][1]]])
    }

    /// Entrywise sum `self + rhs`.
    pub fn plus(&self, rhs: &Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        Self::new([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }

    /// Sums of the two columns; 1 for stochastic matrices, 0 for
    /// generators.
    pub fn column_sums(&self) -> [f64; 2] {
        [
            self.entries[0][0] + self.entries[1][0],
            self.entries[0][1] + self.entries[1][1],
        ]
    }

    /// Largest absolute entrywise difference from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max(fmath::abs(self.entries[i][j] - other.entries[i][j]));
            }
        }
        worst
    }
}

/// One-step transition matrix `[[1 - alpha, beta], [alpha, 1 - beta]]`.
pub fn transition_matrix(params: &ChainParams) -> TwoByTwoMatrix {
    let a = params.alpha();
    let b = params.beta();
    TwoByTwoMatrix::new([[1.0 - a, b], [a, 1.0 - b]])
}

/// m-step transition matrix, evaluated in closed form.
///
/// The closed form (see the module docs) needs one division by
/// `alpha + beta` and one evaluation of `r^m`; the latter goes through
/// [`fmath::signed_pow`] so that very large `m` neither underflows into
/// denormals nor loses the sign of a negative decay factor. `m = 0` yields
/// the identity and `m = 1` the one-step matrix, up to rounding.
pub fn m_step_matrix(params: &ChainParams, m: u64) -> TwoByTwoMatrix {
    let a = params.alpha();
    let b = params.beta();
    let s = a + b;
    let rm = fmath::signed_pow(params.decay(), m);
    TwoByTwoMatrix::new([
        [(b + a * rm) / s, (b - b * rm) / s],
        [(a - a * rm) / s, (a + b * rm) / s],
    ])
}

/// Stationary distribution `(pi_0, pi_1) = (beta, alpha) / (alpha + beta)`.
///
/// Both components are positive and sum to 1; the chain converges to this
/// distribution from any start because `|r| < 1`.
pub fn stationary_distribution(params: &ChainParams) -> (f64, f64) {
    let a = params.alpha();
    let b = params.beta();
    let s = a + b;
    (b / s, a / s)
}

/// Reactivation probabilities after `m` steps.
///
/// Returns `(q_m, p_m)` where `q_m` is the probability that a currently
/// active process is active `m` steps later and `p_m` the same probability
/// for a currently inactive process — the `(1,1)` and `(1,0)` entries of
/// the m-step matrix:
///
/// ```text
///     q_m = (alpha + beta  * r^m) / (alpha + beta)
///     p_m = (alpha - alpha * r^m) / (alpha + beta)
/// ```
///
/// Both results are clamped to `[0, 1]` as a guard against the final
/// floating-point rounding step; the exact values are probabilities by
/// construction. As `m → ∞` both converge to the stationary active mass
/// `alpha / (alpha + beta)`.
pub fn qm_pm(params: &ChainParams, m: u64) -> (f64, f64) {
    let a = params.alpha();
    let b = params.beta();
    let s = a + b;
    let rm = fmath::signed_pow(params.decay(), m);
    let q = (a + b * rm) / s;
    let p = (a - a * rm) / s;
    (q.clamp(0.0, 1.0), p.clamp(0.0, 1.0))
}

/// Converts continuous-time rates into per-step transition probabilities
/// for an ensemble of `n_processes` observed every `dt` time units.
///
/// The aggregate activation rate spreads across the ensemble
/// (`alpha = alpha_bar * dt / n`) while deactivation applies per process
/// (`beta = beta_bar * dt`), the first-order expansion of the exact
/// exponential step. The approximation error is `O(dt)`, so halving the
/// step halves the gap to the continuous-time law.
///
/// # Errors
///
/// - [`ChainError::StepOutOfRange`] if `dt` is zero, negative, or
///   non-finite.
/// - [`ChainError::ZeroProcesses`] if `n_processes` is 0.
/// - [`ChainError::StepTooLarge`] if either implied probability reaches 1.
pub fn discretize_rates(
    rates: &RateParams,
    n_processes: u32,
    dt: f64,
) -> Result<ChainParams, ChainError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ChainError::StepOutOfRange { dt });
    }
    if n_processes == 0 {
        return Err(ChainError::ZeroProcesses);
    }
    let alpha = rates.alpha_bar() * dt / f64::from(n_processes);
    let beta = rates.beta_bar() * dt;
    if !(alpha < 1.0 && beta < 1.0) {
        return Err(ChainError::StepTooLarge { alpha, beta });
    }
    ChainParams::new(alpha, beta)
}
