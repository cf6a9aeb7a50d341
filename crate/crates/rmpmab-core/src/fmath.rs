//! Float math shims and the handful of special functions the crate needs.
//!
//! The crate builds without `std`, where `f64` has no method-based math API,
//! so every transcendental call is routed through here: with the `std`
//! feature the intrinsics are used, without it the `libm` ports are. The
//! log-gamma function always comes from `libm` (it has no stable `std`
//! counterpart).
//!
//! Beyond the shims this module provides:
//!
//! - [`signed_pow`]: `x^m` for possibly huge integer exponents, stable for
//!   `|x| < 1` where naive repeated multiplication would be slow and
//!   `f64::powi` would overflow the `i32` exponent;
//! - [`ln_binomial`]: log binomial coefficients via log-gamma;
//! - [`log_sum_exp`]: numerically stable summation of log-space masses.

// ── std/no_std intrinsic routing ─────────────────────────────────────────

macro_rules! shim {
    ($(#[$doc:meta] $name:ident => $libm:ident),+ $(,)?) => {
        $(
            #[$doc]
            #[inline(always)]
            pub fn $name(x: f64) -> f64 {
                #[cfg(feature = "std")]
                return x.$name();
                #[cfg(not(feature = "std"))]
                return libm::$libm(x);
            }
        )+
    };
}

shim! {
    /// `e^x`.
    exp => exp,
    /// Natural logarithm.
    ln => log,
    /// `ln(1 + x)`, accurate near zero.
    ln_1p => log1p,
    /// `e^x − 1`, accurate near zero.
    exp_m1 => expm1,
    /// Square root.
    sqrt => sqrt,
    /// Absolute value.
    abs => fabs,
    /// Largest integer ≤ x.
    floor => floor,
    /// Smallest integer ≥ x.
    ceil => ceil,
}

/// Rounds to the nearest integer, ties to the nearest even integer
/// (bankers' rounding).
#[inline(always)]
pub fn round_ties_even(x: f64) -> f64 {
    #[cfg(feature = "std")]
    return x.round_ties_even();
    #[cfg(not(feature = "std"))]
    return libm::rint(x);
}

/// Natural log of the gamma function, `ln Γ(x)` for `x > 0`.
#[inline(always)]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

// ── Powers with unbounded integer exponents ──────────────────────────────

/// `base^m` for a nonnegative integer exponent of any size.
///
/// Exact binary exponentiation is used for small exponents; past 64 squarings
/// the result of a base in `(−1, 1)` is far below any tolerance used in this
/// crate, and the magnitude is computed as `exp(m·ln|base|)` with the sign
/// restored from the exponent's parity. Delay counters can reach `2^32`, far
/// beyond `f64::powi`'s `i32` exponent.
pub fn signed_pow(base: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if base == 0.0 {
        return 0.0;
    }
    if m <= 64 {
        let mut acc = 1.0;
        let mut b = base;
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                acc *= b;
            }
            b *= b;
            e >>= 1;
        }
        return acc;
    }
    let magnitude = exp(m as f64 * ln(abs(base)));
    if base < 0.0 && m & 1 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

// ── Combinatorics and log-space accumulation ─────────────────────────────

/// `ln C(n, k)`: log of the binomial coefficient.
///
/// Returns negative infinity when `k > n`, matching a zero coefficient.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

/// Log of a sum of exponentials: `ln Σ exp(terms[i])`.
///
/// Stable under large negative magnitudes; an empty slice or all-`−∞` input
/// yields `−∞` (an empty sum).
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &t in terms {
        if t > max {
            max = t;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for &t in terms {
        sum += exp(t - max);
    }
    max + ln(sum)
}
