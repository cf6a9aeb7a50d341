//! Restless multi-process multi-armed bandits.
//!
//! Each arm is an ensemble of `N` independent two-state Markov chains; the
//! decision entity observes one arm per epoch and collects its active count
//! as reward while every other arm keeps evolving unobserved. This crate
//! provides the building blocks for that model end to end:
//!
//! - [`chain`]: single-chain transition algebra (closed-form m-step matrices,
//!   stationary law, rate discretization);
//! - [`ensemble`]: aggregate-count laws for an arm (exact binomial
//!   convolution, large-ensemble binomial ⊕ Poisson limits, samplers);
//! - [`belief`]: the per-arm sufficient statistic (last observation, delay)
//!   and full per-process belief propagation;
//! - [`policy`]: Whittle index formulas and the baseline selection policies;
//! - [`oracle`]: an independent value-iteration certification of the
//!   closed-form index;
//! - [`sim`]: the restless environment, strong-regret evaluation, and Monte
//!   Carlo aggregation;
//! - [`estimate`]: maximum-likelihood recovery of chain parameters from
//!   traces;
//! - [`replay`]: offline policy evaluation against recorded traces.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature (on by
//! default) only switches math intrinsics and enables nothing else.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod belief;
pub mod chain;
pub mod ensemble;
pub mod estimate;
pub mod fmath;
pub mod oracle;
pub mod policy;
pub mod replay;
pub mod rng;
pub mod sim;
