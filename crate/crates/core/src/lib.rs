//! Mean field equilibria of a lottery-based incentive scheme.
//!
//! Agents with prospect-theoretic preferences pick a costly action each
//! period, earn coupons, and enter a `K`-winner Plackett-Luce lottery
//! against `M - 1` opponents drawn from the population profile. The crate
//! solves the agent's dynamic program, the induced surplus chain and the
//! fixed point over the population profile, and evaluates the resulting
//! economics for the air-conditioning study.
//!
//! The crate is `no_std` with `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod actions;
pub mod dp;
pub mod economics;
pub mod error;
pub mod grid;
pub mod lottery;
pub mod mfe;
pub mod population;
pub mod prospect;
pub mod thermal;

pub use actions::{Action, ActionTable};
pub use dp::{DecisionModel, Policy, ValueFunction};
pub use error::{Error, Result};
pub use grid::SurplusGrid;
pub use lottery::{CouponVector, LotteryConfig, PopulationProfile, WinProbabilityMethod};
pub use mfe::{solve_benchmark, solve_mfe, BenchmarkResult, MfeProblem, MfeResult, SolverSettings};
pub use population::{RegenerationDist, SurplusDistribution};
pub use prospect::{Prospect, ProspectParams};
