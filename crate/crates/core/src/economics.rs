//! LSE savings and profit, customer value, local social welfare and reward
//! sweeps.

use alloc::string::String;
use alloc::vec::Vec;

use crate::actions::ActionTable;
use crate::dp::ValueFunction;
use crate::error::{Error, Result};
use crate::lottery::PopulationProfile;
use crate::population::SurplusDistribution;

/// Homes in the study cluster.
pub const CLUSTER_HOMES: f64 = 50.0;
/// Days in a decision period.
pub const DAYS_PER_PERIOD: f64 = 7.0;

/// Weekly LSE savings in dollars: `homes * days * sum_a rho_a s_a / 100`.
pub fn cluster_savings(rho: &PopulationProfile, actions: &ActionTable, homes: f64, days: f64) -> Result<f64> {
    if rho.len() != actions.len() {
        return Err(Error::Mismatch { what: "action count", left: rho.len(), right: actions.len() });
    }
    let per_day: f64 = rho.as_slice().iter().zip(actions.savings_cents()).map(|(r, s)| r * s).sum();
    Ok(homes * days * per_day / 100.0)
}

/// `E_zeta[V]`.
pub fn expected_customer_value(zeta: &SurplusDistribution, value: &ValueFunction) -> Result<f64> {
    if zeta.len() != value.len() {
        return Err(Error::Mismatch { what: "grid states", left: zeta.len(), right: value.len() });
    }
    Ok(zeta.as_slice().iter().zip(value.as_slice()).map(|(z, v)| z * v).sum())
}

/// Local social welfare: `cluster_size * E[V] + profit`.
pub fn lsw(expected_value: f64, profit: f64, cluster_size: f64) -> f64 {
    cluster_size * expected_value + profit
}

/// Incentive scheme of a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Lottery,
    Benchmark,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Lottery => "lottery",
            Scheme::Benchmark => "benchmark",
        }
    }
}

/// One solved reward level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub reward: f64,
    pub scheme: Scheme,
    pub rho: PopulationProfile,
    pub savings: f64,
    pub profit: f64,
    pub expected_value: f64,
    pub lsw: f64,
}

impl SweepPoint {
    /// Fills in profit and welfare from the solved quantities.
    pub fn new(
        reward: f64,
        scheme: Scheme,
        rho: PopulationProfile,
        savings: f64,
        expected_value: f64,
        cluster_size: f64,
    ) -> Self {
        let profit = savings - reward;
        Self { reward, scheme, rho, savings, profit, expected_value, lsw: lsw(expected_value, profit, cluster_size) }
    }
}

/// Result of one sweep: solved points in reward order plus failures.
#[derive(Debug, Clone, Default)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    pub failures: Vec<(f64, String)>,
}

/// Runs `solve` at every reward, keeping failures rather than aborting.
pub fn sweep<F>(rewards: &[f64], mut solve: F) -> Sweep
where
    F: FnMut(f64) -> Result<SweepPoint>,
{
    let mut out = Sweep::default();
    for &r in rewards {
        match solve(r) {
            Ok(p) => out.points.push(p),
            Err(e) => out.failures.push((r, alloc::format!("{e}"))),
        }
    }
    out.points.sort_by(|a, b| a.reward.total_cmp(&b.reward));
    out
}

/// Reward with the largest profit (first one on ties).
pub fn argmax_profit(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points.iter().fold(None, |best: Option<&SweepPoint>, p| match best {
        Some(b) if b.profit >= p.profit => Some(b),
        _ => Some(p),
    })
}

/// First reward at which profit reaches zero, interpolated linearly
/// between the bracketing sweep points.
pub fn break_even(points: &[SweepPoint]) -> Option<f64> {
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.profit <= 0.0 {
            return Some(a.reward);
        }
        if b.profit <= 0.0 {
            return Some(a.reward + (b.reward - a.reward) * a.profit / (a.profit - b.profit));
        }
    }
    match points {
        [only] if only.profit <= 0.0 => Some(only.reward),
        _ => None,
    }
}

/// Points not dominated in (expected value, profit).
pub fn pareto_frontier(points: &[SweepPoint]) -> Vec<&SweepPoint> {
    points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                q.expected_value >= p.expected_value
                    && q.profit >= p.profit
                    && (q.expected_value > p.expected_value || q.profit > p.profit)
            })
        })
        .collect()
}
