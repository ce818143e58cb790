//! Win probabilities in the K-winner sequential Plackett-Luce lottery.
//!
//! A cluster of `M` agents holds coupons; winners are drawn one at a time
//! with probability proportional to the coupons still in the urn, and each
//! winner leaves the urn. The mean field agent faces `M - 1` opponents whose
//! actions are drawn i.i.d. from a [`PopulationProfile`].
//!
//! Three routes compute the same quantity:
//!
//! * [`win_probabilities_exact`] enumerates every opponent profile and
//!   weights the round-by-round loss probability by its multinomial mass.
//! * [`win_probabilities_k1`] handles `K = 1` by convolving the opponents'
//!   coupon distribution on an integer lattice.
//! * [`win_probabilities_mc`] samples opponent profiles.

mod bounds;
mod convolution;
mod monte_carlo;
mod plackett_luce;
mod profiles;

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub use bounds::{bounds, WinBounds};
pub use convolution::{win_probabilities_k1, win_probability_k1};
pub use monte_carlo::{win_probabilities_mc, win_probability_mc, McEstimate};
pub use plackett_luce::{loss_probability, permutation_probability};
pub use profiles::{
    ln_multinomial_weight, profile_count, profile_weight, win_probabilities_exact,
    win_probability_exact, Profiles,
};

/// Exact enumeration is refused above this many opponent profiles.
pub const ENUMERATION_CAP: f64 = 1.0e7;

/// Tolerance used when validating simplex vectors.
pub(crate) const SIMPLEX_TOL: f64 = 1e-9;

/// Cluster size, winner count and the surplus increments of one lottery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LotteryConfig {
    /// Agents per lottery, `M >= 2`.
    pub cluster_size: usize,
    /// Winners per lottery, `1 <= K < M`.
    pub winners: usize,
    /// Prize paid to each winner (dollars).
    pub prize: f64,
    /// Surplus gained on a win (dollars).
    pub win_gain: f64,
    /// Surplus lost on a loss (dollars).
    pub loss: f64,
}

impl LotteryConfig {
    pub fn new(cluster_size: usize, winners: usize, win_gain: f64, loss: f64) -> Result<Self> {
        let cfg = Self { cluster_size, winners, prize: win_gain + loss, win_gain, loss };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Splits `prize` so that the loss equals the expected per-agent payout
    /// `prize * K / M` and the win gain is the remainder.
    ///
    /// A $15 prize with `M = 50`, `K = 1` gives `l = 0.3`, `w = 14.7`.
    pub fn from_prize(cluster_size: usize, winners: usize, prize: f64) -> Result<Self> {
        if cluster_size == 0 {
            return Err(Error::invalid("cluster_size", "must be >= 2"));
        }
        let loss = prize * winners as f64 / cluster_size as f64;
        let cfg = Self { cluster_size, winners, prize, win_gain: prize - loss, loss };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cluster_size < 2 {
            return Err(Error::invalid("cluster_size", "must be >= 2"));
        }
        if self.winners == 0 || self.winners >= self.cluster_size {
            return Err(Error::invalid("winners", "must satisfy 1 <= K < M"));
        }
        if !(self.win_gain > 0.0) || !self.win_gain.is_finite() {
            return Err(Error::invalid("win_gain", "must be finite and > 0"));
        }
        if !(self.loss > 0.0) || !self.loss.is_finite() {
            return Err(Error::invalid("loss", "must be finite and > 0"));
        }
        if (self.win_gain + self.loss - self.prize).abs() > 1e-9 * self.prize.max(1.0) {
            return Err(Error::invalid("prize", "must equal win_gain + loss"));
        }
        Ok(())
    }

    pub fn opponents(&self) -> usize {
        self.cluster_size - 1
    }
}

/// Coupons awarded for each action.
#[derive(Debug, Clone, PartialEq)]
pub struct CouponVector(Vec<f64>);

impl CouponVector {
    pub fn new(coupons: Vec<f64>) -> Result<Self> {
        if coupons.is_empty() {
            return Err(Error::invalid("coupons", "at least one action is required"));
        }
        if coupons.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::invalid("coupons", "entries must be finite and >= 0"));
        }
        Ok(Self(coupons))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Smallest power-of-ten scale (up to `10^6`) that turns every entry into
    /// an integer, together with the scaled integers.
    pub fn integer_scaled(&self) -> Option<(u64, Vec<u64>)> {
        let mut scale = 1u64;
        for _ in 0..=6 {
            let s = scale as f64;
            let scaled: Option<Vec<u64>> = self
                .0
                .iter()
                .map(|&r| {
                    let v = r * s;
                    let n = libm::round(v);
                    ((v - n).abs() <= 1e-9 * n.max(1.0) && n < 9.0e15).then_some(n as u64)
                })
                .collect();
            if let Some(v) = scaled {
                return Some((scale, v));
            }
            scale *= 10;
        }
        None
    }
}

impl core::ops::Index<usize> for CouponVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-action counts of the `M - 1` opponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpponentProfile(Vec<u32>);

impl OpponentProfile {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// The assumed distribution of opponent actions, a point of the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationProfile(Vec<f64>);

impl PopulationProfile {
    /// Validates entries `>= 0` summing to one (within `1e-9`) and removes
    /// the residual rounding by renormalising.
    pub fn new(mut b: Vec<f64>) -> Result<Self> {
        if b.is_empty() {
            return Err(Error::invalid("rho", "must have at least one action"));
        }
        if b.iter().any(|v| !v.is_finite() || *v < -SIMPLEX_TOL) {
            return Err(Error::invalid("rho", "entries must be finite and >= 0"));
        }
        let sum: f64 = b.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid("rho", "entries must sum to 1"));
        }
        for v in &mut b {
            *v = v.max(0.0) / sum;
        }
        Ok(Self(b))
    }

    pub fn uniform(actions: usize) -> Self {
        Self(alloc::vec![1.0 / actions as f64; actions])
    }

    pub fn point_mass(actions: usize, at: usize) -> Self {
        let mut b = alloc::vec![0.0; actions];
        b[at] = 1.0;
        Self(b)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `max_a |self_a - other_a|`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl core::ops::Index<usize> for PopulationProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// How [`win_probabilities`] evaluates the lottery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WinProbabilityMethod {
    /// Enumerate opponent profiles (subject to [`ENUMERATION_CAP`]).
    Exact,
    /// Coupon-sum convolution; `K = 1` only.
    K1Convolution,
    /// Sample opponent profiles.
    MonteCarlo { samples: usize, seed: u64 },
    /// Convolution when `K = 1`, otherwise exact enumeration.
    Auto,
}

/// Win probability of every action against opponents drawn from `rho`.
pub fn win_probabilities(
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
    method: WinProbabilityMethod,
) -> Result<Vec<f64>> {
    match method {
        WinProbabilityMethod::Exact => win_probabilities_exact(rho, coupons, cfg),
        WinProbabilityMethod::K1Convolution => win_probabilities_k1(rho, coupons, cfg),
        WinProbabilityMethod::MonteCarlo { samples, seed } => {
            Ok(win_probabilities_mc(rho, coupons, cfg, samples, seed)?
                .into_iter()
                .map(|e| e.estimate)
                .collect())
        }
        WinProbabilityMethod::Auto => {
            if cfg.winners == 1 {
                win_probabilities_k1(rho, coupons, cfg)
            } else {
                win_probabilities_exact(rho, coupons, cfg)
            }
        }
    }
}

pub(crate) fn check_inputs(
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
) -> Result<()> {
    cfg.validate()?;
    if rho.len() != coupons.len() {
        return Err(Error::Mismatch { what: "action count", left: rho.len(), right: coupons.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn prize_split() {
        let cfg = LotteryConfig::from_prize(50, 1, 15.0).unwrap();
        assert!((cfg.loss - 0.3).abs() < 1e-12);
        assert!((cfg.win_gain - 14.7).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(LotteryConfig::new(50, 50, 14.7, 0.3).is_err());
        assert!(LotteryConfig::new(50, 0, 14.7, 0.3).is_err());
        assert!(LotteryConfig::new(1, 1, 14.7, 0.3).is_err());
        assert!(LotteryConfig::new(50, 1, 0.0, 0.3).is_err());
        assert!(LotteryConfig::new(50, 1, 14.7, -0.3).is_err());
    }

    #[test]
    fn integer_scaling_of_table_coupons() {
        let c = CouponVector::new(vec![37.4, 715.0, 693.0, 577.0, 434.0, 222.0]).unwrap();
        let (scale, ints) = c.integer_scaled().unwrap();
        assert_eq!(scale, 10);
        assert_eq!(ints, vec![374, 7150, 6930, 5770, 4340, 2220]);
        assert!(CouponVector::new(vec![core::f64::consts::PI]).unwrap().integer_scaled().is_none());
    }

    #[test]
    fn profile_validation() {
        assert!(PopulationProfile::new(vec![0.5, 0.5]).is_ok());
        assert!(PopulationProfile::new(vec![0.5, 0.6]).is_err());
        assert!(PopulationProfile::new(vec![1.5, -0.5]).is_err());
        let p = PopulationProfile::new(vec![0.3, 0.7 + 1e-11]).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
