//! Monte Carlo estimate of win probabilities for clusters too large to
//! enumerate.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plackett_luce::loss_with_counts;
use super::{check_inputs, CouponVector, LotteryConfig, PopulationProfile};
use crate::error::{Error, Result};

/// Sample mean of the win indicator's conditional probability and its
/// standard error. The standard error is reported as 0 for a single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Estimates every action's win probability from `samples` opponent
/// profiles drawn from `multinomial(M - 1, rho)`.
///
/// All actions are evaluated on the same sampled profiles, and the loss
/// probability of each sampled profile is computed exactly. Output depends
/// only on the inputs and `seed`.
pub fn win_probabilities_mc(
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
    samples: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_inputs(rho, coupons, cfg)?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be >= 1"));
    }
    let actions = coupons.len();
    let mut cdf = Vec::with_capacity(actions);
    let mut acc = 0.0;
    for &b in rho.as_slice() {
        acc += b;
        cdf.push(acc);
    }
    let last_positive = rho.as_slice().iter().rposition(|&b| b > 0.0).unwrap_or(actions - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = coupons.as_slice();
    let mut counts = vec![0u32; actions];
    // Welford running mean and squared deviations
    let mut mean = vec![0.0; actions];
    let mut m2 = vec![0.0; actions];
    for i in 0..samples {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..cfg.opponents() {
            let u: f64 = rng.gen::<f64>() * acc;
            let k = cdf.iter().position(|&c| u < c).unwrap_or(last_positive);
            counts[k] += 1;
        }
        for a in 0..actions {
            let win = 1.0 - loss_with_counts(r[a], &mut counts, r, cfg.winners);
            let d = win - mean[a];
            mean[a] += d / (i + 1) as f64;
            m2[a] += d * (win - mean[a]);
        }
    }
    let n = samples as f64;
    Ok(mean
        .iter()
        .zip(&m2)
        .map(|(&estimate, &m2)| {
            let std_error = if samples > 1 { libm::sqrt(m2.max(0.0) / (n - 1.0) / n) } else { 0.0 };
            McEstimate { estimate, std_error }
        })
        .collect())
}

/// Single-action wrapper over [`win_probabilities_mc`].
pub fn win_probability_mc(
    action: usize,
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if action >= coupons.len() {
        return Err(Error::invalid("action", "index out of range"));
    }
    Ok(win_probabilities_mc(rho, coupons, cfg, samples, seed)?[action])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (PopulationProfile, CouponVector, LotteryConfig) {
        (
            PopulationProfile::new(vec![0.2, 0.5, 0.3]).unwrap(),
            CouponVector::new(vec![9.0, 4.0, 1.5]).unwrap(),
            LotteryConfig::from_prize(6, 2, 12.0).unwrap(),
        )
    }

    #[test]
    fn deterministic_given_seed() {
        let (rho, c, cfg) = setup();
        let a = win_probabilities_mc(&rho, &c, &cfg, 500, 7).unwrap();
        let b = win_probabilities_mc(&rho, &c, &cfg, 500, 7).unwrap();
        assert_eq!(a, b);
        let d = win_probabilities_mc(&rho, &c, &cfg, 500, 8).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_samples_rejected() {
        let (rho, c, cfg) = setup();
        assert!(win_probability_mc(0, &rho, &c, &cfg, 0, 1).is_err());
    }

    #[test]
    fn point_mass_has_no_sampling_noise() {
        let rho = PopulationProfile::point_mass(2, 1);
        let c = CouponVector::new(vec![2.0, 1.0]).unwrap();
        let cfg = LotteryConfig::new(2, 1, 1.0, 1.0).unwrap();
        let e = win_probability_mc(0, &rho, &c, &cfg, 100, 3).unwrap();
        assert!((e.estimate - 2.0 / 3.0).abs() < 1e-15);
        assert!(e.std_error < 1e-12);
    }
}
