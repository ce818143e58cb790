//! Opponent profiles and their multinomial weights.

use alloc::vec;
use alloc::vec::Vec;

use super::plackett_luce::loss_with_counts;
use super::{check_inputs, CouponVector, LotteryConfig, OpponentProfile, PopulationProfile};
use super::ENUMERATION_CAP;
use crate::error::{Error, Result};

/// Iterator over all ways of splitting `n` opponents across `actions` actions.
#[derive(Debug, Clone)]
pub struct Profiles {
    counts: Vec<u32>,
    done: bool,
}

impl Profiles {
    pub fn new(n: u32, actions: usize) -> Self {
        let mut counts = vec![0; actions];
        if actions > 0 {
            counts[0] = n;
        }
        Self { counts, done: actions == 0 }
    }
}

impl Iterator for Profiles {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let out = self.counts.clone();
        self.done = !advance(&mut self.counts);
        Some(out)
    }
}

/// Moves `c` to the next composition; `false` once the last one is passed.
fn advance(c: &mut [u32]) -> bool {
    let a = c.len();
    if a <= 1 {
        return false;
    }
    let tail = c[a - 1];
    c[a - 1] = 0;
    match (0..a - 1).rev().find(|&i| c[i] > 0) {
        Some(i) => {
            c[i] -= 1;
            c[i + 1] = tail + 1;
            true
        }
        None => false,
    }
}

/// Number of opponent profiles, `C(n + A - 1, A - 1)`, as a float.
pub fn profile_count(n: u32, actions: usize) -> f64 {
    if actions == 0 {
        return 0.0;
    }
    let mut acc = 1.0;
    for i in 1..actions {
        acc *= (n as f64 + i as f64) / i as f64;
    }
    libm::round(acc)
}

fn ln_factorials(n: u32) -> Vec<f64> {
    let mut t = Vec::with_capacity(n as usize + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += libm::log(k as f64);
        t.push(acc);
    }
    t
}

/// Log multinomial probability of `counts` under `rho`; `-inf` when a
/// positive count meets a zero-probability action.
pub fn ln_multinomial_weight(counts: &[u32], rho: &PopulationProfile) -> f64 {
    let n: u32 = counts.iter().sum();
    let lf = ln_factorials(n);
    ln_weight_with(&lf, counts, rho.as_slice())
}

fn ln_weight_with(lf: &[f64], counts: &[u32], b: &[f64]) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut acc = lf[n as usize];
    for (&c, &p) in counts.iter().zip(b) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += c as f64 * libm::log(p) - lf[c as usize];
    }
    acc
}

/// Multinomial probability of the opponent profile under `rho`.
pub fn profile_weight(profile: &OpponentProfile, rho: &PopulationProfile) -> f64 {
    libm::exp(ln_multinomial_weight(profile.counts(), rho))
}

/// Exact win probability of every action by full profile enumeration.
pub fn win_probabilities_exact(
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
) -> Result<Vec<f64>> {
    check_inputs(rho, coupons, cfg)?;
    let n = cfg.opponents() as u32;
    let actions = coupons.len();
    let count = profile_count(n, actions);
    if count > ENUMERATION_CAP {
        return Err(Error::EnumerationTooLarge { profiles: count, cap: ENUMERATION_CAP });
    }
    let lf = ln_factorials(n);
    let b = rho.as_slice();
    let r = coupons.as_slice();
    let mut loss = vec![0.0; actions];
    let mut counts = vec![0u32; actions];
    counts[0] = n;
    loop {
        let lw = ln_weight_with(&lf, &counts, b);
        if lw > f64::NEG_INFINITY {
            let w = libm::exp(lw);
            for (a, acc) in loss.iter_mut().enumerate() {
                *acc += w * loss_with_counts(r[a], &mut counts, r, cfg.winners);
            }
        }
        if !advance(&mut counts) {
            break;
        }
    }
    Ok(loss.into_iter().map(|l| (1.0 - l).clamp(0.0, 1.0)).collect())
}

/// Exact win probability of a single action.
pub fn win_probability_exact(
    action: usize,
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
) -> Result<f64> {
    if action >= coupons.len() {
        return Err(Error::invalid("action", "index out of range"));
    }
    Ok(win_probabilities_exact(rho, coupons, cfg)?[action])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_all_compositions() {
        let all: Vec<_> = Profiles::new(2, 2).collect();
        assert_eq!(all, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(Profiles::new(5, 1).count(), 1);
        assert_eq!(Profiles::new(0, 3).count(), 1);
        for (n, a) in [(4u32, 3usize), (7, 4), (49, 3), (10, 6)] {
            let listed = Profiles::new(n, a).count() as f64;
            assert_eq!(listed, profile_count(n, a));
            assert!(Profiles::new(n, a).all(|c| c.iter().sum::<u32>() == n));
        }
    }

    #[test]
    fn study_scale_profile_count() {
        // M = 50, six actions
        assert_eq!(profile_count(49, 6), 3_162_510.0);
    }

    #[test]
    fn multinomial_weights_sum_to_one() {
        let rho = PopulationProfile::new(vec![0.1, 0.25, 0.4, 0.25]).unwrap();
        let total: f64 = Profiles::new(12, 4)
            .map(|c| libm::exp(ln_multinomial_weight(&c, &rho)))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_by_two_weight() {
        let rho = PopulationProfile::new(vec![0.5, 0.5]).unwrap();
        let w = profile_weight(&OpponentProfile::new(vec![1, 1]), &rho);
        assert!((w - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weight_of_impossible_profile_is_zero() {
        let rho = PopulationProfile::point_mass(3, 1);
        assert_eq!(profile_weight(&OpponentProfile::new(vec![1, 1, 0]), &rho), 0.0);
        assert!((profile_weight(&OpponentProfile::new(vec![0, 2, 0]), &rho) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_two_agents() {
        let rho = PopulationProfile::point_mass(2, 1);
        let c = CouponVector::new(vec![2.0, 1.0]).unwrap();
        let cfg = LotteryConfig::new(2, 1, 1.0, 1.0).unwrap();
        let p = win_probability_exact(0, &rho, &c, &cfg).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let rho = PopulationProfile::uniform(12);
        let c = CouponVector::new((1..=12).map(|i| i as f64).collect()).unwrap();
        let cfg = LotteryConfig::from_prize(50, 1, 15.0).unwrap();
        assert!(matches!(
            win_probabilities_exact(&rho, &c, &cfg),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
