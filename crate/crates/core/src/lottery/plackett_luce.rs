use alloc::vec;

use super::{CouponVector, OpponentProfile};
use crate::error::{Error, Result};

/// Probability of drawing the agents in the order `perm` when each draw
/// picks a remaining agent with probability proportional to its coupons.
///
/// `coupons[i]` is the coupon count of agent `i`; `perm` lists agent
/// indices, winner first.
pub fn permutation_probability(perm: &[usize], coupons: &[f64]) -> Result<f64> {
    let m = coupons.len();
    if perm.len() != m {
        return Err(Error::Mismatch { what: "permutation length", left: perm.len(), right: m });
    }
    let mut seen = vec![false; m];
    for &i in perm {
        if i >= m || seen[i] {
            return Err(Error::invalid("perm", "not a permutation of the agents"));
        }
        seen[i] = true;
    }
    if coupons.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::invalid("coupons", "entries must be finite and >= 0"));
    }
    let mut remaining: f64 = coupons.iter().sum();
    let mut prob = 1.0;
    for &agent in &perm[..m.saturating_sub(1)] {
        if remaining <= 0.0 {
            return Err(Error::invalid("coupons", "remaining agents hold zero coupons"));
        }
        let r = coupons[agent];
        prob *= r / remaining;
        remaining -= r;
    }
    Ok(prob)
}

/// Probability that an agent holding `agent_coupons` is not among the first
/// `winners` draws when its opponents' actions are counted by `profile`.
///
/// Rounds are expanded over the *action* of each round's winner rather than
/// over individual opponents, so the cost is `O(A^K)` per profile.
pub fn loss_probability(
    agent_coupons: f64,
    profile: &OpponentProfile,
    coupons: &CouponVector,
    winners: usize,
) -> Result<f64> {
    if !agent_coupons.is_finite() || agent_coupons < 0.0 {
        return Err(Error::invalid("agent_coupons", "must be finite and >= 0"));
    }
    if profile.counts().len() != coupons.len() {
        return Err(Error::Mismatch {
            what: "profile length",
            left: profile.counts().len(),
            right: coupons.len(),
        });
    }
    if (winners as u64) > profile.total() {
        return Err(Error::invalid("winners", "must be below the cluster size"));
    }
    let mut counts = profile.counts().to_vec();
    Ok(loss_with_counts(agent_coupons, &mut counts, coupons.as_slice(), winners))
}

/// Unchecked core of [`loss_probability`]; `counts` is restored on return.
pub(crate) fn loss_with_counts(
    agent_coupons: f64,
    counts: &mut [u32],
    coupons: &[f64],
    rounds: usize,
) -> f64 {
    if agent_coupons <= 0.0 {
        return 1.0;
    }
    if rounds == 0 {
        return 1.0;
    }
    let opp_total: f64 = counts.iter().zip(coupons).map(|(&c, &r)| c as f64 * r).sum();
    let denom = agent_coupons + opp_total;
    if rounds == 1 {
        return opp_total / denom;
    }
    let mut acc = 0.0;
    for k in 0..counts.len() {
        let c = counts[k];
        if c == 0 || coupons[k] <= 0.0 {
            continue;
        }
        let pick = c as f64 * coupons[k] / denom;
        counts[k] -= 1;
        acc += pick * loss_with_counts(agent_coupons, counts, coupons, rounds - 1);
        counts[k] += 1;
    }
    acc
}
