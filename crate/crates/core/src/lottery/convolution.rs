//! `K = 1` win probabilities through the distribution of the opponents'
//! total coupon count.
//!
//! With a single winner the loss probability of a profile depends only on
//! the opponents' coupon sum `S`: the agent wins with probability
//! `r_a / (r_a + S)`. `S` is the `(M - 1)`-fold sum of i.i.d. coupon draws,
//! computed exactly on the integer lattice obtained by scaling coupons to
//! integers.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_inputs, win_probabilities_exact, CouponVector, LotteryConfig, PopulationProfile};
use crate::error::{Error, Result};

/// Above this support length the sparse (ordered map) convolution is used.
const DENSE_SUPPORT_LIMIT: u64 = 1 << 23;

/// Win probability of every action when there is exactly one winner.
pub fn win_probabilities_k1(
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
) -> Result<Vec<f64>> {
    check_inputs(rho, coupons, cfg)?;
    if cfg.winners != 1 {
        return Err(Error::invalid("winners", "the convolution path requires K = 1"));
    }
    let Some((_, ints)) = coupons.integer_scaled() else {
        // no exact lattice; fall back to enumeration with the O(1) per-profile loss
        return win_probabilities_exact(rho, coupons, cfg);
    };

    // merge actions that share a coupon value and drop zero-mass ones
    let mut atoms: BTreeMap<u64, f64> = BTreeMap::new();
    for (&c, &b) in ints.iter().zip(rho.as_slice()) {
        if b > 0.0 {
            *atoms.entry(c).or_insert(0.0) += b;
        }
    }
    let atoms: Vec<(u64, f64)> = atoms.into_iter().collect();
    let n = cfg.opponents();
    let max_atom = atoms.iter().map(|a| a.0).max().unwrap_or(0);
    let support_len = max_atom.saturating_mul(n as u64).saturating_add(1);

    let sum_dist: Vec<(u64, f64)> = if support_len <= DENSE_SUPPORT_LIMIT {
        dense_sum(&atoms, n, support_len as usize)
    } else {
        sparse_sum(&atoms, n)
    };

    let probs = coupons
        .as_slice()
        .iter()
        .zip(&ints)
        .map(|(&r, &ri)| {
            if r <= 0.0 {
                return 0.0;
            }
            let ra = ri as f64;
            let p: f64 = sum_dist.iter().map(|&(total, m)| m * ra / (ra + total as f64)).sum();
            p.clamp(0.0, 1.0)
        })
        .collect();
    Ok(probs)
}

/// Single-action convenience wrapper over [`win_probabilities_k1`].
pub fn win_probability_k1(
    action: usize,
    rho: &PopulationProfile,
    coupons: &CouponVector,
    cfg: &LotteryConfig,
) -> Result<f64> {
    if action >= coupons.len() {
        return Err(Error::invalid("action", "index out of range"));
    }
    Ok(win_probabilities_k1(rho, coupons, cfg)?[action])
}

fn dense_sum(atoms: &[(u64, f64)], n: usize, len: usize) -> Vec<(u64, f64)> {
    let max_atom = atoms.iter().map(|a| a.0 as usize).max().unwrap_or(0);
    let mut cur = vec![0.0; len];
    let mut next = vec![0.0; len];
    cur[0] = 1.0;
    let mut reach = 1usize; // cur is zero at and beyond `reach`
    for _ in 0..n {
        let new_reach = (reach + max_atom).min(len);
        next[..new_reach].iter_mut().for_each(|v| *v = 0.0);
        for &(c, b) in atoms {
            let c = c as usize;
            for (dst, src) in next[c..c + reach].iter_mut().zip(&cur[..reach]) {
                *dst += b * src;
            }
        }
        core::mem::swap(&mut cur, &mut next);
        reach = new_reach;
    }
    cur[..reach]
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(i, &m)| (i as u64, m))
        .collect()
}

fn sparse_sum(atoms: &[(u64, f64)], n: usize) -> Vec<(u64, f64)> {
    let mut cur: BTreeMap<u64, f64> = BTreeMap::new();
    cur.insert(0, 1.0);
    for _ in 0..n {
        let mut next: BTreeMap<u64, f64> = BTreeMap::new();
        for (&s, &m) in &cur {
            for &(c, b) in atoms {
                *next.entry(s + c).or_insert(0.0) += m * b;
            }
        }
        cur = next;
    }
    cur.into_iter().collect()
}
