//! Independent reference implementations and instance generators shared by
//! the integration tests and the acceptance harness.
#![allow(dead_code)]

use lottery_mfe::dp::ActionDynamics;
use lottery_mfe::lottery::{CouponVector, LotteryConfig, PopulationProfile};
use lottery_mfe::{DecisionModel, SurplusGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All orderings of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Win probability of an agent playing `action`, by summing over every
/// assignment of actions to the `M - 1` opponents and, within each, every
/// one of the `M!` draw orders.
pub fn brute_force_win(action: usize, rho: &[f64], coupons: &[f64], m: usize, k: usize) -> f64 {
    let a = rho.len();
    let perms = permutations(m);
    let mut total = 0.0;
    let assignments = a.pow((m - 1) as u32);
    for code in 0..assignments {
        let mut c = code;
        let mut agent_coupons = vec![coupons[action]];
        let mut weight = 1.0;
        for _ in 1..m {
            let b = c % a;
            c /= a;
            weight *= rho[b];
            agent_coupons.push(coupons[b]);
        }
        if weight == 0.0 {
            continue;
        }
        let mut win = 0.0;
        for p in &perms {
            if !p[..k].contains(&0) {
                continue;
            }
            let mut prob = 1.0;
            let mut remaining: f64 = agent_coupons.iter().sum();
            for &who in p {
                prob *= agent_coupons[who] / remaining;
                remaining -= agent_coupons[who];
            }
            win += prob;
        }
        total += weight * win;
    }
    total
}

/// Random point in the simplex with every entry at least `floor`.
pub fn random_profile(rng: &mut ChaCha8Rng, actions: usize, floor: f64) -> PopulationProfile {
    let raw: Vec<f64> = (0..actions).map(|_| floor + rng.gen::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    PopulationProfile::new(raw.into_iter().map(|v| v / s).collect()).unwrap()
}

/// Positive coupon counts on the 0.1 lattice.
pub fn random_coupons(rng: &mut ChaCha8Rng, actions: usize, max: f64) -> CouponVector {
    let c = (0..actions)
        .map(|_| (1.0 + rng.gen::<f64>() * (max * 10.0 - 1.0)).round() / 10.0)
        .collect();
    CouponVector::new(c).unwrap()
}

pub fn lottery(m: usize, k: usize) -> LotteryConfig {
    LotteryConfig::from_prize(m, k, 15.0).unwrap()
}

/// Random decision problem on a 50-state unit lattice with concave-convex
/// utility and arbitrary branch weights summing to at most one.
pub fn random_model(rng: &mut ChaCha8Rng, beta: f64) -> DecisionModel {
    let grid = SurplusGrid::new(1.0, -10.0, 39.0).unwrap();
    assert_eq!(grid.len(), 50);
    let utility = grid
        .points()
        .into_iter()
        .map(|x| if x >= 0.0 { x.powf(0.7) } else { -2.0 * (-x).powf(0.7) })
        .collect();
    let actions = (0..rng.gen_range(2..5))
        .map(|_| {
            let p_up = rng.gen::<f64>();
            let weight_up = rng.gen::<f64>();
            let weight_down = rng.gen::<f64>() * (1.0 - weight_up);
            ActionDynamics {
                cost: rng.gen::<f64>() * 3.0,
                p_up,
                up_steps: rng.gen_range(1..6),
                down_steps: rng.gen_range(0..3),
                weight_up,
                weight_down,
            }
        })
        .collect();
    DecisionModel::new(grid, beta, utility, actions).unwrap()
}

/// `horizon` rounds of backward induction from the zero terminal value,
/// indexing the lattice directly.
pub fn backward_induction(model: &DecisionModel, horizon: usize) -> Vec<f64> {
    let n = model.grid().len();
    let u = model.utility();
    let mut f = vec![0.0; n];
    for _ in 0..horizon {
        let g: Vec<f64> = (0..n)
            .map(|i| {
                model
                    .actions()
                    .iter()
                    .map(|d| {
                        let up = (i + d.up_steps).min(n - 1);
                        let down = if i >= d.down_steps { i - d.down_steps } else { 0 };
                        u[i] - d.cost + model.beta() * (d.weight_up * f[up] + d.weight_down * f[down])
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        f = g;
    }
    f
}

/// Stationary law of a row-stochastic matrix by Gaussian elimination on
/// `zeta (P - I) = 0`, `sum zeta = 1`.
pub fn stationary_dense(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    // rows of the system are equations; column j holds zeta_j
    let mut a = vec![vec![0.0; n + 1]; n];
    for (eq, row) in a.iter_mut().enumerate().take(n - 1) {
        for j in 0..n {
            row[j] = p[j][eq] - if j == eq { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for j in col..=n {
            a[col][j] /= d;
        }
        for r in 0..n {
            if r != col && a[r][col] != 0.0 {
                let f = a[r][col];
                for j in col..=n {
                    a[r][j] -= f * a[col][j];
                }
            }
        }
    }
    a.into_iter().map(|row| row[n]).collect()
}

pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
