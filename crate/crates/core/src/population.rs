//! Surplus Markov chain: transition kernel, stationary distribution and
//! aggregation of (surplus distribution, policy) into an action profile.
//!
//! Every period the agent survives with probability `beta` and moves
//! according to the chosen action's lottery outcome; otherwise it is
//! replaced by a newcomer whose surplus is drawn from `psi`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dp::{DecisionModel, Policy};
use crate::error::{Error, Result};
use crate::grid::SurplusGrid;
use crate::lottery::PopulationProfile;

const PMF_TOL: f64 = 1e-10;

fn check_pmf(field: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(field, "must have at least one state"));
    }
    if v.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::invalid(field, "masses must be finite and >= 0"));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > PMF_TOL {
        return Err(Error::invalid(field, alloc::format!("masses sum to {s}, not 1")));
    }
    Ok(())
}

/// Stationary mass per lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusDistribution(Vec<f64>);

impl SurplusDistribution {
    pub fn new(zeta: Vec<f64>) -> Result<Self> {
        check_pmf("zeta", &zeta)?;
        Ok(Self(zeta))
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

    /// Total-variation distance.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        tv(&self.0, &other.0)
    }

    /// Mean surplus under this distribution.
    pub fn mean(&self, grid: &SurplusGrid) -> f64 {
        self.0.iter().enumerate().map(|(i, m)| m * grid.x(i)).sum()
    }
}

/// Surplus distribution of newcomers.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationDist(Vec<f64>);

impl RegenerationDist {
    pub fn new(psi: Vec<f64>) -> Result<Self> {
        check_pmf("psi", &psi)?;
        Ok(Self(psi))
    }

    /// All newcomers start at surplus `x`, which must be a lattice point.
    pub fn point_mass(grid: &SurplusGrid, x: f64) -> Result<Self> {
        Self::from_points(grid, &[(x, 1.0)])
    }

    /// Builds the pmf from `(surplus, mass)` pairs lying on the lattice.
    pub fn from_points(grid: &SurplusGrid, points: &[(f64, f64)]) -> Result<Self> {
        let mut psi = vec![0.0; grid.len()];
        for &(x, m) in points {
            let i = grid.nearest_index(x);
            if (grid.x(i) - x).abs() > 1e-6 * grid.step() {
                return Err(Error::invalid(
                    "psi",
                    alloc::format!("surplus {x} is not a point of the truncated lattice"),
                ));
            }
            psi[i] += m;
        }
        Self::new(psi)
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
}

/// Row-stochastic kernel `P(x, .) = beta * Q(x, .) + (1 - beta) * psi`,
/// with `Q` the sparse move kernel of a surviving agent.
#[derive(Debug, Clone)]
pub struct SurplusKernel {
    beta: f64,
    moves: Vec<Vec<(usize, f64)>>,
    psi: Vec<f64>,
}

impl SurplusKernel {
    /// Kernel from explicit move rows; each row of `moves` must sum to 1.
    pub fn from_moves(moves: Vec<Vec<(usize, f64)>>, beta: f64, psi: &RegenerationDist) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", "must lie in [0, 1)"));
        }
        let n = psi.len();
        if moves.len() != n {
            return Err(Error::Mismatch { what: "kernel rows", left: moves.len(), right: n });
        }
        for row in &moves {
            let mut s = 0.0;
            for &(j, p) in row {
                if j >= n || !(p >= 0.0) {
                    return Err(Error::invalid("kernel", "move targets must be on the grid with mass >= 0"));
                }
                s += p;
            }
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("kernel", alloc::format!("move row sums to {s}")));
            }
        }
        Ok(Self { beta, moves, psi: psi.0.clone() })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Moves of a surviving agent at state `i`.
    pub fn moves(&self, i: usize) -> &[(usize, f64)] {
        &self.moves[i]
    }

    /// Dense row `P(i, .)`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        let mut r: Vec<f64> = self.psi.iter().map(|p| (1.0 - self.beta) * p).collect();
        for &(j, p) in &self.moves[i] {
            r[j] += self.beta * p;
        }
        r
    }

    /// `mu P`.
    pub fn apply(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mu.len()];
        self.apply_into(mu, &mut out);
        out
    }

    fn apply_into(&self, mu: &[f64], out: &mut [f64]) {
        let total: f64 = mu.iter().sum();
        for (o, p) in out.iter_mut().zip(&self.psi) {
            *o = (1.0 - self.beta) * total * p;
        }
        self.moves_into(mu, out, self.beta);
    }

    /// Accumulates `scale * mu Q` into `out`.
    fn moves_into(&self, mu: &[f64], out: &mut [f64], scale: f64) {
        for (row, &m) in self.moves.iter().zip(mu) {
            if m == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += scale * m * p;
            }
        }
    }
}

/// Kernel induced by a policy on a decision model: each action moves up
/// with its objective win probability and down otherwise, clamped exactly
/// as in the Bellman operator.
pub fn transition_kernel(model: &DecisionModel, policy: &Policy, psi: &RegenerationDist) -> Result<SurplusKernel> {
    policy.validate()?;
    let grid = model.grid();
    if policy.num_states() != grid.len() {
        return Err(Error::Mismatch { what: "policy states", left: policy.num_states(), right: grid.len() });
    }
    if policy.num_actions() != model.num_actions() {
        return Err(Error::Mismatch { what: "policy actions", left: policy.num_actions(), right: model.num_actions() });
    }
    if psi.len() != grid.len() {
        return Err(Error::Mismatch { what: "psi length", left: psi.len(), right: grid.len() });
    }
    let moves = (0..grid.len())
        .map(|i| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(2);
            for (d, &s) in model.actions().iter().zip(policy.row(i)) {
                if s == 0.0 {
                    continue;
                }
                push_merge(&mut row, grid.up(i, d.up_steps), s * d.p_up);
                push_merge(&mut row, grid.down(i, d.down_steps), s * (1.0 - d.p_up));
            }
            row.retain(|&(_, p)| p > 0.0);
            row
        })
        .collect();
    SurplusKernel::from_moves(moves, model.beta(), psi)
}

fn push_merge(row: &mut Vec<(usize, f64)>, j: usize, p: f64) {
    match row.iter_mut().find(|e| e.0 == j) {
        Some(e) => e.1 += p,
        None => row.push((j, p)),
    }
}

/// Power iteration `mu <- mu P` from `psi` until the total-variation change
/// is at most `tol`.
pub fn stationary_power(kernel: &SurplusKernel, tol: f64, max_iters: usize) -> Result<SurplusDistribution> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let mut cur = kernel.psi.clone();
    let mut next = vec![0.0; cur.len()];
    let mut r = f64::INFINITY;
    for _ in 0..max_iters {
        kernel.apply_into(&cur, &mut next);
        r = tv(&cur, &next);
        core::mem::swap(&mut cur, &mut next);
        if r <= tol {
            normalize(&mut cur);
            return Ok(SurplusDistribution(cur));
        }
    }
    Err(Error::StationaryNotConverged { iterations: max_iters, residual: r })
}

/// Smallest `k` with `beta^(k + 1) <= 1e-10`.
pub fn default_series_terms(beta: f64) -> usize {
    let mut k = 0;
    let mut tail = beta;
    while tail > 1e-10 {
        tail *= beta;
        k += 1;
    }
    k
}

/// Regeneration series `zeta = sum_k (1 - beta) beta^k psi Q^k`, truncated
/// after `k_max` and renormalised by `1 / (1 - beta^(k_max + 1))`.
pub fn stationary_series(kernel: &SurplusKernel, k_max: usize) -> SurplusDistribution {
    let beta = kernel.beta;
    let mut nu = kernel.psi.clone();
    let mut next = vec![0.0; nu.len()];
    let mut zeta = vec![0.0; nu.len()];
    let mut coef = 1.0 - beta;
    for k in 0..=k_max {
        for (z, v) in zeta.iter_mut().zip(&nu) {
            *z += coef * v;
        }
        if k == k_max {
            break;
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        kernel.moves_into(&nu, &mut next, 1.0);
        core::mem::swap(&mut nu, &mut next);
        coef *= beta;
    }
    normalize(&mut zeta);
    SurplusDistribution(zeta)
}

/// `rho_a = sum_x zeta(x) sigma_a(x)`.
pub fn aggregate_actions(zeta: &SurplusDistribution, policy: &Policy) -> Result<PopulationProfile> {
    if zeta.len() != policy.num_states() {
        return Err(Error::Mismatch { what: "grid states", left: zeta.len(), right: policy.num_states() });
    }
    let mut rho = vec![0.0; policy.num_actions()];
    for (&z, row) in zeta.0.iter().zip(policy.rows()) {
        for (r, s) in rho.iter_mut().zip(row) {
            *r += z * s;
        }
    }
    PopulationProfile::new(rho)
}

/// Smallest `zeta(x) - (1 - beta) psi(x)` over the grid; negative values
/// violate the regeneration floor.
pub fn doeblin_margin(zeta: &SurplusDistribution, kernel: &SurplusKernel) -> f64 {
    zeta.0
        .iter()
        .zip(&kernel.psi)
        .map(|(z, p)| z - (1.0 - kernel.beta) * p)
        .fold(f64::INFINITY, f64::min)
}

/// `||zeta P - zeta||_TV`.
pub fn stationarity_residual(zeta: &SurplusDistribution, kernel: &SurplusKernel) -> f64 {
    tv(&kernel.apply(&zeta.0), &zeta.0)
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}
