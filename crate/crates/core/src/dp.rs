//! Weighted Bellman operator on the surplus lattice, value iteration and
//! best-response extraction.
//!
//! Each action moves the surplus up by `up_steps` lattice points with
//! objective probability `p_up`, and down by `down_steps` otherwise. The
//! agent evaluates the two branches with the prospect weights
//! `w(p_up)` and `w(1 - p_up)`:
//!
//! ```text
//! (T f)(x) = max_a { u(x) - cost_a + beta [ w(p_a) f(x + up_a) + w(1 - p_a) f(x - down_a) ] }
//! ```
//!
//! Off-lattice targets clamp to the nearest end of the grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::SurplusGrid;
use crate::lottery::LotteryConfig;
use crate::prospect::Prospect;

/// Dynamics and payoff of one action inside the decision problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionDynamics {
    /// Cost charged every period the action is taken.
    pub cost: f64,
    /// Objective probability of the upward move.
    pub p_up: f64,
    pub up_steps: usize,
    pub down_steps: usize,
    /// Perceived weight of the upward branch.
    pub weight_up: f64,
    /// Perceived weight of the downward branch.
    pub weight_down: f64,
}

/// How the two lottery branches are weighted in the Bellman operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchWeighting {
    /// `w(p)` and `w(1 - p)` as they come; the pair need not sum to 1.
    #[default]
    Raw,
    /// Both weights divided by `w(p) + w(1 - p)`.
    Normalized,
}

impl BranchWeighting {
    pub fn apply<P: Prospect>(&self, prospect: &P, p: f64) -> (f64, f64) {
        let (up, down) = (prospect.weight(p), prospect.weight(1.0 - p));
        match self {
            BranchWeighting::Raw => (up, down),
            BranchWeighting::Normalized => {
                let s = up + down;
                if s > 0.0 {
                    (up / s, down / s)
                } else {
                    (up, down)
                }
            }
        }
    }
}

/// A fully specified single-agent decision problem on a surplus lattice.
#[derive(Debug, Clone)]
pub struct DecisionModel {
    grid: SurplusGrid,
    beta: f64,
    utility: Vec<f64>,
    actions: Vec<ActionDynamics>,
}

impl DecisionModel {
    pub fn new(grid: SurplusGrid, beta: f64, utility: Vec<f64>, actions: Vec<ActionDynamics>) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid("beta", "must lie in [0, 1)"));
        }
        if utility.len() != grid.len() {
            return Err(Error::Mismatch { what: "utility length", left: utility.len(), right: grid.len() });
        }
        if utility.iter().any(|u| !u.is_finite()) {
            return Err(Error::invalid("utility", "must be finite on the grid"));
        }
        if actions.is_empty() {
            return Err(Error::invalid("actions", "at least one action is required"));
        }
        for a in &actions {
            if !(0.0..=1.0).contains(&a.p_up) {
                return Err(Error::invalid("p_up", "must lie in [0, 1]"));
            }
            if !a.cost.is_finite() || !a.weight_up.is_finite() || !a.weight_down.is_finite() {
                return Err(Error::invalid("actions", "costs and weights must be finite"));
            }
        }
        Ok(Self { grid, beta, utility, actions })
    }

    /// Lottery decision problem: every action wins `+w` with probability
    /// `win_probs[a]` and loses `-l` otherwise.
    pub fn lottery<P: Prospect>(
        grid: SurplusGrid,
        beta: f64,
        costs: &[f64],
        win_probs: &[f64],
        cfg: &LotteryConfig,
        prospect: &P,
    ) -> Result<Self> {
        Self::lottery_weighted(grid, beta, costs, win_probs, cfg, prospect, BranchWeighting::Raw)
    }

    /// [`DecisionModel::lottery`] with a choice of branch weighting.
    pub fn lottery_weighted<P: Prospect>(
        grid: SurplusGrid,
        beta: f64,
        costs: &[f64],
        win_probs: &[f64],
        cfg: &LotteryConfig,
        prospect: &P,
        weighting: BranchWeighting,
    ) -> Result<Self> {
        if costs.len() != win_probs.len() {
            return Err(Error::Mismatch { what: "action count", left: costs.len(), right: win_probs.len() });
        }
        let up_steps = grid.steps_of(cfg.win_gain)?;
        let down_steps = grid.steps_of(cfg.loss)?;
        let actions = costs
            .iter()
            .zip(win_probs)
            .map(|(&cost, &p)| {
                let (weight_up, weight_down) = weighting.apply(prospect, p);
                ActionDynamics { cost, p_up: p, up_steps, down_steps, weight_up, weight_down }
            })
            .collect();
        let utility = grid.points().into_iter().map(|x| prospect.utility(x)).collect();
        Self::new(grid, beta, utility, actions)
    }

    /// Sure-reward decision problem: action `a` always raises surplus by
    /// `gains[a]` (a lattice multiple, possibly zero).
    pub fn deterministic<P: Prospect>(
        grid: SurplusGrid,
        beta: f64,
        costs: &[f64],
        gains: &[f64],
        prospect: &P,
    ) -> Result<Self> {
        if costs.len() != gains.len() {
            return Err(Error::Mismatch { what: "action count", left: costs.len(), right: gains.len() });
        }
        let actions = costs
            .iter()
            .zip(gains)
            .map(|(&cost, &g)| {
                Ok(ActionDynamics {
                    cost,
                    p_up: 1.0,
                    up_steps: grid.steps_of(g)?,
                    down_steps: 0,
                    weight_up: 1.0,
                    weight_down: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let utility = grid.points().into_iter().map(|x| prospect.utility(x)).collect();
        Self::new(grid, beta, utility, actions)
    }

    pub fn grid(&self) -> &SurplusGrid {
        &self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn actions(&self) -> &[ActionDynamics] {
        &self.actions
    }

    pub fn utility(&self) -> &[f64] {
        &self.utility
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// Right-hand side of the Bellman equation for action `a` at state `i`.
    #[inline]
    pub fn q_value(&self, f: &[f64], i: usize, a: usize) -> f64 {
        let d = &self.actions[a];
        let up = f[self.grid.up(i, d.up_steps)];
        let down = f[self.grid.down(i, d.down_steps)];
        self.utility[i] - d.cost + self.beta * (d.weight_up * up + d.weight_down * down)
    }

    /// Row-major `states x actions` table of Q-values.
    pub fn q_table(&self, f: &ValueFunction) -> Vec<f64> {
        let na = self.actions.len();
        let mut q = vec![0.0; self.grid.len() * na];
        for i in 0..self.grid.len() {
            for a in 0..na {
                q[i * na + a] = self.q_value(&f.0, i, a);
            }
        }
        q
    }

    /// One application of the Bellman operator.
    pub fn bellman_apply(&self, f: &ValueFunction) -> Result<ValueFunction> {
        if f.len() != self.grid.len() {
            return Err(Error::Mismatch { what: "value function length", left: f.len(), right: self.grid.len() });
        }
        let mut out = vec![0.0; f.len()];
        self.apply_into(&f.0, &mut out);
        Ok(ValueFunction(out))
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..self.actions.len())
                .map(|a| self.q_value(f, i, a))
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    /// Iterates `T` from `init` (zero when `None`) until the sup-norm change
    /// of one sweep is at most `tol`.
    pub fn value_iterate(
        &self,
        init: Option<&ValueFunction>,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<ValueIteration> {
        if !(tol > 0.0) {
            return Err(Error::invalid("tol", "must be > 0"));
        }
        let n = self.grid.len();
        let mut cur = match init {
            Some(f) if f.len() == n => f.0.clone(),
            Some(f) => {
                return Err(Error::Mismatch { what: "initial value length", left: f.len(), right: n })
            }
            None => vec![0.0; n],
        };
        let mut next = vec![0.0; n];
        let mut residuals = Vec::new();
        for sweep in 1..=max_sweeps {
            self.apply_into(&cur, &mut next);
            let r = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            residuals.push(r);
            core::mem::swap(&mut cur, &mut next);
            if r <= tol {
                return Ok(ValueIteration { value: ValueFunction(cur), sweeps: sweep, residuals });
            }
        }
        Err(Error::ValueIterationDiverged { sweeps: max_sweeps, residuals })
    }

    /// Randomised best response: at each state, uniform mass over every
    /// action whose Q-value is within `tie_tol` of the maximum.
    pub fn best_response(&self, v: &ValueFunction, tie_tol: f64) -> Policy {
        let na = self.actions.len();
        let q = self.q_table(v);
        let mut probs = vec![0.0; q.len()];
        for i in 0..self.grid.len() {
            let row = &q[i * na..(i + 1) * na];
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let support = row.iter().filter(|&&x| x >= best - tie_tol).count() as f64;
            for a in 0..na {
                if row[a] >= best - tie_tol {
                    probs[i * na + a] = 1.0 / support;
                }
            }
        }
        Policy { actions: na, probs }
    }
}

/// Value per lattice state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

impl ValueFunction {
    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Interior states where `v` decreases by more than `tol` from the
    /// previous state, with the size of the drop.
    pub fn monotonicity_violations(&self, tol: f64) -> Vec<(usize, f64)> {
        let n = self.0.len();
        if n < 3 {
            return Vec::new();
        }
        (2..n - 1)
            .filter_map(|i| {
                let drop = self.0[i - 1] - self.0[i];
                (drop > tol).then_some((i, drop))
            })
            .collect()
    }

    /// Second differences `v[i+1] - 2 v[i] + v[i-1]` over interior states.
    pub fn second_differences(&self) -> Vec<f64> {
        self.0.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect()
    }
}

/// Outcome of [`DecisionModel::value_iterate`].
#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub value: ValueFunction,
    pub sweeps: usize,
    pub residuals: Vec<f64>,
}

/// Randomised policy: a probability vector over actions at each state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    /// Builds a policy from row-major probabilities, validating each row.
    pub fn from_rows(actions: usize, probs: Vec<f64>) -> Result<Self> {
        if actions == 0 || probs.len() % actions != 0 {
            return Err(Error::invalid("policy", "length must be a multiple of the action count"));
        }
        let p = Self { actions, probs };
        p.validate()?;
        Ok(p)
    }

    /// The same action distribution at every one of `states` states.
    pub fn constant(states: usize, row: &[f64]) -> Result<Self> {
        let probs = (0..states).flat_map(|_| row.iter().copied()).collect();
        Self::from_rows(row.len(), probs)
    }

    pub fn validate(&self) -> Result<()> {
        for row in self.probs.chunks(self.actions) {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::invalid("policy", "probabilities must be >= 0"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("policy", "each row must sum to 1"));
            }
        }
        Ok(())
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.actions
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.actions..(i + 1) * self.actions]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.actions)
    }
}

/// Where the preference between a costlier and a cheaper action flips.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCrossings {
    /// The costlier action.
    pub costly: usize,
    /// The cheaper action.
    pub cheap: usize,
    /// Surplus values at which the preferred action changes.
    pub crossings: Vec<f64>,
}

impl PairCrossings {
    pub fn single_threshold(&self) -> bool {
        self.crossings.len() <= 1
    }
}

/// Threshold structure of a policy or Q-table, one entry per action pair
/// with distinct costs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThresholdReport {
    pub pairs: Vec<PairCrossings>,
}

impl ThresholdReport {
    pub fn all_single_threshold(&self) -> bool {
        self.pairs.iter().all(PairCrossings::single_threshold)
    }

    /// Pairs whose preference flips more than once.
    pub fn multi_crossing(&self) -> impl Iterator<Item = &PairCrossings> {
        self.pairs.iter().filter(|p| !p.single_threshold())
    }
}

/// Reads preferences from policy mass: `costly` is preferred where
/// `sigma_costly > sigma_cheap`, `cheap` where the reverse holds; states with
/// equal mass carry no information.
pub fn threshold_diagnostic(policy: &Policy, costs: &[f64], grid: &SurplusGrid) -> ThresholdReport {
    let states = policy.num_states();
    pair_report(costs, |a1, a2, i| {
        let r = policy.row(i);
        r[a1] - r[a2]
    }, states, grid, 0.0)
}

/// Reads preferences from Q-value differences (ties within `tol` skipped).
pub fn threshold_diagnostic_q(
    model: &DecisionModel,
    v: &ValueFunction,
    tol: f64,
) -> ThresholdReport {
    let na = model.num_actions();
    let q = model.q_table(v);
    let costs: Vec<f64> = model.actions().iter().map(|a| a.cost).collect();
    pair_report(&costs, |a1, a2, i| q[i * na + a1] - q[i * na + a2], model.grid().len(), model.grid(), tol)
}

fn pair_report<F: Fn(usize, usize, usize) -> f64>(
    costs: &[f64],
    diff: F,
    states: usize,
    grid: &SurplusGrid,
    tol: f64,
) -> ThresholdReport {
    let mut pairs = Vec::new();
    for a1 in 0..costs.len() {
        for a2 in 0..costs.len() {
            if costs[a1] <= costs[a2] {
                continue;
            }
            let mut crossings = Vec::new();
            let mut last: Option<(usize, bool)> = None;
            for i in 0..states {
                let d = diff(a1, a2, i);
                if d.abs() <= tol {
                    continue;
                }
                let costly_preferred = d > 0.0;
                if let Some((j, prev)) = last {
                    if prev != costly_preferred {
                        crossings.push(0.5 * (grid.x(j) + grid.x(i)));
                    }
                }
                last = Some((i, costly_preferred));
            }
            pairs.push(PairCrossings { costly: a1, cheap: a2, crossings });
        }
    }
    ThresholdReport { pairs }
}
