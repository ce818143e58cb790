//! Mean field equilibrium by fixed-point iteration over the action
//! profile, plus the deterministic-reward benchmark.
//!
//! One evaluation of the map `Phi` runs the whole pipeline: win
//! probabilities under `rho`, value iteration, best response, stationary
//! surplus distribution and aggregation back into an action profile.

use alloc::vec;
use alloc::vec::Vec;

use crate::actions::{ActionTable, WEEKLY_DOLLARS_PER_DAILY_CENT};
use crate::dp::{BranchWeighting, DecisionModel, Policy, ValueFunction};
use crate::economics::{cluster_savings, expected_customer_value, Scheme, SweepPoint, DAYS_PER_PERIOD};
use crate::error::{Error, Result};
use crate::grid::{common_step, SurplusGrid, DEFAULT_X_MAX, DEFAULT_X_MIN};
use crate::lottery::{bounds, win_probabilities, LotteryConfig, PopulationProfile, WinBounds, WinProbabilityMethod};
use crate::population::{
    aggregate_actions, stationary_power, transition_kernel, RegenerationDist, SurplusDistribution,
};
use crate::prospect::{Prospect, ProspectParams};

/// Everything that defines the agents' game.
#[derive(Debug, Clone)]
pub struct MfeProblem<P = ProspectParams> {
    pub actions: ActionTable,
    pub lottery: LotteryConfig,
    pub prospect: P,
    /// Survival probability and discount factor.
    pub beta: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Newcomer surplus pmf as `(surplus, mass)` pairs.
    pub regeneration: Vec<(f64, f64)>,
    /// Multiplier taking table costs (cents per day) to per-period costs;
    /// also applied to benchmark rewards.
    pub cost_scale: f64,
    pub weighting: BranchWeighting,
}

impl MfeProblem<ProspectParams> {
    /// The air-conditioning study: six actions, fifty homes, one winner.
    pub fn study(prize: f64) -> Result<Self> {
        Ok(Self {
            actions: ActionTable::study_default(),
            lottery: LotteryConfig::from_prize(50, 1, prize)?,
            prospect: ProspectParams::default(),
            beta: 0.92,
            x_min: DEFAULT_X_MIN,
            x_max: DEFAULT_X_MAX,
            regeneration: vec![(0.0, 1.0)],
            cost_scale: WEEKLY_DOLLARS_PER_DAILY_CENT,
            weighting: BranchWeighting::Raw,
        })
    }
}

impl<P: Prospect + Clone> MfeProblem<P> {
    /// Same problem with a different prize. With `widen` the truncation
    /// bounds grow to at least 200 losses below zero and 10 wins above it.
    pub fn with_prize(&self, prize: f64, widen: bool) -> Result<Self> {
        let lottery = LotteryConfig::from_prize(self.lottery.cluster_size, self.lottery.winners, prize)?;
        let (mut x_min, mut x_max) = (self.x_min, self.x_max);
        if widen {
            x_min = x_min.min(-200.0 * lottery.loss);
            x_max = x_max.max(10.0 * lottery.win_gain);
        }
        Ok(Self { lottery, x_min, x_max, ..self.clone() })
    }
}

impl<P: Prospect> MfeProblem<P> {
    pub fn validate(&self) -> Result<()> {
        self.actions.validate()?;
        self.lottery.validate()?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta", "must lie in (0, 1)"));
        }
        if !(self.cost_scale >= 0.0) || !self.cost_scale.is_finite() {
            return Err(Error::invalid("cost_scale", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Lattice spanned by the lottery increments.
    pub fn grid(&self) -> Result<SurplusGrid> {
        SurplusGrid::for_moves(&[self.lottery.win_gain, self.lottery.loss], self.x_min, self.x_max)
    }

    pub fn costs(&self) -> Vec<f64> {
        self.actions.costs(self.cost_scale)
    }
}

/// Numerical knobs of the fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub vi_tol: f64,
    pub vi_max_sweeps: usize,
    pub tie_tol: f64,
    pub stationary_tol: f64,
    pub stationary_max_iters: usize,
    /// Stop once `||rho_{n+1} - rho_n||_inf <= tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Damping `lambda` in `(0, 1]`.
    pub damping: f64,
    /// Damping adopted once the residual stops decreasing.
    pub fallback_damping: f64,
    /// Residual window used to detect oscillation.
    pub oscillation_window: usize,
    pub method: WinProbabilityMethod,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            vi_tol: 1e-8,
            vi_max_sweeps: 5_000,
            tie_tol: 1e-9,
            stationary_tol: 1e-12,
            stationary_max_iters: 100_000,
            tol: 1e-6,
            max_iters: 65,
            damping: 1.0,
            fallback_damping: 0.5,
            oscillation_window: 10,
            method: WinProbabilityMethod::Auto,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("vi_tol", self.vi_tol), ("stationary_tol", self.stationary_tol), ("tol", self.tol)] {
            if !(v > 0.0) {
                return Err(Error::invalid(field, "must be > 0"));
            }
        }
        if !(self.tie_tol >= 0.0) {
            return Err(Error::invalid("tie_tol", "must be >= 0"));
        }
        for (field, v) in [("damping", self.damping), ("fallback_damping", self.fallback_damping)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(field, "must lie in (0, 1]"));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// One evaluation of the best-response map.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub win_probs: Vec<f64>,
    pub value: ValueFunction,
    pub vi_sweeps: usize,
    pub policy: Policy,
    pub zeta: SurplusDistribution,
    pub rho: PopulationProfile,
}

/// Equilibrium triple and the iteration log that produced it.
#[derive(Debug, Clone)]
pub struct MfeResult {
    pub grid: SurplusGrid,
    /// `aggregate_actions(zeta_star, policy_star)`.
    pub rho_star: PopulationProfile,
    /// The profile the agents best-responded to.
    pub rho_assumed: PopulationProfile,
    pub policy_star: Policy,
    pub zeta_star: SurplusDistribution,
    pub value_star: ValueFunction,
    pub win_probs: Vec<f64>,
    pub iterations: usize,
    /// `||rho_{n+1} - rho_n||_inf` per iteration.
    pub residual_history: Vec<f64>,
    /// Profile after each iteration, starting with `rho_0`.
    pub rho_history: Vec<PopulationProfile>,
    pub vi_sweeps: Vec<usize>,
    pub converged: bool,
    pub oscillation_detected: bool,
    pub damping_used: f64,
}

impl MfeResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Solver bound to one problem: grid, psi and costs are built once.
pub struct MfeSolver<'a, P: Prospect> {
    problem: &'a MfeProblem<P>,
    settings: SolverSettings,
    grid: SurplusGrid,
    psi: RegenerationDist,
    costs: Vec<f64>,
}

impl<'a, P: Prospect> MfeSolver<'a, P> {
    pub fn new(problem: &'a MfeProblem<P>, settings: SolverSettings) -> Result<Self> {
        problem.validate()?;
        settings.validate()?;
        let grid = problem.grid()?;
        let psi = RegenerationDist::from_points(&grid, &problem.regeneration)?;
        let costs = problem.costs();
        Ok(Self { problem, settings, grid, psi, costs })
    }

    pub fn grid(&self) -> &SurplusGrid {
        &self.grid
    }

    pub fn psi(&self) -> &RegenerationDist {
        &self.psi
    }

    /// Decision problem faced by an agent whose opponents play `rho`.
    pub fn model(&self, win_probs: &[f64]) -> Result<DecisionModel> {
        DecisionModel::lottery_weighted(
            self.grid.clone(),
            self.problem.beta,
            &self.costs,
            win_probs,
            &self.problem.lottery,
            &self.problem.prospect,
            self.problem.weighting,
        )
    }

    /// `Phi(rho)`.
    pub fn best_response(&self, rho: &PopulationProfile) -> Result<BestResponse> {
        let s = &self.settings;
        let win_probs = win_probabilities(rho, &self.problem.actions.coupons(), &self.problem.lottery, s.method)?;
        let model = self.model(&win_probs)?;
        let vi = model.value_iterate(None, s.vi_tol, s.vi_max_sweeps)?;
        let policy = model.best_response(&vi.value, s.tie_tol);
        let kernel = transition_kernel(&model, &policy, &self.psi)?;
        let zeta = stationary_power(&kernel, s.stationary_tol, s.stationary_max_iters)?;
        let rho = aggregate_actions(&zeta, &policy)?;
        Ok(BestResponse { win_probs, value: vi.value, vi_sweeps: vi.sweeps, policy, zeta, rho })
    }

    /// Damped iteration `rho <- (1 - lambda) rho + lambda Phi(rho)` from `rho0`
    /// (uniform when `None`).
    pub fn solve(&self, rho0: Option<PopulationProfile>) -> Result<MfeResult> {
        let s = &self.settings;
        let na = self.problem.actions.len();
        let mut rho = rho0.unwrap_or_else(|| PopulationProfile::uniform(na));
        if rho.len() != na {
            return Err(Error::Mismatch { what: "rho0 length", left: rho.len(), right: na });
        }
        let mut lambda = s.damping;
        let mut oscillation = false;
        let mut residuals = Vec::new();
        let mut history = vec![rho.clone()];
        let mut sweeps = Vec::new();
        let mut best: Option<(f64, PopulationProfile, BestResponse)> = None;

        for it in 1..=s.max_iters {
            let br = self.best_response(&rho)?;
            sweeps.push(br.vi_sweeps);
            let next: Vec<f64> = rho
                .as_slice()
                .iter()
                .zip(br.rho.as_slice())
                .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                .collect();
            let next = PopulationProfile::new(next)?;
            let r = next.sup_distance(&rho);
            residuals.push(r);
            history.push(next.clone());

            if best.as_ref().map_or(true, |b| r < b.0) {
                best = Some((r, rho.clone(), br));
            }
            if r <= s.tol {
                let (_, assumed, br) = best.take().expect("set above");
                return Ok(self.finish(assumed, br, it, residuals, history, sweeps, true, oscillation, lambda));
            }
            if !oscillation && residuals.len() >= s.oscillation_window {
                let w = &residuals[residuals.len() - s.oscillation_window..];
                if w.windows(2).all(|p| p[1] >= p[0]) {
                    oscillation = true;
                    lambda = lambda.min(s.fallback_damping);
                }
            }
            rho = next;
        }
        let (_, assumed, br) = best.expect("at least one iteration");
        Ok(self.finish(assumed, br, s.max_iters, residuals, history, sweeps, false, oscillation, lambda))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        assumed: PopulationProfile,
        br: BestResponse,
        iterations: usize,
        residual_history: Vec<f64>,
        rho_history: Vec<PopulationProfile>,
        vi_sweeps: Vec<usize>,
        converged: bool,
        oscillation_detected: bool,
        damping_used: f64,
    ) -> MfeResult {
        MfeResult {
            grid: self.grid.clone(),
            rho_star: br.rho,
            rho_assumed: assumed,
            policy_star: br.policy,
            zeta_star: br.zeta,
            value_star: br.value,
            win_probs: br.win_probs,
            iterations,
            residual_history,
            rho_history,
            vi_sweeps,
            converged,
            oscillation_detected,
            damping_used,
        }
    }

    /// Lower/upper win-probability bounds shared by every action.
    pub fn win_bounds(&self) -> WinBounds {
        bounds(&self.problem.actions.coupons(), &self.problem.lottery)
    }
}

/// Solves the mean field equilibrium of `problem`.
pub fn solve_mfe<P: Prospect>(
    problem: &MfeProblem<P>,
    settings: &SolverSettings,
    rho0: Option<PopulationProfile>,
) -> Result<MfeResult> {
    MfeSolver::new(problem, *settings)?.solve(rho0)
}

/// Outcome of the deterministic-reward scheme.
#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub grid: SurplusGrid,
    pub return_fraction: f64,
    pub chosen_distribution: PopulationProfile,
    pub policy: Policy,
    pub zeta: SurplusDistribution,
    pub value_star: ValueFunction,
    /// Surplus gained per period for each action (dollars, cent-rounded).
    pub reward_per_action: Vec<f64>,
}

/// Per-period sure reward for each action: `fraction` of its savings,
/// converted like the costs and rounded to whole cents.
pub fn benchmark_rewards(actions: &ActionTable, fraction: f64, cost_scale: f64) -> Vec<f64> {
    actions
        .savings_cents()
        .iter()
        .map(|s| libm::round(fraction * s * cost_scale * 100.0) / 100.0)
        .collect()
}

/// Solves the fixed-reward scheme: each period action `a` pays its cost and
/// adds `return_fraction` of its savings to the surplus; there is no losing
/// branch and no coupling between agents.
pub fn solve_benchmark<P: Prospect>(
    problem: &MfeProblem<P>,
    return_fraction: f64,
    settings: &SolverSettings,
) -> Result<BenchmarkResult> {
    problem.validate()?;
    if !(0.0..=1.0).contains(&return_fraction) {
        return Err(Error::invalid("return_fraction", "must lie in [0, 1]"));
    }
    let gains = benchmark_rewards(&problem.actions, return_fraction, problem.cost_scale);
    let positive: Vec<f64> = gains.iter().copied().filter(|g| *g > 0.0).collect();
    let step = if positive.is_empty() { 0.01 } else { common_step(&positive)? };
    let grid = SurplusGrid::new(step, problem.x_min, problem.x_max)?;
    let psi = RegenerationDist::from_points(&grid, &problem.regeneration)?;
    let model = DecisionModel::deterministic(grid.clone(), problem.beta, &problem.costs(), &gains, &problem.prospect)?;
    let vi = model.value_iterate(None, settings.vi_tol, settings.vi_max_sweeps)?;
    let policy = model.best_response(&vi.value, settings.tie_tol);
    let kernel = transition_kernel(&model, &policy, &psi)?;
    let zeta = stationary_power(&kernel, settings.stationary_tol, settings.stationary_max_iters)?;
    let chosen = aggregate_actions(&zeta, &policy)?;
    Ok(BenchmarkResult {
        grid,
        return_fraction,
        chosen_distribution: chosen,
        policy,
        zeta,
        value_star: vi.value,
        reward_per_action: gains,
    })
}

/// Total weekly reward paid to `homes` agents under a benchmark result.
pub fn benchmark_total_reward(result: &BenchmarkResult, homes: f64) -> f64 {
    homes
        * result
            .chosen_distribution
            .as_slice()
            .iter()
            .zip(&result.reward_per_action)
            .map(|(r, g)| r * g)
            .sum::<f64>()
}

/// Bisection for the return fraction whose total payout to `homes` agents
/// equals `target` dollars per period.
pub fn benchmark_fraction_for_reward<P: Prospect>(
    problem: &MfeProblem<P>,
    target: f64,
    homes: f64,
    settings: &SolverSettings,
) -> Result<BenchmarkResult> {
    let (mut lo, mut hi) = (0.0, 1.0);
    let top = solve_benchmark(problem, hi, settings)?;
    if benchmark_total_reward(&top, homes) < target {
        return Err(Error::invalid("target", "exceeds the payout of a full return"));
    }
    let mut best = top;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let r = solve_benchmark(problem, mid, settings)?;
        let paid = benchmark_total_reward(&r, homes);
        if (paid - target).abs() < 0.005 {
            return Ok(r);
        }
        if paid < target {
            lo = mid;
        } else {
            hi = mid;
            best = r;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(best)
}

/// Solves the lottery at `prize` and summarises it as a sweep point.
pub fn lottery_point<P: Prospect + Clone>(
    base: &MfeProblem<P>,
    prize: f64,
    widen: bool,
    settings: &SolverSettings,
) -> Result<(SweepPoint, MfeResult)> {
    let problem = base.with_prize(prize, widen)?;
    let r = solve_mfe(&problem, settings, None)?;
    let homes = problem.lottery.cluster_size as f64;
    let savings = cluster_savings(&r.rho_star, &problem.actions, homes, DAYS_PER_PERIOD)?;
    let ev = expected_customer_value(&r.zeta_star, &r.value_star)?;
    Ok((SweepPoint::new(prize, Scheme::Lottery, r.rho_star.clone(), savings, ev, homes), r))
}

/// Solves the benchmark paying `target` in total per period and summarises
/// it as a sweep point; the reward recorded is the amount actually paid.
pub fn benchmark_point<P: Prospect>(
    problem: &MfeProblem<P>,
    target: f64,
    settings: &SolverSettings,
) -> Result<(SweepPoint, BenchmarkResult)> {
    let homes = problem.lottery.cluster_size as f64;
    let b = benchmark_fraction_for_reward(problem, target, homes, settings)?;
    Ok((benchmark_summary(problem, &b)?, b))
}

/// Sweep point of an already solved benchmark.
pub fn benchmark_summary<P: Prospect>(problem: &MfeProblem<P>, b: &BenchmarkResult) -> Result<SweepPoint> {
    let homes = problem.lottery.cluster_size as f64;
    let savings = cluster_savings(&b.chosen_distribution, &problem.actions, homes, DAYS_PER_PERIOD)?;
    let ev = expected_customer_value(&b.zeta, &b.value_star)?;
    let paid = benchmark_total_reward(b, homes);
    Ok(SweepPoint::new(paid, Scheme::Benchmark, b.chosen_distribution.clone(), savings, ev, homes))
}
