use anyhow::{anyhow, bail, Result};
use lottery_mfe::actions::PERIODS;
use lottery_mfe::dp::threshold_diagnostic;
use lottery_mfe::economics::{
    argmax_profit, break_even, cluster_savings, expected_customer_value, pareto_frontier, Scheme, SweepPoint,
    DAYS_PER_PERIOD,
};
use lottery_mfe::lottery::{bounds, win_probabilities, WinProbabilityMethod};
use lottery_mfe::mfe::{benchmark_point, benchmark_summary, lottery_point, solve_benchmark, MfeSolver};
use lottery_mfe::population::{
    default_series_terms, doeblin_margin, stationary_power, stationary_series, transition_kernel,
};
use lottery_mfe::thermal::{build_action_table, simulate_home, AmbientSeries, Schedule, SECONDS_PER_DAY};
use lottery_mfe::{PopulationProfile, SurplusGrid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ActionConfig, Scenario};
use crate::io::{align_prices, num, read_ambient, read_prices, Output};
use crate::CoreError;

fn core<T>(r: lottery_mfe::Result<T>) -> Result<T> {
    r.map_err(|e| CoreError(e).into())
}

fn sigma_header(a: usize) -> Vec<String> {
    let mut h = vec!["x".to_string(), "v".to_string()];
    h.extend((1..=a).map(|i| format!("sigma_{i}")));
    h
}

fn write_value_policy(
    out: &Output,
    grid: &SurplusGrid,
    v: &[f64],
    policy: &lottery_mfe::Policy,
) -> Result<()> {
    let mut w = out.csv("value_policy.csv", &sigma_header(policy.num_actions()))?;
    for (i, row) in policy.rows().enumerate() {
        let mut rec = vec![num(grid.x(i)), num(v[i])];
        rec.extend(row.iter().map(|&p| num(p)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_zeta(out: &Output, grid: &SurplusGrid, zeta: &[f64]) -> Result<()> {
    let mut w = out.csv("zeta.csv", &["x".into(), "mass".into()])?;
    for (i, z) in zeta.iter().enumerate() {
        w.write_record([num(grid.x(i)), format!("{z}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn solve_mfe(s: &Scenario, out: &Output) -> Result<()> {
    let p = &s.problem;
    let solver = core(MfeSolver::new(p, s.settings))?;
    let r = core(solver.solve(None))?;
    let homes = p.lottery.cluster_size as f64;
    let savings = core(cluster_savings(&r.rho_star, &p.actions, homes, DAYS_PER_PERIOD))?;
    let ev = core(expected_customer_value(&r.zeta_star, &r.value_star))?;
    let point = SweepPoint::new(p.lottery.prize, Scheme::Lottery, r.rho_star.clone(), savings, ev, homes);
    let wb = solver.win_bounds();
    let thresholds = threshold_diagnostic(&r.policy_star, &p.costs(), &r.grid);

    out.json(
        "mfe_result.json",
        &json!({
            "prize": p.lottery.prize,
            "win_gain": p.lottery.win_gain,
            "loss": p.lottery.loss,
            "grid": {"x_min": r.grid.x_min(), "x_max": r.grid.x_max(), "step": r.grid.step(), "states": r.grid.len()},
            "labels": p.actions.actions().iter().map(|a| a.label.clone()).collect::<Vec<_>>(),
            "rho_star": r.rho_star.as_slice(),
            "rho_assumed": r.rho_assumed.as_slice(),
            "win_probs": r.win_probs,
            "win_bounds": {"lower": wb.lower, "upper": wb.upper},
            "iterations": r.iterations,
            "converged": r.converged,
            "oscillation_detected": r.oscillation_detected,
            "damping_used": r.damping_used,
            "final_residual": r.final_residual(),
            "residual_history": r.residual_history,
            "vi_sweeps": r.vi_sweeps,
            "single_threshold": thresholds.all_single_threshold(),
            "savings": point.savings,
            "profit": point.profit,
            "expected_value": point.expected_value,
            "lsw": point.lsw,
        }),
    )?;
    write_value_policy(out, &r.grid, r.value_star.as_slice(), &r.policy_star)?;
    write_zeta(out, &r.grid, r.zeta_star.as_slice())?;

    if !r.converged {
        eprintln!("warning: not converged after {} iterations (residual {:.3e})", r.iterations, r.final_residual());
    }
    println!("rho* = {:?}", r.rho_star.as_slice().iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!(
        "iterations {}  savings ${:.2}  profit ${:.2}  E[V] {:.2}  LSW {:.1}",
        r.iterations, point.savings, point.profit, point.expected_value, point.lsw
    );
    Ok(())
}

/// Parses `a:b:step` (inclusive) or a comma list.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || anyhow!("bad range `{s}`: expected start:stop:step or a comma list");
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let (a, b, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect());
    }
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SchemeArg {
    Lottery,
    Benchmark,
}

pub struct SweepArgs {
    pub scheme: SchemeArg,
    pub rewards: Option<Vec<f64>>,
    pub percents: Option<Vec<f64>>,
    pub widen: bool,
}

pub fn sweep(s: &Scenario, out: &Output, args: &SweepArgs) -> Result<()> {
    let p = &s.problem;
    let results: Vec<(f64, lottery_mfe::Result<SweepPoint>)> = match (args.scheme, &args.rewards, &args.percents) {
        (SchemeArg::Lottery, Some(r), None) => r
            .par_iter()
            .map(|&prize| (prize, lottery_point(p, prize, args.widen, &s.settings).map(|x| x.0)))
            .collect(),
        (SchemeArg::Benchmark, Some(r), None) => {
            r.par_iter().map(|&t| (t, benchmark_point(p, t, &s.settings).map(|x| x.0))).collect()
        }
        (SchemeArg::Benchmark, None, Some(pc)) => pc
            .par_iter()
            .map(|&pct| {
                let b = solve_benchmark(p, pct / 100.0, &s.settings);
                (pct, b.and_then(|b| benchmark_summary(p, &b)))
            })
            .collect(),
        (SchemeArg::Lottery, _, Some(_)) => bail!("--percents applies to the benchmark scheme only"),
        _ => bail!("give --rewards (or --percents for the benchmark)"),
    };

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(pt) => points.push(pt),
            Err(e) => failures.push((r, e)),
        }
    }
    points.sort_by(|a, b| a.reward.total_cmp(&b.reward));

    let a = p.actions.len();
    let mut header: Vec<String> =
        ["reward", "scheme", "savings", "profit", "expected_value", "lsw"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=a).map(|i| format!("rho_{i}")));
    let mut w = out.csv("sweep.csv", &header)?;
    for pt in &points {
        let mut rec = vec![
            num(pt.reward),
            pt.scheme.as_str().to_string(),
            num(pt.savings),
            num(pt.profit),
            num(pt.expected_value),
            num(pt.lsw),
        ];
        rec.extend(pt.rho.as_slice().iter().map(|&x| num(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let best = argmax_profit(&points);
    let be = break_even(&points);
    let frontier: Vec<f64> = pareto_frontier(&points).iter().map(|p| p.reward).collect();
    out.json(
        "sweep_summary.json",
        &json!({
            "scheme": match args.scheme { SchemeArg::Lottery => "lottery", SchemeArg::Benchmark => "benchmark" },
            "points": points.len(),
            "argmax_profit": best.map(|b| json!({"reward": b.reward, "profit": b.profit})),
            "break_even": be,
            "pareto_rewards": frontier,
            "failures": failures.iter().map(|(r, e)| json!({"reward": r, "kind": e.kind(), "error": e.to_string()})).collect::<Vec<_>>(),
        }),
    )?;

    for (r, e) in &failures {
        eprintln!("warning: reward {r} failed: {e}");
    }
    println!("{} points written, {} failed", points.len(), failures.len());
    if let Some(b) = best {
        println!("max profit ${:.2} at reward ${}", b.profit, b.reward);
    }
    match be {
        Some(x) => println!("break-even reward ${x:.2}"),
        None => println!("no break-even inside the swept range"),
    }
    if points.is_empty() {
        bail!("every sweep point failed");
    }
    Ok(())
}

pub enum BenchmarkTarget {
    Reward(f64),
    Percent(f64),
}

pub fn benchmark(s: &Scenario, out: &Output, target: BenchmarkTarget) -> Result<()> {
    let p = &s.problem;
    let (point, b) = match target {
        BenchmarkTarget::Reward(r) => core(benchmark_point(p, r, &s.settings))?,
        BenchmarkTarget::Percent(pct) => {
            let b = core(solve_benchmark(p, pct / 100.0, &s.settings))?;
            (core(benchmark_summary(p, &b))?, b)
        }
    };
    out.json(
        "benchmark_result.json",
        &json!({
            "return_fraction": b.return_fraction,
            "reward_per_action": b.reward_per_action,
            "chosen_distribution": b.chosen_distribution.as_slice(),
            "grid": {"x_min": b.grid.x_min(), "x_max": b.grid.x_max(), "step": b.grid.step(), "states": b.grid.len()},
            "paid": point.reward,
            "savings": point.savings,
            "profit": point.profit,
            "expected_value": point.expected_value,
            "lsw": point.lsw,
        }),
    )?;
    write_value_policy(out, &b.grid, b.value_star.as_slice(), &b.policy)?;
    write_zeta(out, &b.grid, b.zeta.as_slice())?;
    println!("return {:.2}%  paid ${:.2}  savings ${:.2}  profit ${:.2}", 100.0 * b.return_fraction, point.reward, point.savings, point.profit);
    Ok(())
}

pub struct SimulateArgs {
    pub action: Option<usize>,
    pub constant_ambient: Option<f64>,
    pub days: u32,
}

#[derive(Serialize)]
struct DaySummary {
    day: i64,
    kwh: f64,
    period_kwh: [f64; PERIODS],
}

pub fn simulate(s: &Scenario, out: &Output, args: &SimulateArgs) -> Result<()> {
    let ambient = match (args.constant_ambient, &s.ambient_csv) {
        (Some(c), _) => core(AmbientSeries::constant(0, i64::from(args.days) * SECONDS_PER_DAY, c))?,
        (None, Some(path)) => read_ambient(path)?.0,
        (None, None) => bail!("no ambient data: set data.ambient_csv in the config or pass --constant-ambient"),
    };
    let schedule = match args.action {
        None => Schedule::flat(s.thermal.setpoint),
        Some(a) => {
            let act = s.problem.actions.actions().get(a).ok_or_else(|| {
                anyhow!("--action {a} out of range; the table has {} actions", s.problem.actions.len())
            })?;
            Schedule::for_action(&s.thermal, act)
        }
    };
    let tr = core(simulate_home(&s.thermal, &schedule, &ambient, &s.sim))?;

    let mut w = out.csv("trace.csv", &["t_seconds".into(), "tau".into(), "q".into()])?;
    for k in 0..tr.steps() {
        w.write_record([num(tr.time(k)), num(tr.tau[k]), u8::from(tr.q[k]).to_string()])?;
    }
    w.flush()?;

    let (mean_t, sd_t) = tr.temperature_stats(s.weights.window);
    out.json(
        "home_summary.json",
        &json!({
            "action": args.action,
            "schedule": {"base": schedule.base, "periods": schedule.periods},
            "dt": tr.dt,
            "steps": tr.steps(),
            "duty_cycle": tr.duty_cycle(),
            "total_kwh": tr.total_energy(),
            "mean_daily_kwh": tr.mean_daily_energy(),
            "mean_period_kwh": tr.mean_period_energy(),
            "temperature_mean": mean_t,
            "temperature_sd": sd_t,
            "days": tr.days.iter().map(|d| DaySummary { day: d.day, kwh: d.total, period_kwh: d.periods }).collect::<Vec<_>>(),
        }),
    )?;
    println!("{} steps, duty cycle {:.4}, {:.3} kWh per day", tr.steps(), tr.duty_cycle(), tr.mean_daily_energy());
    Ok(())
}

pub fn build_table(s: &Scenario, out: &Output) -> Result<()> {
    let ambient_path = s.ambient_csv.as_ref().ok_or_else(|| anyhow!("data.ambient_csv is required"))?;
    let prices_path = s.prices_csv.as_ref().ok_or_else(|| anyhow!("data.prices_csv is required"))?;
    let (ambient, day0) = read_ambient(ambient_path)?;
    let prices = read_prices(prices_path)?;
    let days = ambient.day_indices().count();
    let rows = align_prices(&prices, day0, days)?;
    let (table, stats) = core(build_action_table(
        &s.thermal,
        &ambient,
        &rows,
        &s.problem.actions,
        &s.coupons,
        &s.weights,
        &s.sim,
    ))?;
    let actions: Vec<ActionConfig> = table.actions().iter().map(ActionConfig::from).collect();
    let stats_json: Vec<_> = stats
        .iter()
        .map(|st| {
            json!({
                "cost_cents": st.cost_cents,
                "coupons": st.coupons,
                "savings_cents": st.savings_cents,
                "daily_kwh": st.daily_energy,
            })
        })
        .collect();
    out.json("action_table.json", &json!({"actions": actions, "stats": stats_json}))?;

    let mut w = out.csv(
        "action_table.csv",
        &["label", "cost_cents", "coupons", "savings_cents", "daily_kwh"].map(String::from),
    )?;
    for (a, st) in actions.iter().zip(&stats) {
        w.write_record([a.label.clone(), num(st.cost_cents), num(st.coupons), num(st.savings_cents), num(st.daily_energy)])?;
    }
    w.flush()?;
    for (a, st) in actions.iter().zip(&stats) {
        println!(
            "{:>10}  cost {:>7.2}c  coupons {:>8.1}  savings {:>6.2}c  {:.2} kWh/day",
            a.label, st.cost_cents, st.coupons, st.savings_cents, st.daily_energy
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Invariant checks on the configured problem. Returns `false` if any fail.
pub fn validate(s: &Scenario, out: &Output) -> Result<bool> {
    let p = &s.problem;
    let solver = core(MfeSolver::new(p, s.settings))?;
    let coupons = p.actions.coupons();
    let wb = bounds(&coupons, &p.lottery);
    let mut checks = Vec::new();

    let uniform = PopulationProfile::uniform(p.actions.len());
    let mut profiles = vec![uniform.clone()];
    profiles.extend((0..p.actions.len()).map(|a| PopulationProfile::point_mass(p.actions.len(), a)));
    let mut outside = 0;
    let mut evaluated = 0;
    for rho in &profiles {
        let w = core(win_probabilities(rho, &coupons, &p.lottery, s.settings.method))?;
        evaluated += w.len();
        outside += w.iter().filter(|&&x| !wb.contains(x)).count();
    }
    checks.push(Check {
        name: "win probabilities within bounds",
        pass: outside == 0,
        detail: format!("{outside} of {evaluated} outside [{:.4e}, {:.4e}]", wb.lower, wb.upper),
    });

    if p.lottery.winners == 1 {
        let mc = core(win_probabilities(
            &uniform,
            &coupons,
            &p.lottery,
            WinProbabilityMethod::MonteCarlo { samples: 20_000, seed: s.seed },
        ))?;
        let exact = core(win_probabilities(&uniform, &coupons, &p.lottery, WinProbabilityMethod::K1Convolution))?;
        let worst = mc.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        checks.push(Check {
            name: "monte carlo agrees with convolution",
            pass: worst < 0.01,
            detail: format!("max abs gap {worst:.2e} at 20000 samples"),
        });
    }

    let br = core(solver.best_response(&uniform))?;
    let viol = br.value.monotonicity_violations(1e-9).len();
    checks.push(Check {
        name: "value function nondecreasing",
        pass: viol == 0,
        detail: format!("{viol} violations, {} sweeps", br.vi_sweeps),
    });

    let model = core(solver.model(&br.win_probs))?;
    let kernel = core(transition_kernel(&model, &br.policy, solver.psi()))?;
    let power = core(stationary_power(&kernel, s.settings.stationary_tol, s.settings.stationary_max_iters))?;
    let series = stationary_series(&kernel, default_series_terms(p.beta));
    let tv = power.tv_distance(&series);
    checks.push(Check { name: "stationary power vs series", pass: tv <= 1e-6, detail: format!("TV {tv:.2e}") });
    let margin = doeblin_margin(&power, &kernel);
    checks.push(Check {
        name: "regeneration floor",
        pass: margin >= -1e-12,
        detail: format!("min(zeta - (1-beta) psi) = {margin:.2e}"),
    });

    let homes = p.lottery.cluster_size as f64;
    let savings = core(cluster_savings(&br.rho, &p.actions, homes, DAYS_PER_PERIOD))?;
    let ev = core(expected_customer_value(&br.zeta, &br.value))?;
    let pt = SweepPoint::new(p.lottery.prize, Scheme::Lottery, br.rho.clone(), savings, ev, homes);
    let gap = (pt.lsw - (homes * pt.expected_value + pt.profit)).abs();
    checks.push(Check { name: "welfare identity", pass: gap < 1e-9, detail: format!("gap {gap:.2e}") });

    let mut all = true;
    for c in &checks {
        all &= c.pass;
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    out.json("validate_report.json", &json!({"all_pass": all, "checks": checks}))?;
    Ok(all)
}
