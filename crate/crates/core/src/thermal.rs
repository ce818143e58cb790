//! Deadband-controlled air-conditioned home, action statistics, discomfort
//! cost, differential price and energy-coupon awards.
//!
//! Interior temperature follows
//!
//! ```text
//! dtau/dt = -(tau - tau_a) / (R C) - q eta P_m / C
//! ```
//!
//! with the compressor `q` switched on above `tau_r + delta`, off below
//! `tau_r - delta`, and held in between. Time is in hours inside the
//! integrator and seconds at the interface.

use alloc::vec;
use alloc::vec::Vec;

use crate::actions::{Action, ActionTable, PERIODS};
use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;
/// Clock hour at which the first action period starts (2 PM).
pub const FIRST_PERIOD_HOUR: i64 = 14;

/// Residential AC unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    /// Thermal capacitance, kWh/°C.
    pub capacitance: f64,
    /// Thermal resistance, °C/kW.
    pub resistance: f64,
    /// Rated electrical power, kW.
    pub rated_power: f64,
    /// Coefficient of performance.
    pub cop: f64,
    /// Setpoint outside the action window, °C.
    pub setpoint: f64,
    /// Half-width of the deadband, °C.
    pub deadband: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self { capacitance: 10.0, resistance: 2.0, rated_power: 6.8, cop: 2.5, setpoint: 22.5, deadband: 0.3 }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("capacitance", self.capacitance),
            ("resistance", self.resistance),
            ("rated_power", self.rated_power),
            ("cop", self.cop),
            ("setpoint", self.setpoint),
            ("deadband", self.deadband),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(field, "must be finite and > 0"));
            }
        }
        if self.deadband >= 5.0 {
            return Err(Error::invalid("deadband", "must be < 5"));
        }
        Ok(())
    }

    /// Long-run ON fraction at constant ambient `tau_a`:
    /// `(tau_a - tau_r) / (R eta P_m)`, clipped to `[0, 1]`.
    pub fn steady_duty_cycle(&self, ambient: f64) -> f64 {
        ((ambient - self.setpoint) / (self.resistance * self.cop * self.rated_power)).clamp(0.0, 1.0)
    }
}

/// How ambient temperature is read between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    ZeroOrderHold,
    Linear,
}

/// Uniformly sampled outdoor temperature. `start` is in seconds on a local
/// clock whose days begin at multiples of 86 400.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientSeries {
    start: i64,
    interval: i64,
    celsius: Vec<f64>,
}

impl AmbientSeries {
    pub fn new(start: i64, interval: i64, celsius: Vec<f64>) -> Result<Self> {
        if interval <= 0 {
            return Err(Error::invalid("ambient.interval", "must be > 0"));
        }
        if celsius.is_empty() || celsius.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("ambient", "needs at least one finite sample"));
        }
        Ok(Self { start, interval, celsius })
    }

    /// From `(seconds, celsius)` samples with strictly increasing, uniformly
    /// spaced timestamps.
    pub fn from_samples(samples: &[(i64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("ambient", "needs at least two samples"));
        }
        let interval = samples[1].0 - samples[0].0;
        for w in samples.windows(2) {
            let d = w[1].0 - w[0].0;
            if d <= 0 {
                return Err(Error::invalid("ambient.timestamp", "must be strictly increasing"));
            }
            if d != interval {
                return Err(Error::invalid("ambient.timestamp", "samples must be uniformly spaced"));
            }
        }
        Self::new(samples[0].0, interval, samples.iter().map(|s| s.1).collect())
    }

    /// Constant temperature over `[start, start + seconds)`.
    pub fn constant(start: i64, seconds: i64, celsius: f64) -> Result<Self> {
        Self::new(start, seconds.max(1), vec![celsius])
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn interval(&self) -> i64 {
        self.interval
    }

    pub fn samples(&self) -> &[f64] {
        &self.celsius
    }

    /// End of the covered horizon (exclusive).
    pub fn end(&self) -> i64 {
        self.start + self.interval * self.celsius.len() as i64
    }

    /// Temperature at time `t` (clamped to the covered horizon).
    pub fn at(&self, t: f64, interp: Interpolation) -> f64 {
        let rel = (t - self.start as f64) / self.interval as f64;
        let last = self.celsius.len() - 1;
        let k = (libm::floor(rel).max(0.0) as usize).min(last);
        match interp {
            Interpolation::ZeroOrderHold => self.celsius[k],
            Interpolation::Linear => {
                if k == last {
                    return self.celsius[last];
                }
                let frac = (rel - k as f64).clamp(0.0, 1.0);
                self.celsius[k] + frac * (self.celsius[k + 1] - self.celsius[k])
            }
        }
    }

    /// The sub-series of whole days `[first, first + count)` counted from the
    /// day containing `start`.
    pub fn day_indices(&self) -> core::ops::Range<i64> {
        let d0 = self.start.div_euclid(SECONDS_PER_DAY);
        let d1 = (self.end() - 1).div_euclid(SECONDS_PER_DAY);
        d0..d1 + 1
    }
}

/// Action window index (0..6) of clock time `t`, if inside 2-8 PM.
pub fn period_of(t: i64) -> Option<usize> {
    let h = t.rem_euclid(SECONDS_PER_DAY) / 3600 - FIRST_PERIOD_HOUR;
    (0..PERIODS as i64).contains(&h).then_some(h as usize)
}

/// Energy of one simulated day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayEnergy {
    /// Day number on the series clock.
    pub day: i64,
    /// kWh in each action period.
    pub periods: [f64; PERIODS],
    /// kWh over the simulated part of the day.
    pub total: f64,
}

/// Step-by-step simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct HomeTrace {
    pub start: i64,
    pub dt: f64,
    /// Interior temperature at the start of each step.
    pub tau: Vec<f64>,
    /// Compressor state during each step.
    pub q: Vec<bool>,
    pub days: Vec<DayEnergy>,
    pub rated_power: f64,
}

impl HomeTrace {
    pub fn steps(&self) -> usize {
        self.tau.len()
    }

    /// Clock time of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.start as f64 + k as f64 * self.dt
    }

    /// Fraction of steps with the compressor on.
    pub fn duty_cycle(&self) -> f64 {
        self.q.iter().filter(|&&q| q).count() as f64 / self.q.len().max(1) as f64
    }

    /// `P_m * (ON time)` in kWh.
    pub fn total_energy(&self) -> f64 {
        self.rated_power * self.q.iter().filter(|&&q| q).count() as f64 * self.dt / 3600.0
    }

    /// Mean energy per day over days that are fully covered.
    pub fn mean_daily_energy(&self) -> f64 {
        mean(self.days.iter().map(|d| d.total))
    }

    /// Mean per-period energy over days.
    pub fn mean_period_energy(&self) -> [f64; PERIODS] {
        let mut out = [0.0; PERIODS];
        for (j, o) in out.iter_mut().enumerate() {
            *o = mean(self.days.iter().map(|d| d.periods[j]));
        }
        out
    }

    /// Mean and population standard deviation of interior temperature over
    /// the steps selected by `window`.
    pub fn temperature_stats(&self, window: CostWindow) -> (f64, f64) {
        let sel: Vec<f64> = (0..self.steps())
            .filter(|&k| match window {
                CostWindow::ActionPeriods => period_of(libm::floor(self.time(k)) as i64).is_some(),
                CostWindow::WholeDay => true,
            })
            .map(|k| self.tau[k])
            .collect();
        let m = mean(sel.iter().copied());
        let var = mean(sel.iter().map(|t| (t - m) * (t - m)));
        (m, libm::sqrt(var))
    }
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Setpoints per action period; outside the window the base setpoint holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub base: f64,
    pub periods: [f64; PERIODS],
}

impl Schedule {
    pub fn flat(setpoint: f64) -> Self {
        Self { base: setpoint, periods: [setpoint; PERIODS] }
    }

    pub fn for_action(params: &ThermalParams, action: &Action) -> Self {
        Self { base: params.setpoint, periods: action.setpoints }
    }

    pub fn at(&self, t: i64) -> f64 {
        period_of(t).map_or(self.base, |j| self.periods[j])
    }
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Euler step in seconds (at most 60).
    pub dt: f64,
    pub tau0: f64,
    pub q0: bool,
    pub interpolation: Interpolation,
}

impl SimOptions {
    pub fn new(params: &ThermalParams) -> Self {
        Self { dt: 10.0, tau0: params.setpoint, q0: false, interpolation: Interpolation::ZeroOrderHold }
    }
}

/// Forward-Euler simulation of the home over the whole ambient horizon.
pub fn simulate_home(
    params: &ThermalParams,
    schedule: &Schedule,
    ambient: &AmbientSeries,
    opts: &SimOptions,
) -> Result<HomeTrace> {
    params.validate()?;
    if !(opts.dt > 0.0 && opts.dt <= 60.0) {
        return Err(Error::invalid("dt", "must lie in (0, 60] seconds"));
    }
    let span = (ambient.end() - ambient.start()) as f64;
    let steps = libm::floor(span / opts.dt + 1e-9) as usize;
    if steps == 0 {
        return Err(Error::invalid("ambient", "horizon shorter than one step"));
    }
    let h = opts.dt / 3600.0;
    let rc = params.resistance * params.capacitance;
    let cool = params.cop * params.rated_power / params.capacitance;
    let step_kwh = params.rated_power * h;

    let mut tau = Vec::with_capacity(steps);
    let mut q = Vec::with_capacity(steps);
    let mut days: Vec<DayEnergy> = Vec::new();
    let (mut t_now, mut on) = (opts.tau0, opts.q0);
    for k in 0..steps {
        let t = ambient.start() as f64 + k as f64 * opts.dt;
        let clock = libm::floor(t) as i64;
        let sp = schedule.at(clock);
        if t_now > sp + params.deadband {
            on = true;
        } else if t_now < sp - params.deadband {
            on = false;
        }
        tau.push(t_now);
        q.push(on);

        let day = clock.div_euclid(SECONDS_PER_DAY);
        if days.last().map_or(true, |d| d.day != day) {
            days.push(DayEnergy { day, periods: [0.0; PERIODS], total: 0.0 });
        }
        if on {
            let d = days.last_mut().expect("pushed above");
            d.total += step_kwh;
            if let Some(j) = period_of(clock) {
                d.periods[j] += step_kwh;
            }
        }

        let ta = ambient.at(t, opts.interpolation);
        let drift = -(t_now - ta) / rc - if on { cool } else { 0.0 };
        t_now += h * drift;
    }
    Ok(HomeTrace { start: ambient.start(), dt: opts.dt, tau, q, days, rated_power: params.rated_power })
}

/// Which samples enter the temperature statistics of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostWindow {
    /// 2-8 PM of each day.
    #[default]
    ActionPeriods,
    WholeDay,
}

/// Discomfort weights of the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// Weight on the temperature standard deviation.
    pub lambda: f64,
    /// Energy price, cents per kWh.
    pub varsigma: f64,
    pub window: CostWindow,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { lambda: 10.0, varsigma: 10.0, window: CostWindow::ActionPeriods }
    }
}

/// `theta_a = |mean_0 - mean_a| + lambda |sd_0 - sd_a| - varsigma (E_0 - E_a)`
/// in cents per day.
pub fn action_cost(baseline: &HomeTrace, action: &HomeTrace, weights: &CostWeights) -> Result<f64> {
    if baseline.steps() != action.steps() || baseline.start != action.start || baseline.dt != action.dt {
        return Err(Error::invalid("traces", "baseline and action traces must cover the same horizon"));
    }
    let (m0, s0) = baseline.temperature_stats(weights.window);
    let (ma, sa) = action.temperature_stats(weights.window);
    let e0 = baseline.mean_daily_energy();
    let ea = action.mean_daily_energy();
    Ok(cost_from_stats((m0, s0, e0), (ma, sa, ea), weights))
}

/// The cost formula on precomputed `(mean, sd, kWh per day)` tuples.
pub fn cost_from_stats(base: (f64, f64, f64), action: (f64, f64, f64), w: &CostWeights) -> f64 {
    (base.0 - action.0).abs() + w.lambda * (base.1 - action.1).abs() - w.varsigma * (base.2 - action.2)
}

/// `H(y, z) = sum_j (k(y_j) - k(z_j)) pi_j` in dollars, with usage in kWh
/// and prices in dollars per MWh.
pub fn differential_price(usage_y: &[f64; PERIODS], usage_z: &[f64; PERIODS], prices: &[f64; PERIODS]) -> f64 {
    (0..PERIODS).map(|j| (usage_y[j] - usage_z[j]) / 1000.0 * prices[j]).sum()
}

/// Coupons per kWh in one period, optionally raised above a usage threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouponRate {
    pub base: f64,
    /// `(threshold kWh, rate)` applied when usage exceeds the threshold.
    pub high: Option<(f64, f64)>,
}

impl CouponRate {
    pub fn rate(&self, usage: f64) -> f64 {
        match self.high {
            Some((threshold, r)) if usage > threshold => r,
            _ => self.base,
        }
    }
}

/// Coupon rule for each action period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouponSchedule {
    pub rates: [CouponRate; PERIODS],
}

impl Default for CouponSchedule {
    fn default() -> Self {
        let flat = |base| CouponRate { base, high: None };
        Self {
            rates: [
                CouponRate { base: 1.8, high: Some((2.464, 107.0)) },
                flat(5.4),
                flat(1.8),
                flat(0.0),
                flat(3.6),
                CouponRate { base: 1.8, high: Some((2.24, 54.0)) },
            ],
        }
    }
}

impl CouponSchedule {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rates {
            let high = r.high.map_or(0.0, |h| h.1);
            if !(r.base >= 0.0) || !(high >= 0.0) {
                return Err(Error::invalid("coupon_schedule", "rates must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Mean day-ahead price per period of the study, dollars per MWh.
pub const MEAN_PRICES: [f64; PERIODS] = [47.0, 55.0, 78.0, 99.6, 66.5, 49.5];

/// `sum_j rate_j(x_j) x_j` for per-period usage `x`.
pub fn award_coupons(usage: &[f64; PERIODS], schedule: &CouponSchedule) -> f64 {
    usage.iter().zip(&schedule.rates).map(|(&x, r)| r.rate(x) * x).sum()
}

/// Regenerated cost, coupons and savings of one action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionStats {
    pub cost_cents: f64,
    pub coupons: f64,
    pub savings_cents: f64,
    pub daily_energy: f64,
}

/// Recomputes cost, coupons and savings of every action in `table` by
/// simulation. `prices` holds per-day period prices aligned with the
/// ambient days; days without a price row use the last row.
pub fn build_action_table(
    params: &ThermalParams,
    ambient: &AmbientSeries,
    prices: &[[f64; PERIODS]],
    table: &ActionTable,
    schedule: &CouponSchedule,
    weights: &CostWeights,
    opts: &SimOptions,
) -> Result<(ActionTable, Vec<ActionStats>)> {
    if prices.is_empty() {
        return Err(Error::invalid("prices", "at least one day of prices is required"));
    }
    schedule.validate()?;
    let base_schedule = Schedule::flat(params.setpoint);
    let base = simulate_home(params, &base_schedule, ambient, opts)?;
    let mut stats = Vec::with_capacity(table.len());
    let mut rows = Vec::with_capacity(table.len());
    for a in table.actions() {
        let tr = simulate_home(params, &Schedule::for_action(params, a), ambient, opts)?;
        let cost = action_cost(&base, &tr, weights)?;
        let coupons = mean(tr.days.iter().map(|d| award_coupons(&d.periods, schedule)));
        let savings = mean(tr.days.iter().zip(&base.days).enumerate().map(|(i, (d, b))| {
            let pi = &prices[i.min(prices.len() - 1)];
            100.0 * differential_price(&b.periods, &d.periods, pi)
        }));
        let s = ActionStats {
            cost_cents: cost.max(0.0),
            coupons,
            savings_cents: savings.max(0.0),
            daily_energy: tr.mean_daily_energy(),
        };
        stats.push(ActionStats { cost_cents: cost, savings_cents: savings, ..s });
        rows.push(Action { cost_cents: s.cost_cents, coupons: s.coupons, savings_cents: s.savings_cents, ..a.clone() });
    }
    Ok((ActionTable::unchecked(rows), stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(c: f64) -> AmbientSeries {
        AmbientSeries::constant(0, SECONDS_PER_DAY, c).unwrap()
    }

    #[test]
    fn cool_day_never_runs() {
        let p = ThermalParams::default();
        let tr = simulate_home(&p, &Schedule::flat(22.5), &day(20.0), &SimOptions::new(&p)).unwrap();
        assert!(tr.q.iter().all(|q| !q));
        assert_eq!(tr.total_energy(), 0.0);
        assert!(tr.tau.last().unwrap() < &21.0 && tr.tau.last().unwrap() > &20.0);
    }

    #[test]
    fn hot_day_duty_cycle() {
        let p = ThermalParams::default();
        let amb = AmbientSeries::constant(0, 3 * SECONDS_PER_DAY, 32.5).unwrap();
        let tr = simulate_home(&p, &Schedule::flat(22.5), &amb, &SimOptions::new(&p)).unwrap();
        let want = p.steady_duty_cycle(32.5);
        assert!((want - 10.0 / 34.0).abs() < 1e-15);
        assert!((tr.duty_cycle() - want).abs() / want < 0.05, "{}", tr.duty_cycle());
    }

    #[test]
    fn energy_is_power_times_on_time() {
        let p = ThermalParams::default();
        let tr = simulate_home(&p, &Schedule::flat(22.5), &day(30.0), &SimOptions::new(&p)).unwrap();
        let from_days: f64 = tr.days.iter().map(|d| d.total).sum();
        assert!((tr.total_energy() - from_days).abs() < 1e-9);
    }

    #[test]
    fn periods() {
        assert_eq!(period_of(13 * 3600 + 3599), None);
        assert_eq!(period_of(14 * 3600), Some(0));
        assert_eq!(period_of(19 * 3600 + 10), Some(5));
        assert_eq!(period_of(20 * 3600), None);
        assert_eq!(period_of(SECONDS_PER_DAY + 15 * 3600), Some(1));
    }

    #[test]
    fn cost_of_baseline_is_zero() {
        let p = ThermalParams::default();
        let tr = simulate_home(&p, &Schedule::flat(22.5), &day(31.0), &SimOptions::new(&p)).unwrap();
        assert_eq!(action_cost(&tr, &tr, &CostWeights::default()).unwrap(), 0.0);
        let c = cost_from_stats((22.5, 0.2, 30.0), (23.0, 0.2, 30.0), &CostWeights::default());
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coupon_rules() {
        let s = CouponSchedule::default();
        assert!((award_coupons(&[1.0; 6], &s) - 14.4).abs() < 1e-12);
        assert_eq!(award_coupons(&[0.0; 6], &s), 0.0);
        let mut x = [0.0; 6];
        x[0] = 2.5;
        assert!((award_coupons(&x, &s) - 267.5).abs() < 1e-12);
    }

    #[test]
    fn differential_price_example() {
        let mut y = [0.0; 6];
        y[3] = -1.0;
        y[0] = 1.0;
        let z = [0.0; 6];
        assert!((differential_price(&y, &z, &MEAN_PRICES) + 0.0526).abs() < 1e-12);
        assert_eq!(differential_price(&y, &y, &MEAN_PRICES), 0.0);
    }

    #[test]
    fn ambient_validation() {
        assert!(AmbientSeries::from_samples(&[(0, 1.0), (900, 2.0), (1800, 3.0)]).is_ok());
        assert!(AmbientSeries::from_samples(&[(0, 1.0), (900, 2.0), (2000, 3.0)]).is_err());
        assert!(AmbientSeries::from_samples(&[(0, 1.0), (0, 2.0)]).is_err());
        let a = AmbientSeries::from_samples(&[(0, 10.0), (900, 20.0)]).unwrap();
        assert_eq!(a.at(450.0, Interpolation::ZeroOrderHold), 10.0);
        assert_eq!(a.at(450.0, Interpolation::Linear), 15.0);
    }

    #[test]
    fn rejects_coarse_step() {
        let p = ThermalParams::default();
        let o = SimOptions { dt: 120.0, ..SimOptions::new(&p) };
        assert!(simulate_home(&p, &Schedule::flat(22.5), &day(30.0), &o).is_err());
    }
}
