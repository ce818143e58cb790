use lottery_mfe::thermal::{
    simulate_home, AmbientSeries, Interpolation, Schedule, SimOptions, ThermalParams, SECONDS_PER_DAY,
};
use proptest::prelude::*;

/// Hourly samples of a summer day: 24 °C at 5 AM, 36 °C at 5 PM.
fn sine_days(days: i64) -> AmbientSeries {
    let c = (0..24 * days)
        .map(|h| 30.0 - 6.0 * (2.0 * std::f64::consts::PI * ((h % 24) as f64 + 7.0) / 24.0).cos())
        .collect();
    AmbientSeries::new(0, 3600, c).unwrap()
}

fn run(p: &ThermalParams, s: &Schedule, amb: &AmbientSeries, dt: f64) -> lottery_mfe::thermal::HomeTrace {
    let opts = SimOptions { dt, ..SimOptions::new(p) };
    simulate_home(p, s, amb, &opts).unwrap()
}

#[test]
fn no_cooling_load_means_zero_energy() {
    let p = ThermalParams::default();
    for c in [10.0, 18.0, 22.5 - 0.31] {
        let amb = AmbientSeries::constant(0, 3 * SECONDS_PER_DAY, c).unwrap();
        let tr = run(&p, &Schedule::flat(p.setpoint), &amb, 10.0);
        assert_eq!(tr.total_energy(), 0.0);
        assert!(tr.days.iter().all(|d| d.total == 0.0));
    }
}

#[test]
fn constant_ambient_duty_cycle() {
    let p = ThermalParams::default();
    for c in [25.0, 28.0, 32.5, 38.0] {
        let amb = AmbientSeries::constant(0, 5 * SECONDS_PER_DAY, c).unwrap();
        let tr = run(&p, &Schedule::flat(p.setpoint), &amb, 10.0);
        let want = p.steady_duty_cycle(c);
        // skip the first day so the start-up transient is gone
        let skip = (SECONDS_PER_DAY as f64 / 10.0) as usize;
        let q = &tr.q[skip..];
        let got = q.iter().filter(|&&x| x).count() as f64 / q.len() as f64;
        assert!((got - want).abs() <= 0.05 * want, "ambient {c}: {got} vs {want}");
    }
}

#[test]
fn halving_the_step_barely_moves_daily_energy() {
    let p = ThermalParams::default();
    let amb = sine_days(3);
    for interp in [Interpolation::ZeroOrderHold, Interpolation::Linear] {
        let coarse = SimOptions { dt: 10.0, interpolation: interp, ..SimOptions::new(&p) };
        let fine = SimOptions { dt: 5.0, ..coarse };
        let e1 = simulate_home(&p, &Schedule::flat(p.setpoint), &amb, &coarse).unwrap().mean_daily_energy();
        let e2 = simulate_home(&p, &Schedule::flat(p.setpoint), &amb, &fine).unwrap().mean_daily_energy();
        assert!(e1 > 0.0);
        assert!((e1 - e2).abs() / e2 < 0.01, "{e1} vs {e2}");
    }
}

#[test]
fn energy_bookkeeping_is_consistent() {
    let p = ThermalParams::default();
    let tr = run(&p, &Schedule::flat(p.setpoint), &sine_days(2), 10.0);
    let by_day: f64 = tr.days.iter().map(|d| d.total).sum();
    assert!((by_day - tr.total_energy()).abs() < 1e-9);
    for d in &tr.days {
        assert!(d.periods.iter().sum::<f64>() <= d.total + 1e-12);
    }
}

#[test]
fn interior_temperature_stays_near_the_band() {
    let p = ThermalParams::default();
    let tr = run(&p, &Schedule::flat(p.setpoint), &sine_days(2), 10.0);
    // one Euler step can overshoot the band by at most the drift per step
    let slack = 10.0 / 3600.0 * (20.0 / (p.resistance * p.capacitance) + p.cop * p.rated_power / p.capacitance);
    for &t in &tr.tau {
        assert!(t <= p.setpoint + p.deadband + slack && t >= p.setpoint - p.deadband - slack, "{t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn raising_the_setpoint_never_adds_energy(base in 20.0f64..25.0, raise in 0.5f64..3.0) {
        let p = ThermalParams { setpoint: base, ..ThermalParams::default() };
        let amb = sine_days(2);
        let low = run(&p, &Schedule::flat(base), &amb, 10.0).mean_daily_energy();
        let high = run(&p, &Schedule { base, periods: [base + raise; 6] }, &amb, 10.0).mean_daily_energy();
        // cycle phase can shift by at most one pass through the deadband
        let one_cycle = p.capacitance * 2.0 * p.deadband / p.cop;
        prop_assert!(high <= low + one_cycle, "{} vs {}", high, low);
    }
}
