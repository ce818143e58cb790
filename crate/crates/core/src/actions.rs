//! The action economy: discomfort cost, coupons and LSE savings per action.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lottery::CouponVector;

/// Number of hourly action periods (2 PM to 8 PM).
pub const PERIODS: usize = 6;

/// Converts a per-day cost in cents into dollars per weekly decision period.
pub const WEEKLY_DOLLARS_PER_DAILY_CENT: f64 = 7.0 / 100.0;

/// One row of the action table.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: String,
    /// Discomfort cost, cents per day.
    pub cost_cents: f64,
    /// Lottery coupons earned per decision period.
    pub coupons: f64,
    /// Expected LSE savings, cents per home-day.
    pub savings_cents: f64,
    /// Thermostat setpoint in each period (°C).
    pub setpoints: [f64; PERIODS],
}

/// All actions available to an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTable {
    actions: Vec<Action>,
}

impl ActionTable {
    pub fn new(actions: Vec<Action>) -> Result<Self> {
        let t = Self { actions };
        t.validate()?;
        Ok(t)
    }

    /// Table without the coupon-ordering check (entries may come from
    /// simulation and break it).
    pub fn unchecked(actions: Vec<Action>) -> Self {
        Self { actions }
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::invalid("actions", "at least one action is required"));
        }
        for a in &self.actions {
            if !a.cost_cents.is_finite() || a.cost_cents < 0.0 {
                return Err(Error::invalid("actions.cost_cents", "must be finite and >= 0"));
            }
            if !a.coupons.is_finite() || a.coupons < 0.0 {
                return Err(Error::invalid("actions.coupons", "must be finite and >= 0"));
            }
            if !a.savings_cents.is_finite() || a.savings_cents < 0.0 {
                return Err(Error::invalid("actions.savings_cents", "must be finite and >= 0"));
            }
        }
        // costlier actions must not earn fewer coupons
        for a in &self.actions {
            for b in &self.actions {
                if a.cost_cents > b.cost_cents && a.coupons < b.coupons {
                    return Err(Error::invalid(
                        "actions",
                        alloc::format!(
                            "coupons must be ordered with cost: `{}` costs more than `{}` but earns fewer coupons",
                            a.label, b.label
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Costs, coupons and savings of the six-action air-conditioning study.
    /// Action 0 is the unchanged 22.5 °C baseline.
    pub fn study_default() -> Self {
        const ROWS: [(f64, f64, f64, [f64; PERIODS]); 6] = [
            (0.0, 37.4, 0.0, [22.5, 22.5, 22.5, 22.5, 22.5, 22.5]),
            (3.68, 715.0, 27.7, [21.5, 21.5, 22.25, 23.5, 23.75, 21.25]),
            (3.15, 693.0, 22.7, [21.5, 21.5, 22.25, 23.5, 23.25, 22.25]),
            (2.68, 577.0, 22.0, [21.5, 21.5, 22.25, 24.0, 23.0, 22.5]),
            (1.34, 434.0, 19.0, [22.0, 22.0, 22.25, 23.0, 23.0, 22.5]),
            (0.95, 222.0, 16.4, [22.0, 22.0, 22.25, 23.25, 22.5, 22.75]),
        ];
        let actions = ROWS
            .iter()
            .enumerate()
            .map(|(i, &(cost_cents, coupons, savings_cents, setpoints))| Action {
                label: alloc::format!("{i}"),
                cost_cents,
                coupons,
                savings_cents,
                setpoints,
            })
            .collect();
        Self { actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Per-period cost used by the dynamic program: `cost_cents * cost_scale`.
    pub fn costs(&self, cost_scale: f64) -> Vec<f64> {
        self.actions.iter().map(|a| a.cost_cents * cost_scale).collect()
    }

    pub fn coupons(&self) -> CouponVector {
        CouponVector::new(self.actions.iter().map(|a| a.coupons).collect())
            .expect("validated table has non-negative coupons")
    }

    pub fn savings_cents(&self) -> Vec<f64> {
        self.actions.iter().map(|a| a.savings_cents).collect()
    }
}
