use super::{CouponVector, LotteryConfig};

/// ρ-independent bounds on any action's win probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinBounds {
    pub lower: f64,
    pub upper: f64,
}

impl WinBounds {
    /// `lower <= p <= upper`, with a small slack for rounding.
    pub fn contains(&self, p: f64) -> bool {
        const SLACK: f64 = 1e-12;
        p >= self.lower - SLACK && p <= self.upper + SLACK
    }
}

/// Bounds from the extreme coupon holdings `r_max` and `r_min`:
///
/// * upper: `1 - ((M - K) / M) (r_min / r_max)^K`, from bounding each
///   round's loss factor below;
/// * lower: `1 - (1 - r_min / (r_min + (M - 1) r_max))^K`, the win chance
///   of the poorest agent against the richest field when winners are not
///   removed.
///
/// With a zero-coupon action the bounds degenerate to `(0, 1)`.
pub fn bounds(coupons: &CouponVector, cfg: &LotteryConfig) -> WinBounds {
    let r_max = coupons.max();
    let r_min = coupons.min();
    if r_min <= 0.0 || r_max <= 0.0 {
        return WinBounds { lower: 0.0, upper: 1.0 };
    }
    let m = cfg.cluster_size as f64;
    let k = cfg.winners as i32;
    let upper = 1.0 - (m - k as f64) / m * libm::pow(r_min / r_max, k as f64);
    let single = r_min / (r_min + (m - 1.0) * r_max);
    let lower = 1.0 - libm::pow(1.0 - single, k as f64);
    WinBounds { lower, upper }
}
