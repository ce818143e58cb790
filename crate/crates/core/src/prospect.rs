//! Prospect-theory value function and probability weighting.
//!
//! The dynamic program only needs two maps: a utility over surplus and a
//! distortion of probabilities. Both are exposed through [`Prospect`] so the
//! solver can run with the S-shaped defaults or with any test utility.

use crate::error::{Error, Result};

/// Utility over surplus plus subjective probability weighting.
pub trait Prospect {
    /// Utility of holding surplus `x` (dollars).
    fn utility(&self, x: f64) -> f64;
    /// Perceived weight of an objective probability `p` in `[0, 1]`.
    fn weight(&self, p: f64) -> f64;
}

/// Parameters of the S-shaped value function and the inverse-S weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProspectParams {
    /// Curvature exponent, `0 < gamma < 1`.
    pub gamma: f64,
    /// Loss-aversion multiplier, `> 1`.
    pub varphi: f64,
    /// Weighting distortion, `0 < xi <= 1`; `xi = 1` is undistorted.
    pub xi: f64,
}

impl Default for ProspectParams {
    fn default() -> Self {
        Self { gamma: 0.88, varphi: 2.25, xi: 0.37 }
    }
}

impl ProspectParams {
    pub fn new(gamma: f64, varphi: f64, xi: f64) -> Result<Self> {
        let p = Self { gamma, varphi, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("gamma", "must lie in (0, 1)"));
        }
        if !(self.varphi > 1.0) || !self.varphi.is_finite() {
            return Err(Error::invalid("varphi", "must be finite and > 1"));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::invalid("xi", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

impl Prospect for ProspectParams {
    #[inline]
    fn utility(&self, x: f64) -> f64 {
        if x >= 0.0 {
            libm::pow(x, self.gamma)
        } else {
            -self.varphi * libm::pow(-x, self.gamma)
        }
    }

    #[inline]
    fn weight(&self, p: f64) -> f64 {
        if p <= 0.0 {
            0.0
        } else if p >= 1.0 {
            1.0
        } else {
            libm::exp(-libm::pow(-libm::log(p), self.xi))
        }
    }
}

/// Checked utility: rejects non-finite surplus.
pub fn utility(x: f64, params: &ProspectParams) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid("x", "surplus must be finite"));
    }
    Ok(params.utility(x))
}

/// Checked weighting: rejects probabilities outside `[0, 1]`.
pub fn weight(p: f64, params: &ProspectParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", "probability must lie in [0, 1]"));
    }
    Ok(params.weight(p))
}

/// A [`Prospect`] assembled from two closures.
#[derive(Clone, Copy)]
pub struct FnProspect<U, W> {
    pub utility: U,
    pub weight: W,
}

impl<U, W> Prospect for FnProspect<U, W>
where
    U: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    fn utility(&self, x: f64) -> f64 {
        (self.utility)(x)
    }

    fn weight(&self, p: f64) -> f64 {
        (self.weight)(p)
    }
}

impl<P: Prospect + ?Sized> Prospect for &P {
    fn utility(&self, x: f64) -> f64 {
        (**self).utility(x)
    }

    fn weight(&self, p: f64) -> f64 {
        (**self).weight(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const E_INV: f64 = 0.367_879_441_171_442_33;

    #[test]
    fn utility_anchor_points() {
        let p = ProspectParams::default();
        assert_eq!(utility(0.0, &p).unwrap(), 0.0);
        assert_eq!(utility(1.0, &p).unwrap(), 1.0);
        assert_eq!(utility(-1.0, &p).unwrap(), -2.25);
        // 2^0.88 = exp(0.88 ln 2), reference value from an arbitrary-precision evaluation
        assert!((utility(2.0, &p).unwrap() - 1.840_375_301_249_750_2).abs() < 1e-14);
    }

    #[test]
    fn utility_rejects_non_finite() {
        let p = ProspectParams::default();
        assert!(utility(f64::NAN, &p).is_err());
        assert!(utility(f64::INFINITY, &p).is_err());
    }

    #[test]
    fn weight_anchor_points() {
        let p = ProspectParams::default();
        assert_eq!(weight(0.0, &p).unwrap(), 0.0);
        assert_eq!(weight(1.0, &p).unwrap(), 1.0);
        for xi in [0.2, 0.37, 0.6, 1.0] {
            let q = ProspectParams { xi, ..p };
            assert!((q.weight(E_INV) - E_INV).abs() < 1e-15);
        }
        assert!(weight(-0.1, &p).is_err());
        assert!(weight(1.1, &p).is_err());
    }

    #[test]
    fn unit_xi_is_identity() {
        let p = ProspectParams { xi: 1.0, ..Default::default() };
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((p.weight(x) - x).abs() < 1e-15, "{x}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(ProspectParams::new(0.88, 2.25, 0.37).is_ok());
        assert!(ProspectParams::new(1.0, 2.25, 0.37).is_err());
        assert!(ProspectParams::new(0.5, 1.0, 0.37).is_err());
        assert!(ProspectParams::new(0.5, 2.0, 0.0).is_err());
        assert!(ProspectParams::new(0.5, 2.0, 1.01).is_err());
    }

    proptest! {
        #[test]
        fn utility_strictly_increasing(a in -500.0f64..500.0, d in 1e-6f64..50.0) {
            let p = ProspectParams::default();
            prop_assert!(p.utility(a) < p.utility(a + d));
        }

        #[test]
        fn utility_concave_gains_convex_losses(a in 0.0f64..300.0, d in 1e-3f64..50.0) {
            let p = ProspectParams::default();
            let (x0, x1, x2) = (a, a + d, a + 2.0 * d);
            prop_assert!(p.utility(x1) >= 0.5 * (p.utility(x0) + p.utility(x2)) - 1e-12);
            let (y0, y1, y2) = (-x2, -x1, -x0);
            prop_assert!(p.utility(y1) <= 0.5 * (p.utility(y0) + p.utility(y2)) + 1e-12);
        }

        #[test]
        fn losses_loom_larger(x in 1e-6f64..1e4) {
            let p = ProspectParams::default();
            prop_assert!(p.utility(-x).abs() > p.utility(x));
        }

        #[test]
        fn weight_monotone_and_inverse_s(a in 0.0f64..1.0, b in 0.0f64..1.0, xi in 0.05f64..0.99) {
            let p = ProspectParams { xi, ..Default::default() };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.weight(lo) <= p.weight(hi));
            if a > 1e-9 && a < E_INV - 1e-9 {
                prop_assert!(p.weight(a) > a);
            }
            if a > E_INV + 1e-9 && a < 1.0 - 1e-9 {
                prop_assert!(p.weight(a) < a);
            }
        }
    }
}
