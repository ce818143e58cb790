//! Truncated surplus lattice.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default truncation of the surplus axis (dollars).
pub const DEFAULT_X_MIN: f64 = -60.0;
pub const DEFAULT_X_MAX: f64 = 160.0;

/// Lattice `{k * step : lo <= k <= hi}` of surplus values. Zero is always a
/// lattice point; moves that would leave the lattice clamp to its ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusGrid {
    step: f64,
    lo: i64,
    hi: i64,
}

impl SurplusGrid {
    /// Lattice with spacing `step` covering at least `[x_min, x_max]`.
    pub fn new(step: f64, x_min: f64, x_max: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid("step", "must be finite and > 0"));
        }
        if !(x_min < 0.0 && x_max > 0.0) {
            return Err(Error::invalid("bounds", "need x_min < 0 < x_max"));
        }
        let lo = libm::floor(x_min / step + 1e-9) as i64;
        let hi = libm::ceil(x_max / step - 1e-9) as i64;
        Ok(Self { step, lo, hi })
    }

    /// Lattice whose spacing is the largest common divisor of every entry of
    /// `moves` (each must be a decimal with at most six places).
    pub fn for_moves(moves: &[f64], x_min: f64, x_max: f64) -> Result<Self> {
        let step = common_step(moves)?;
        Self::new(step, x_min, x_max)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        (self.lo + i as i64) as f64 * self.step
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Index of the surplus value 0.
    pub fn zero_index(&self) -> usize {
        (-self.lo) as usize
    }

    /// Index of the lattice point nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = libm::round(x / self.step) as i64;
        (k.clamp(self.lo, self.hi) - self.lo) as usize
    }

    /// Number of lattice steps spanned by `delta`; errors unless `delta` is
    /// an integer multiple of the spacing.
    pub fn steps_of(&self, delta: f64) -> Result<usize> {
        let k = delta / self.step;
        let n = libm::round(k);
        if n < 0.0 || (k - n).abs() > 1e-6 {
            return Err(Error::invalid(
                "grid",
                alloc::format!("increment {delta} is not a multiple of step {}", self.step),
            ));
        }
        Ok(n as usize)
    }

    /// Index after moving `steps` up, clamped at the top.
    #[inline]
    pub fn up(&self, i: usize, steps: usize) -> usize {
        (i + steps).min(self.len() - 1)
    }

    /// Index after moving `steps` down, clamped at the bottom.
    #[inline]
    pub fn down(&self, i: usize, steps: usize) -> usize {
        i.saturating_sub(steps)
    }
}

/// Largest `d` such that every entry of `moves` is an integer multiple of `d`.
pub fn common_step(moves: &[f64]) -> Result<f64> {
    if moves.is_empty() || moves.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::invalid("moves", "surplus increments must be finite and > 0"));
    }
    let mut scale = 1u64;
    for _ in 0..=6 {
        let s = scale as f64;
        let ints: Option<Vec<u64>> = moves
            .iter()
            .map(|&m| {
                let v = m * s;
                let n = libm::round(v);
                ((v - n).abs() <= 1e-7 * n.max(1.0) && n >= 1.0).then_some(n as u64)
            })
            .collect();
        if let Some(ints) = ints {
            let g = ints.iter().copied().fold(0, gcd);
            return Ok(g as f64 / s);
        }
        scale *= 10;
    }
    Err(Error::invalid("moves", "increments need at most six decimal places"))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
