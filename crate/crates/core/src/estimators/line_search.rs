//! Armijo backtracking along a fixed direction.

/// Backtracking parameters. Defaults: unit initial step, halving, and a
/// sufficient-decrease fraction of 0.3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub init_step: f64,
    pub shrink: f64,
    pub slope_frac: f64,
    pub max_shrinks: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            init_step: 1.0,
            shrink: 0.5,
            slope_frac: 0.3,
            max_shrinks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Accepted step, or 0 when the search stalled.
    pub step: f64,
    /// Objective at the accepted point (equals `f0` on a stall).
    pub value: f64,
    pub stalled: bool,
}

impl Backtracking {
    /// Find the largest `t = init_step * shrink^n` with
    /// `phi(t) <= f0 - slope_frac * t * dir_norm_sq`, where `phi(t)` is the
    /// objective at `x + t d` and `dir_norm_sq = ||d||^2`.
    pub fn search<F: FnMut(f64) -> f64>(&self, f0: f64, dir_norm_sq: f64, mut phi: F) -> StepOutcome {
        debug_assert!(self.init_step > 0.0 && self.shrink > 0.0 && self.shrink < 1.0);
        let mut t = self.init_step;
        for _ in 0..=self.max_shrinks {
            let value = phi(t);
            let decreased = value < f0 || dir_norm_sq == 0.0;
            if value.is_finite() && decreased && value <= f0 - self.slope_frac * t * dir_norm_sq {
                return StepOutcome { step: t, value, stalled: false };
            }
            t *= self.shrink;
        }
        StepOutcome { step: 0.0, value: f0, stalled: true }
    }
}
