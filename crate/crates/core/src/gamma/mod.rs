//! Finite-horizon Γ-limit estimators, Painlevé–Kuratowski set limits and the
//! diagonal index selection for double sequences.

mod diagonal;
mod estimate;
mod sets;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extgrid::Grid1D;

pub use diagonal::{diagonal_index, DiagonalPath, DoubleSeq};
pub use estimate::{
    gamma_liminf, gamma_limits, gamma_limit_verdict, gamma_limsup, trusted_mask, GammaEstimate,
};
pub use sets::{set_li, set_ls, SetLimit, SetLimitParams, SetPoint, SetSeq};

/// Truncation of `n -> inf` and of `eps -> 0`.
///
/// Members `tail_start..=horizon` form the tail window. A second window
/// `tail_start/2..=horizon/2` feeds the divergence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaParams {
    eps_schedule: Vec<f64>,
    tail_start: usize,
    horizon: usize,
}

impl GammaParams {
    pub fn new(eps_schedule: Vec<f64>, tail_start: usize, horizon: usize) -> Result<Self> {
        if eps_schedule.is_empty() {
            return Err(Error::BadParameter("empty eps schedule".into()));
        }
        if eps_schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::BadParameter("eps values must be positive".into()));
        }
        if eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::BadParameter("eps schedule must strictly decrease".into()));
        }
        if tail_start < 2 || tail_start >= horizon {
            return Err(Error::BadParameter(format!(
                "need 2 <= tail_start < horizon, got tail_start {tail_start}, horizon {horizon}"
            )));
        }
        Ok(GammaParams {
            eps_schedule,
            tail_start,
            horizon,
        })
    }

    /// `eps = 4h, 2h, h` and `tail_start = horizon / 2`.
    pub fn for_grid(grid: &Grid1D, horizon: usize) -> Result<Self> {
        let h = grid.spacing();
        Self::new(vec![4.0 * h, 2.0 * h, h], horizon / 2, horizon)
    }

    pub fn with_tail_start(self, tail_start: usize) -> Result<Self> {
        Self::new(self.eps_schedule, tail_start, self.horizon)
    }

    /// Same schedule on another grid's spacing.
    pub fn rescaled(&self, from: &Grid1D, to: &Grid1D) -> Self {
        let r = to.spacing() / from.spacing();
        GammaParams {
            eps_schedule: self.eps_schedule.iter().map(|e| e * r).collect(),
            ..self.clone()
        }
    }

    pub fn eps_schedule(&self) -> &[f64] {
        &self.eps_schedule
    }

    pub fn min_eps(&self) -> f64 {
        *self.eps_schedule.last().expect("schedule is nonempty")
    }

    pub fn max_eps(&self) -> f64 {
        self.eps_schedule[0]
    }

    pub fn tail_start(&self) -> usize {
        self.tail_start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Rejects radii below the grid spacing, where a ball holds one point.
    pub fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.min_eps() < grid.spacing() * (1.0 - 1e-9) {
            return Err(Error::BadParameter(format!(
                "smallest eps {} is below the grid spacing {}",
                self.min_eps(),
                grid.spacing()
            )));
        }
        Ok(())
    }

    /// Truncation allowance `spacing + 2 / tail_start` on `grid`.
    pub fn allowance(&self, grid: &Grid1D) -> f64 {
        grid.spacing() + 2.0 / self.tail_start as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_validation() {
        assert!(GammaParams::new(vec![0.1, 0.2], 4, 8).is_err());
        assert!(GammaParams::new(vec![0.2, 0.1], 8, 8).is_err());
        assert!(GammaParams::new(vec![0.2, 0.1], 1, 8).is_err());
        let g = Grid1D::symmetric(1.0, 21).unwrap();
        let p = GammaParams::for_grid(&g, 64).unwrap();
        assert_eq!(p.tail_start(), 32);
        assert!(p.check_grid(&g).is_ok());
        let coarse = Grid1D::symmetric(1.0, 11).unwrap();
        assert!(p.check_grid(&coarse).is_err());
    }
}
