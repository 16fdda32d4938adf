use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Grid1D, GridFn};
use crate::error::{Error, Result};

/// How a sampled member is continued outside the grid window when its
/// conjugate is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    /// Continue the interpolant affinely with its boundary hull slopes. The
    /// conjugate is then `+inf` outside the slope range actually realized.
    Affine,
    /// Treat the function as `+inf` outside the window (conjugate of
    /// `f + indicator(window)`), which is finite for every slope.
    Window,
}

type Provider = dyn Fn(usize) -> Result<GridFn> + Send + Sync;

/// Lazily evaluated family `n -> f_n`, `1 <= n <= horizon`, on one grid.
#[derive(Clone)]
pub struct FnSeq {
    grid: Grid1D,
    horizon: usize,
    extension: Extension,
    slope_grid: Option<Grid1D>,
    provider: Arc<Provider>,
}

impl fmt::Debug for FnSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSeq")
            .field("grid", &self.grid)
            .field("horizon", &self.horizon)
            .field("extension", &self.extension)
            .field("slope_grid", &self.slope_grid)
            .finish_non_exhaustive()
    }
}

impl FnSeq {
    pub fn new(
        grid: Grid1D,
        horizon: usize,
        provider: impl Fn(usize) -> Result<GridFn> + Send + Sync + 'static,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::BadParameter("horizon must be positive".into()));
        }
        Ok(FnSeq {
            grid,
            horizon,
            extension: Extension::Window,
            slope_grid: None,
            provider: Arc::new(provider),
        })
    }

    /// Samples the closed form `rule(n, x)` on demand.
    pub fn from_rule(
        grid: Grid1D,
        horizon: usize,
        rule: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(grid, horizon, move |n| GridFn::from_fn(grid, |x| rule(n, x)))
    }

    /// The same member for every `n`.
    pub fn constant(f: GridFn, horizon: usize) -> Result<Self> {
        let grid = *f.grid();
        Self::new(grid, horizon, move |_| Ok(f.clone()))
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    /// Slope axis on which conjugates of the members are sampled.
    pub fn with_slope_grid(mut self, slope_grid: Grid1D) -> Self {
        self.slope_grid = Some(slope_grid);
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::BadParameter("horizon must be positive".into()));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn slope_grid(&self) -> Option<Grid1D> {
        self.slope_grid
    }

    pub fn member(&self, n: usize) -> Result<GridFn> {
        if n == 0 || n > self.horizon {
            return Err(Error::HorizonExceeded(format!(
                "member {n} requested, horizon is {}",
                self.horizon
            )));
        }
        let f = (self.provider)(n)?;
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(f)
    }

    /// Members `a..=b` in index order, evaluated in parallel.
    pub fn members(&self, a: usize, b: usize) -> Result<Vec<GridFn>> {
        (a..=b).into_par_iter().map(|n| self.member(n)).collect()
    }

    /// New family `n -> op(n, f_n)` on `grid`, keeping horizon and extension.
    /// The result has no slope grid of its own.
    pub fn map(
        &self,
        grid: Grid1D,
        op: impl Fn(usize, GridFn) -> Result<GridFn> + Send + Sync + 'static,
    ) -> FnSeq {
        let inner = self.clone();
        FnSeq {
            grid,
            horizon: self.horizon,
            extension: self.extension,
            slope_grid: None,
            provider: Arc::new(move |n| op(n, inner.member(n)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_is_deterministic_and_bounded() {
        let g = Grid1D::symmetric(2.0, 41).unwrap();
        let seq = FnSeq::from_rule(g, 8, |n, x| (x - 1.0 / n as f64).abs()).unwrap();
        assert_eq!(seq.member(3).unwrap(), seq.member(3).unwrap());
        assert!(seq.member(0).is_err());
        assert!(seq.member(9).is_err());
        let all = seq.members(1, 8).unwrap();
        assert_eq!(all[2], seq.member(3).unwrap());
    }

    #[test]
    fn foreign_grid_is_rejected() {
        let g = Grid1D::symmetric(2.0, 41).unwrap();
        let other = Grid1D::symmetric(1.0, 41).unwrap();
        let seq = FnSeq::new(g, 4, move |_| Ok(GridFn::constant(other, 0.0))).unwrap();
        assert_eq!(seq.member(1), Err(Error::GridMismatch));
    }
}
