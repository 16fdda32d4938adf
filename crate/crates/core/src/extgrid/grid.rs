use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[lo, hi]` with an odd number of points.
///
/// The same type serves as the primal `x` axis and as the dual slope axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    count: usize,
}

/// The dual axis carries the same invariants as the primal one.
pub type SlopeGrid = Grid1D;

#[derive(Serialize, Deserialize)]
struct GridRepr {
    lo: f64,
    hi: f64,
    count: usize,
}

impl TryFrom<GridRepr> for Grid1D {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        Grid1D::new(r.lo, r.hi, r.count)
    }
}

impl From<Grid1D> for GridRepr {
    fn from(g: Grid1D) -> Self {
        GridRepr {
            lo: g.lo,
            hi: g.hi,
            count: g.count,
        }
    }
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!("need lo < hi, got [{lo}, {hi}]")));
        }
        if count < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {count}")));
        }
        if count.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("point count must be odd, got {count}")));
        }
        Ok(Grid1D { lo, hi, count })
    }

    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    /// Parses `lo:hi:count`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("grid spec must be lo:hi:count, got {spec:?}")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?} in grid spec")))
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad count {:?} in grid spec", parts[2])))?;
        Self::new(num(parts[0])?, num(parts[1])?, count)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn is_symmetric(&self) -> bool {
        self.lo == -self.hi
    }

    pub fn mid_index(&self) -> usize {
        (self.count - 1) / 2
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.count);
        let last = self.count - 1;
        if i == last {
            self.hi
        } else if i == 0 {
            self.lo
        } else if self.is_symmetric() && i == self.mid_index() {
            0.0
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / (last as f64)
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    fn slack(&self) -> f64 {
        1e-12 * (self.hi - self.lo).max(1.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - self.slack() && x <= self.hi + self.slack()
    }

    /// Continuous index coordinate `(x - lo) / spacing`.
    pub fn coordinate(&self, x: f64) -> f64 {
        (x - self.lo) / self.spacing()
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let t = self.coordinate(x).round();
        t.clamp(0.0, (self.count - 1) as f64) as usize
    }

    /// Index `i` with `point(i) <= x <= point(i + 1)` and the fraction of the
    /// way from `point(i)` to `point(i + 1)`. Requires `contains(x)`.
    pub fn bracket(&self, x: f64) -> (usize, f64) {
        let last = self.count - 1;
        let t = self.coordinate(x).clamp(0.0, last as f64);
        let mut i = (t.floor() as usize).min(last - 1);
        // the closed-form coordinate can land one cell off near grid points
        if x < self.point(i) && i > 0 {
            i -= 1;
        } else if x > self.point(i + 1) && i + 1 < last {
            i += 1;
        }
        let (a, b) = (self.point(i), self.point(i + 1));
        let frac = ((x - a) / (b - a)).clamp(0.0, 1.0);
        (i, frac)
    }

    /// Index range of grid points with `|point - x| <= radius`, clipped to the
    /// window. Empty when no grid point qualifies.
    pub fn ball_indices(&self, x: f64, radius: f64) -> std::ops::Range<usize> {
        let h = self.spacing();
        let tol = 1e-9;
        let a = ((x - radius - self.lo) / h - tol).ceil().max(0.0);
        let b = ((x + radius - self.lo) / h + tol).floor();
        if b < 0.0 || a > (self.count - 1) as f64 {
            return 0..0;
        }
        let a = a as usize;
        let b = (b as usize).min(self.count - 1);
        if a > b {
            0..0
        } else {
            a..b + 1
        }
    }

    /// True when every point of `other` is a point of `self`.
    pub fn has_subgrid(&self, other: &Grid1D) -> bool {
        let h = self.spacing();
        other.points().all(|x| {
            let t = self.coordinate(x);
            self.contains(x) && (t - t.round()).abs() * h <= self.slack()
        })
    }
}
