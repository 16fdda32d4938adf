use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ExtReal, Grid1D};
use crate::error::{Error, Result};

/// Extended-real function sampled on a uniform grid.
///
/// Between samples the function is read as the piecewise-linear interpolant,
/// except that a `+inf` neighbour makes the whole cell `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    grid: Grid1D,
    values: Vec<ExtReal>,
}

impl GridFn {
    pub fn new(grid: Grid1D, values: Vec<ExtReal>) -> Result<Self> {
        if values.contains(&ExtReal::NegInf) {
            return Err(Error::NegInfNotAllowed);
        }
        Self::new_allow_neg_inf(grid, values)
    }

    /// Like [`GridFn::new`] but admits `-inf` samples, as produced by the
    /// conjugate of an improper function.
    pub fn new_allow_neg_inf(grid: Grid1D, values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.count()
            )));
        }
        Ok(GridFn { grid, values })
    }

    /// Samples `f` at every grid point; `+inf` (and NaN) become `PosInf`.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(|x| ExtReal::from_f64(f(x))).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        GridFn {
            grid,
            values: vec![ExtReal::Finite(c); grid.count()],
        }
    }

    /// `0` on `[a, b]`, `+inf` elsewhere. Grid points within roundoff of the
    /// ends count as inside.
    pub fn indicator(grid: Grid1D, a: f64, b: f64) -> Result<Self> {
        if a > b {
            return Err(Error::EmptySet { lo: a, hi: b });
        }
        let slack = 1e-9 * grid.spacing();
        Self::from_fn(grid, |x| {
            if x >= a - slack && x <= b + slack {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value(&self, i: usize) -> ExtReal {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<ExtReal> {
        self.values
    }

    pub fn is_proper(&self) -> bool {
        self.values.iter().any(|v| v.is_finite()) && !self.values.contains(&ExtReal::NegInf)
    }

    pub fn has_finite(&self) -> bool {
        self.values.iter().any(|v| v.is_finite())
    }

    /// Sample values as `f64`, infinities included.
    pub fn raw(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.to_f64()).collect()
    }

    /// First and last index holding a finite value.
    pub fn finite_span(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|v| v.is_finite())?;
        let last = self.values.iter().rposition(|v| v.is_finite())?;
        Some((first, last))
    }

    pub fn eval(&self, x: f64) -> Result<ExtReal> {
        if !self.grid.contains(x) || x.is_nan() {
            return Err(Error::OutOfDomain {
                x,
                lo: self.grid.lo(),
                hi: self.grid.hi(),
            });
        }
        let (i, t) = self.grid.bracket(x);
        let (a, b) = (self.values[i], self.values[i + 1]);
        if t == 0.0 {
            return Ok(a);
        }
        if t == 1.0 {
            return Ok(b);
        }
        Ok(match (a, b) {
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + (b - a) * t),
        })
    }

    /// Infimum over the closed ball of radius `eps` around `x`, clipped to the
    /// window. The centre itself always counts, so the result is
    /// nonincreasing in `eps`.
    pub fn inf_over_ball(&self, x: f64, eps: f64) -> ExtReal {
        let centre = if self.grid.contains(x) {
            self.eval(x).unwrap_or(ExtReal::PosInf)
        } else {
            ExtReal::PosInf
        };
        self.values[self.grid.ball_indices(x, eps)]
            .iter()
            .copied()
            .fold(centre, ExtReal::min)
    }

    /// `inf_over_ball` at every grid point at once (sliding-window minimum).
    pub fn ball_min_all(&self, eps: f64) -> Vec<ExtReal> {
        let r = (eps / self.grid.spacing() + 1e-9).floor().max(0.0) as usize;
        sliding_min(&self.values, r)
    }

    /// Discrete convexity: the finite samples form one contiguous run and
    /// every second difference on it is `>= -tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        if self.values.contains(&ExtReal::NegInf) {
            return false;
        }
        let Some((first, last)) = self.finite_span() else {
            return false;
        };
        let run = &self.values[first..=last];
        if run.iter().any(|v| !v.is_finite()) {
            return false;
        }
        run.windows(3).all(|w| {
            let (a, b, c) = (w[0].to_f64(), w[1].to_f64(), w[2].to_f64());
            a - 2.0 * b + c >= -tol
        })
    }

    pub fn resample(&self, target: &Grid1D) -> Result<GridFn> {
        for x in [target.lo(), target.hi()] {
            if !self.grid.contains(x) {
                return Err(Error::OutOfDomain {
                    x,
                    lo: self.grid.lo(),
                    hi: self.grid.hi(),
                });
            }
        }
        let values = target
            .points()
            .map(|x| self.eval(x.clamp(self.grid.lo(), self.grid.hi())))
            .collect::<Result<Vec<_>>>()?;
        GridFn::new_allow_neg_inf(*target, values)
    }

    pub fn checked_add(&self, other: &GridFn) -> Result<GridFn> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.checked_add(*b))
            .collect::<Result<Vec<_>>>()?;
        GridFn::new_allow_neg_inf(self.grid, values)
    }

    /// Adds the real-valued `g(x)` at every sample.
    pub fn add_fn(&self, g: impl Fn(f64) -> f64) -> GridFn {
        let values = self
            .values
            .iter()
            .zip(self.grid.points())
            .map(|(v, x)| v.add_real(g(x)))
            .collect();
        GridFn {
            grid: self.grid,
            values,
        }
    }

    pub fn shift(&self, c: f64) -> GridFn {
        self.add_fn(|_| c)
    }

    /// Largest `|f(x_{i+1}) - f(x_i)| / h` over adjacent finite samples.
    pub fn max_difference_quotient(&self) -> f64 {
        let h = self.grid.spacing();
        self.values
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (ExtReal::Finite(a), ExtReal::Finite(b)) => Some(((b - a) / h).abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn pointwise_le(&self, other: &GridFn, tol: f64) -> bool {
        self.grid == other.grid
            && self.values.iter().zip(&other.values).all(|(a, b)| {
                a <= b || (a.is_finite() && b.is_finite() && a.to_f64() - b.to_f64() <= tol)
            })
    }
}

/// Minimum over `[i - r, i + r]` (clipped) for every `i`, in linear time.
fn sliding_min(values: &[ExtReal], r: usize) -> Vec<ExtReal> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + r).min(n - 1);
        while next <= hi {
            while let Some(&back) = dq.back() {
                if values[back] >= values[next] {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(r);
        while let Some(&front) = dq.front() {
            if front < lo {
                dq.pop_front();
            } else {
                break;
            }
        }
        out.push(values[*dq.front().expect("window is never empty")]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: f64, n: usize) -> Grid1D {
        Grid1D::symmetric(w, n).unwrap()
    }

    #[test]
    fn eval_examples() {
        let g = grid(2.0, 401);
        let sq = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let h = g.spacing();
        assert!((sq.eval(1.0).unwrap().to_f64() - 0.5).abs() <= h * h);

        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        assert_eq!(ind.eval(1.5).unwrap(), ExtReal::PosInf);

        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        assert!((abs.eval(0.3333).unwrap().to_f64() - 0.3333).abs() <= h);

        assert!(matches!(abs.eval(2.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn eval_is_exact_at_grid_points() {
        let g = grid(3.0, 301);
        let f = GridFn::from_fn(g, |x| (x * 1.7).sin() + x * x).unwrap();
        for i in 0..g.count() {
            assert_eq!(f.eval(g.point(i)).unwrap(), f.value(i));
        }
    }

    #[test]
    fn ball_examples() {
        let g = grid(2.0, 401);
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        assert_eq!(abs.inf_over_ball(0.5, 1.0), ExtReal::Finite(0.0));
        let sq = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        assert_eq!(sq.inf_over_ball(0.0, 0.1), ExtReal::Finite(0.0));
    }

    #[test]
    fn ball_misses_the_indicator() {
        // brute force: grid points within 0.4 of 1.5 are 1.1..=1.9, all outside [-1, 1]
        let g = grid(2.0, 401);
        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        let brute = g
            .points()
            .zip(ind.values())
            .filter(|(y, _)| (y - 1.5).abs() <= 0.4 + 1e-12)
            .map(|(_, v)| *v)
            .min()
            .unwrap();
        assert_eq!(brute, ExtReal::PosInf);
        assert_eq!(ind.inf_over_ball(1.5, 0.4), brute);
    }

    #[test]
    fn sliding_window_matches_pointwise_ball() {
        let g = grid(1.0, 41);
        let f = GridFn::from_fn(g, |x| (5.0 * x).cos() + if x > 0.6 { f64::INFINITY } else { 0.0 })
            .unwrap();
        for eps in [0.0, 0.05, 0.1, 0.37] {
            let all = f.ball_min_all(eps);
            for i in 0..g.count() {
                assert_eq!(all[i], f.inf_over_ball(g.point(i), eps), "eps {eps} i {i}");
            }
        }
    }

    #[test]
    fn convexity_examples() {
        let g = grid(2.0, 401);
        assert!(GridFn::from_fn(g, f64::abs).unwrap().is_convex(1e-12));
        assert!(!GridFn::from_fn(g, |x| -x * x).unwrap().is_convex(1e-12));
        for n in [1.0, 4.0, 64.0] {
            let shifted = GridFn::indicator(g, -1.0 / n, 1.0 / n).unwrap().shift(-n);
            assert!(shifted.is_convex(1e-12));
        }
        // gap in the domain
        let holes = GridFn::from_fn(g, |x| if x.abs() < 0.5 { f64::INFINITY } else { 0.0 }).unwrap();
        assert!(!holes.is_convex(1e-12));
    }

    #[test]
    fn resample_examples() {
        let fine = grid(2.0, 401);
        let coarse = grid(2.0, 201);
        let abs = GridFn::from_fn(fine, f64::abs).unwrap();
        assert_eq!(abs.resample(&fine).unwrap(), abs);

        let down = abs.resample(&coarse).unwrap();
        let err = coarse
            .points()
            .zip(down.values())
            .map(|(x, v)| (v.to_f64() - x.abs()).abs())
            .fold(0.0, f64::max);
        assert!(err <= fine.spacing());

        let sq = GridFn::from_fn(coarse, |x| 0.5 * x * x).unwrap();
        let up = sq.resample(&fine).unwrap();
        let err = fine
            .points()
            .zip(up.values())
            .map(|(x, v)| (v.to_f64() - 0.5 * x * x).abs())
            .fold(0.0, f64::max);
        assert!(err <= coarse.spacing().powi(2));

        let wide = grid(3.0, 31);
        assert!(matches!(abs.resample(&wide), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn neg_inf_is_quarantined() {
        let g = grid(1.0, 3);
        let v = vec![ExtReal::NegInf; 3];
        assert_eq!(GridFn::new(g, v.clone()), Err(Error::NegInfNotAllowed));
        assert!(GridFn::new_allow_neg_inf(g, v).is_ok());
    }
}
