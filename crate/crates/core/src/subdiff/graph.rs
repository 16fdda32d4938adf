use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extgrid::{ExtReal, Grid1D, GridFn};

/// One grid point of a graph: the closed slope interval above `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub x: f64,
    pub slope_lo: ExtReal,
    pub slope_hi: ExtReal,
}

/// A monotone staircase in the plane: vertical segments at consecutive grid
/// points joined by horizontal segments at `slope_hi(x_i) = slope_lo(x_{i+1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneGraph {
    grid: Grid1D,
    /// Grid index of the first breakpoint.
    first: usize,
    breakpoints: Vec<Breakpoint>,
}

impl MonotoneGraph {
    /// Breakpoints must sit on consecutive grid points starting at `first`,
    /// with `slope_lo <= slope_hi` and `slope_hi <= ` the next `slope_lo`.
    pub fn new(grid: Grid1D, first: usize, breakpoints: Vec<Breakpoint>) -> Result<Self> {
        if breakpoints.is_empty() || first + breakpoints.len() > grid.count() {
            return Err(Error::BadParameter("breakpoints do not fit the grid".into()));
        }
        let tol = 1e-9 * grid.spacing();
        for (k, b) in breakpoints.iter().enumerate() {
            if (b.x - grid.point(first + k)).abs() > tol {
                return Err(Error::BadParameter(format!("breakpoint {k} is off the grid")));
            }
            if b.slope_lo > b.slope_hi {
                return Err(Error::BadParameter(format!("empty slope interval at x = {}", b.x)));
            }
        }
        if breakpoints.windows(2).any(|w| w[0].slope_hi > w[1].slope_lo) {
            return Err(Error::BadParameter("slopes are not monotone".into()));
        }
        Ok(MonotoneGraph {
            grid,
            first,
            breakpoints,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    /// Grid index range covered by the breakpoints.
    pub fn index_range(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.first + self.breakpoints.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0].x, self.breakpoints[self.breakpoints.len() - 1].x)
    }

    /// The slope interval above `x`, or `None` off the domain. Points within
    /// `1e-9` spacings of a grid point count as that grid point.
    pub fn slice(&self, x: f64) -> Option<(ExtReal, ExtReal)> {
        let (lo, hi) = self.domain();
        let tol = 1e-9 * self.grid.spacing();
        if x < lo - tol || x > hi + tol {
            return None;
        }
        let c = (x - lo) / self.grid.spacing();
        let k = c.round();
        if (c - k).abs() * self.grid.spacing() <= tol {
            let b = &self.breakpoints[k as usize];
            return Some((b.slope_lo, b.slope_hi));
        }
        let s = self.breakpoints[c.floor() as usize].slope_hi;
        Some((s, s))
    }

    /// Whether `(x, s)` lies on the graph up to `tol` in the slope.
    pub fn contains(&self, x: f64, s: f64, tol: f64) -> bool {
        self.slice(x)
            .is_some_and(|(lo, hi)| lo.add_real(-tol) <= ExtReal::from_f64(s) && ExtReal::from_f64(s) <= hi.add_real(tol))
    }

    /// Every pair of graph points satisfies `(x1 - x2)(s1 - s2) >= 0`.
    pub fn is_monotone(&self) -> bool {
        self.breakpoints.iter().all(|b| b.slope_lo <= b.slope_hi)
            && self.breakpoints.windows(2).all(|w| w[0].slope_hi <= w[1].slope_lo)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "slope_lo", "slope_hi"])?;
        for b in &self.breakpoints {
            out.write_record([b.x.to_string(), b.slope_lo.to_string(), b.slope_hi.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads rows `x,slope_lo,slope_hi` whose `x` values are consecutive
    /// points of `grid`.
    pub fn read_csv<R: Read>(r: R, grid: Grid1D) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut bps = Vec::new();
        for row in rdr.records() {
            let row = row?;
            if row.len() != 3 {
                return Err(Error::Parse(format!("expected 3 columns, got {}", row.len())));
            }
            let x: f64 = row[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad x value {:?}", &row[0])))?;
            bps.push(Breakpoint {
                x,
                slope_lo: row[1].parse()?,
                slope_hi: row[2].parse()?,
            });
        }
        let Some(b0) = bps.first() else {
            return Err(Error::Parse("no rows".into()));
        };
        if !grid.contains(b0.x) {
            return Err(Error::OutOfDomain {
                x: b0.x,
                lo: grid.lo(),
                hi: grid.hi(),
            });
        }
        let first = grid.nearest_index(b0.x);
        MonotoneGraph::new(grid, first, bps)
    }
}

/// Graph of the subdifferential of the piecewise-linear interpolant of `f`:
/// one-sided difference quotients inside the domain, normal-cone rays at
/// its ends.
pub fn subdiff_graph(f: &GridFn) -> Result<MonotoneGraph> {
    let scale = f
        .values()
        .iter()
        .filter_map(|v| v.finite())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if !f.is_convex(1e-9 * scale) {
        return Err(Error::NotConvex);
    }
    let (a, b) = f.finite_span().expect("convex input has finite values");
    let g = f.grid();
    let h = g.spacing();
    // roundoff can leave second differences slightly negative
    let mut dq = Vec::with_capacity(b - a);
    let mut run = f64::NEG_INFINITY;
    for i in a..b {
        let d = (f.value(i + 1).to_f64() - f.value(i).to_f64()) / h;
        run = run.max(d);
        dq.push(run);
    }
    let bps = (a..=b)
        .map(|i| Breakpoint {
            x: g.point(i),
            slope_lo: if i == a { ExtReal::NegInf } else { ExtReal::Finite(dq[i - a - 1]) },
            slope_hi: if i == b { ExtReal::PosInf } else { ExtReal::Finite(dq[i - a]) },
        })
        .collect();
    MonotoneGraph::new(*g, a, bps)
}

/// Slopes `s` with `g(u) >= g(x) + s (u - x)` for every grid `u`, as a
/// closed interval; `None` when empty or when `g(x)` is not finite.
pub fn fenchel_subdiff(g: &GridFn, x: f64) -> Option<(f64, f64)> {
    let grid = g.grid();
    if !grid.contains(x) {
        return None;
    }
    let i = grid.nearest_index(x);
    let gx = g.value(i).finite()?;
    let xi = grid.point(i);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut scale = gx.abs().max(1.0);
    for (j, v) in g.values().iter().enumerate() {
        let q = match *v {
            ExtReal::PosInf => continue,
            ExtReal::NegInf => return None,
            ExtReal::Finite(gu) => {
                scale = scale.max(gu.abs());
                (gu - gx) / (grid.point(j) - xi)
            }
        };
        if j < i {
            lo = lo.max(q);
        } else if j > i {
            hi = hi.min(q);
        }
    }
    let slack = 1e-12 * scale / grid.spacing();
    (lo <= hi + slack).then_some(if lo > hi { (hi, hi) } else { (lo, hi) })
}

/// Antiderivative of a staircase on its grid: trapezoidal steps
/// `h (slope_hi(x_i) + slope_lo(x_{i+1})) / 2`, shifted so the interpolant
/// takes `anchor_val` at `anchor_x`, and `+inf` off the domain.
pub fn integrate_graph(g: &MonotoneGraph, anchor_x: f64, anchor_val: f64) -> Result<GridFn> {
    let grid = *g.grid();
    let h = grid.spacing();
    let bps = g.breakpoints();
    let mut acc = Vec::with_capacity(bps.len());
    acc.push(0.0);
    for w in bps.windows(2) {
        let (Some(a), Some(b)) = (w[0].slope_hi.finite(), w[1].slope_lo.finite()) else {
            return Err(Error::BadParameter(format!(
                "infinite slope inside the domain near x = {}",
                w[0].x
            )));
        };
        let last = *acc.last().expect("nonempty");
        acc.push(last + h * (a + b) / 2.0);
    }
    let (lo, hi) = g.domain();
    let tol = 1e-9 * h;
    if !(anchor_x >= lo - tol && anchor_x <= hi + tol) {
        return Err(Error::OutOfDomain { x: anchor_x, lo, hi });
    }
    let c = ((anchor_x - lo) / h).clamp(0.0, (acc.len() - 1) as f64);
    let k = (c.floor() as usize).min(acc.len() - 1);
    let t = c - k as f64;
    let at_anchor = if k + 1 < acc.len() {
        acc[k] + (acc[k + 1] - acc[k]) * t
    } else {
        acc[k]
    };
    let shift = anchor_val - at_anchor;
    let first = *g.index_range().start();
    let values = (0..grid.count())
        .map(|i| {
            if g.index_range().contains(&i) {
                ExtReal::Finite(acc[i - first] + shift)
            } else {
                ExtReal::PosInf
            }
        })
        .collect();
    GridFn::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(half: f64, n: usize) -> Grid1D {
        Grid1D::symmetric(half, n).unwrap()
    }

    #[test]
    fn abs_graph() {
        let g = grid(1.0, 21);
        let f = GridFn::from_fn(g, f64::abs).unwrap();
        let gr = subdiff_graph(&f).unwrap();
        let near = |x: f64, lo: f64, hi: f64| {
            let (a, b) = gr.slice(x).unwrap();
            (a.to_f64() - lo).abs() < 1e-12 && (b.to_f64() - hi).abs() < 1e-12
        };
        assert!(near(-0.5, -1.0, -1.0) && near(0.0, -1.0, 1.0) && near(0.55, 1.0, 1.0));
        assert_eq!(gr.slice(-1.0).unwrap().0, ExtReal::NegInf);
        assert_eq!(gr.slice(1.0).unwrap().1, ExtReal::PosInf);
        assert!(gr.contains(0.0, 0.3, 0.0) && !gr.contains(0.1, 0.3, 1e-9));
    }

    #[test]
    fn quadratic_graph_is_near_the_diagonal() {
        let g = grid(2.0, 401);
        let f = GridFn::from_fn(g, |x| x * x / 2.0).unwrap();
        let gr = subdiff_graph(&f).unwrap();
        let h = g.spacing();
        for b in &gr.breakpoints()[1..gr.breakpoints().len() - 1] {
            assert!((b.slope_lo.to_f64() - b.x).abs() <= h / 2.0 + 1e-12);
            assert!((b.slope_hi.to_f64() - b.x).abs() <= h / 2.0 + 1e-12);
        }
    }

    #[test]
    fn interval_indicator_has_normal_cones() {
        let g = grid(2.0, 41);
        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        let gr = subdiff_graph(&ind).unwrap();
        assert_eq!(gr.domain(), (-1.0, 1.0));
        assert_eq!(gr.slice(-1.0), Some((ExtReal::NegInf, ExtReal::ZERO)));
        assert_eq!(gr.slice(0.3), Some((ExtReal::ZERO, ExtReal::ZERO)));
        assert_eq!(gr.slice(1.0), Some((ExtReal::ZERO, ExtReal::PosInf)));
        assert_eq!(gr.slice(1.5), None);
    }

    #[test]
    fn nonconvex_is_rejected() {
        let g = grid(1.0, 21);
        let f = GridFn::from_fn(g, |x| -x.abs()).unwrap();
        assert_eq!(subdiff_graph(&f), Err(Error::NotConvex));
    }

    #[test]
    fn fenchel_subdiff_examples() {
        let g = grid(2.0, 41);
        let neg = GridFn::from_fn(g, |x| -x.abs()).unwrap();
        assert_eq!(fenchel_subdiff(&neg, 0.0), None);
        let w = GridFn::from_fn(g, |x| (x - 1.0).abs().min((x + 1.0).abs())).unwrap();
        assert_eq!(fenchel_subdiff(&w, 0.0), None);
        let (lo, hi) = fenchel_subdiff(&w, 1.0).unwrap();
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let (lo, hi) = fenchel_subdiff(&w, -1.0).unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && hi.abs() < 1e-12);
        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        assert_eq!(fenchel_subdiff(&ind, 1.5), None);
    }

    #[test]
    fn fenchel_subdiff_matches_graph_for_convex_input() {
        let g = grid(1.0, 41);
        let f = GridFn::from_fn(g, |x| (x - 0.3).abs() + x * x).unwrap();
        let gr = subdiff_graph(&f).unwrap();
        for x in g.points().skip(1).take(39) {
            let (lo, hi) = fenchel_subdiff(&f, x).unwrap();
            let (glo, ghi) = gr.slice(x).unwrap();
            assert!((lo - glo.to_f64()).abs() < 1e-9 && (hi - ghi.to_f64()).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_staircase_integrates_to_abs() {
        let g = grid(1.0, 21);
        let bps = g
            .points()
            .map(|x| {
                let (lo, hi) = if x.abs() < 1e-12 {
                    (-1.0, 1.0)
                } else {
                    (x.signum(), x.signum())
                };
                Breakpoint {
                    x,
                    slope_lo: ExtReal::Finite(lo),
                    slope_hi: ExtReal::Finite(hi),
                }
            })
            .collect();
        let gr = MonotoneGraph::new(g, 0, bps).unwrap();
        let f = integrate_graph(&gr, 0.0, 0.0).unwrap();
        for (x, v) in g.points().zip(f.values()) {
            assert!((v.to_f64() - x.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_integrates_to_half_square() {
        let g = grid(1.0, 21);
        let bps = g
            .points()
            .map(|x| Breakpoint {
                x,
                slope_lo: ExtReal::Finite(x),
                slope_hi: ExtReal::Finite(x),
            })
            .collect();
        let gr = MonotoneGraph::new(g, 0, bps).unwrap();
        let f = integrate_graph(&gr, 0.0, 0.0).unwrap();
        for (x, v) in g.points().zip(f.values()) {
            // the trapezoid rule is exact for a linear integrand
            assert!((v.to_f64() - x * x / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_on_a_partial_domain() {
        let g = grid(2.0, 81);
        let f = GridFn::from_fn(g, |x| if x.abs() > 1.2 { f64::INFINITY } else { (x - 0.2).abs() + x * x }).unwrap();
        let gr = subdiff_graph(&f).unwrap();
        let back = integrate_graph(&gr, 0.5, f.eval(0.5).unwrap().to_f64()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!(a.distance(*b) < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = grid(2.0, 41);
        let gr = subdiff_graph(&GridFn::indicator(g, -1.0, 1.0).unwrap()).unwrap();
        let text = gr.to_csv_string();
        assert!(text.starts_with("x,slope_lo,slope_hi\n-1,-inf,0\n"));
        assert_eq!(MonotoneGraph::read_csv(text.as_bytes(), g).unwrap(), gr);
    }

    #[test]
    fn rejects_nonmonotone_breakpoints() {
        let g = grid(1.0, 3);
        let b = |x: f64, lo: f64, hi: f64| Breakpoint {
            x,
            slope_lo: lo.into(),
            slope_hi: hi.into(),
        };
        assert!(MonotoneGraph::new(g, 0, vec![b(-1.0, 0.0, 1.0), b(0.0, 0.5, 0.5)]).is_err());
    }
}
