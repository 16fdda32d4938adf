use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::graph::MonotoneGraph;
use crate::error::{Error, Result};
use crate::extgrid::ExtReal;
use crate::gamma::GammaParams;
use crate::verdict::{Residual, TruncationParams, Verdict};

/// Planar box `[x_lo, x_hi] x [s_lo, s_hi]` in which graphs are compared,
/// with the sampling step along graph segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphWindow {
    pub x: (f64, f64),
    pub s: (f64, f64),
    /// Sampling step; `None` uses the grid spacing of the sampled graph.
    pub step: Option<f64>,
}

impl GraphWindow {
    pub fn new(x: (f64, f64), s: (f64, f64)) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(x) || !ok(s) {
            return Err(Error::BadParameter("window sides must be finite with lo < hi".into()));
        }
        Ok(GraphWindow { x, s, step: None })
    }

    pub fn with_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::BadParameter("sampling step must be positive".into()));
        }
        self.step = Some(step);
        Ok(self)
    }

    fn step_for(&self, g: &MonotoneGraph) -> f64 {
        self.step.unwrap_or_else(|| g.grid().spacing())
    }
}

/// Axis-parallel piece of a staircase; infinite ends allowed.
#[derive(Debug, Clone, Copy)]
enum Segment {
    Vertical { x: f64, lo: f64, hi: f64 },
    Horizontal { s: f64, lo: f64, hi: f64 },
}

impl Segment {
    /// Closest point of the segment to `(px, ps)`.
    fn nearest(&self, px: f64, ps: f64) -> (f64, f64) {
        match *self {
            Segment::Vertical { x, lo, hi } => (x, ps.clamp(lo, hi)),
            Segment::Horizontal { s, lo, hi } => (px.clamp(lo, hi), s),
        }
    }

    #[cfg(test)]
    fn dist(&self, px: f64, ps: f64) -> f64 {
        let (qx, qs) = self.nearest(px, ps);
        (px - qx).hypot(ps - qs)
    }

    /// Lower bound on the distance from the horizontal offset alone, signed
    /// so that it grows away from `px` on the given side.
    fn gap(&self, px: f64, right: bool) -> f64 {
        match (*self, right) {
            (Segment::Vertical { x, .. }, true) => x - px,
            (Segment::Vertical { x, .. }, false) => px - x,
            (Segment::Horizontal { lo, .. }, true) => lo - px,
            (Segment::Horizontal { hi, .. }, false) => px - hi,
        }
    }
}

/// Segments in order of increasing `x`: vertical at each breakpoint, then the
/// horizontal run to the next one.
fn segments(g: &MonotoneGraph) -> Vec<Segment> {
    let bps = g.breakpoints();
    let mut out = Vec::with_capacity(2 * bps.len());
    for (k, b) in bps.iter().enumerate() {
        out.push(Segment::Vertical {
            x: b.x,
            lo: b.slope_lo.to_f64(),
            hi: b.slope_hi.to_f64(),
        });
        if let Some(next) = bps.get(k + 1) {
            out.push(Segment::Horizontal {
                s: b.slope_hi.to_f64(),
                lo: b.x,
                hi: next.x,
            });
        }
    }
    out
}

/// Points along `a`'s segments clipped to the window, at most `step` apart
/// along each piece, endpoints included.
fn samples(a: &MonotoneGraph, w: &GraphWindow) -> Vec<(f64, f64)> {
    let step = w.step_for(a);
    let mut pts = Vec::new();
    let mut sample = |fixed: f64, lo: f64, hi: f64, vertical: bool| {
        if lo > hi {
            return;
        }
        let k = ((hi - lo) / step).ceil().max(0.0) as usize;
        for j in 0..=k {
            let t = if k == 0 { lo } else { lo + (hi - lo) * j as f64 / k as f64 };
            pts.push(if vertical { (fixed, t) } else { (t, fixed) });
        }
    };
    for seg in segments(a) {
        match seg {
            Segment::Vertical { x, lo, hi } => {
                if x >= w.x.0 && x <= w.x.1 {
                    sample(x, lo.max(w.s.0), hi.min(w.s.1), true);
                }
            }
            Segment::Horizontal { s, lo, hi } => {
                if s >= w.s.0 && s <= w.s.1 {
                    sample(s, lo.max(w.x.0), hi.min(w.x.1), false);
                }
            }
        }
    }
    pts
}

/// A staircase prepared for nearest-point queries.
pub(crate) struct GraphIndex {
    segs: Vec<Segment>,
    xs: Vec<f64>,
}

impl GraphIndex {
    pub(crate) fn new(g: &MonotoneGraph) -> Self {
        GraphIndex {
            segs: segments(g),
            xs: g.breakpoints().iter().map(|b| b.x).collect(),
        }
    }

    /// Closest graph point to `(px, ps)` and its distance. Segments are
    /// sorted by `x`, so each scan stops once the horizontal gap alone
    /// exceeds the best distance. Ties go to the leftmost segment.
    pub(crate) fn nearest(&self, px: f64, ps: f64) -> (f64, f64, f64) {
        // xs[k] is the x of the k-th vertical segment, which sits at segs[2k]
        let k = self.xs.partition_point(|&x| x < px).min(self.xs.len() - 1);
        let start = (2 * k).saturating_sub(1);
        let mut best = (f64::NAN, f64::NAN, f64::INFINITY, usize::MAX);
        let consider = |j: usize, best: &mut (f64, f64, f64, usize)| {
            let (qx, qs) = self.segs[j].nearest(px, ps);
            let d = (px - qx).hypot(ps - qs);
            if d < best.2 || (d == best.2 && j < best.3) {
                *best = (qx, qs, d, j);
            }
        };
        for j in start..self.segs.len() {
            if self.segs[j].gap(px, true) > best.2 {
                break;
            }
            consider(j, &mut best);
        }
        for j in (0..start).rev() {
            if self.segs[j].gap(px, false) > best.2 {
                break;
            }
            consider(j, &mut best);
        }
        (best.0, best.1, best.2)
    }
}

/// `sup { dist(p, b) : p in a, p in window }` over sampled points of `a`.
pub fn graph_excess(a: &MonotoneGraph, b: &MonotoneGraph, window: &GraphWindow) -> Result<f64> {
    let pts = samples(a, window);
    if pts.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let index = GraphIndex::new(b);
    Ok(pts
        .par_iter()
        .map(|&(px, ps)| index.nearest(px, ps).2)
        .reduce(|| 0.0, f64::max))
}

/// Graphical convergence on the window: both excesses between the tail
/// graphs `gs[n - 1]`, `n` in `tail_start..=horizon`, and `g` stay below
/// `tol` plus the allowance `2 / tail_start + step`. A tail graph missing
/// the window contributes nothing to the Ls side.
pub fn graphical_convergence_verdict(
    gs: &[MonotoneGraph],
    g: &MonotoneGraph,
    window: &GraphWindow,
    p: &GammaParams,
    tol: f64,
) -> Result<Verdict> {
    let horizon = p.horizon();
    if gs.len() < horizon {
        return Err(Error::HorizonExceeded(format!(
            "{} graphs for horizon {horizon}",
            gs.len()
        )));
    }
    let tail: Vec<usize> = (p.tail_start()..=horizon).collect();
    let rows: Vec<(f64, f64)> = tail
        .par_iter()
        .map(|&n| {
            let gn = &gs[n - 1];
            let ls = match graph_excess(gn, g, window) {
                Err(Error::EmptyWindow) => Ok(0.0),
                r => r,
            }?;
            let li = graph_excess(g, gn, window)?;
            Ok((ls, li))
        })
        .collect::<Result<_>>()?;
    let step = window.step_for(g);
    let allowance = 2.0 / p.tail_start() as f64 + step;
    let threshold = allowance + tol;
    let worst = |pick: fn(&(f64, f64)) -> f64| {
        tail.iter()
            .zip(&rows)
            .map(|(&n, r)| (pick(r), n))
            .fold((0.0, None), |acc: (f64, Option<f64>), (v, n)| {
                if v > acc.0 || acc.1.is_none() {
                    (v, Some(n as f64))
                } else {
                    acc
                }
            })
    };
    let mut tp = TruncationParams::new(p, *g.grid(), None, tol);
    tp.allowance = allowance;
    let residuals = vec![
        Residual::new("ls-excess", worst(|r| r.0), threshold),
        Residual::new("li-excess", worst(|r| r.1), threshold),
    ];
    let mut v = Verdict::from_residuals("graphical-convergence", residuals, tp);
    v.note(format!("sampling step {step}"));
    v.witness = Some(json!({
        "n": tail,
        "ls_excess": rows.iter().map(|r| ExtReal::from_f64(r.0)).collect::<Vec<_>>(),
        "li_excess": rows.iter().map(|r| ExtReal::from_f64(r.1)).collect::<Vec<_>>(),
        "window": window,
    }));
    Ok(v)
}
