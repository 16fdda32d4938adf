use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extgrid::{FnSeq, GridFn};
use crate::gamma::GammaParams;
use crate::subdiff::{subdiff_graph, GraphIndex};

/// A point `(a, a*)` on the graph of `∂f` with graph points `(a_n, a_n*)` of
/// the tail members converging to it and `f_n(a_n) -> f(a)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationWitness {
    pub a: f64,
    pub a_star: f64,
    pub n: Vec<usize>,
    pub a_n: Vec<f64>,
    pub a_star_n: Vec<f64>,
    /// `|a_n - a|`, `|a_n* - a*|` and `|f_n(a_n) - f(a)|` per member.
    pub dx: Vec<f64>,
    pub dslope: Vec<f64>,
    pub dvalue: Vec<f64>,
    /// Largest of the three over the tail.
    pub residual: f64,
    pub threshold: f64,
}

struct Tail {
    n: Vec<usize>,
    members: Vec<GridFn>,
    graphs: Vec<GraphIndex>,
}

fn score(tail: &Tail, a: f64, a_star: f64, fa: f64) -> Result<(f64, [Vec<f64>; 5])> {
    let len = tail.n.len();
    let mut cols: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(len));
    let mut worst: f64 = 0.0;
    for (f, g) in tail.members.iter().zip(&tail.graphs) {
        let (qx, qs, _) = g.nearest(a, a_star);
        let v = f.eval(qx)?.to_f64();
        let (dx, ds, dv) = ((qx - a).abs(), (qs - a_star).abs(), (v - fa).abs());
        worst = worst.max(dx).max(ds).max(dv);
        for (c, val) in cols.iter_mut().zip([qx, qs, dx, ds, dv]) {
            c.push(val);
        }
    }
    Ok((worst, cols))
}

/// Searches the graph of `∂f` for a point whose nearest points on the tail
/// member graphs converge to it with converging values. Anchors are the
/// grid points of `dom f` with the ends and midpoint of their slope
/// interval. Succeeds when the best residual is within `tol` plus the
/// allowance `spacing + 1 / tail_start`.
pub fn normalization_finder(seq: &FnSeq, f: &GridFn, p: &GammaParams, tol: f64) -> Result<NormalizationWitness> {
    if f.grid() != seq.grid() {
        return Err(Error::GridMismatch);
    }
    let graph = subdiff_graph(f)?;
    let n: Vec<usize> = (p.tail_start()..=p.horizon()).collect();
    let members = seq.members(p.tail_start(), p.horizon())?;
    let graphs = members
        .par_iter()
        .map(|m| Ok(GraphIndex::new(&subdiff_graph(m)?)))
        .collect::<Result<Vec<_>>>()?;
    let tail = Tail { n, members, graphs };

    let mut anchors = Vec::new();
    for b in graph.breakpoints() {
        let fa = f.eval(b.x)?.to_f64();
        let (lo, hi) = (b.slope_lo.finite(), b.slope_hi.finite());
        let mut slopes: Vec<f64> = [lo, hi].into_iter().flatten().collect();
        if let (Some(l), Some(h)) = (lo, hi) {
            slopes.push(0.5 * (l + h));
        }
        slopes.dedup();
        anchors.extend(slopes.into_iter().map(|s| (b.x, s, fa)));
    }
    // nearer the middle of the window first, so that ties avoid the edges
    let mid = 0.5 * (f.grid().lo() + f.grid().hi());
    anchors.sort_by(|p, q| (p.0 - mid).abs().total_cmp(&(q.0 - mid).abs()));
    let scores = anchors
        .par_iter()
        .map(|&(a, s, fa)| Ok(score(&tail, a, s, fa)?.0))
        .collect::<Result<Vec<f64>>>()?;
    let (best_i, best) = scores
        .iter()
        .enumerate()
        .fold((usize::MAX, f64::INFINITY), |acc, (i, &r)| if r < acc.1 { (i, r) } else { acc });
    let threshold = tol + f.grid().spacing() + 1.0 / p.tail_start() as f64;
    if best_i == usize::MAX || best > threshold {
        return Err(Error::NotFound { best });
    }
    let (a, a_star, fa) = anchors[best_i];
    let (residual, [a_n, a_star_n, dx, dslope, dvalue]) = score(&tail, a, a_star, fa)?;
    Ok(NormalizationWitness {
        a,
        a_star,
        n: tail.n,
        a_n,
        a_star_n,
        dx,
        dslope,
        dvalue,
        residual,
        threshold,
    })
}
