use serde::Serialize;

use super::graph::subdiff_graph;
use crate::error::{Error, Result};
use crate::extgrid::{ext_f64, ExtReal, GridFn};
use crate::transform::conjugate_at;

/// A primal point, a slope, and their Fenchel–Young gap
/// `f(x) + f*(s) - s x` for the function they were built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgradPair {
    pub x: f64,
    pub s: f64,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub eps: f64,
}

impl SubgradPair {
    /// Pair with its gap measured against `f` (`+inf` off the domain).
    pub fn new(f: &GridFn, x: f64, s: f64) -> Result<Self> {
        Ok(SubgradPair { x, s, eps: gap(f, x, s)? })
    }
}

fn gap(f: &GridFn, x: f64, s: f64) -> Result<f64> {
    let fx = f.eval(x)?;
    let conj = conjugate_at(f, s)?;
    Ok(fx.checked_add(conj)?.add_real(-s * x).to_f64())
}

/// Moves an approximate subgradient pair onto the graph of `∂f`.
///
/// The exact proximal point `x_c` of `f - s·` at `x` (unit step) satisfies
/// `s + x - x_c ∈ ∂f(x_c)` and `|x_c - x| <= sqrt(eps)`. When `x_c` is a grid
/// point that pair is returned; otherwise `x_c` lies inside a cell on which
/// the slope is constant, and the cell endpoint nearest to `x_c` is returned
/// with that slope.
pub fn br_repair(f: &GridFn, p: SubgradPair) -> Result<SubgradPair> {
    if !(p.eps >= -1e-9) {
        return Err(Error::BadParameter(format!("negative gap {}", p.eps)));
    }
    let graph = subdiff_graph(f)?;
    let scale = 1e-9 * (1.0 + p.x.abs() + p.s.abs());
    if p.eps <= scale && graph.contains(p.x, p.s, scale) {
        return Ok(p);
    }
    let g = f.grid();
    let h = g.spacing();
    let bps = graph.breakpoints();
    let target = |x_c: f64| p.s + p.x - x_c;
    let mut found = None;
    for (k, b) in bps.iter().enumerate() {
        let t = ExtReal::Finite(target(b.x));
        if b.slope_lo <= t && t <= b.slope_hi {
            found = Some((b.x, target(b.x)));
            break;
        }
        if let Some(next) = bps.get(k + 1) {
            let d = b.slope_hi.to_f64();
            let y = p.s + p.x - d;
            if b.x < y && y < next.x {
                let xhat = if y - b.x <= next.x - y { b.x } else { next.x };
                found = Some((xhat, d));
                break;
            }
        }
    }
    let Some((x, s)) = found else {
        return Err(Error::WindowTooSmall);
    };
    let r = p.eps.max(0.0).sqrt();
    let slack = 1e-9 * (1.0 + r);
    if (x - p.x).abs() > r + h + slack || (s - p.s).abs() > r + slack {
        return Err(Error::WindowTooSmall);
    }
    Ok(SubgradPair { x, s, eps: gap(f, x, s)? })
}
