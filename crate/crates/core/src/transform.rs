//! Discrete Legendre–Fenchel transform and conjugate calculus.
//!
//! [`conjugate`] conjugates `f + indicator(window)`: it is finite for every
//! slope, and for slopes outside the realized range it follows a linear ramp
//! set by the window edge. [`conjugate_extended`] instead continues the
//! interpolant affinely past the window and reports `+inf` where that
//! continuation makes the supremum unbounded.

use crate::error::{Error, Result};
use crate::extgrid::{ExtReal, Extension, Grid1D, GridFn, SlopeGrid};

/// Indices of the vertices of the lower convex hull of the finite samples,
/// in increasing order. Collinear points are dropped.
pub fn lower_hull(f: &GridFn) -> Vec<usize> {
    let g = f.grid();
    let mut hull: Vec<usize> = Vec::new();
    for (i, v) in f.values().iter().enumerate() {
        let Some(y) = v.finite() else { continue };
        let x = g.point(i);
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let (xo, yo) = (g.point(o), f.value(o).to_f64());
            let (xa, ya) = (g.point(a), f.value(a).to_f64());
            let cross = (xa - xo) * (y - yo) - (ya - yo) * (x - xo);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn check_input(f: &GridFn) -> Result<bool> {
    if !f.has_finite() {
        return Err(Error::ImproperInput);
    }
    // a -inf sample makes every affine minorant impossible
    Ok(f.values().contains(&ExtReal::NegInf))
}

/// `g(s_j) = max_i (s_j x_i - f(x_i))` by a linear merge over the lower hull.
/// Ties go to the smaller index.
pub fn conjugate(f: &GridFn, s: &SlopeGrid) -> Result<GridFn> {
    if check_input(f)? {
        return Ok(GridFn::constant(*s, 0.0).add_fn(|_| f64::INFINITY));
    }
    let g = f.grid();
    let hull = lower_hull(f);
    let xs: Vec<f64> = hull.iter().map(|&i| g.point(i)).collect();
    let ys: Vec<f64> = hull.iter().map(|&i| f.value(i).to_f64()).collect();
    let mut k = 0;
    let mut out = Vec::with_capacity(s.count());
    for sj in s.points() {
        while k + 1 < xs.len() && sj * xs[k + 1] - ys[k + 1] > sj * xs[k] - ys[k] {
            k += 1;
        }
        out.push(ExtReal::from_f64(sj * xs[k] - ys[k]));
    }
    GridFn::new(*s, out)
}

/// Direct `O(count^2)` maximization; the reference for [`conjugate`].
pub fn conjugate_oracle(f: &GridFn, s: &SlopeGrid) -> Result<GridFn> {
    if check_input(f)? {
        return Ok(GridFn::constant(*s, 0.0).add_fn(|_| f64::INFINITY));
    }
    let g = f.grid();
    let out = s
        .points()
        .map(|sj| {
            let mut best = f64::NEG_INFINITY;
            for (i, v) in f.values().iter().enumerate() {
                if let Some(y) = v.finite() {
                    let c = sj * g.point(i) - y;
                    if c > best {
                        best = c;
                    }
                }
            }
            ExtReal::from_f64(best)
        })
        .collect();
    GridFn::new(*s, out)
}

/// Windowed conjugate at a single slope.
pub fn conjugate_at(f: &GridFn, s: f64) -> Result<ExtReal> {
    if check_input(f)? {
        return Ok(ExtReal::PosInf);
    }
    let g = f.grid();
    let best = f
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.finite().map(|y| s * g.point(i) - y))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ExtReal::from_f64(best))
}

/// Slopes `[s_left, s_right]` of the boundary hull edges. A side where the
/// finite region stops short of the window edge is unbounded, as is a
/// function with a single finite sample.
pub fn trust_interval(f: &GridFn) -> Result<(f64, f64)> {
    if !f.has_finite() {
        return Err(Error::ImproperInput);
    }
    let g = f.grid();
    let hull = lower_hull(f);
    if hull.len() < 2 {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let slope = |a: usize, b: usize| {
        (f.value(b).to_f64() - f.value(a).to_f64()) / (g.point(b) - g.point(a))
    };
    let (first, last) = (hull[0], hull[hull.len() - 1]);
    let left = if first == 0 {
        slope(hull[0], hull[1])
    } else {
        f64::NEG_INFINITY
    };
    let right = if last == g.count() - 1 {
        slope(hull[hull.len() - 2], last)
    } else {
        f64::INFINITY
    };
    Ok((left, right))
}

/// Largest `r` with `[-r, r]` inside the trust interval (0 when the interval
/// misses the origin).
pub fn trust_radius(f: &GridFn) -> Result<f64> {
    let (l, r) = trust_interval(f)?;
    Ok((-l).min(r).max(0.0))
}

fn inside(s: f64, (l, r): (f64, f64)) -> bool {
    let tol = 1e-9 * s.abs().max(1.0);
    s >= l - tol && s <= r + tol
}

/// Conjugate of the interpolant continued affinely past the window.
pub fn conjugate_extended(f: &GridFn, s: &SlopeGrid) -> Result<GridFn> {
    let windowed = conjugate(f, s)?;
    if f.values().contains(&ExtReal::NegInf) {
        return Ok(windowed);
    }
    let trust = trust_interval(f)?;
    let values = s
        .points()
        .zip(windowed.values())
        .map(|(sj, &v)| if inside(sj, trust) { v } else { ExtReal::PosInf })
        .collect();
    GridFn::new(*s, values)
}

pub fn conjugate_with(f: &GridFn, s: &SlopeGrid, ext: Extension) -> Result<GridFn> {
    match ext {
        Extension::Window => conjugate(f, s),
        Extension::Affine => conjugate_extended(f, s),
    }
}

pub fn conjugate_at_with(f: &GridFn, s: f64, ext: Extension) -> Result<ExtReal> {
    let v = conjugate_at(f, s)?;
    if ext == Extension::Affine && !f.values().contains(&ExtReal::NegInf) && !inside(s, trust_interval(f)?) {
        return Ok(ExtReal::PosInf);
    }
    Ok(v)
}

/// Symmetric `[-S, S]` with `S = 1.25 * max |difference quotient|` (or 1 for
/// a flat function), with as many points as the input grid.
pub fn default_slope_grid(f: &GridFn) -> Grid1D {
    let dq = f.max_difference_quotient();
    let half = if dq > 0.0 { 1.25 * dq } else { 1.0 };
    Grid1D::symmetric(half, f.grid().count()).expect("positive width, odd count")
}

/// Closed convex hull of `f` on its finite span: the lower-hull interpolant,
/// `+inf` outside. Inputs already convex up to roundoff come back unchanged,
/// which makes the operation idempotent.
pub fn biconjugate(f: &GridFn) -> Result<GridFn> {
    if check_input(f)? {
        return GridFn::new_allow_neg_inf(*f.grid(), vec![ExtReal::NegInf; f.len()]);
    }
    let scale = f
        .values()
        .iter()
        .filter_map(|v| v.finite())
        .fold(1.0, |m: f64, v| m.max(v.abs()));
    if f.is_convex(1e-12 * scale) {
        return Ok(f.clone());
    }
    let hull = lower_hull(f);
    let mut out = vec![ExtReal::PosInf; f.len()];
    out[hull[0]] = f.value(hull[0]);
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (va, vb) = (f.value(a).to_f64(), f.value(b).to_f64());
        for (i, slot) in out.iter_mut().enumerate().take(b + 1).skip(a + 1) {
            let t = (i - a) as f64 / (b - a) as f64;
            *slot = if i == b {
                f.value(b)
            } else {
                ExtReal::Finite(va + (vb - va) * t)
            };
        }
    }
    GridFn::new(*f.grid(), out)
}

/// Literal double conjugation through the slope grid `s`.
pub fn biconjugate_on(f: &GridFn, s: &SlopeGrid) -> Result<GridFn> {
    conjugate(&conjugate(f, s)?, f.grid())
}

/// `h(x) = min over grid splits x1 + x2 = x of f(x1) + g(x2)`.
pub fn inf_conv(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if !f.is_proper() || !g.is_proper() {
        return Err(Error::ImproperInput);
    }
    let grid = f.grid();
    let n = grid.count() as i64;
    // point(i) + point(j) = point(i + j + offset)
    let offset = (grid.lo() / grid.spacing()).round() as i64;
    let fin = |h: &GridFn| -> Vec<(i64, f64)> {
        h.values()
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.finite().map(|y| (i as i64, y)))
            .collect()
    };
    let (ff, gg) = (fin(f), fin(g));
    let mut out = vec![f64::INFINITY; grid.count()];
    for &(i, a) in &ff {
        for &(j, b) in &gg {
            let k = i + j + offset;
            if (0..n).contains(&k) {
                let slot = &mut out[k as usize];
                if a + b < *slot {
                    *slot = a + b;
                }
            }
        }
    }
    GridFn::new(*grid, out.into_iter().map(ExtReal::from_f64).collect())
}

/// `sigma_[lo, hi](s) = max(s * lo, s * hi)`.
pub fn support_fn(lo: f64, hi: f64, s: &SlopeGrid) -> Result<GridFn> {
    if lo > hi {
        return Err(Error::EmptySet { lo, hi });
    }
    GridFn::from_fn(*s, |t| (t * lo).max(t * hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: f64, n: usize) -> Grid1D {
        Grid1D::symmetric(w, n).unwrap()
    }

    fn max_err(a: &GridFn, exact: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .points()
            .zip(a.values())
            .map(|(x, v)| (v.to_f64() - exact(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn indicator_conjugates_to_support() {
        let g = grid(2.0, 401);
        let s = grid(3.0, 301);
        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        let c = conjugate(&ind, &s).unwrap();
        assert!(max_err(&c, f64::abs) <= 1e-12);
        assert_eq!(c, conjugate_oracle(&ind, &s).unwrap());
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let g = grid(2.0, 401);
        let s = grid(1.5, 301);
        let q = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let c = conjugate(&q, &s).unwrap();
        let h = g.spacing();
        assert!(max_err(&c, |t| 0.5 * t * t) <= h * h);
    }

    #[test]
    fn blowup_member_windowed_and_extended() {
        let w = 2.0;
        let g = grid(w, 401);
        let s = grid(1.25, 501);
        for n in [1.0, 4.0, 16.0] {
            let f = GridFn::from_fn(g, |x| x.abs() / n + n).unwrap();
            let c = conjugate(&f, &s).unwrap();
            let ramp = |t: f64| if t.abs() <= 1.0 / n { -n } else { (t.abs() - 1.0 / n) * w - n };
            assert!(max_err(&c, ramp) <= 1e-12);
            let e = conjugate_extended(&f, &s).unwrap();
            for (t, v) in s.points().zip(e.values()) {
                if t.abs() <= 1.0 / n {
                    assert!((v.to_f64() + n).abs() <= 1e-12);
                } else if t.abs() > 1.0 / n + 1e-9 {
                    assert_eq!(*v, ExtReal::PosInf);
                }
            }
        }
    }

    #[test]
    fn improper_input_is_rejected() {
        let g = grid(1.0, 5);
        let f = GridFn::from_fn(g, |_| f64::INFINITY).unwrap();
        assert_eq!(conjugate(&f, &g), Err(Error::ImproperInput));
        assert_eq!(conjugate_oracle(&f, &g), Err(Error::ImproperInput));
        assert_eq!(biconjugate(&f), Err(Error::ImproperInput));
    }

    #[test]
    fn trust_interval_of_translated_abs() {
        let g = grid(2.0, 401);
        let f = GridFn::from_fn(g, |x| (x - 0.25).abs()).unwrap();
        let (l, r) = trust_interval(&f).unwrap();
        assert!((l + 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        assert!((trust_radius(&f).unwrap() - 1.0).abs() < 1e-12);
        let ind = GridFn::indicator(g, -1.0, 1.0).unwrap();
        let (l, r) = trust_interval(&ind).unwrap();
        assert!(l.is_infinite() && r.is_infinite());
    }

    #[test]
    fn biconjugate_fills_the_w_shape() {
        let g = grid(2.0, 401);
        let w = GridFn::from_fn(g, |x| (x - 1.0).abs().min((x + 1.0).abs())).unwrap();
        let b = biconjugate(&w).unwrap();
        let hull = |x: f64| (x.abs() - 1.0).max(0.0);
        assert!(max_err(&b, hull) <= 1e-12);
        assert_eq!(biconjugate(&b).unwrap(), b);
        // literal double conjugation agrees on a slope grid covering the hull slopes
        let lit = biconjugate_on(&w, &grid(1.25, 1001)).unwrap();
        assert!(max_err(&lit, hull) <= 1e-12);
    }

    #[test]
    fn convex_input_is_a_fixed_point() {
        let g = grid(2.0, 401);
        let f = GridFn::from_fn(g, |x| 0.5 * x * x + x.abs()).unwrap();
        assert_eq!(biconjugate(&f).unwrap(), f);
    }

    #[test]
    fn inf_conv_examples() {
        let g = grid(2.0, 401);
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        let delta0 = GridFn::indicator(g, 0.0, 0.0).unwrap();
        assert_eq!(inf_conv(&abs, &delta0).unwrap(), abs);
        let aa = inf_conv(&abs, &abs).unwrap();
        assert!(max_err(&aa, f64::abs) <= 1e-12);

        let half = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let full = GridFn::from_fn(g, |x| x * x).unwrap();
        let hc = inf_conv(&half, &full).unwrap();
        // brute force over all real splits restricted to the window
        let exact = |x: f64| {
            let y = (2.0 * x / 3.0).clamp(x - 2.0, x + 2.0).clamp(-2.0, 2.0);
            0.5 * y * y + (x - y) * (x - y)
        };
        assert!(max_err(&hc, exact) <= 2.0 * g.spacing().powi(2));
        assert!(max_err(&hc, |x| x * x / 3.0) <= 2.0 * g.spacing().powi(2));
    }

    #[test]
    fn support_examples() {
        let s = grid(2.0, 41);
        assert!(max_err(&support_fn(-1.0, 1.0, &s).unwrap(), f64::abs) == 0.0);
        assert!(max_err(&support_fn(0.0, 0.0, &s).unwrap(), |_| 0.0) == 0.0);
        let mut prev = support_fn(0.0, 0.0, &s).unwrap();
        for k in 1..6 {
            let r = 1.0 - 1.0 / k as f64;
            let cur = support_fn(-r, r, &s).unwrap();
            assert!(max_err(&cur, |t| r * t.abs()) <= 1e-15);
            assert!(prev.pointwise_le(&cur, 0.0));
            prev = cur;
        }
        assert_eq!(support_fn(1.0, 0.0, &s), Err(Error::EmptySet { lo: 1.0, hi: 0.0 }));
    }

    #[test]
    fn default_slope_window_covers_the_slopes() {
        let g = grid(2.0, 401);
        let f = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let s = default_slope_grid(&f);
        assert!((s.hi() - 1.25 * f.max_difference_quotient()).abs() < 1e-12);
        assert_eq!(default_slope_grid(&GridFn::constant(g, 3.0)).hi(), 1.0);
    }
}
