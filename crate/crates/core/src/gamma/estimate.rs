use rayon::prelude::*;

use super::GammaParams;
use crate::error::{Error, Result};
use crate::extgrid::{ExtReal, FnSeq, GridFn};
use crate::verdict::{masked_distance, Residual, TruncationParams, Verdict};

/// One Γ-limit estimate with its convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    /// Estimator output on the tail window.
    pub raw: GridFn,
    /// `raw` with diverging points sent to `+inf` or `-inf`.
    pub limit: GridFn,
    /// Change between the last two eps entries.
    pub eps_change: Vec<f64>,
    /// Tail-window value minus half-window value.
    pub tail_change: Vec<f64>,
    pub diverging: Vec<bool>,
}

impl GammaEstimate {
    pub fn any_diverging(&self) -> bool {
        self.diverging.iter().any(|&d| d)
    }

    /// True when the limit is `+inf` at every grid point.
    pub fn dom_empty(&self) -> bool {
        self.limit.values().iter().all(|v| *v == ExtReal::PosInf)
    }

    pub fn max_tail_change(&self) -> f64 {
        self.tail_change
            .iter()
            .filter(|d| d.is_finite())
            .fold(0.0, |m: f64, d| m.max(d.abs()))
    }

    pub fn max_eps_change(&self) -> f64 {
        self.eps_change
            .iter()
            .filter(|d| d.is_finite())
            .fold(0.0, |m: f64, d| m.max(*d))
    }
}

#[derive(Clone, Copy)]
enum Side {
    Lower,
    Upper,
}

/// Per-eps ball minima of every member in `lo..=hi`.
fn ball_mins(seq: &FnSeq, p: &GammaParams, lo: usize, hi: usize) -> Result<Vec<Vec<Vec<ExtReal>>>> {
    (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let f = seq.member(n)?;
            Ok(p.eps_schedule().iter().map(|&e| f.ball_min_all(e)).collect())
        })
        .collect()
}

/// `max over eps of (min or max over the window of the ball minima)`, plus
/// the same at the previous eps entry.
fn reduce(mins: &[Vec<Vec<ExtReal>>], side: Side) -> (Vec<ExtReal>, Vec<ExtReal>) {
    let n_eps = mins[0].len();
    let len = mins[0][0].len();
    let per_eps: Vec<Vec<ExtReal>> = (0..n_eps)
        .map(|e| {
            (0..len)
                .map(|i| {
                    let it = mins.iter().map(|m| m[e][i]);
                    match side {
                        Side::Lower => it.min(),
                        Side::Upper => it.max(),
                    }
                    .expect("window is nonempty")
                })
                .collect()
        })
        .collect();
    let sup_upto = |k: usize| -> Vec<ExtReal> {
        (0..len)
            .map(|i| per_eps[..k].iter().map(|v| v[i]).max().expect("k >= 1"))
            .collect()
    };
    let all = sup_upto(n_eps);
    let prev = if n_eps > 1 { sup_upto(n_eps - 1) } else { all.clone() };
    (all, prev)
}

fn build(seq: &FnSeq, p: &GammaParams, mins: &[Vec<Vec<ExtReal>>], side: Side) -> Result<GammaEstimate> {
    let (ts, n) = (p.tail_start(), p.horizon());
    let (h_lo, h_hi) = ((ts / 2).max(1), (n / 2).max(1));
    let first = h_lo;
    let tail = &mins[ts - first..=n - first];
    let half = &mins[h_lo - first..=h_hi - first];
    let (full, prev) = reduce(tail, side);
    let (halfv, _) = reduce(half, side);
    let grid = *seq.grid();

    let mut limit = full.clone();
    let mut tail_change = Vec::with_capacity(full.len());
    let mut diverging = Vec::with_capacity(full.len());
    for i in 0..full.len() {
        let (v, w) = (full[i], halfv[i]);
        let d = match (v, w) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a - b,
            _ if v == w => 0.0,
            _ => v.to_f64() - w.to_f64(),
        };
        tail_change.push(d);
        let div = match (v, w) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs() > 0.25 * (1.0 + b.abs()),
            _ => false,
        };
        diverging.push(div);
        if div {
            limit[i] = if d > 0.0 { ExtReal::PosInf } else { ExtReal::NegInf };
        }
    }
    let eps_change = full.iter().zip(&prev).map(|(a, b)| a.distance(*b)).collect();
    Ok(GammaEstimate {
        raw: GridFn::new_allow_neg_inf(grid, full)?,
        limit: GridFn::new_allow_neg_inf(grid, limit)?,
        eps_change,
        tail_change,
        diverging,
    })
}

fn members_for(seq: &FnSeq, p: &GammaParams) -> Result<Vec<Vec<Vec<ExtReal>>>> {
    p.check_grid(seq.grid())?;
    if p.horizon() > seq.horizon() {
        return Err(Error::HorizonExceeded(format!(
            "parameters ask for {} members, family has {}",
            p.horizon(),
            seq.horizon()
        )));
    }
    ball_mins(seq, p, (p.tail_start() / 2).max(1), p.horizon())
}

/// Γ-liminf and Γ-limsup estimates from one pass over the members.
pub fn gamma_limits(seq: &FnSeq, p: &GammaParams) -> Result<(GammaEstimate, GammaEstimate)> {
    let mins = members_for(seq, p)?;
    Ok((build(seq, p, &mins, Side::Lower)?, build(seq, p, &mins, Side::Upper)?))
}

/// `max over eps of min over n in the tail of inf over B_eps(x) of f_n`.
pub fn gamma_liminf(seq: &FnSeq, p: &GammaParams) -> Result<GammaEstimate> {
    let mins = members_for(seq, p)?;
    build(seq, p, &mins, Side::Lower)
}

/// As [`gamma_liminf`] with the max over the tail window.
pub fn gamma_limsup(seq: &FnSeq, p: &GammaParams) -> Result<GammaEstimate> {
    let mins = members_for(seq, p)?;
    build(seq, p, &mins, Side::Upper)
}

/// Grid points whose `margin`-neighbourhood does not straddle a boundary
/// between finite and infinite values of `f`.
pub fn trusted_mask(f: &GridFn, margin: f64) -> Vec<bool> {
    let r = (margin / f.grid().spacing() - 1e-9).ceil().max(0.0) as usize;
    let fin: Vec<bool> = f.values().iter().map(|v| v.is_finite()).collect();
    let n = fin.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(n - 1);
            fin[lo..=hi].iter().all(|&b| b == fin[i])
        })
        .collect()
}

/// Compares both estimates with `candidate` on trusted points. The threshold
/// is `tol` on top of the allowance `spacing + 2 / tail_start`.
pub fn gamma_limit_verdict(seq: &FnSeq, candidate: &GridFn, p: &GammaParams, tol: f64) -> Result<Verdict> {
    if candidate.grid() != seq.grid() {
        return Err(Error::GridMismatch);
    }
    let (lower, upper) = gamma_limits(seq, p)?;
    let mask = trusted_mask(candidate, p.max_eps());
    let allowance = p.allowance(seq.grid());
    let threshold = allowance + tol;
    let mut tp = TruncationParams::new(p, *seq.grid(), None, tol);
    tp.allowance = allowance;
    let residuals = vec![
        Residual::new("liminf", masked_distance(&lower.limit, candidate, &mask), threshold),
        Residual::new("limsup", masked_distance(&upper.limit, candidate, &mask), threshold),
    ];
    let mut v = Verdict::from_residuals("gamma-limit", residuals, tp);
    if lower.any_diverging() || upper.any_diverging() {
        v.note("diverging");
    }
    v.note(format!(
        "tail sensitivity {:.3e} (liminf), {:.3e} (limsup)",
        lower.max_tail_change(),
        upper.max_tail_change()
    ));
    v.note(format!(
        "eps sensitivity {:.3e} (liminf), {:.3e} (limsup)",
        lower.max_eps_change(),
        upper.max_eps_change()
    ));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::Grid1D;

    fn grid() -> Grid1D {
        Grid1D::symmetric(2.0, 401).unwrap()
    }

    /// The definition evaluated literally: sup over eps of lim inf/sup over the
    /// tail of the minimum over grid points in the closed ball.
    fn brute(seq: &FnSeq, p: &GammaParams, upper: bool) -> Vec<f64> {
        let g = *seq.grid();
        let members: Vec<GridFn> = (p.tail_start()..=p.horizon()).map(|n| seq.member(n).unwrap()).collect();
        g.points()
            .map(|x| {
                p.eps_schedule()
                    .iter()
                    .map(|&e| {
                        let per_n = members.iter().map(|f| {
                            g.points()
                                .zip(f.values())
                                .filter(|(y, _)| (y - x).abs() <= e * (1.0 + 1e-9))
                                .map(|(_, v)| v.to_f64())
                                .fold(f64::INFINITY, f64::min)
                        });
                        if upper {
                            per_n.fold(f64::NEG_INFINITY, f64::max)
                        } else {
                            per_n.fold(f64::INFINITY, f64::min)
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn constant_sequence_is_its_own_limit() {
        let g = grid();
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        let seq = FnSeq::constant(abs.clone(), 64).unwrap();
        let p = GammaParams::for_grid(&g, 64).unwrap();
        let (lo, up) = gamma_limits(&seq, &p).unwrap();
        assert_eq!(lo.raw, up.raw);
        let err = lo.raw.raw().iter().zip(abs.raw()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= g.spacing() + 1e-12);
        let v = gamma_limit_verdict(&seq, &abs, &p, 0.0).unwrap();
        assert!(v.outcome, "{}", v.to_json());
    }

    #[test]
    fn translation_matches_brute_force_and_abs() {
        let g = grid();
        let seq = FnSeq::from_rule(g, 64, |n, x| (x - 1.0 / n as f64).abs()).unwrap();
        let p = GammaParams::for_grid(&g, 64).unwrap();
        let (lo, up) = gamma_limits(&seq, &p).unwrap();
        assert_eq!(lo.raw.raw(), brute(&seq, &p, false));
        assert_eq!(up.raw.raw(), brute(&seq, &p, true));
        let bound = g.spacing() + 1.0 / p.tail_start() as f64;
        for est in [&lo, &up] {
            for (x, v) in g.points().zip(est.limit.values()) {
                assert!((v.to_f64() - x.abs()).abs() <= bound + 1e-12);
            }
            assert!(!est.any_diverging());
        }
        let abs = GridFn::from_fn(g, f64::abs).unwrap();
        let v = gamma_limit_verdict(&seq, &abs, &p, 0.0).unwrap();
        assert!(v.outcome);
    }

    #[test]
    fn blowup_diverges_upward() {
        let g = grid();
        let seq = FnSeq::from_rule(g, 128, |n, x| x.abs() / n as f64 + n as f64).unwrap();
        let p = GammaParams::for_grid(&g, 128).unwrap();
        let (lo, up) = gamma_limits(&seq, &p).unwrap();
        assert!(lo.raw.values().iter().all(|v| v.to_f64() >= p.tail_start() as f64));
        assert!(lo.diverging.iter().all(|&d| d));
        assert!(lo.dom_empty() && up.dom_empty());
        let zero = GridFn::constant(g, 0.0);
        let v = gamma_limit_verdict(&seq, &zero, &p, 0.0).unwrap();
        assert!(!v.outcome);
        assert!(v.diagnostics.iter().any(|d| d == "diverging"));
    }

    #[test]
    fn alternating_sequence_separates_the_limits() {
        let g = grid();
        let seq = FnSeq::from_rule(g, 64, |n, x| x.abs() + (n % 2) as f64).unwrap();
        let p = GammaParams::for_grid(&g, 64).unwrap();
        let (lo, up) = gamma_limits(&seq, &p).unwrap();
        assert_eq!(lo.raw.raw(), brute(&seq, &p, false));
        assert_eq!(up.raw.raw(), brute(&seq, &p, true));
        for ((x, a), b) in g.points().zip(lo.limit.values()).zip(up.limit.values()) {
            assert!((a.to_f64() - x.abs()).abs() <= g.spacing() + 1e-12);
            assert!((b.to_f64() - x.abs() - 1.0).abs() <= g.spacing() + 1e-12);
        }
    }

    #[test]
    fn mask_skips_domain_edges() {
        let g = Grid1D::symmetric(1.0, 21).unwrap();
        let ind = GridFn::indicator(g, -0.5, 0.5).unwrap();
        let m = trusted_mask(&ind, 0.1);
        // finite on indices 5..=15; one point either side of each edge is masked
        assert!(m[0] && m[3] && !m[4] && !m[5] && m[6] && m[10]);
        assert!(m[14] && !m[15] && !m[16] && m[17]);
    }
}
