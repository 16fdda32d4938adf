use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// A point of a set sequence: a real or a point of the plane.
pub trait SetPoint: Copy + Send + Sync + PartialEq + fmt::Debug {
    fn dist(&self, other: &Self) -> f64;
}

impl SetPoint for f64 {
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl SetPoint for (f64, f64) {
    fn dist(&self, other: &Self) -> f64 {
        (self.0 - other.0).hypot(self.1 - other.1)
    }
}

type SetProvider<P> = dyn Fn(usize) -> Vec<P> + Send + Sync;

/// `n -> S_n`, `1 <= n <= horizon`, each `S_n` a finite sample.
#[derive(Clone)]
pub struct SetSeq<P: SetPoint> {
    horizon: usize,
    provider: Arc<SetProvider<P>>,
}

impl<P: SetPoint> SetSeq<P> {
    pub fn new(horizon: usize, provider: impl Fn(usize) -> Vec<P> + Send + Sync + 'static) -> Self {
        SetSeq {
            horizon,
            provider: Arc::new(provider),
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn member(&self, n: usize) -> Vec<P> {
        (self.provider)(n)
    }
}

/// Finite surrogates for "eventually" and "infinitely often".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetLimitParams {
    /// Ls counts indices in `tail_start..=horizon`.
    pub tail_start: usize,
    /// Li requires closeness on the last `safety` fraction of indices.
    pub safety: f64,
    /// Ls requires closeness on at least this fraction of the tail.
    pub fraction: f64,
}

impl SetLimitParams {
    pub fn new(horizon: usize) -> Self {
        SetLimitParams {
            tail_start: (horizon / 2).max(1),
            safety: 0.25,
            fraction: 0.25,
        }
    }

    fn li_start(&self, horizon: usize) -> usize {
        ((1.0 - self.safety) * horizon as f64).ceil().max(1.0) as usize
    }

    fn ls_needed(&self, horizon: usize) -> usize {
        let tail = horizon + 1 - self.tail_start;
        ((self.fraction * tail as f64).ceil() as usize).max(1)
    }

    /// Li must sit inside Ls: the Li window lies in the Ls tail and is at
    /// least as long as the Ls count.
    fn check(&self, horizon: usize) -> Result<()> {
        if !(0.0 < self.safety && self.safety < 1.0 && 0.0 < self.fraction && self.fraction <= 1.0) {
            return Err(Error::BadParameter("safety and fraction must lie in (0, 1)".into()));
        }
        if self.tail_start == 0 || self.tail_start > horizon {
            return Err(Error::BadParameter("tail_start outside 1..=horizon".into()));
        }
        let li = self.li_start(horizon);
        if li < self.tail_start || horizon + 1 - li < self.ls_needed(horizon) {
            return Err(Error::BadParameter(
                "Li window must lie in the Ls tail and cover the Ls count".into(),
            ));
        }
        Ok(())
    }
}

/// Reported limit points, with the points whose membership changes between
/// the last two tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetLimit<P> {
    pub points: Vec<P>,
    pub unstable: Vec<P>,
}

fn check_tols(tols: &[f64]) -> Result<()> {
    if tols.is_empty() || tols.iter().any(|&t| !(t > 0.0)) || tols.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParameter("tolerances must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// `dist(y, S_n)` for every reporting point and every `n` in `lo..=hi`.
fn distances<P: SetPoint>(s: &SetSeq<P>, reporting: &[P], lo: usize, hi: usize) -> Vec<Vec<f64>> {
    let sets: Vec<Vec<P>> = (lo..=hi).into_par_iter().map(|n| s.member(n)).collect();
    reporting
        .par_iter()
        .map(|y| {
            sets.iter()
                .map(|set| set.iter().map(|p| y.dist(p)).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect()
}

fn classify<P: SetPoint>(reporting: &[P], tols: &[f64], member: impl Fn(usize, f64) -> bool) -> SetLimit<P> {
    let last = *tols.last().expect("checked nonempty");
    let mut points = Vec::new();
    let mut unstable = Vec::new();
    for (i, y) in reporting.iter().enumerate() {
        let is_in = tols.iter().all(|&t| member(i, t));
        if is_in {
            points.push(*y);
        }
        if tols.len() > 1 {
            let before = tols[..tols.len() - 1].iter().all(|&t| member(i, t));
            if before != member(i, last) {
                unstable.push(*y);
            }
        }
    }
    SetLimit { points, unstable }
}

/// Points `y` with `dist(y, S_n) <= tol` for every `n` in the last `safety`
/// fraction of indices, for every tolerance.
pub fn set_li<P: SetPoint>(
    s: &SetSeq<P>,
    reporting: &[P],
    tols: &[f64],
    params: &SetLimitParams,
) -> Result<SetLimit<P>> {
    check_tols(tols)?;
    let n = s.horizon();
    params.check(n)?;
    let d = distances(s, reporting, params.li_start(n), n);
    Ok(classify(reporting, tols, |i, t| d[i].iter().all(|&x| x <= t)))
}

/// Points `y` with `dist(y, S_n) <= tol` for at least `fraction` of the tail
/// indices, for every tolerance.
pub fn set_ls<P: SetPoint>(
    s: &SetSeq<P>,
    reporting: &[P],
    tols: &[f64],
    params: &SetLimitParams,
) -> Result<SetLimit<P>> {
    check_tols(tols)?;
    let n = s.horizon();
    params.check(n)?;
    let need = params.ls_needed(n);
    let d = distances(s, reporting, params.tail_start, n);
    Ok(classify(reporting, tols, |i, t| d[i].iter().filter(|&&x| x <= t).count() >= need))
}
