use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extgrid::{ext_f64, ExtReal, FnSeq, GridFn};

/// Which sufficient condition settled the question. Conditions are tried in
/// the order listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoercivityStyle {
    /// Every conjugate is `+inf` outside a bounded set strictly inside the
    /// slope window.
    DualDomainBounded,
    /// `f_n*(s) >= alpha |s| + beta` for all members.
    UniformCoercive,
    /// `f_n <= rho` on a ball around the origin for all members.
    UniformlyBounded,
    /// Finite scan only: the minimizers of the conjugates stay inside the
    /// slope window.
    Heuristic,
}

/// Per-member summary of the conjugate on the slope window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberExtremes {
    pub n: usize,
    /// Finite region `[lo, hi]` of `f_n*`, if any.
    pub domain: Option<(f64, f64)>,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub min_value: f64,
    pub argmin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquicoercivityReport {
    pub style: CoercivityStyle,
    pub holds: bool,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    /// Dual-domain radius for [`CoercivityStyle::DualDomainBounded`], ball
    /// radius for [`CoercivityStyle::UniformlyBounded`].
    pub radius: Option<f64>,
    pub evidence: Vec<MemberExtremes>,
    pub notes: Vec<String>,
}

fn extremes(n: usize, c: &GridFn) -> MemberExtremes {
    let s = c.grid();
    let domain = c.finite_span().map(|(a, b)| (s.point(a), s.point(b)));
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in c.values().iter().enumerate() {
        if let Some(y) = v.finite() {
            if best.is_none_or(|(b, _)| y < b) {
                best = Some((y, i));
            }
        }
    }
    MemberExtremes {
        n,
        domain,
        min_value: best.map_or(f64::INFINITY, |b| b.0),
        argmin: best.map(|b| s.point(b.1)),
    }
}

/// A bound over all members that does not drift between the first half of
/// the horizon and the whole of it.
fn stable(all: f64, half: f64) -> bool {
    all.is_finite() && half.is_finite() && (all - half).abs() <= 0.25 * (1.0 + half.abs())
}

/// Decides whether bounded values of the conjugates force bounded slopes,
/// trying the sufficient conditions in order and reporting the first
/// conclusive one.
pub fn equicoercivity_check(seq: &FnSeq, dual_seq: &FnSeq) -> Result<EquicoercivityReport> {
    let horizon = dual_seq.horizon();
    if horizon < 2 {
        return Err(Error::HorizonExceeded("need at least two members".into()));
    }
    let half = horizon / 2;
    let conj = dual_seq.members(1, horizon)?;
    let s = *dual_seq.grid();
    let last = s.count() - 1;
    let evidence: Vec<MemberExtremes> = conj.iter().enumerate().map(|(k, c)| extremes(k + 1, c)).collect();
    let mut notes = Vec::new();
    let report = |style, holds, notes: Vec<String>| EquicoercivityReport {
        style,
        holds,
        alpha: None,
        beta: None,
        rho: None,
        radius: None,
        evidence: evidence.clone(),
        notes,
    };

    // (1) bounded dual domains
    if let Some(e) = evidence.iter().find(|e| e.domain.is_none()) {
        notes.push(format!(
            "dual domain of member {} escapes the slope window [{}, {}]",
            e.n,
            s.lo(),
            s.hi()
        ));
        return Ok(report(CoercivityStyle::DualDomainBounded, false, notes));
    }
    let inside = conj.iter().all(|c| {
        let (a, b) = c.finite_span().expect("checked above");
        a > 0 && b < last
    });

    // (2) uniform coercivity constants
    let growth = conj
        .iter()
        .zip(&evidence)
        .map(|(c, e)| {
            [(0, s.lo()), (last, s.hi())]
                .iter()
                .filter(|(_, x)| *x != 0.0)
                .map(|&(i, x)| (c.value(i).to_f64() - e.min_value) / x.abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    let alpha = if growth.is_finite() { 0.5 * growth } else { 1.0 };
    let betas: Vec<f64> = conj
        .par_iter()
        .map(|c| {
            c.grid()
                .points()
                .zip(c.values())
                .filter_map(|(x, v)| v.finite().map(|y| y - alpha * x.abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let beta_all = betas.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_half = betas[..half].iter().copied().fold(f64::INFINITY, f64::min);
    let coercive = alpha > 0.0 && stable(beta_all, beta_half);

    if inside {
        let r = evidence
            .iter()
            .filter_map(|e| e.domain)
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max);
        if !coercive {
            notes.push(format!(
                "uniform coercivity fails: beta falls from {beta_half} (n <= {half}) to {beta_all} (n <= {horizon})"
            ));
        }
        let mut r0 = report(CoercivityStyle::DualDomainBounded, true, notes);
        r0.radius = Some(r);
        return Ok(r0);
    }
    if coercive {
        let mut r0 = report(CoercivityStyle::UniformCoercive, true, notes);
        r0.alpha = Some(alpha);
        r0.beta = Some(beta_all);
        return Ok(r0);
    }
    notes.push(format!("no uniform coercivity constants (alpha {alpha}, beta {beta_half} -> {beta_all})"));

    // (3) uniform upper bound near the origin
    let g = seq.grid();
    if g.lo() < 0.0 && g.hi() > 0.0 {
        let r = 0.25 * g.lo().abs().min(g.hi());
        let range = g.ball_indices(0.0, r);
        let rhos: Vec<f64> = (1..=horizon)
            .into_par_iter()
            .map(|n| {
                let f = seq.member(n)?;
                Ok(f.values()[range.clone()].iter().copied().max().map_or(f64::INFINITY, ExtReal::to_f64))
            })
            .collect::<Result<_>>()?;
        let rho_all = rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rho_half = rhos[..half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if stable(rho_all, rho_half) {
            let mut r0 = report(CoercivityStyle::UniformlyBounded, true, notes);
            r0.rho = Some(rho_all);
            r0.radius = Some(r);
            return Ok(r0);
        }
        notes.push(format!("members not uniformly bounded on [-{r}, {r}] ({rho_half} -> {rho_all})"));
    }

    // (4) finite scan
    let (lo, hi) = (s.lo(), s.hi());
    let ds = s.spacing();
    let escaping: Vec<usize> = evidence[half..]
        .iter()
        .filter(|e| e.argmin.is_none_or(|a| a <= lo + 0.5 * ds || a >= hi - 0.5 * ds))
        .map(|e| e.n)
        .collect();
    let holds = escaping.is_empty();
    if let Some(n) = escaping.first() {
        notes.push(format!("minimizer of the conjugate of member {n} sits on the slope window edge"));
    }
    Ok(report(CoercivityStyle::Heuristic, holds, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::{Extension, Grid1D};
    use crate::theorems::conjugate_seq;

    fn family(rule: impl Fn(usize, f64) -> f64 + Send + Sync + 'static, ext: Extension) -> FnSeq {
        let g = Grid1D::symmetric(2.0, 257).unwrap();
        FnSeq::from_rule(g, 64, rule)
            .unwrap()
            .with_extension(ext)
            .with_slope_grid(Grid1D::symmetric(2.0, 257).unwrap())
    }

    fn check(seq: &FnSeq) -> EquicoercivityReport {
        equicoercivity_check(seq, &conjugate_seq(seq).unwrap()).unwrap()
    }

    #[test]
    fn blowup_has_bounded_dual_domains_but_no_uniform_constants() {
        let seq = family(|n, x| x.abs() / n as f64 + n as f64, Extension::Affine);
        let r = check(&seq);
        assert_eq!(r.style, CoercivityStyle::DualDomainBounded);
        assert!(r.holds);
        assert!(r.radius.unwrap() <= 1.0 + 1e-12);
        assert!(r.notes.iter().any(|n| n.contains("uniform coercivity fails")));
        assert_eq!(r.evidence[63].min_value, -64.0);
    }

    #[test]
    fn fixed_quadratic_is_uniformly_coercive() {
        let seq = family(|_, x| x * x / 2.0, Extension::Window);
        let r = check(&seq);
        assert_eq!(r.style, CoercivityStyle::UniformCoercive);
        assert!(r.holds && r.alpha.unwrap() > 0.0);
    }

    #[test]
    fn diverging_linear_slopes_escape() {
        let seq = family(|n, x| n as f64 * x, Extension::Affine);
        let r = check(&seq);
        assert!(!r.holds);
        assert!(r.notes[0].contains("escapes"), "{:?}", r.notes);
    }

    #[test]
    fn diverging_linear_slopes_fail_the_scan_under_the_window_convention() {
        let seq = family(|n, x| n as f64 * x, Extension::Window);
        let r = check(&seq);
        assert_eq!(r.style, CoercivityStyle::Heuristic);
        assert!(!r.holds);
    }
}
