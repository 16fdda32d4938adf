use rayon::prelude::*;
use serde_json::json;

use super::{dual_gamma_check, normalization_finder, slope_grid_for};
use crate::error::{Error, Result};
use crate::extgrid::{FnSeq, GridFn};
use crate::gamma::{gamma_limit_verdict, GammaParams};
use crate::subdiff::{graphical_convergence_verdict, subdiff_graph, GraphWindow};
use crate::verdict::{Diagnosis, Residual, TruncationParams, Verdict};

/// Graphical convergence of the subdifferentials together with the
/// normalization condition.
fn graphical_part(seq: &FnSeq, f: &GridFn, p: &GammaParams, tol: f64) -> Result<Verdict> {
    let x = *seq.grid();
    let s = slope_grid_for(seq)?;
    let tp = TruncationParams::new(p, x, Some(s), tol);
    let graphs = (1..=p.horizon())
        .into_par_iter()
        .map(|n| subdiff_graph(&seq.member(n)?))
        .collect::<Result<Vec<_>>>();
    let (graphs, limit) = match (graphs, subdiff_graph(f)) {
        (Ok(gs), Ok(g)) => (gs, g),
        (Err(Error::NotConvex), _) | (_, Err(Error::NotConvex)) => {
            return Ok(Verdict::hypothesis_failure("graphical", vec![Diagnosis::NotConvex], tp));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let window = GraphWindow::new((x.lo(), x.hi()), (s.lo(), s.hi()))?.with_step(x.spacing().max(s.spacing()))?;
    let graph = graphical_convergence_verdict(&graphs, &limit, &window, p, tol)?;

    let threshold = tol + x.spacing() + 1.0 / p.tail_start() as f64;
    let mut norm = match normalization_finder(seq, f, p, tol) {
        Ok(w) => {
            let mut v = Verdict::from_residuals(
                "normalization",
                vec![Residual::new("normalization", (w.residual, Some(w.a)), w.threshold)],
                tp.clone(),
            );
            v.witness = Some(serde_json::to_value(&w)?);
            v
        }
        Err(Error::NotFound { best }) => {
            let mut v = Verdict::from_residuals(
                "normalization",
                vec![Residual::new("normalization", (best, None), threshold)],
                tp.clone(),
            );
            v.note("no normalization witness");
            v
        }
        Err(e) => return Err(e),
    };
    norm.truncation_params.allowance = threshold - tol;

    let mut v = Verdict::from_residuals("graphical", Vec::new(), tp);
    v.outcome = graph.outcome && norm.outcome;
    v.residuals = graph.residuals.iter().chain(&norm.residuals).cloned().collect();
    let worst = v
        .residuals
        .iter()
        .max_by(|a, b| (a.value - a.threshold).total_cmp(&(b.value - b.threshold)));
    v.residual_max = worst.map_or(0.0, |r| r.value);
    v.residual_argmax = worst.and_then(|r| r.argmax);
    v.parts = vec![graph, norm];
    Ok(v)
}

/// The three statements
/// (a) `f*` is the Γ-limit of the conjugates,
/// (b) the subdifferential graphs converge graphically with normalization,
/// (c) `f` is the Γ-limit of the members,
/// evaluated separately and attached as parts.
///
/// The outcome asserts the implications (a) => (b) => (c), and agreement of
/// all three when the conjugates are equicoercive. Failed hypotheses of the
/// parts are carried up.
pub fn attouch_equivalence_check(seq: &FnSeq, f: &GridFn, p: &GammaParams, tol: f64) -> Result<Verdict> {
    let a = dual_gamma_check(seq, f, p, tol)?;
    let b = graphical_part(seq, f, p, tol)?;
    let c = gamma_limit_verdict(seq, f, p, tol)?;
    let equicoercive = a.part("equicoercivity").is_some_and(|e| e.outcome);
    let (ta, tb, tc) = (a.outcome, b.outcome, c.outcome);
    let flag = |ok: bool| (if ok { 0.0 } else { 1.0 }, None);

    let mut residuals = vec![
        Residual::new("a=>b", flag(!ta || tb), 0.0),
        Residual::new("b=>c", flag(!tb || tc), 0.0),
    ];
    if equicoercive {
        residuals.push(Residual::new("agreement", flag(ta == tb && tb == tc), 0.0));
    }
    let tp = TruncationParams::new(p, *seq.grid(), Some(slope_grid_for(seq)?), tol);
    let mut v = Verdict::from_residuals("attouch-equivalence", residuals, tp);
    v.note(format!("(a) {ta}, (b) {tb}, (c) {tc}"));
    if !equicoercive {
        v.note("conjugates not shown equicoercive: only (a) => (b) => (c) is asserted");
    }
    v.note("finite dimension: weak, weak-star and norm limits coincide");
    for part in [&a, &b, &c] {
        for d in &part.hypotheses {
            if !v.hypotheses.contains(d) {
                v.hypotheses.push(d.clone());
            }
        }
    }
    v.witness = Some(json!({ "a": ta, "b": tb, "c": tc, "equicoercive": equicoercive }));
    v.parts = vec![a, b, c];
    Ok(v)
}
