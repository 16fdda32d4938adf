use serde_json::json;

use super::{conjugate_of_limit, conjugate_seq, cross_allowance, equicoercivity_check, slope_grid_for};
use crate::error::{Error, Result};
use crate::extgrid::{ExtReal, FnSeq, GridFn};
use crate::gamma::{gamma_limits, gamma_liminf, gamma_limsup, trusted_mask, GammaParams};
use crate::transform::{conjugate, conjugate_with};
use crate::verdict::{masked_distance, masked_excess, Diagnosis, Residual, TruncationParams, Verdict};

fn and_masks(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x && *y).collect()
}

fn first_improper(seq: &FnSeq, horizon: usize) -> Result<Option<usize>> {
    for n in 1..=horizon {
        if !seq.member(n)?.is_proper() {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

fn curve(f: &GridFn) -> serde_json::Value {
    json!({ "x": f.grid().points().collect::<Vec<_>>(), "value": f.values() })
}

/// Conjugate of the Γ-liminf against the Γ-limsup of the conjugates, and the
/// two sides of the equivalence "`f` is the Γ-limit of the members iff `f*`
/// is the Γ-limit of their conjugates" for the candidate `f`.
///
/// Residuals:
/// - `conjugate-of-liminf`: `|(Γ-liminf f_n)* - Γ-limsup f_n*|`;
/// - `one-sided`: excess of `(Γ-liminf f_n)*` over `Γ-limsup f_n*`;
/// - `primal-liminf`, `primal-limsup`: Γ-limits of the members against `f`;
/// - `dual-liminf`, `dual-limsup`: Γ-limits of the conjugates against `f*`.
///
/// Points within the largest ball radius of a switch between finite and
/// infinite values are not compared.
pub fn dual_gamma_check(seq: &FnSeq, f: &GridFn, p: &GammaParams, tol: f64) -> Result<Verdict> {
    if f.grid() != seq.grid() {
        return Err(Error::GridMismatch);
    }
    let x = *seq.grid();
    let s = slope_grid_for(seq)?;
    let pd = p.rescaled(&x, &s);
    let dual = conjugate_seq(seq)?;
    let mut tp = TruncationParams::new(p, x, Some(s), tol);
    let allowance = cross_allowance(&x, &s, p);
    tp.allowance = allowance;

    if let Some(n) = first_improper(seq, p.horizon())? {
        return Ok(Verdict::hypothesis_failure("dual-gamma", vec![Diagnosis::ImproperMember(n)], tp));
    }
    let eq = equicoercivity_check(seq, &dual)?;
    let mut eq_part = Verdict::from_residuals("equicoercivity", Vec::new(), tp.clone());
    eq_part.outcome = eq.holds;
    eq_part.diagnostics = eq.notes.clone();
    eq_part.witness = Some(serde_json::to_value(&eq)?);

    let (lower, upper) = gamma_limits(seq, p)?;
    let (dual_lower, dual_upper) = gamma_limits(&dual, &pd)?;
    let conj_lower = conjugate_of_limit(&lower.limit, &s, seq)?;

    let mut hyps = Vec::new();
    if !eq.holds {
        hyps.push(Diagnosis::NotEquicoercive);
    }
    if upper.dom_empty() {
        hyps.push(Diagnosis::DomLimsupEmpty);
    }
    if !hyps.is_empty() {
        let mut v = Verdict::hypothesis_failure("dual-gamma", hyps, tp);
        if lower.any_diverging() || upper.any_diverging() {
            v.note("diverging");
        }
        if upper.dom_empty() {
            let finite_neg = dual_upper.limit.values().iter().filter(|v| **v == ExtReal::NegInf).count();
            let pos = dual_upper.limit.values().iter().filter(|v| **v == ExtReal::PosInf).count();
            v.note(format!(
                "strict gap: conjugate of the Γ-liminf is -inf at every slope, while the Γ-limsup of the conjugates is -inf at {finite_neg} slopes near 0 and +inf at {pos} slopes"
            ));
            let zero = s.nearest_index(0.0);
            let off_zero_pos_inf = dual_upper
                .limit
                .values()
                .iter()
                .enumerate()
                .filter(|(j, _)| (s.point(*j)).abs() > pd.max_eps() + 2.0 / p.tail_start() as f64)
                .all(|(_, v)| *v == ExtReal::PosInf);
            v.witness = Some(json!({
                "conjugate_of_liminf": curve(&conj_lower),
                "limsup_of_conjugates": curve(&dual_upper.limit),
                "limsup_of_conjugates_at_zero": dual_upper.limit.value(zero),
                "limsup_of_conjugates_pos_inf_off_zero": off_zero_pos_inf,
            }));
        }
        v.parts.push(eq_part);
        return Ok(v);
    }

    let margin_x = p.max_eps();
    let margin_s = pd.max_eps();
    let mask_i = and_masks(
        &trusted_mask(&conj_lower, margin_s),
        &trusted_mask(&dual_upper.limit, margin_s),
    );
    let fstar = conjugate_with(f, &s, seq.extension())?;
    let mask_p = trusted_mask(f, margin_x);
    let mask_d = and_masks(
        &and_masks(&trusted_mask(&fstar, margin_s), &trusted_mask(&dual_lower.limit, margin_s)),
        &trusted_mask(&dual_upper.limit, margin_s),
    );
    let t_cross = allowance + tol;
    let t_primal = x.spacing() + 2.0 / p.tail_start() as f64 + tol;
    let t_dual = s.spacing() + 2.0 / p.tail_start() as f64 + tol;
    let residuals = vec![
        Residual::new("conjugate-of-liminf", masked_distance(&conj_lower, &dual_upper.limit, &mask_i), t_cross),
        Residual::new("one-sided", masked_excess(&conj_lower, &dual_upper.limit, &mask_i), t_cross),
        Residual::new("primal-liminf", masked_distance(&lower.limit, f, &mask_p), t_primal),
        Residual::new("primal-limsup", masked_distance(&upper.limit, f, &mask_p), t_primal),
        Residual::new("dual-liminf", masked_distance(&dual_lower.limit, &fstar, &mask_d), t_dual),
        Residual::new("dual-limsup", masked_distance(&dual_upper.limit, &fstar, &mask_d), t_dual),
    ];
    let mut v = Verdict::from_residuals("dual-gamma", residuals, tp);
    let pass = |name: &str| v.residual(name).is_some_and(|r| r.pass);
    let primal = pass("primal-liminf") && pass("primal-limsup");
    let dual_ok = pass("dual-liminf") && pass("dual-limsup");
    v.note(format!(
        "candidate is the Γ-limit: {primal}; its conjugate is the Γ-limit of the conjugates: {dual_ok}"
    ));
    if primal != dual_ok {
        v.note("the two sides of the equivalence disagree");
    }
    if lower.any_diverging() || upper.any_diverging() || dual_lower.any_diverging() || dual_upper.any_diverging() {
        v.note("diverging");
    }
    v.parts.push(eq_part);
    Ok(v)
}

/// `(Γ-liminf f_n*)* = Γ-limsup f_n`, given slopes `x_n*` in the window with
/// `f_n*(x_n*)` bounded above. The search uses the minimizers of the
/// conjugates.
pub fn joly_check(seq: &FnSeq, p: &GammaParams, tol: f64) -> Result<Verdict> {
    let x = *seq.grid();
    let s = slope_grid_for(seq)?;
    let pd = p.rescaled(&x, &s);
    let dual = conjugate_seq(seq)?;
    let allowance = cross_allowance(&x, &s, p);
    let mut tp = TruncationParams::new(p, x, Some(s), tol);
    tp.allowance = allowance;

    let ts = p.tail_start();
    let mins: Vec<f64> = dual
        .members((ts / 2).max(1), p.horizon())?
        .iter()
        .map(|c| c.values().iter().copied().min().map_or(f64::INFINITY, ExtReal::to_f64))
        .collect();
    let split = ts - (ts / 2).max(1);
    let sup_tail = mins[split..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sup_half = mins[..split.max(1)].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounded = sup_tail.is_finite() && sup_tail <= sup_half + 0.25 * (1.0 + sup_half.abs());
    if !bounded {
        let mut v = Verdict::hypothesis_failure("joly", vec![Diagnosis::NoBoundedDualSequence], tp);
        v.note(format!("sup of min f_n* over the tail is {sup_tail}"));
        return Ok(v);
    }

    let dual_lower = gamma_liminf(&dual, &pd)?;
    let upper = gamma_limsup(seq, p)?;
    let back = if dual_lower.limit.has_finite() || dual_lower.limit.values().contains(&ExtReal::NegInf) {
        conjugate(&dual_lower.limit, &x)?
    } else {
        GridFn::new_allow_neg_inf(x, vec![ExtReal::NegInf; x.count()])?
    };
    let mask = and_masks(&trusted_mask(&back, p.max_eps()), &trusted_mask(&upper.limit, p.max_eps()));
    let residuals = vec![Residual::new(
        "conjugate-of-dual-liminf",
        masked_distance(&back, &upper.limit, &mask),
        allowance + tol,
    )];
    let mut v = Verdict::from_residuals("joly", residuals, tp);
    v.note(format!("sup over the tail of min f_n* = {sup_tail}"));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::{Extension, Grid1D};

    fn family(half: f64, count: usize, rule: fn(usize, f64) -> f64, ext: Extension) -> (FnSeq, GammaParams) {
        let g = Grid1D::symmetric(half, count).unwrap();
        let seq = FnSeq::from_rule(g, 128, rule)
            .unwrap()
            .with_extension(ext)
            .with_slope_grid(Grid1D::symmetric(2.0, 513).unwrap());
        (seq, GammaParams::for_grid(&g, 128).unwrap())
    }

    #[test]
    fn blowup_diagnoses_the_empty_domain_and_shows_the_gap() {
        let (seq, p) = family(2.0, 513, |n, x| x.abs() / n as f64 + n as f64, Extension::Affine);
        let f = GridFn::constant(*seq.grid(), 0.0);
        let v = dual_gamma_check(&seq, &f, &p, 0.0).unwrap();
        assert_eq!(v.hypotheses, vec![Diagnosis::DomLimsupEmpty]);
        assert!(!v.outcome);
        let w = v.witness.as_ref().unwrap();
        assert_eq!(w["limsup_of_conjugates_pos_inf_off_zero"], true);
        assert!(w["conjugate_of_liminf"]["value"].as_array().unwrap().iter().all(|v| v == "-inf"));
        assert!(v.part("equicoercivity").unwrap().outcome);
    }

    #[test]
    fn translation_both_directions() {
        let (seq, p) = family(2.0, 513, |n, x| (x - 1.0 / n as f64).abs(), Extension::Affine);
        let f = GridFn::from_fn(*seq.grid(), f64::abs).unwrap();
        let v = dual_gamma_check(&seq, &f, &p, 0.0).unwrap();
        assert!(v.outcome, "{}", v.to_json());
        assert_eq!(v.residuals.len(), 6);
    }

    #[test]
    fn quadratic_both_directions() {
        let (seq, p) = family(1.5, 257, |n, x| 0.5 * (1.0 + 1.0 / n as f64) * x * x, Extension::Window);
        let f = GridFn::from_fn(*seq.grid(), |x| 0.5 * x * x).unwrap();
        let v = dual_gamma_check(&seq, &f, &p, 0.0).unwrap();
        assert!(v.outcome, "{}", v.to_json());
    }

    #[test]
    fn wrong_candidate_is_refuted_not_diagnosed() {
        let (seq, p) = family(2.0, 513, |n, x| (x - 1.0 / n as f64).abs(), Extension::Affine);
        let f = GridFn::from_fn(*seq.grid(), |x| 2.0 * x.abs()).unwrap();
        let v = dual_gamma_check(&seq, &f, &p, 0.0).unwrap();
        assert!(!v.outcome);
        assert!(v.hypotheses.is_empty());
        assert!(v.residual("one-sided").unwrap().pass);
    }

    #[test]
    fn joly_identity_on_convergent_families() {
        let fams: [(f64, usize, fn(usize, f64) -> f64, Extension); 3] = [
            (1.5, 257, |n, x| 0.5 * (1.0 + 1.0 / n as f64) * x * x, Extension::Window),
            (2.0, 513, |n, x| (x - 1.0 / n as f64).abs(), Extension::Affine),
            (2.0, 513, |_, x| 0.5 * x * x, Extension::Window),
        ];
        for (half, count, rule, ext) in fams {
            let (seq, p) = family(half, count, rule, ext);
            let v = joly_check(&seq, &p, 0.0).unwrap();
            assert!(v.outcome, "{}", v.to_json());
        }
    }

    #[test]
    fn constant_family_only_sees_the_ball_error() {
        // a constant sequence is its own Γ-limit; what remains is the ball
        // minimum of the dual estimate, at most slope 2 times the dual ball
        let (seq, p) = family(2.0, 513, |_, x| 0.5 * x * x, Extension::Window);
        let v = joly_check(&seq, &p, 0.0).unwrap();
        let pd = p.rescaled(seq.grid(), &seq.slope_grid().unwrap());
        assert!(v.residual_max <= 2.0 * pd.max_eps() + 1e-12, "{}", v.residual_max);
    }
}
