use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{default_k_schedule, slope_grid_for, witness_recovery};
use crate::error::{Error, Result};
use crate::extgrid::{ext_f64, FnSeq, GridFn};
use crate::gamma::GammaParams;
use crate::regularize::prox_index;
use crate::subdiff::{br_repair, subdiff_graph, SubgradPair};
use crate::verdict::{Diagnosis, Residual, TruncationParams, Verdict};

/// One member's approximate pair `(u_n, z_n*)` with gap `eps_n`, and the
/// exact pair `(x_n, y_n*)` it was repaired to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructStep {
    pub n: usize,
    pub u: f64,
    pub z_star: f64,
    #[serde(serialize_with = "ext_f64::serialize")]
    pub eps: f64,
    pub x: f64,
    pub y_star: f64,
    /// Gap of the repaired pair.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructReport {
    pub steps: Vec<ConstructStep>,
    pub verdict: Verdict,
}

/// Exact pairs on the member graphs converging to a pair on the graph of
/// `∂f`.
///
/// `u_n` is the proximal point of `f_n - y*·` at `x` with step `1 / n`,
/// `z_n*` the dual witness at `y*`. Their gap
/// `eps_n = f_n(u_n) + f_n*(z_n*) - z_n* u_n` drives the repair onto the
/// graph of `∂f_n` within `sqrt(eps_n)` (plus one cell in `x`).
pub fn a_implies_b_construct(
    seq: &FnSeq,
    f: &GridFn,
    pair: (f64, f64),
    p: &GammaParams,
    tol: f64,
) -> Result<ConstructReport> {
    if f.grid() != seq.grid() {
        return Err(Error::GridMismatch);
    }
    let (x0, y0) = pair;
    let grid = *seq.grid();
    let s = slope_grid_for(seq)?;
    let (h, ds) = (grid.spacing(), s.spacing());
    if !subdiff_graph(f)?.contains(x0, y0, h.max(ds) + tol) {
        return Err(Error::Hypothesis(Diagnosis::NotOnGraph));
    }
    let big_n = p.horizon();
    let witness = witness_recovery(seq, y0, p, &default_k_schedule(big_n), None)?;
    let steps = (1..=big_n)
        .into_par_iter()
        .map(|n| {
            let fn_ = seq.member(n)?;
            let tilted = fn_.add_fn(|u| -y0 * u);
            let (u, _, _) = prox_index(&tilted, 1.0 / n as f64, x0)?;
            let z = witness.y_n_star[n - 1];
            let approx = SubgradPair::new(&fn_, u, z)?;
            let exact = br_repair(&fn_, approx)?;
            Ok(ConstructStep {
                n,
                u,
                z_star: z,
                eps: approx.eps,
                x: exact.x,
                y_star: exact.s,
                gap: exact.eps,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tail = &steps[p.tail_start() - 1..];
    let worst = |d: fn(&ConstructStep, (f64, f64)) -> f64| {
        tail.iter().fold((0.0, None), |acc: (f64, Option<f64>), st| {
            let v = d(st, pair);
            if v > acc.0 || acc.1.is_none() {
                (v, Some(st.n as f64))
            } else {
                acc
            }
        })
    };
    let root_eps = tail.iter().fold(0.0, |m: f64, st| m.max(st.eps.max(0.0).sqrt()));
    let trunc = 2.0 / p.tail_start() as f64;
    let mut tp = TruncationParams::new(p, grid, Some(s), tol);
    tp.allowance = root_eps + h + ds + trunc;
    let residuals = vec![
        Residual::new("x-distance", worst(|st, q| (st.x - q.0).abs()), root_eps + h + trunc + tol),
        Residual::new("slope-distance", worst(|st, q| (st.y_star - q.1).abs()), root_eps + ds + trunc + tol),
        Residual::new(
            "repaired-gap",
            worst(|st, _| st.gap.abs()),
            1e-9 * (1.0 + x0.abs() + y0.abs()),
        ),
    ];
    let mut verdict = Verdict::from_residuals("a-implies-b-construct", residuals, tp);
    verdict.note(format!("largest sqrt(eps_n) over the tail {root_eps:.3e}"));
    verdict.witness = Some(json!({
        "x": x0,
        "y_star": y0,
        "witness_terminal_gap": witness.terminal_gap,
    }));
    Ok(ConstructReport { steps, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extgrid::{Extension, Grid1D};

    #[test]
    fn quadratic_pairs_follow_the_scaled_slope() {
        let g = Grid1D::symmetric(1.5, 257).unwrap();
        let seq = FnSeq::from_rule(g, 128, |n, x| 0.5 * (1.0 + 1.0 / n as f64) * x * x)
            .unwrap()
            .with_slope_grid(Grid1D::symmetric(2.0, 513).unwrap());
        let f = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let p = GammaParams::for_grid(&g, 128).unwrap();
        let r = a_implies_b_construct(&seq, &f, (1.0, 1.0), &p, 0.0).unwrap();
        assert!(r.verdict.outcome, "{}", r.verdict.to_json());
        for st in &r.steps {
            let gn = subdiff_graph(&seq.member(st.n).unwrap()).unwrap();
            assert!(gn.contains(st.x, st.y_star, 1e-12), "{st:?}");
            // the sampled slope at x_n lies within half a cell of (1 + 1/n) x_n
            let c = 1.0 + 1.0 / st.n as f64;
            assert!((st.y_star - c * st.x).abs() <= c * g.spacing() / 2.0 + 1e-12, "{st:?}");
            assert!((st.x - st.u).abs() <= st.eps.sqrt() + g.spacing() + 1e-12);
            assert!((st.y_star - st.z_star).abs() <= st.eps.sqrt() + 1e-12);
        }
    }

    #[test]
    fn constant_family_keeps_the_pair() {
        let g = Grid1D::symmetric(2.0, 257).unwrap();
        let f = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let seq = FnSeq::constant(f.clone(), 64).unwrap().with_slope_grid(g);
        let p = GammaParams::for_grid(&g, 64).unwrap();
        let r = a_implies_b_construct(&seq, &f, (0.5, 0.5), &p, 0.0).unwrap();
        assert!(r.verdict.outcome, "{}", r.verdict.to_json());
        let last = r.steps.last().unwrap();
        assert_eq!((last.u, last.z_star, last.x, last.y_star), (0.5, 0.5, 0.5, 0.5));
        assert!(last.eps.abs() < 1e-12);
    }

    #[test]
    fn translation_pairs_converge() {
        let g = Grid1D::symmetric(2.0, 257).unwrap();
        let seq = FnSeq::from_rule(g, 128, |n, x| (x - 1.0 / n as f64).abs())
            .unwrap()
            .with_extension(Extension::Affine)
            .with_slope_grid(g);
        let f = GridFn::from_fn(g, f64::abs).unwrap();
        let p = GammaParams::for_grid(&g, 128).unwrap();
        let r = a_implies_b_construct(&seq, &f, (0.5, 1.0), &p, 0.0).unwrap();
        assert!(r.verdict.outcome, "{}", r.verdict.to_json());
    }

    #[test]
    fn pair_off_the_graph_is_rejected() {
        let g = Grid1D::symmetric(2.0, 65).unwrap();
        let f = GridFn::from_fn(g, |x| 0.5 * x * x).unwrap();
        let seq = FnSeq::constant(f.clone(), 16).unwrap();
        let p = GammaParams::for_grid(&g, 16).unwrap();
        let e = a_implies_b_construct(&seq, &f, (0.5, 1.5), &p, 0.0).unwrap_err();
        assert_eq!(e, Error::Hypothesis(Diagnosis::NotOnGraph));
    }
}
