//! Executable checks of the duality theorems, and the constructive pieces of
//! their proofs.
//!
//! Every check returns a [`Verdict`](crate::Verdict). A failed hypothesis is
//! reported as a [`Diagnosis`](crate::Diagnosis), never as a false
//! conclusion.

mod attouch;
mod construct;
mod duality;
mod equicoercive;
mod normalization;
mod witness;

pub use attouch::attouch_equivalence_check;
pub use construct::{a_implies_b_construct, ConstructReport, ConstructStep};
pub use duality::{dual_gamma_check, joly_check};
pub use equicoercive::{equicoercivity_check, CoercivityStyle, EquicoercivityReport, MemberExtremes};
pub use normalization::{normalization_finder, NormalizationWitness};
pub use witness::{default_k_schedule, witness_recovery, WitnessReport};

use crate::error::Result;
use crate::extgrid::{ExtReal, FnSeq, Grid1D, GridFn};
use crate::gamma::GammaParams;
use crate::transform::{conjugate_with, default_slope_grid};

/// The family's slope grid, or the default grid for its last member.
pub fn slope_grid_for(seq: &FnSeq) -> Result<Grid1D> {
    match seq.slope_grid() {
        Some(s) => Ok(s),
        None => Ok(default_slope_grid(&seq.member(seq.horizon())?)),
    }
}

/// `n -> f_n*` sampled on [`slope_grid_for`], honoring the family's
/// extension.
pub fn conjugate_seq(seq: &FnSeq) -> Result<FnSeq> {
    let s = slope_grid_for(seq)?;
    let ext = seq.extension();
    Ok(seq.map(s, move |_, f| conjugate_with(&f, &s, ext)))
}

/// Conjugate of a limit estimate, which may be `+inf` everywhere (its
/// conjugate is then `-inf` everywhere).
pub(crate) fn conjugate_of_limit(g: &GridFn, s: &Grid1D, seq: &FnSeq) -> Result<GridFn> {
    if !g.has_finite() && !g.values().contains(&ExtReal::NegInf) {
        return GridFn::new_allow_neg_inf(*s, vec![ExtReal::NegInf; s.count()]);
    }
    conjugate_with(g, s, seq.extension())
}

fn radius(g: &Grid1D) -> f64 {
    g.lo().abs().max(g.hi().abs()).max(1.0)
}

/// Allowance for comparisons that cross between the two axes: a ball of
/// radius `h` moves a conjugate by at most `h` times the slope range, and
/// vice versa, plus the tail truncation `2 / tail_start`.
pub(crate) fn cross_allowance(x: &Grid1D, s: &Grid1D, p: &GammaParams) -> f64 {
    x.spacing() * radius(s) + s.spacing() * radius(x) + 2.0 / p.tail_start() as f64
}
