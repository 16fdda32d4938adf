//! Convex-analysis operators on uniform 1-D grids: conjugates, Moreau
//! envelopes, inf-convolutions, Γ-limit estimators, set limits and
//! subdifferential graphs, plus executable checks of the duality between
//! Γ-convergence of convex functions, of their conjugates and graphical
//! convergence of their subdifferentials.

pub mod error;
pub mod extgrid;
pub mod families;
pub mod gamma;
pub mod regularize;
pub mod subdiff;
pub mod theorems;
pub mod transform;
pub mod verdict;

pub use error::{Error, Result};
pub use extgrid::{ExtReal, Extension, FnSeq, Grid1D, GridFn, SlopeGrid};
pub use verdict::{Diagnosis, Verdict};
