//! Extended reals, uniform grids, sampled functions and function families.

mod ext;
mod grid;
mod gridfn;
pub mod io;
mod seq;

pub(crate) use ext::ext_f64;
pub use ext::ExtReal;
pub use grid::{Grid1D, SlopeGrid};
pub use gridfn::GridFn;
pub use seq::{Extension, FnSeq};
