//! Subdifferential graphs of convex grid functions, their convergence, and
//! the repair of approximate subgradient pairs.

mod convergence;
mod graph;
mod repair;

pub(crate) use convergence::GraphIndex;
pub use convergence::{graph_excess, graphical_convergence_verdict, GraphWindow};
pub use graph::{fenchel_subdiff, integrate_graph, subdiff_graph, Breakpoint, MonotoneGraph};
pub use repair::{br_repair, SubgradPair};
