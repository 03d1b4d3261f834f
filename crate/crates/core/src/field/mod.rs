//! Structured label grids, sampled fields, finite differences, quadrature and residual norms.

mod data;
mod grid;
mod norms;
mod quadrature;
mod stencil;
mod sum;

pub use data::{Field, Rank};
pub use grid::{Axis, LabelGrid};
pub use norms::{ResidualNorm, DEFAULT_RIND};
pub use quadrature::{QuadAxis, QuadratureKind, QuadratureRule};
pub use stencil::{curl, differentiate, divergence, gradient, BoundaryPolicy, StencilOrder, StencilSpec};
pub use sum::{pairwise_dot, pairwise_sum};
