//! Numerical checks for Lagrangian descriptions of ideal fluid motion.
//!
//! A [`flowmap::FlowMap`] sends particle labels `(a, b, c)` to positions at time `t`.
//! The modules below turn the classical identities of Lagrangian hydrodynamics into
//! residuals and invariants evaluated on structured label grids: density and cofactor
//! relations, equations of motion in Cartesian and orthogonal curvilinear coordinates,
//! Cauchy's vorticity invariants, circulation and vorticity flux, Clebsch potentials,
//! Biot–Savart reconstruction and the kinetic energy balance. [`flows`] supplies exact
//! Euler solutions to check against and [`suite`] runs convergence studies and writes
//! deterministic reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod error;
pub mod biot_savart;
pub mod cauchy;
pub mod curvilinear;
pub mod circulation;
pub mod clebsch;
pub mod dynamics;
pub mod energy;
pub mod field;
pub mod flowmap;
pub mod flows;
pub mod functions;
pub mod suite;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
