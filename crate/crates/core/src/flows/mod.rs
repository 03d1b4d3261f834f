//! Exact solutions of the Euler equations as flow maps, plus a few kinematic fixtures.
//!
//! Closed-form motions are returned as analytic maps; the point vortex and the
//! Taylor–Green cell are integrated from their velocity fields.

mod catalog;
pub mod fixtures;
mod integrate;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dynamics::{lagrangian_eom_residual, ForcePotential};
use crate::field::{Axis, LabelGrid, StencilSpec};
use crate::flowmap::{DerivativeMode, FlowMap};
use crate::functions::VectorFunction;
use crate::{Error, Result};

pub use integrate::integrate_trajectories;

pub type Params = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Analytic,
    Sampled,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParameterInfo {
    pub name: &'static str,
    pub default: f64,
    pub unit: &'static str,
    pub meaning: &'static str,
}

/// Static description of a catalog flow, as printed by `flows describe`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub kind: MapKind,
    /// 2 for planar motions embedded with `z = c`, 3 otherwise.
    pub dimension: usize,
    pub parameters: &'static [ParameterInfo],
    pub force_potential: &'static str,
    pub pressure: &'static str,
    pub properties: &'static [(&'static str, &'static str)],
    pub exercises: &'static str,
}

const fn p(name: &'static str, default: f64, unit: &'static str, meaning: &'static str) -> ParameterInfo {
    ParameterInfo {
        name,
        default,
        unit,
        meaning,
    }
}

const CELLS: ParameterInfo = p("cells", 16.0, "1", "label cells per axis of the default grid");
const DURATION: ParameterInfo = p("duration", 1.0, "time", "last stored sample time");
const SAMPLES: ParameterInfo = p("samples", 9.0, "1", "stored sample times, evenly spaced from 0");
const STEPS: ParameterInfo = p("steps", 4096.0, "1", "RK4 steps over the duration");

pub static CATALOG: [FlowInfo; 7] = [
    FlowInfo {
        name: "rigid_rotation",
        summary: "solid-body rotation about a coordinate axis through the origin",
        kind: MapKind::Analytic,
        dimension: 3,
        parameters: &[
            p("omega", 1.0, "1/time", "angular velocity"),
            p("axis", 2.0, "1", "rotation axis: 0 = x, 1 = y, 2 = z"),
            CELLS,
        ],
        force_potential: "V = 0",
        pressure: "p/rho = omega^2 d^2 / 2, d the distance from the axis",
        properties: &[
            ("jacobian", "1"),
            ("vorticity", "half-curl omega along the axis, uniform"),
            ("circulation", "2 pi omega R^2 around a circle of radius R"),
        ],
        exercises: "polar-coordinate equations of motion, Clebsch potentials, Stokes theorem",
    },
    FlowInfo {
        name: "uniform_translation",
        summary: "uniform motion with constant velocity along x",
        kind: MapKind::Analytic,
        dimension: 3,
        parameters: &[p("speed", 1.0, "length/time", "translation speed"), CELLS],
        force_potential: "V = 0",
        pressure: "p = const",
        properties: &[("jacobian", "1"), ("vorticity", "0"), ("circulation", "0")],
        exercises: "zero-acceleration equations of motion, trivial invariants",
    },
    FlowInfo {
        name: "simple_shear",
        summary: "plane Couette shear u = (gamma y, 0, 0)",
        kind: MapKind::Analytic,
        dimension: 3,
        parameters: &[p("gamma", 1.0, "1/time", "shear rate"), CELLS],
        force_potential: "V = 0",
        pressure: "p = const",
        properties: &[
            ("jacobian", "1"),
            ("vorticity", "half-curl (0, 0, -gamma/2), uniform"),
            ("circulation", "-gamma x enclosed area"),
        ],
        exercises: "Cauchy invariants under non-rotational deformation",
    },
    FlowInfo {
        name: "stagnation",
        summary: "planar stagnation-point flow u = (k x, -k y, 0)",
        kind: MapKind::Analytic,
        dimension: 3,
        parameters: &[p("k", 1.0, "1/time", "strain rate"), CELLS],
        force_potential: "V = 0",
        pressure: "p/rho = -k^2 (x^2 + y^2) / 2",
        properties: &[("jacobian", "1"), ("vorticity", "0"), ("circulation", "0")],
        exercises: "Bernoulli balance, irrotational invariants, strong stretching of labels",
    },
    FlowInfo {
        name: "gerstner",
        summary: "Gerstner trochoidal deep-water wave",
        kind: MapKind::Analytic,
        dimension: 2,
        parameters: &[
            p("k", 1.0, "1/length", "wavenumber"),
            p("g", 9.81, "length/time^2", "gravity; wave speed c = sqrt(g/k)"),
            p("b_min", -3.0, "length", "deepest label row"),
            p("b_max", -0.5, "length", "shallowest label row (must be < 0)"),
            CELLS,
        ],
        force_potential: "V = -g y",
        pressure: "p/rho = -g b + g exp(2 k b) / (2 k)",
        properties: &[
            ("jacobian", "1 - exp(2 k b), constant in time"),
            ("vorticity", "label invariant c k exp(2 k b); spatial value that over the jacobian"),
            ("circulation", "conserved around every material loop"),
        ],
        exercises: "rotational exact solution, Cauchy invariants, equations of motion in labels",
    },
    FlowInfo {
        name: "point_vortex",
        summary: "irrotational point vortex with a core disk of labels excluded",
        kind: MapKind::Sampled,
        dimension: 2,
        parameters: &[
            p("circulation", std::f64::consts::TAU, "length^2/time", "vortex strength"),
            p("x_min", 0.8, "length", "label patch"),
            p("x_max", 1.2, "length", "label patch"),
            p("y_min", -0.2, "length", "label patch"),
            p("y_max", 0.2, "length", "label patch"),
            DURATION,
            SAMPLES,
            STEPS,
            CELLS,
        ],
        force_potential: "V = 0",
        pressure: "p/rho = -circulation^2 / (8 pi^2 r^2)",
        properties: &[
            ("jacobian", "1"),
            ("vorticity", "0 outside the core"),
            ("circulation", "circulation parameter for loops around the core, 0 otherwise"),
        ],
        exercises: "Kelvin circulation, angular momentum in polar coordinates, sampled-map derivatives",
    },
    FlowInfo {
        name: "taylor_green",
        summary: "steady Taylor-Green cell u = (cos x sin y, -sin x cos y, 0)",
        kind: MapKind::Sampled,
        dimension: 2,
        parameters: &[DURATION, SAMPLES, STEPS, CELLS],
        force_potential: "V = 0",
        pressure: "p/rho = -(cos 2x + cos 2y) / 4",
        properties: &[
            ("jacobian", "1"),
            ("vorticity", "half-curl (0, 0, -cos x cos y)"),
            ("circulation", "conserved around material loops"),
        ],
        exercises: "trajectory integration, Cauchy invariants of a sampled map",
    },
];

pub fn info(name: &str) -> Result<&'static FlowInfo> {
    CATALOG
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::UnknownFlow(name.to_string()))
}

/// Merge `given` into the defaults, rejecting names the flow does not take.
pub fn resolve_params(info: &FlowInfo, given: &Params) -> Result<Params> {
    let mut out: Params = info.parameters.iter().map(|p| (p.name.to_string(), p.default)).collect();
    for (k, v) in given {
        match out.get_mut(k) {
            Some(slot) if v.is_finite() => *slot = *v,
            Some(_) => return Err(Error::InvalidParameter(format!("{k} must be finite"))),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "{} takes no parameter {k}",
                    info.name
                )))
            }
        }
    }
    Ok(out)
}

/// Outcome of the construction-time equations-of-motion check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Validation {
    pub residual: f64,
    pub tolerance: f64,
    pub time: f64,
    pub mode: DerivativeMode,
}

/// A flow map together with the potential it satisfies Euler's equations under.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub info: &'static FlowInfo,
    pub parameters: Params,
    pub map: FlowMap,
    pub force: ForcePotential,
    /// Spatial velocity field, when one is available in closed form.
    pub velocity: Option<VectorFunction>,
    pub validation: Validation,
}

impl CatalogEntry {
    pub fn name(&self) -> &'static str {
        self.info.name
    }

    pub fn param(&self, name: &str) -> f64 {
        self.parameters[name]
    }
}

/// Build a catalog flow. `grid` overrides the default label grid.
pub fn catalog_flow(name: &str, params: &Params, grid: Option<LabelGrid>) -> Result<CatalogEntry> {
    let info = info(name)?;
    let params = resolve_params(info, params)?;
    let built = catalog::build(info, &params, grid)?;
    let validation = validate(&built, info)?;
    Ok(CatalogEntry {
        info,
        parameters: params,
        map: built.map,
        force: built.force,
        velocity: built.velocity,
        validation,
    })
}

pub(crate) struct Built {
    pub map: FlowMap,
    pub force: ForcePotential,
    pub velocity: Option<VectorFunction>,
    /// Coarse version of the map used for the construction check.
    pub coarse: FlowMap,
    pub check_time: f64,
}

fn validate(b: &Built, info: &FlowInfo) -> Result<Validation> {
    let r = lagrangian_eom_residual(&b.coarse, &b.force, b.check_time, &StencilSpec::fourth_order())?;
    let residual = r.linf();
    let tolerance = match r.mode {
        DerivativeMode::Exact => 1e-8,
        DerivativeMode::FiniteDifference { .. } => 1e-3,
    };
    if !(residual <= tolerance) {
        return Err(Error::SelfValidation {
            flow: info.name.to_string(),
            residual,
            tolerance,
        });
    }
    Ok(Validation {
        residual,
        tolerance,
        time: b.check_time,
        mode: r.mode,
    })
}

/// A grid with the same extent as `g` and `cells` cells per axis.
pub(crate) fn coarsen(g: &LabelGrid, cells: usize) -> Result<LabelGrid> {
    let axes = g
        .axes()
        .iter()
        .map(|a| {
            if a.periodic {
                Axis::periodic(a.origin, a.spacing * a.nodes as f64, cells)
            } else {
                Axis::closed(a.origin, a.upper(), cells)
            }
        })
        .collect();
    LabelGrid::new(axes)
}
