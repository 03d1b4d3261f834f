//! The operations a suite can run, each reduced to one error measure per resolution.

use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Derivatives, FlowSpec};
use crate::cauchy::{invariant_at, invariant_drift};
use crate::circulation::{kelvin_drift, stokes_residual, MaterialLoop, MaterialSurface};
use crate::curvilinear::svanberg_invariant;
use crate::dynamics::lagrangian_eom_residual;
use crate::energy::{energy_flux_residual, MaterialVolume};
use crate::field::{QuadratureRule, ResidualNorm, StencilSpec, DEFAULT_RIND};
use crate::flowmap::{advance, cofactor_identity_residual, density_residual, DensityMode, FlowMap};
use crate::flows::{catalog_flow, CatalogEntry};
use crate::{Error, Result, Vec3};

/// Number of default evaluation times over one characteristic period.
const DEFAULT_SAMPLES: usize = 8;
/// Label cells per axis for checks whose resolution is not the label grid.
const AUXILIARY_CELLS: f64 = 8.0;
/// Time step of the centred `dK/dt`, in units of the flow's time scale.
const ENERGY_STEP: f64 = 1e-3;
/// Step for pointwise label derivatives of maps without exact ones.
const POINT_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    InvariantDrift,
    PointwiseInvariant,
    JacobianDrift,
    CofactorIdentity,
    EulerianContinuity,
    LagrangianEom,
    StokesResidual,
    KelvinDrift,
    Rk4Closure,
    EnergyBalance,
    SvanbergDrift,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::InvariantDrift,
        CheckId::PointwiseInvariant,
        CheckId::JacobianDrift,
        CheckId::CofactorIdentity,
        CheckId::EulerianContinuity,
        CheckId::LagrangianEom,
        CheckId::StokesResidual,
        CheckId::KelvinDrift,
        CheckId::Rk4Closure,
        CheckId::EnergyBalance,
        CheckId::SvanbergDrift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::InvariantDrift => "invariant_drift",
            CheckId::PointwiseInvariant => "pointwise_invariant",
            CheckId::JacobianDrift => "jacobian_drift",
            CheckId::CofactorIdentity => "cofactor_identity",
            CheckId::EulerianContinuity => "eulerian_continuity",
            CheckId::LagrangianEom => "lagrangian_eom",
            CheckId::StokesResidual => "stokes_residual",
            CheckId::KelvinDrift => "kelvin_drift",
            CheckId::Rk4Closure => "rk4_closure",
            CheckId::EnergyBalance => "energy_balance",
            CheckId::SvanbergDrift => "svanberg_drift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }

    /// Short label of the identity being tested, carried on every report row.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckId::InvariantDrift => "cauchy invariants / label half-curl of the covelocity is constant",
            CheckId::PointwiseInvariant => "cauchy invariants / pointwise at random labels",
            CheckId::JacobianDrift => "density equation / J(t) = J(0) for incompressible motion",
            CheckId::CofactorIdentity => "density equation / cofactor relations",
            CheckId::EulerianContinuity => "continuity / spatial divergence of the resampled velocity",
            CheckId::LagrangianEom => "equations of motion / label form",
            CheckId::StokesResidual => "circulation / line integral equals twice the vorticity flux",
            CheckId::KelvinDrift => "circulation / constant around a material loop",
            CheckId::Rk4Closure => "trajectories / RK4 return to the closed-form map",
            CheckId::EnergyBalance => "living force / rate equals boundary flux of the potential",
            CheckId::SvanbergDrift => "curvilinear / angular momentum about the z axis per particle",
        }
    }

    /// What the suite's resolution controls for this check.
    pub fn resolution_meaning(self) -> &'static str {
        match self {
            CheckId::InvariantDrift
            | CheckId::JacobianDrift
            | CheckId::CofactorIdentity
            | CheckId::EulerianContinuity
            | CheckId::LagrangianEom
            | CheckId::SvanbergDrift => "label cells per axis",
            CheckId::PointwiseInvariant => "random labels",
            CheckId::StokesResidual => "radial cells of the disk (azimuth points = 4N)",
            CheckId::KelvinDrift => "loop points",
            CheckId::Rk4Closure => "RK4 steps over the last time",
            CheckId::EnergyBalance => "cells per side of the material box",
        }
    }

    fn sets_label_cells(self) -> bool {
        self.resolution_meaning() == "label cells per axis"
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every check in a run.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub stencil: StencilSpec,
    pub quadrature: QuadratureRule,
    pub derivatives: Derivatives,
    pub times: Option<Vec<f64>>,
    pub seed: u64,
    pub rind: bool,
}

impl Default for RunContext {
    fn default() -> Self {
        RunContext {
            stencil: StencilSpec::second_order(),
            quadrature: QuadratureRule::trapezoid(),
            derivatives: Derivatives::Exact,
            times: None,
            seed: 0,
            rind: true,
        }
    }
}

/// The error a check measured at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub linf: f64,
    pub l2: f64,
    pub max_location: Option<[f64; 3]>,
    /// Time of the worst sample.
    pub time: Option<f64>,
}

impl Measurement {
    fn scalar(value: f64, time: Option<f64>) -> Self {
        Measurement {
            linf: value.abs(),
            l2: value.abs(),
            max_location: None,
            time,
        }
    }

    fn from_norm(n: &ResidualNorm, time: f64) -> Self {
        Measurement {
            linf: n.linf,
            l2: n.l2,
            max_location: n.max_location,
            time: Some(time),
        }
    }

    /// Worst of several, by `L∞`.
    fn worst(items: impl IntoIterator<Item = Measurement>) -> Option<Measurement> {
        items
            .into_iter()
            .fold(None, |acc: Option<Measurement>, m| match acc {
                Some(a) if !(m.linf > a.linf) => Some(a),
                _ => Some(m),
            })
    }
}

fn build(flow: &FlowSpec, check: CheckId, resolution: usize, ctx: &RunContext) -> Result<CatalogEntry> {
    let mut params = flow.params.clone();
    let cells = if check.sets_label_cells() {
        resolution as f64
    } else {
        params.get("cells").copied().unwrap_or(AUXILIARY_CELLS)
    };
    params.insert("cells".into(), cells);
    let mut e = catalog_flow(&flow.name, &params, None)?;
    if ctx.derivatives == Derivatives::FiniteDifference {
        e.map = e.map.finite_differences_only();
        e.force = e.force.without_derivatives();
    }
    Ok(e)
}

/// Stored sample times for tabulated maps; otherwise evenly spaced over one period `2π T`.
pub fn default_times(m: &FlowMap) -> Vec<f64> {
    if let Some(tr) = m.trajectories() {
        return tr.times.clone();
    }
    let period = TAU * m.time_scale();
    (0..DEFAULT_SAMPLES)
        .map(|k| period * k as f64 / (DEFAULT_SAMPLES - 1) as f64)
        .collect()
}

/// Label box of the map's grid, with `[−½, ½]` along missing axes.
fn label_bounds(m: &FlowMap) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(-0.5);
    let mut hi = Vec3::repeat(0.5);
    for (k, ax) in m.labels().axes().iter().enumerate() {
        lo[k] = ax.origin;
        hi[k] = ax.upper();
    }
    (lo, hi)
}

fn rind(ctx: &RunContext) -> Option<usize> {
    ctx.rind.then_some(DEFAULT_RIND)
}

/// Run one check for one flow at one resolution.
pub fn run_check(check: CheckId, flow: &FlowSpec, resolution: usize, ctx: &RunContext) -> Result<Measurement> {
    let e = build(flow, check, resolution, ctx)?;
    let m = &e.map;
    let times = ctx.times.clone().unwrap_or_else(|| default_times(m));
    let s = &ctx.stencil;
    let q = &ctx.quadrature;
    let none = || Error::Degenerate("no samples".into());
    match check {
        CheckId::InvariantDrift => {
            let d = invariant_drift(m, &times, s)?;
            let worst = d.rows.iter().map(|r| Measurement::from_norm(&r.drift, r.t));
            Measurement::worst(worst).ok_or_else(none)
        }
        CheckId::PointwiseInvariant => {
            let (lo, hi) = label_bounds(m);
            let ndim = m.labels().ndim();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut worst = Measurement::scalar(0.0, Some(times[0]));
            let mut sq = 0.0;
            let mut count = 0usize;
            for _ in 0..resolution {
                let a = Vec3::from_fn(|k, _| if k < ndim { rng.gen_range(lo[k]..hi[k]) } else { 0.0 });
                let reference = invariant_at(m, &a, times[0], POINT_STEP)?.label;
                for &t in &times[1..] {
                    let d = (invariant_at(m, &a, t, POINT_STEP)?.label - reference).amax();
                    sq += d * d;
                    count += 1;
                    if d > worst.linf {
                        worst = Measurement {
                            linf: d,
                            l2: 0.0,
                            max_location: Some([a.x, a.y, a.z]),
                            time: Some(t),
                        };
                    }
                }
            }
            worst.l2 = if count > 0 { (sq / count as f64).sqrt() } else { 0.0 };
            Ok(worst)
        }
        CheckId::JacobianDrift => {
            let rows = times
                .iter()
                .map(|&t| Ok(Measurement::from_norm(&density_residual(m, t, DensityMode::Lagrangian, s)?.norm, t)))
                .collect::<Result<Vec<_>>>()?;
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::CofactorIdentity => {
            let rows = times
                .iter()
                .map(|&t| {
                    let r = cofactor_identity_residual(m, t, s)?;
                    Ok(Measurement::from_norm(&ResidualNorm::of_field(&r.field, rind(ctx)), t))
                })
                .collect::<Result<Vec<_>>>()?;
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::EulerianContinuity => {
            let rows = times
                .iter()
                .map(|&t| Ok(Measurement::from_norm(&density_residual(m, t, DensityMode::Eulerian, s)?.norm, t)))
                .collect::<Result<Vec<_>>>()?;
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::LagrangianEom => {
            let rows = times
                .iter()
                .map(|&t| {
                    let r = lagrangian_eom_residual(m, &e.force, t, s)?;
                    Ok(Measurement::from_norm(&ResidualNorm::of_field(&r.field, rind(ctx)), t))
                })
                .collect::<Result<Vec<_>>>()?;
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::StokesResidual => {
            let (lo, hi) = label_bounds(m);
            let centre = 0.5 * (lo + hi);
            let radius = 0.4 * (hi.x - lo.x).min(hi.y - lo.y);
            let disk = MaterialSurface::disk(Vec3::new(centre.x, centre.y, centre.z), radius, Vec3::z(), resolution, 4 * resolution)?;
            let lp = disk.boundary().ok_or_else(none)?;
            let rows = times
                .iter()
                .map(|&t| Ok(Measurement::scalar(stokes_residual(m, lp, &disk, t, s, q)?.residual, Some(t))))
                .collect::<Result<Vec<_>>>()?;
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::KelvinDrift => {
            let (lo, hi) = label_bounds(m);
            let centre = 0.5 * (lo + hi);
            let radius = 0.4 * (hi.x - lo.x).min(hi.y - lo.y);
            let lp = MaterialLoop::circle(centre, radius, Vec3::z(), resolution)?;
            let d = kelvin_drift(m, &lp, None, &times, s, q)?;
            let c0 = d.rows[0].circulation;
            let rows = d.rows.iter().map(|r| Measurement::scalar(r.circulation - c0, Some(r.t)));
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::Rk4Closure => {
            if !m.is_analytic() {
                return Err(Error::Unavailable("RK4 closure against a tabulated map".into()));
            }
            let v = e.velocity.as_ref().ok_or_else(|| Error::Unavailable("velocity field".into()))?;
            let t_end = *times.last().ok_or_else(none)?;
            if !(t_end > 0.0) {
                return Err(Error::InvalidParameter("RK4 closure needs a positive last time".into()));
            }
            let dt = t_end / resolution as f64;
            let labels = m.labels().labels();
            let mut err = Vec::with_capacity(labels.len());
            for (n, a) in labels.iter().enumerate() {
                let x = advance(v, *a, 0.0, t_end, dt, None, n)?;
                err.push((x - m.position(a, t_end)?).norm());
            }
            Ok(Measurement::from_norm(&ResidualNorm::from_samples(&err, Some(&labels)), t_end))
        }
        CheckId::EnergyBalance => {
            let (lo, hi) = label_bounds(m);
            let vol = MaterialVolume::label_box(lo, hi, resolution)?;
            let dt = ENERGY_STEP * m.time_scale();
            let l = energy_flux_residual(m, &e.force, &vol, &times, dt, q)?;
            let rows = l.rows.iter().map(|r| Measurement::scalar(r.gap(), Some(r.time)));
            Measurement::worst(rows).ok_or_else(none)
        }
        CheckId::SvanbergDrift => {
            let r = svanberg_invariant(m, &times)?;
            let rows = r.rows.iter().map(|row| Measurement::scalar(row.max_drift, Some(row.time)));
            Measurement::worst(rows).ok_or_else(none)
        }
    }
}
