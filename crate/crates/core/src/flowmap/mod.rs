//! Flow maps `x = φ(a, t)` from particle labels to positions, their label-space
//! derivatives, density relations and a binary trajectory file format.

mod io;
mod motion;
mod ops;
mod resample;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::field::{Field, LabelGrid};
use crate::functions::VectorFunction;
use crate::{Error, Mat3, Result, Vec3};

pub use io::{read_flowmap, sidecar_path, write_flowmap, FlowMapHeader};
pub use motion::AnalyticMotion;
pub use ops::{
    cofactor_identity_residual, deformation_gradient, density_residual, eulerian_density_residual,
    jacobian_det, label_gradient, mass_integral_transform, velocity_label_gradient, DeformationGradient,
    DensityMode, DensityResidual, Residual, SINGULAR_JACOBIAN,
};
pub use resample::{resample, Resampler};

/// How labels relate to positions at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelConvention {
    /// `x(a, 0) = a`.
    IdentityAtZero,
    /// Labels are arbitrary coordinates; density checks compare against `t = 0` instead of 1.
    Generalized,
}

/// How a label-space derivative was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DerivativeMode {
    Exact,
    FiniteDifference { order: usize },
}

/// How an acceleration was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AccelerationSource {
    Exact,
    /// Material derivative of the velocity field that generated a sampled map.
    VelocityField,
    /// Centred three-point difference of positions.
    TimeDifference { dt: f64 },
}

/// Density in the reference configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceDensity {
    Constant(f64),
    /// Per-node values on the map's label grid.
    Field(Field),
}

impl ReferenceDensity {
    pub fn at_node(&self, node: usize) -> f64 {
        match self {
            ReferenceDensity::Constant(r) => *r,
            ReferenceDensity::Field(f) => f.scalar(node),
        }
    }
}

/// Labels inside a cylinder about the z direction are not part of the map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Exclusion {
    pub fn contains(&self, a: &Vec3) -> bool {
        (a.x - self.center[0]).hypot(a.y - self.center[1]) < self.radius
    }
}

/// Stored trajectories: `positions[node * times.len() + k]` is the position of `node` at `times[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTrajectories {
    pub times: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub velocities: Option<Vec<Vec3>>,
    pub dt: Option<f64>,
    pub step_halving_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Integrator {
    pub field: VectorFunction,
    pub dt: f64,
    pub bounds: Option<(Vec3, Vec3)>,
}

#[derive(Clone)]
enum Kind {
    Analytic(AnalyticMotion),
    Sampled {
        table: Arc<SampledTrajectories>,
        integrator: Option<Integrator>,
    },
}

type RatioFn = Arc<dyn Fn(&Vec3, f64) -> f64 + Send + Sync>;

/// A motion of labelled particles, either closed-form or tabulated on a label grid.
#[derive(Clone)]
pub struct FlowMap {
    name: String,
    labels: LabelGrid,
    convention: LabelConvention,
    reference_density: ReferenceDensity,
    density_ratio: Option<RatioFn>,
    kind: Kind,
    exact: bool,
    time_scale: f64,
    exclusion: Option<Exclusion>,
}

impl fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowMap")
            .field("name", &self.name)
            .field("labels", &self.labels)
            .field("convention", &self.convention)
            .field("analytic", &self.is_analytic())
            .field("exact", &self.exact)
            .finish()
    }
}

/// Relative tolerance for recognising grid nodes and stored times.
const SNAP: f64 = 1e-9;

impl FlowMap {
    pub fn analytic(name: impl Into<String>, labels: LabelGrid, motion: AnalyticMotion) -> Self {
        FlowMap {
            name: name.into(),
            labels,
            convention: LabelConvention::IdentityAtZero,
            reference_density: ReferenceDensity::Constant(1.0),
            density_ratio: None,
            kind: Kind::Analytic(motion),
            exact: true,
            time_scale: 1.0,
            exclusion: None,
        }
    }

    /// A tabulated map. With `field`, off-table labels and times are reached by RK4
    /// integration from the identity at `t = 0` with step `dt`.
    pub fn sampled(
        name: impl Into<String>,
        labels: LabelGrid,
        table: SampledTrajectories,
        field: Option<(VectorFunction, f64, Option<(Vec3, Vec3)>)>,
    ) -> Result<Self> {
        let nt = table.times.len();
        if nt == 0 {
            return Err(Error::InvalidParameter("a sampled map needs at least one time".into()));
        }
        if table.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
        }
        let expected = labels.node_count() * nt;
        if table.positions.len() != expected {
            return Err(Error::Format(format!(
                "trajectory table has {} positions, expected {expected}",
                table.positions.len()
            )));
        }
        if let Some(v) = &table.velocities {
            if v.len() != expected {
                return Err(Error::Format("velocity table length mismatch".into()));
            }
        }
        let integrator = field.map(|(field, dt, bounds)| Integrator { field, dt, bounds });
        Ok(FlowMap {
            name: name.into(),
            labels,
            convention: LabelConvention::IdentityAtZero,
            reference_density: ReferenceDensity::Constant(1.0),
            density_ratio: None,
            kind: Kind::Sampled {
                table: Arc::new(table),
                integrator,
            },
            exact: true,
            time_scale: 1.0,
            exclusion: None,
        })
    }

    pub fn with_convention(mut self, c: LabelConvention) -> Self {
        self.convention = c;
        self
    }

    pub fn with_reference_density(mut self, r: ReferenceDensity) -> Self {
        self.reference_density = r;
        self
    }

    /// Register the material density ratio `ϱ(a, t) / ϱ₀(a)`; without it the fluid is incompressible.
    pub fn with_density_ratio(mut self, f: impl Fn(&Vec3, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density_ratio = Some(Arc::new(f));
        self
    }

    pub fn with_time_scale(mut self, s: f64) -> Self {
        self.time_scale = s;
        self
    }

    pub fn with_exclusion(mut self, e: Exclusion) -> Self {
        self.exclusion = Some(e);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Ignore registered exact label derivatives; gradients come from finite differences.
    pub fn finite_differences_only(mut self) -> Self {
        self.exact = false;
        self
    }

    /// The same closed-form motion on another label grid.
    pub fn with_labels(&self, labels: LabelGrid) -> Result<Self> {
        match self.kind {
            Kind::Analytic(_) => {
                let mut m = self.clone();
                m.labels = labels;
                if let ReferenceDensity::Field(_) = m.reference_density {
                    return Err(Error::InvalidParameter(
                        "a reference density field is tied to its grid".into(),
                    ));
                }
                m.check_exclusion()?;
                Ok(m)
            }
            Kind::Sampled { .. } => Err(Error::Unavailable("re-gridding of a sampled map".into())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &LabelGrid {
        &self.labels
    }

    pub fn convention(&self) -> LabelConvention {
        self.convention
    }

    pub fn reference_density(&self) -> &ReferenceDensity {
        &self.reference_density
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn exclusion(&self) -> Option<Exclusion> {
        self.exclusion
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, Kind::Analytic(_))
    }

    pub fn is_compressible(&self) -> bool {
        self.density_ratio.is_some()
    }

    pub fn trajectories(&self) -> Option<&SampledTrajectories> {
        match &self.kind {
            Kind::Sampled { table, .. } => Some(table),
            Kind::Analytic(_) => None,
        }
    }

    /// Velocity field behind a sampled map, if it was integrated from one.
    pub fn velocity_field(&self) -> Option<&VectorFunction> {
        match &self.kind {
            Kind::Sampled {
                integrator: Some(i), ..
            } => Some(&i.field),
            _ => None,
        }
    }

    fn motion(&self) -> Option<&AnalyticMotion> {
        match &self.kind {
            Kind::Analytic(m) => Some(m),
            Kind::Sampled { .. } => None,
        }
    }

    pub fn has_exact_gradient(&self) -> bool {
        self.exact && self.motion().is_some_and(|m| m.gradient.is_some())
    }

    pub fn has_exact_velocity_gradient(&self) -> bool {
        self.exact && self.motion().is_some_and(|m| m.velocity_gradient.is_some())
    }

    pub fn has_exact_acceleration(&self) -> bool {
        self.motion().is_some_and(|m| m.acceleration.is_some())
    }

    /// Label derivative mode used by grid operations with stencil order `order`.
    pub fn gradient_mode(&self, order: usize) -> DerivativeMode {
        if self.has_exact_gradient() {
            DerivativeMode::Exact
        } else {
            DerivativeMode::FiniteDifference { order }
        }
    }

    /// Time step of three-point acceleration differences.
    pub fn acceleration_step(&self) -> f64 {
        1e-4 * self.time_scale
    }

    /// `ϱ(a, t) / ϱ₀(a)`.
    pub fn density_ratio(&self, a: &Vec3, t: f64) -> f64 {
        self.density_ratio.as_ref().map_or(1.0, |f| f(a, t))
    }

    fn check_exclusion(&self) -> Result<()> {
        if let Some(e) = self.exclusion {
            for n in 0..self.labels.node_count() {
                let a = self.labels.label(n);
                if e.contains(&a) {
                    return Err(Error::LabelExcluded([a.x, a.y, a.z]));
                }
            }
        }
        Ok(())
    }

    fn check_label(&self, a: &Vec3) -> Result<()> {
        match self.exclusion {
            Some(e) if e.contains(a) => Err(Error::LabelExcluded([a.x, a.y, a.z])),
            _ => Ok(()),
        }
    }

    /// Grid node whose label equals `a`, if any.
    pub fn node_of(&self, a: &Vec3) -> Option<usize> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            if k >= self.labels.ndim() {
                if a[k].abs() > SNAP {
                    return None;
                }
                continue;
            }
            let ax = &self.labels.axes()[k];
            let f = (a[k] - ax.origin) / ax.spacing;
            let i = f.round();
            if i < 0.0 || i >= ax.nodes as f64 || (f - i).abs() > SNAP {
                return None;
            }
            idx[k] = i as usize;
        }
        Some(self.labels.flat(idx))
    }

    fn time_index(table: &SampledTrajectories, t: f64) -> Option<usize> {
        let scale = table.times.last().unwrap().abs().max(1.0);
        table
            .times
            .iter()
            .position(|s| (s - t).abs() <= SNAP * scale)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if let Kind::Sampled { table, integrator } = &self.kind {
            let lo = table.times[0].min(0.0);
            let hi = *table.times.last().unwrap();
            let margin = integrator.as_ref().map_or(0.0, |i| i.dt) + SNAP * hi.abs().max(1.0);
            if t < lo - margin || t > hi + margin {
                return Err(Error::TimeOutOfRange { t, lo, hi });
            }
        }
        Ok(())
    }

    fn integrate(&self, integ: &Integrator, x0: Vec3, t0: f64, t1: f64) -> Result<Vec3> {
        advance(&integ.field, x0, t0, t1, integ.dt, integ.bounds, 0)
    }

    /// Position of particle `a` at time `t`.
    pub fn position(&self, a: &Vec3, t: f64) -> Result<Vec3> {
        self.check_label(a)?;
        match &self.kind {
            Kind::Analytic(m) => Ok((m.position)(a, t)),
            Kind::Sampled { table, integrator } => {
                self.check_time(t)?;
                let node = self.node_of(a);
                if let (Some(n), Some(k)) = (node, Self::time_index(table, t)) {
                    return Ok(table.positions[n * table.times.len() + k]);
                }
                let integ = integrator.as_ref().ok_or_else(|| {
                    Error::Unavailable(format!("position off the stored nodes/times (t = {t})"))
                })?;
                let nt = table.times.len();
                // Restart from the latest stored state before t when a is a node.
                if let Some(n) = node {
                    if let Some(k) = table.times.iter().rposition(|s| *s <= t) {
                        return self.integrate(integ, table.positions[n * nt + k], table.times[k], t);
                    }
                }
                self.integrate(integ, *a, 0.0, t)
            }
        }
    }

    pub fn velocity(&self, a: &Vec3, t: f64) -> Result<Vec3> {
        self.check_label(a)?;
        match &self.kind {
            Kind::Analytic(m) => Ok((m.velocity)(a, t)),
            Kind::Sampled { table, integrator } => {
                if let (Some(v), Some(n), Some(k)) = (&table.velocities, self.node_of(a), Self::time_index(table, t)) {
                    return Ok(v[n * table.times.len() + k]);
                }
                match integrator {
                    Some(i) => Ok(i.field.value(&self.position(a, t)?, t)),
                    None => {
                        let dt = self.acceleration_step();
                        Ok((self.position(a, t + dt)? - self.position(a, t - dt)?) / (2.0 * dt))
                    }
                }
            }
        }
    }

    /// Acceleration of particle `a` at `t` and how it was obtained.
    pub fn acceleration(&self, a: &Vec3, t: f64) -> Result<(Vec3, AccelerationSource)> {
        self.check_label(a)?;
        if let Some(f) = self.motion().and_then(|m| m.acceleration.as_ref()) {
            return Ok((f(a, t), AccelerationSource::Exact));
        }
        if let Some(field) = self.velocity_field() {
            let x = self.position(a, t)?;
            let h = 1e-6 * self.time_scale.max(1.0);
            return Ok((field.acceleration(&x, t, h), AccelerationSource::VelocityField));
        }
        let dt = self.acceleration_step();
        let (xm, x0, xp) = (self.position(a, t - dt)?, self.position(a, t)?, self.position(a, t + dt)?);
        Ok(((xp - 2.0 * x0 + xm) / (dt * dt), AccelerationSource::TimeDifference { dt }))
    }

    fn label_jacobian_fd(&self, a: &Vec3, h: f64, f: impl Fn(&Vec3) -> Result<Vec3>) -> Result<Mat3> {
        let mut m = Mat3::zeros();
        for j in 0..3 {
            let mut e = Vec3::zeros();
            e[j] = h;
            m.set_column(j, &((f(&(a + e))? - f(&(a - e))?) / (2.0 * h)));
        }
        Ok(m)
    }

    /// `∂x/∂a` at a single label: exact when registered, else central differences with step `h`.
    pub fn gradient_at(&self, a: &Vec3, t: f64, h: f64) -> Result<(Mat3, DerivativeMode)> {
        if self.has_exact_gradient() {
            self.check_label(a)?;
            let g = self.motion().unwrap().gradient.as_ref().unwrap();
            return Ok((g(a, t), DerivativeMode::Exact));
        }
        let m = self.label_jacobian_fd(a, h, |p| self.position(p, t))?;
        Ok((m, DerivativeMode::FiniteDifference { order: 2 }))
    }

    /// `∂u/∂a` at a single label.
    pub fn velocity_gradient_at(&self, a: &Vec3, t: f64, h: f64) -> Result<(Mat3, DerivativeMode)> {
        if self.has_exact_velocity_gradient() {
            self.check_label(a)?;
            let g = self.motion().unwrap().velocity_gradient.as_ref().unwrap();
            return Ok((g(a, t), DerivativeMode::Exact));
        }
        let m = self.label_jacobian_fd(a, h, |p| self.velocity(p, t))?;
        Ok((m, DerivativeMode::FiniteDifference { order: 2 }))
    }

    /// Positions of every grid node at `t`.
    pub fn positions(&self, t: f64) -> Result<Field> {
        self.check_time(t)?;
        if let Kind::Sampled { table, .. } = &self.kind {
            if let Some(k) = Self::time_index(table, t) {
                let nt = table.times.len();
                return Field::try_vector_from_fn(self.labels.clone(), |n, _| Ok(table.positions[n * nt + k]));
            }
        }
        let f = Field::try_vector_from_fn(self.labels.clone(), |_, a| self.position(a, t))?;
        f.check_finite()?;
        Ok(f)
    }

    /// Velocities of every grid node at `t`.
    pub fn velocities(&self, t: f64) -> Result<Field> {
        let f = Field::try_vector_from_fn(self.labels.clone(), |_, a| self.velocity(a, t))?;
        f.check_finite()?;
        Ok(f)
    }

    /// Accelerations of every grid node at `t`, with the source of the first node.
    pub fn accelerations(&self, t: f64) -> Result<(Field, AccelerationSource)> {
        let src = self.acceleration(&self.labels.label(0), t)?.1;
        let f = Field::try_vector_from_fn(self.labels.clone(), |_, a| Ok(self.acceleration(a, t)?.0))?;
        Ok((f, src))
    }

    /// Tabulate the map at `times` on its label grid (velocities included).
    pub fn sample(&self, times: &[f64]) -> Result<FlowMap> {
        let n = self.labels.node_count();
        let mut positions = vec![Vec3::zeros(); n * times.len()];
        let mut velocities = vec![Vec3::zeros(); n * times.len()];
        for (k, t) in times.iter().enumerate() {
            let x = self.positions(*t)?;
            let v = self.velocities(*t)?;
            for node in 0..n {
                positions[node * times.len() + k] = x.vector(node);
                velocities[node * times.len() + k] = v.vector(node);
            }
        }
        let (dt, err) = match self.trajectories() {
            Some(tr) => (tr.dt, tr.step_halving_error),
            None => (None, None),
        };
        let table = SampledTrajectories {
            times: times.to_vec(),
            positions,
            velocities: Some(velocities),
            dt,
            step_halving_error: err,
        };
        let mut m = FlowMap::sampled(self.name.clone(), self.labels.clone(), table, None)?;
        m.convention = self.convention;
        m.reference_density = self.reference_density.clone();
        m.density_ratio = self.density_ratio.clone();
        m.time_scale = self.time_scale;
        m.exclusion = self.exclusion;
        Ok(m)
    }

    /// For identity-at-zero maps, the largest `|x(a, 0) - a|` over grid nodes.
    pub fn initial_identity_error(&self) -> Result<f64> {
        let x = self.positions(0.0)?;
        Ok((0..x.node_count())
            .map(|n| (x.vector(n) - self.labels.label(n)).norm())
            .fold(0.0, f64::max))
    }

    /// Largest mismatch between registered exact label gradients and central
    /// differences with step `h` over the grid nodes at time `t`.
    pub fn derivative_cross_check(&self, t: f64, h: f64) -> Result<f64> {
        let Some(m) = self.motion() else { return Ok(0.0) };
        let fd = self.clone().finite_differences_only();
        let mut worst = 0.0f64;
        for n in 0..self.labels.node_count() {
            let a = self.labels.label(n);
            if let Some(g) = &m.gradient {
                worst = worst.max((g(&a, t) - fd.gradient_at(&a, t, h)?.0).abs().max());
            }
            if let Some(g) = &m.velocity_gradient {
                worst = worst.max((g(&a, t) - fd.velocity_gradient_at(&a, t, h)?.0).abs().max());
            }
        }
        Ok(worst)
    }
}

/// One classical Runge–Kutta step of `dx/dt = u(x, t)`.
pub fn rk4_step(u: &VectorFunction, x: &Vec3, t: f64, h: f64) -> Vec3 {
    let k1 = u.value(x, t);
    let k2 = u.value(&(x + 0.5 * h * k1), t + 0.5 * h);
    let k3 = u.value(&(x + 0.5 * h * k2), t + 0.5 * h);
    let k4 = u.value(&(x + h * k3), t + h);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrate from `(x0, t0)` to `t1` with steps no longer than `dt`.
pub fn advance(
    u: &VectorFunction,
    x0: Vec3,
    t0: f64,
    t1: f64,
    dt: f64,
    bounds: Option<(Vec3, Vec3)>,
    particle: usize,
) -> Result<Vec3> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(x0);
    }
    let steps = ((span.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let mut x = x0;
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        x = rk4_step(u, &x, t, h);
        if let Some((lo, hi)) = bounds {
            let out = (0..3).any(|k| x[k] < lo[k] || x[k] > hi[k]) || !x.iter().all(|v| v.is_finite());
            if out {
                return Err(Error::ParticleEscaped {
                    particle,
                    t: t + h,
                });
            }
        }
    }
    Ok(x)
}
