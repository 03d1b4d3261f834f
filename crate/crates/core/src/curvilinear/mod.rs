//! Curvilinear charts, metric coefficients of the arc element, the equations of motion
//! and density relation in orthogonal coordinates, and the angular-momentum invariant
//! of flows symmetric about the z axis.
//!
//! Residuals use the halved form `d(N_i ρ̇_i)/dt − ½ Σ_j ρ̇_j² ∂N_j/∂ρ_i − ∂Ω/∂ρ_i`,
//! which reduces to `ẍ − ∇Ω` in Cartesian coordinates.

mod charts;

use serde::{Deserialize, Serialize};

use crate::dynamics::ForcePotential;
use crate::field::{gradient, Field, Rank, ResidualNorm, StencilSpec, DEFAULT_RIND};
use crate::flowmap::{deformation_gradient, DerivativeMode, FlowMap};
use crate::functions::DEFAULT_STEP;
use crate::{Error, Mat3, Result, Vec3};

pub use charts::{
    chart_by_name, fd_jacobian, hessian, jacobian, CartesianChart, Chart, CustomChart, CylindricalChart,
    EllipticalChart, PolarChart, SkewedChart, DEFAULT_MARGIN,
};

/// Cross terms smaller than this fraction of the diagonal count as orthogonal.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-8;

/// Metric of the arc element `ds² = Σ N_i dρ_i² + 2 (n₁ dρ₂dρ₃ + n₂ dρ₁dρ₃ + n₃ dρ₁dρ₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCoefficients {
    /// `N₁, N₂, N₃`.
    pub diagonal: [f64; 3],
    /// `n₁, n₂, n₃`.
    pub cross: [f64; 3],
}

impl MetricCoefficients {
    pub fn from_jacobian(j: &Mat3) -> Self {
        let g = j.transpose() * j;
        MetricCoefficients {
            diagonal: [g[(0, 0)], g[(1, 1)], g[(2, 2)]],
            cross: [g[(1, 2)], g[(0, 2)], g[(0, 1)]],
        }
    }

    /// `[[N₁,n₃,n₂],[n₃,N₂,n₁],[n₂,n₁,N₃]]`.
    pub fn gram(&self) -> Mat3 {
        let [n1, n2, n3] = self.diagonal;
        let [c1, c2, c3] = self.cross;
        Mat3::new(n1, c3, c2, c3, n2, c1, c2, c1, n3)
    }

    /// Largest `|n_i| / √(N_j N_k)`.
    pub fn cross_ratio(&self) -> f64 {
        let d = self.diagonal;
        (0..3)
            .map(|i| self.cross[i].abs() / (d[(i + 1) % 3] * d[(i + 2) % 3]).sqrt())
            .fold(0.0, f64::max)
    }
}

fn require_inside(c: &dyn Chart, rho: &Vec3) -> Result<()> {
    if c.contains(rho) {
        Ok(())
    } else {
        let x = c.position(rho);
        Err(Error::OutsideChart([x.x, x.y, x.z]))
    }
}

/// Metric coefficients at chart points `rho`.
pub fn chart_metrics(c: &dyn Chart, points: &[Vec3]) -> Result<Vec<MetricCoefficients>> {
    points
        .iter()
        .map(|rho| {
            require_inside(c, rho)?;
            Ok(MetricCoefficients::from_jacobian(&jacobian(c, rho)))
        })
        .collect()
}

/// Orthogonality diagnostics over a set of chart points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub chart: String,
    /// Largest `|n_i| / √(N_j N_k)`.
    pub cross_ratio: f64,
    /// Largest `|N_i Δ_i² − 1|` with `Δ_i = |∇ρ_i|`.
    pub reciprocal_mismatch: f64,
    /// Cross terms at the point where `cross_ratio` peaks.
    pub worst_cross: [f64; 3],
    pub orthogonal: bool,
    pub points: usize,
}

impl OrthogonalityReport {
    pub fn value(&self) -> f64 {
        self.cross_ratio.max(self.reciprocal_mismatch)
    }
}

pub fn orthogonality_residual(c: &dyn Chart, points: &[Vec3]) -> Result<OrthogonalityReport> {
    let mut report = OrthogonalityReport {
        chart: c.name().to_string(),
        cross_ratio: 0.0,
        reciprocal_mismatch: 0.0,
        worst_cross: [0.0; 3],
        orthogonal: true,
        points: points.len(),
    };
    for rho in points {
        require_inside(c, rho)?;
        let j = jacobian(c, rho);
        let m = MetricCoefficients::from_jacobian(&j);
        let ratio = m.cross_ratio();
        if ratio >= report.cross_ratio {
            report.cross_ratio = ratio;
            report.worst_cross = m.cross;
        }
        let inv = j
            .try_inverse()
            .ok_or_else(|| Error::Degenerate(format!("singular chart Jacobian at {rho:?}")))?;
        for i in 0..3 {
            let delta2 = inv.row(i).norm_squared();
            report.reciprocal_mismatch = report.reciprocal_mismatch.max((m.diagonal[i] * delta2 - 1.0).abs());
        }
    }
    report.orthogonal = report.cross_ratio <= ORTHOGONALITY_TOLERANCE;
    Ok(report)
}

/// Largest relative gap between `det(∂x/∂ρ)²` and the determinant of the metric.
pub fn determinant_identity_residual(c: &dyn Chart, points: &[Vec3]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for rho in points {
        require_inside(c, rho)?;
        let j = jacobian(c, rho);
        let lhs = j.determinant().powi(2);
        let rhs = MetricCoefficients::from_jacobian(&j).gram().determinant();
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// `∂N_j/∂ρ_i` at entry `(i, j)`.
pub fn metric_derivatives(c: &dyn Chart, rho: &Vec3) -> Mat3 {
    let j = jacobian(c, rho);
    let h = hessian(c, rho);
    Mat3::from_fn(|i, jj| 2.0 * (0..3).map(|k| j[(k, jj)] * h[k][(jj, i)]).sum::<f64>())
}

/// How coordinate rates along trajectories are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RateMode {
    /// `ρ̇ = J⁻¹ẋ` and `ρ̈ = J⁻¹(ẍ − ∂²x/∂ρ² [ρ̇, ρ̇])` from the map's velocity and acceleration.
    ChainRule,
    /// Centred differences of `ρ(t)` and of `N_i ρ̇_i` with step `dt`.
    TimeDifference { dt: f64 },
}

/// What the initial coordinates `ρ⁰` of a particle are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCoordinates {
    /// Chart coordinates of the particle's position at `t = 0`.
    FromPositions,
    /// The map's labels are already chart coordinates.
    Labels,
}

/// Trajectory quantities in chart coordinates at one node.
#[derive(Clone, Copy, Debug)]
struct NodeState {
    rate: Vec3,
    /// `d(N_i ρ̇_i)/dt`.
    momentum_rate: Vec3,
    metric: Vec3,
    /// `∂N_j/∂ρ_i` at `(i, j)`.
    metric_derivatives: Mat3,
    omega_gradient: Vec3,
    jacobian: Mat3,
}

impl NodeState {
    /// Coordinate-form residual at this node.
    fn residual(&self) -> Vec3 {
        let sq = self.rate.component_mul(&self.rate);
        self.momentum_rate - 0.5 * self.metric_derivatives * sq - self.omega_gradient
    }
}

fn diagonal_metric(c: &dyn Chart, rho: &Vec3) -> Result<(Vec3, Mat3)> {
    let j = jacobian(c, rho);
    let m = MetricCoefficients::from_jacobian(&j);
    if m.cross_ratio() > ORTHOGONALITY_TOLERANCE {
        return Err(Error::NonOrthogonalChart(c.name().to_string()));
    }
    Ok((Vec3::from(m.diagonal), j))
}

fn unwrap_to(c: &dyn Chart, reference: &Vec3, mut rho: Vec3) -> Vec3 {
    for (k, p) in c.periods().iter().enumerate() {
        if let Some(p) = p {
            rho[k] -= p * ((rho[k] - reference[k]) / p).round();
        }
    }
    rho
}

fn node_states(m: &FlowMap, c: &dyn Chart, fp: &ForcePotential, t: f64, rates: RateMode) -> Result<Vec<NodeState>> {
    if !c.is_orthogonal() {
        return Err(Error::NonOrthogonalChart(c.name().to_string()));
    }
    let grid = m.labels();
    let h = DEFAULT_STEP * m.time_scale().max(1.0);
    let state = |x: Vec3, rho: Vec3, rate: Vec3, momentum_rate: Vec3| -> Result<NodeState> {
        let (metric, j) = diagonal_metric(c, &rho)?;
        Ok(NodeState {
            rate,
            momentum_rate,
            metric,
            metric_derivatives: metric_derivatives(c, &rho),
            omega_gradient: j.transpose() * fp.omega_gradient(&x, t, h),
            jacobian: j,
        })
    };
    match rates {
        RateMode::ChainRule => {
            let x = m.positions(t)?;
            let u = m.velocities(t)?;
            let (acc, _) = m.accelerations(t)?;
            (0..grid.node_count())
                .map(|n| {
                    let xn = x.vector(n);
                    let rho = c.coordinates(&xn)?;
                    let j = jacobian(c, &rho);
                    let inv = j
                        .try_inverse()
                        .ok_or_else(|| Error::OutsideChart([xn.x, xn.y, xn.z]))?;
                    let rate = inv * u.vector(n);
                    let hs = hessian(c, &rho);
                    let curvature = Vec3::from_fn(|k, _| rate.dot(&(hs[k] * rate)));
                    let accel = inv * (acc.vector(n) - curvature);
                    let (metric, _) = diagonal_metric(c, &rho)?;
                    let dn = metric_derivatives(c, &rho);
                    // d(N_i ρ̇_i)/dt = N_i ρ̈_i + ρ̇_i Σ_j ∂N_i/∂ρ_j ρ̇_j
                    let momentum_rate = metric.component_mul(&accel) + rate.component_mul(&(dn.transpose() * rate));
                    state(xn, rho, rate, momentum_rate)
                })
                .collect()
        }
        RateMode::TimeDifference { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
            }
            (0..grid.node_count())
                .map(|n| {
                    let a = grid.label(n);
                    let xn = m.position(&a, t)?;
                    let rho0 = c.coordinates(&xn)?;
                    let mut rho = [Vec3::zeros(); 5];
                    for (k, r) in rho.iter_mut().enumerate() {
                        let s = t + (k as f64 - 2.0) * dt;
                        *r = if k == 2 { rho0 } else { unwrap_to(c, &rho0, c.coordinates(&m.position(&a, s)?)?) };
                    }
                    let rate_at = |k: usize| (rho[k + 1] - rho[k - 1]) / (2.0 * dt);
                    let momentum = |k: usize| -> Result<Vec3> {
                        let (metric, _) = diagonal_metric(c, &rho[k])?;
                        Ok(metric.component_mul(&rate_at(k)))
                    };
                    let momentum_rate = (momentum(3)? - momentum(1)?) / (2.0 * dt);
                    state(xn, rho0, rate_at(2), momentum_rate)
                })
                .collect()
        }
    }
}

/// Residuals of the curvilinear equations of motion at every label node.
#[derive(Clone, Debug)]
pub struct ChartEomResidual {
    pub chart: String,
    pub components: [ResidualNorm; 3],
    pub field: Field,
    pub rates: RateMode,
    pub mode: DerivativeMode,
}

impl ChartEomResidual {
    pub fn linf(&self) -> f64 {
        self.components.iter().map(|c| c.linf).fold(0.0, f64::max)
    }

    fn new(c: &dyn Chart, field: Field, rates: RateMode, mode: DerivativeMode, rind: Option<usize>) -> Self {
        ChartEomResidual {
            chart: c.name().to_string(),
            components: [0, 1, 2].map(|k| ResidualNorm::of_field(&field.component(k), rind)),
            field,
            rates,
            mode,
        }
    }
}

/// Equations of motion in the coordinates of an orthogonal chart, one residual per coordinate.
pub fn curvilinear_eom_residual(
    m: &FlowMap,
    c: &dyn Chart,
    fp: &ForcePotential,
    t: f64,
    rates: RateMode,
) -> Result<ChartEomResidual> {
    let states = node_states(m, c, fp, t, rates)?;
    let field = Field::vector_from_fn_indexed(m.labels().clone(), |n| states[n].residual());
    Ok(ChartEomResidual::new(c, field, rates, DerivativeMode::Exact, None))
}

/// The same residuals written against the initial coordinates `ρ⁰`:
/// `Σ_i d(N_i ρ̇_i)/dt ∂ρ_i/∂ρ⁰_j − ½ Σ_i ρ̇_i² ∂N_i/∂ρ⁰_j − ∂Ω/∂ρ⁰_j`.
///
/// With exact map gradients the label derivatives follow by the chain rule, which makes
/// the result the coordinate-form residual contracted with `∂ρ/∂ρ⁰`. Otherwise `N_i`,
/// `Ω` and the positions are differenced over the label grid.
pub fn curvilinear_lagrangian_eom_residual(
    m: &FlowMap,
    c: &dyn Chart,
    fp: &ForcePotential,
    t: f64,
    rates: RateMode,
    initial: InitialCoordinates,
    s: &StencilSpec,
) -> Result<ChartEomResidual> {
    let states = node_states(m, c, fp, t, rates)?;
    let grid = m.labels().clone();
    let g = deformation_gradient(m, t, s)?;
    let exact = g.mode == DerivativeMode::Exact && fp.has_exact_gradient();
    let to_initial = initial_transform(m, c, initial, s)?;
    let field = if exact {
        Field::try_vector_from_fn(grid.clone(), |n, _| {
            let st = &states[n];
            let inv = st.jacobian.try_inverse().ok_or(Error::SingularMap { node: n, det: 0.0 })?;
            let k = inv * g.field.tensor(n);
            Ok(to_initial[n] * (k.transpose() * st.residual()))
        })?
    } else {
        let x = m.positions(t)?;
        let metric: Vec<Field> = (0..3)
            .map(|i| {
                let f = Field::try_scalar_from_fn(grid.clone(), |n, _| Ok(states[n].metric[i]))?;
                gradient(&f, s)
            })
            .collect::<Result<_>>()?;
        let omega = Field::try_scalar_from_fn(grid.clone(), |n, _| Ok(fp.omega(&x.vector(n), t)))?;
        let d_omega = gradient(&omega, s)?;
        Field::try_vector_from_fn(grid.clone(), |n, _| {
            let st = &states[n];
            let inv = st.jacobian.try_inverse().ok_or(Error::SingularMap { node: n, det: 0.0 })?;
            let k = inv * g.field.tensor(n);
            let mut r = k.transpose() * st.momentum_rate - d_omega.vector(n);
            for (i, dn) in metric.iter().enumerate() {
                r -= 0.5 * st.rate[i] * st.rate[i] * dn.vector(n);
            }
            Ok(to_initial[n] * r)
        })?
    };
    let (mode, rind) = if exact {
        (DerivativeMode::Exact, None)
    } else {
        (g.mode, Some(DEFAULT_RIND))
    };
    Ok(ChartEomResidual::new(c, field, rates, mode, rind))
}

/// `(∂ρ⁰/∂a)⁻ᵀ` per node, which turns label derivatives into `ρ⁰` derivatives.
fn initial_transform(m: &FlowMap, c: &dyn Chart, initial: InitialCoordinates, s: &StencilSpec) -> Result<Vec<Mat3>> {
    let n = m.labels().node_count();
    match initial {
        InitialCoordinates::Labels => Ok(vec![Mat3::identity(); n]),
        InitialCoordinates::FromPositions => {
            let g0 = deformation_gradient(m, 0.0, s)?;
            let x0 = m.positions(0.0)?;
            (0..n)
                .map(|node| {
                    let rho0 = c.coordinates(&x0.vector(node))?;
                    let k0 = jacobian(c, &rho0)
                        .try_inverse()
                        .map(|inv| inv * g0.field.tensor(node))
                        .and_then(|k| k.try_inverse())
                        .ok_or(Error::SingularMap { node, det: 0.0 })?;
                    Ok(k0.transpose())
                })
                .collect()
        }
    }
}

/// Explicit polar-chart momentum balance `(Φ₁, Φ₂, Φ₃)` from coordinates, rates and
/// second derivatives `(r̈, θ̈, φ̈)`.
pub fn polar_phi(rho: &Vec3, rate: &Vec3, accel: &Vec3) -> Vec3 {
    let (r, th) = (rho[0], rho[1]);
    let (dr, dth, dph) = (rate[0], rate[1], rate[2]);
    let (st, ct) = th.sin_cos();
    Vec3::new(
        accel[0] - r * dth * dth - r * st * st * dph * dph,
        r * r * accel[1] + 2.0 * r * dr * dth - dph * dph * r * r * st * ct,
        r * r * st * st * accel[2] + 2.0 * r * dr * st * st * dph + 2.0 * r * r * st * ct * dth * dph,
    )
}

/// Mismatch of the density relation `det(∂ρ/∂ρ⁰) ϱ/ϱ₀ = √(det G⁰ / det G)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChartDensityResidual {
    pub chart: String,
    pub time: f64,
    /// Against the general right-hand side built from full metric determinants.
    pub general: ResidualNorm,
    /// Against `√(N₁⁰N₂⁰N₃⁰ / (N₁N₂N₃))`, orthogonal charts only.
    pub orthogonal: Option<ResidualNorm>,
    /// Largest gap between the general and the orthogonal right-hand sides.
    pub reduction_gap: Option<f64>,
    /// Polar chart only: `r₀² sin θ₀ / (r² sin θ)` against the orthogonal right-hand side.
    pub polar_form_gap: Option<f64>,
    pub mode: DerivativeMode,
}

pub fn curvilinear_density_residual(
    m: &FlowMap,
    c: &dyn Chart,
    t: f64,
    initial: InitialCoordinates,
    s: &StencilSpec,
) -> Result<ChartDensityResidual> {
    let grid = m.labels().clone();
    let g = deformation_gradient(m, t, s)?;
    let x = m.positions(t)?;
    let x0 = m.positions(0.0)?;
    let to_initial = initial_transform(m, c, initial, s)?;
    let nodes = grid.node_count();
    let mut general = Vec::with_capacity(nodes);
    let mut ortho = Vec::with_capacity(nodes);
    let mut reduction: f64 = 0.0;
    let mut polar: f64 = 0.0;
    let is_polar = c.name() == "polar";
    for n in 0..nodes {
        let a = grid.label(n);
        let rho = c.coordinates(&x.vector(n))?;
        let rho0 = match initial {
            InitialCoordinates::Labels => a,
            InitialCoordinates::FromPositions => c.coordinates(&x0.vector(n))?,
        };
        require_inside(c, &rho0)?;
        let j = jacobian(c, &rho);
        let inv = j.try_inverse().ok_or(Error::SingularMap { node: n, det: 0.0 })?;
        // ∂ρ/∂ρ⁰ = (∂ρ/∂a)(∂a/∂ρ⁰); to_initial holds (∂a/∂ρ⁰)ᵀ.
        let k = inv * g.field.tensor(n) * to_initial[n].transpose();
        let lhs = k.determinant() * m.density_ratio(&a, t);
        let (mt, mt0) = (
            MetricCoefficients::from_jacobian(&j),
            MetricCoefficients::from_jacobian(&jacobian(c, &rho0)),
        );
        let rhs = (mt0.gram().determinant() / mt.gram().determinant()).sqrt();
        general.push(lhs - rhs);
        if c.is_orthogonal() {
            let prod = |d: [f64; 3]| d[0] * d[1] * d[2];
            let rhs_o = (prod(mt0.diagonal) / prod(mt.diagonal)).sqrt();
            ortho.push(lhs - rhs_o);
            reduction = reduction.max((rhs - rhs_o).abs());
            if is_polar {
                let p = rho0[0] * rho0[0] * rho0[1].sin() / (rho[0] * rho[0] * rho[1].sin());
                polar = polar.max((p - rhs_o).abs());
            }
        }
    }
    let norm = |v: &[f64]| {
        let mut r = ResidualNorm::from_samples(v, None);
        if g.mode != DerivativeMode::Exact {
            r = trimmed_norm(&grid, v);
        }
        r
    };
    Ok(ChartDensityResidual {
        chart: c.name().to_string(),
        time: t,
        general: norm(&general),
        orthogonal: c.is_orthogonal().then(|| norm(&ortho)),
        reduction_gap: c.is_orthogonal().then_some(reduction),
        polar_form_gap: (c.is_orthogonal() && is_polar).then_some(polar),
        mode: g.mode,
    })
}

fn trimmed_norm(grid: &crate::field::LabelGrid, v: &[f64]) -> ResidualNorm {
    let f = Field::new(grid.clone(), Rank::Scalar, v.to_vec()).expect("one value per node");
    ResidualNorm::of_field(&f, Some(DEFAULT_RIND))
}

/// Values of `H = r² θ̇ = x v − y u` about the z axis at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvanbergRow {
    pub time: f64,
    pub mean: f64,
    /// Largest change of any particle's `H` since the first time.
    pub max_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvanbergReport {
    pub flow: String,
    pub rows: Vec<SvanbergRow>,
    /// `H` of every particle at the first time.
    pub reference: Vec<f64>,
}

impl SvanbergReport {
    pub fn max_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.max_drift).fold(0.0, f64::max)
    }

    /// Largest `|H − expected|` over particles at the first time.
    pub fn deviation_from(&self, expected: f64) -> f64 {
        self.reference.iter().map(|h| (h - expected).abs()).fold(0.0, f64::max)
    }
}

/// Per-particle angular momentum about z across `times`. Only meaningful for motions
/// whose force potential does not depend on the azimuth.
pub fn svanberg_invariant(m: &FlowMap, times: &[f64]) -> Result<SvanbergReport> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("at least one time is needed".into()));
    }
    let h_at = |t: f64| -> Result<Vec<f64>> {
        let x = m.positions(t)?;
        let u = m.velocities(t)?;
        Ok((0..x.node_count())
            .map(|n| {
                let (p, v) = (x.vector(n), u.vector(n));
                p.x * v.y - p.y * v.x
            })
            .collect())
    };
    let reference = h_at(times[0])?;
    let rows = times
        .iter()
        .map(|&t| {
            let h = h_at(t)?;
            let drift = h.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(SvanbergRow {
                time: t,
                mean: h.iter().sum::<f64>() / h.len() as f64,
                max_drift: drift,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SvanbergReport {
        flow: m.name().to_string(),
        rows,
        reference,
    })
}

#[cfg(test)]
mod tests;
