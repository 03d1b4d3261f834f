use serde::{Deserialize, Serialize};

use super::{DerivativeMode, FlowMap, LabelConvention, Resampler};
use crate::field::{
    differentiate, divergence, Axis, Field, LabelGrid, QuadratureRule, Rank, ResidualNorm, StencilSpec,
    DEFAULT_RIND,
};
use crate::functions::ScalarFunction;
use crate::{Error, Mat3, Result, Vec3};

/// Below this `|J|` the map is treated as self-intersecting.
pub const SINGULAR_JACOBIAN: f64 = 1e-10;

/// `∂x_i/∂a_j` at every label node.
#[derive(Clone, Debug)]
pub struct DeformationGradient {
    pub field: Field,
    pub time: f64,
    pub mode: DerivativeMode,
}

/// A per-node residual together with its norm summary.
#[derive(Clone, Debug)]
pub struct Residual {
    pub field: Field,
    pub norm: ResidualNorm,
    pub mode: DerivativeMode,
}

/// Label-space gradient of a vector field: column `j` holds `∂v/∂a_j`; missing axes give zero columns.
pub fn label_gradient(v: &Field, s: &StencilSpec) -> Result<Field> {
    v.expect_rank(Rank::Vector)?;
    let g = v.grid();
    let cols = (0..g.ndim())
        .map(|k| differentiate(v, k, s))
        .collect::<Result<Vec<_>>>()?;
    Field::try_tensor_from_fn(g.clone(), |n, _| {
        let mut m = Mat3::zeros();
        for (k, c) in cols.iter().enumerate() {
            m.set_column(k, &c.vector(n));
        }
        Ok(m)
    })
}

/// Deformation gradient at `t`: exact callables when registered, else differences of
/// the displacement `x - a` (which stays periodic on periodic label axes).
pub fn deformation_gradient(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<DeformationGradient> {
    let grid = m.labels().clone();
    if m.has_exact_gradient() {
        let field = Field::try_tensor_from_fn(grid, |_, a| Ok(m.gradient_at(a, t, 0.0)?.0))?;
        field.check_finite()?;
        return Ok(DeformationGradient {
            field,
            time: t,
            mode: DerivativeMode::Exact,
        });
    }
    let x = m.positions(t)?;
    let disp = Field::try_vector_from_fn(grid.clone(), |n, a| Ok(x.vector(n) - a))?;
    let gd = label_gradient(&disp, s)?;
    let field = Field::try_tensor_from_fn(grid, |n, _| Ok(Mat3::identity() + gd.tensor(n)))?;
    Ok(DeformationGradient {
        field,
        time: t,
        mode: DerivativeMode::FiniteDifference {
            order: s.order.value(),
        },
    })
}

/// `∂u/∂a` at every label node.
pub fn velocity_label_gradient(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<(Field, DerivativeMode)> {
    if m.has_exact_velocity_gradient() {
        let f = Field::try_tensor_from_fn(m.labels().clone(), |_, a| Ok(m.velocity_gradient_at(a, t, 0.0)?.0))?;
        return Ok((f, DerivativeMode::Exact));
    }
    let u = m.velocities(t)?;
    Ok((
        label_gradient(&u, s)?,
        DerivativeMode::FiniteDifference {
            order: s.order.value(),
        },
    ))
}

fn det3(f: &Mat3) -> f64 {
    f[(0, 0)] * (f[(1, 1)] * f[(2, 2)] - f[(1, 2)] * f[(2, 1)])
        - f[(0, 1)] * (f[(1, 0)] * f[(2, 2)] - f[(1, 2)] * f[(2, 0)])
        + f[(0, 2)] * (f[(1, 0)] * f[(2, 1)] - f[(1, 1)] * f[(2, 0)])
}

/// Cofactor matrix: entry `(i, j)` is the signed minor of `F_ij`.
pub(crate) fn cofactor(f: &Mat3) -> Mat3 {
    let mut c = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            c[(i, j)] = f[(r0, c0)] * f[(r1, c1)] - f[(r0, c1)] * f[(r1, c0)];
        }
    }
    c
}

/// Per-node determinant by cofactor expansion.
pub fn jacobian_det(g: &DeformationGradient) -> Result<Field> {
    g.field.check_finite()?;
    Ok(g.field.map_nodes(|v| det3(&Mat3::from_row_slice(v))))
}

/// Largest mismatch per node between `J · F⁻¹` (numerical inverse) and the
/// transposed cofactor matrix formed directly from the entries of `F`.
pub fn cofactor_identity_residual(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<Residual> {
    let g = deformation_gradient(m, t, s)?;
    g.field.check_finite()?;
    let field = Field::try_scalar_from_fn(m.labels().clone(), |n, _| {
        let f = g.field.tensor(n);
        let j = det3(&f);
        if j.abs() <= SINGULAR_JACOBIAN {
            return Err(Error::SingularMap { node: n, det: j });
        }
        let inv = f.try_inverse().ok_or(Error::SingularMap { node: n, det: j })?;
        Ok((j * inv - cofactor(&f).transpose()).abs().max())
    })?;
    let norm = ResidualNorm::of_field(&field, None);
    Ok(Residual {
        field,
        norm,
        mode: g.mode,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// `|J(t) ϱ(t) − J(0) ϱ(0)| / ϱ₀` over label nodes.
    Lagrangian,
    /// `|∂ϱ/∂t + div(ϱ u)|` on a spatial grid, or `|div u|` for constant density.
    Eulerian,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityResidual {
    pub mode: DensityMode,
    pub norm: ResidualNorm,
    pub derivatives: DerivativeMode,
    /// Interpolation used to move label data onto the spatial grid (Eulerian mode only).
    pub interpolation: Option<String>,
}

/// Density equation residual at `t`. Eulerian mode picks a spatial box inside the
/// mapped domain automatically; use [`eulerian_density_residual`] to choose it.
pub fn density_residual(m: &FlowMap, t: f64, mode: DensityMode, s: &StencilSpec) -> Result<DensityResidual> {
    match mode {
        DensityMode::Lagrangian => lagrangian_density(m, t, s),
        DensityMode::Eulerian => {
            let grid = auto_spatial_grid(m, t)?;
            eulerian_density_residual(m, t, &grid, s)
        }
    }
}

fn lagrangian_density(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<DensityResidual> {
    let g1 = deformation_gradient(m, t, s)?;
    let g0 = deformation_gradient(m, 0.0, s)?;
    let (j1, j0) = (jacobian_det(&g1)?, jacobian_det(&g0)?);
    let grid = m.labels().clone();
    let field = Field::try_scalar_from_fn(grid, |n, a| {
        let lhs = j1.scalar(n) * m.density_ratio(a, t);
        let rhs = match m.convention() {
            LabelConvention::IdentityAtZero => 1.0,
            LabelConvention::Generalized => j0.scalar(n) * m.density_ratio(a, 0.0),
        };
        Ok(lhs - rhs)
    })?;
    let rind = match g1.mode {
        DerivativeMode::Exact => None,
        DerivativeMode::FiniteDifference { .. } => Some(DEFAULT_RIND),
    };
    Ok(DensityResidual {
        mode: DensityMode::Lagrangian,
        norm: ResidualNorm::of_field(&field, rind),
        derivatives: g1.mode,
        interpolation: None,
    })
}

/// A spatial box centred on the image of the label-box centre, sized from the local
/// deformation so that it stays inside the mapped domain for moderate distortion.
fn auto_spatial_grid(m: &FlowMap, t: f64) -> Result<LabelGrid> {
    let lg = m.labels();
    let mut centre = Vec3::zeros();
    let mut half = Vec3::zeros();
    for (k, ax) in lg.axes().iter().enumerate() {
        // The full period on periodic axes, so the box does not drift with resolution.
        centre[k] = 0.5 * (ax.origin + ax.upper());
        half[k] = 0.5 * (ax.upper() - ax.origin);
    }
    let xc = m.position(&centre, t)?;
    let (f, _) = m.gradient_at(&centre, t, 1e-6 * lg.min_spacing())?;
    let axes = (0..lg.ndim())
        .map(|k| {
            let reach: f64 = (0..lg.ndim()).map(|j| f[(k, j)].abs() * half[j]).sum();
            let r = 0.35 * reach;
            Axis::closed(xc[k] - r, xc[k] + r, lg.axes()[k].cells())
        })
        .collect();
    LabelGrid::new(axes)
}

/// Eulerian norms skip `cells / 8` nodes at each face (at least the default rind).
pub const EULERIAN_RIM_FRACTION: usize = 8;

/// Eulerian density residual on an explicit spatial grid (its axes are x, y, z).
pub fn eulerian_density_residual(
    m: &FlowMap,
    t: f64,
    spatial: &LabelGrid,
    s: &StencilSpec,
) -> Result<DensityResidual> {
    if spatial.ndim() != m.labels().ndim() {
        return Err(Error::InvalidGrid("spatial grid must have as many axes as the label grid".into()));
    }
    let x = m.positions(t)?;
    let u = m.velocities(t)?;
    let resampler = Resampler::new(&x)?;
    // Cubic interpolation keeps the differenced result second order; the multilinear
    // interpolant's slope is only first-order accurate.
    let cubic = m.labels().axes().iter().all(|a| a.nodes >= 4);
    let resample = |r: &Resampler, v: &Field| if cubic { r.resample_cubic(v, spatial) } else { r.resample(v, spatial) };
    let field = if !m.is_compressible() {
        let us = resample(&resampler, &u)?;
        divergence(&us, s)?
    } else {
        let rho = |time: f64| -> Result<Field> {
            Field::try_scalar_from_fn(m.labels().clone(), |n, a| {
                Ok(m.reference_density().at_node(n) * m.density_ratio(a, time))
            })
        };
        let flux_label = {
            let r = rho(t)?;
            Field::try_vector_from_fn(m.labels().clone(), |n, _| Ok(r.scalar(n) * u.vector(n)))?
        };
        let flux = resample(&resampler, &flux_label)?;
        let dt = m.acceleration_step();
        let at = |time: f64| -> Result<Field> {
            let xs = m.positions(time)?;
            resample(&Resampler::new(&xs)?, &rho(time)?)
        };
        let drho = at(t + dt)?.linear_combination(0.5 / dt, &at(t - dt)?, -0.5 / dt)?;
        drho.linear_combination(1.0, &divergence(&flux, s)?, 1.0)?
    };
    // The excluded rim is a fixed fraction of the box, so refinement compares the same region.
    let cells = spatial.axes().iter().map(|a| a.cells()).min().unwrap_or(0);
    let rim = DEFAULT_RIND.max(cells / EULERIAN_RIM_FRACTION);
    Ok(DensityResidual {
        mode: DensityMode::Eulerian,
        norm: ResidualNorm::of_field(&field, Some(rim)),
        derivatives: DerivativeMode::FiniteDifference {
            order: s.order.value(),
        },
        interpolation: Some(if cubic { "tensor cubic" } else { "multilinear" }.into()),
    })
}

/// `(∭ f(x(a, t)) ϱ₀ da, ∭ f(a) ϱ₀ da)` over the label grid.
pub fn mass_integral_transform(m: &FlowMap, t: f64, f: &ScalarFunction, q: &QuadratureRule) -> Result<(f64, f64)> {
    let x = m.positions(t)?;
    let rho = m.reference_density();
    let moved = Field::try_scalar_from_fn(m.labels().clone(), |n, _| Ok(f.value(&x.vector(n), t) * rho.at_node(n)))?;
    let fixed = Field::try_scalar_from_fn(m.labels().clone(), |n, a| Ok(f.value(a, t) * rho.at_node(n)))?;
    Ok((q.integrate_field(&moved)?, q.integrate_field(&fixed)?))
}
