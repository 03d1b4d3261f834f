//! Cauchy's vorticity invariants: the label covelocity, its half-curl in label space,
//! spatial vorticity, and checks of candidate vortex-line functions.
//!
//! Vorticities here are half-curls (angular velocity of a fluid element). The modern
//! vorticity vector is twice the stored value.

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::field::{curl, divergence, gradient, Field, Rank, ResidualNorm, StencilSpec};
use crate::flowmap::{
    deformation_gradient, velocity_label_gradient, DerivativeMode, FlowMap, LabelConvention, SINGULAR_JACOBIAN,
};
use crate::functions::VectorFunction;
use crate::field::LabelGrid;
use crate::{Error, Mat3, Result, Vec3};

/// Marker for the grid a [`VorticityField`] lives on.
pub trait Frame: Clone + std::fmt::Debug {
    const NAME: &'static str;
}

/// Fields indexed by particle labels.
#[derive(Clone, Copy, Debug)]
pub struct LabelFrame;

/// Fields indexed by spatial position.
#[derive(Clone, Copy, Debug)]
pub struct SpatialFrame;

impl Frame for LabelFrame {
    const NAME: &'static str = "label";
}

impl Frame for SpatialFrame {
    const NAME: &'static str = "spatial";
}

/// Half-curl vorticity tagged with the frame its grid belongs to.
#[derive(Clone, Debug)]
pub struct VorticityField<F: Frame> {
    field: Field,
    time: f64,
    mode: DerivativeMode,
    _frame: PhantomData<F>,
}

impl<F: Frame> VorticityField<F> {
    pub fn new(field: Field, time: f64, mode: DerivativeMode) -> Result<Self> {
        field.expect_rank(Rank::Vector)?;
        Ok(VorticityField {
            field,
            time,
            mode,
            _frame: PhantomData,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn frame(&self) -> &'static str {
        F::NAME
    }

    pub fn at(&self, node: usize) -> Vec3 {
        self.field.vector(node)
    }

    /// Largest node-wise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        (0..self.field.node_count())
            .map(|n| self.field.vector(n).norm())
            .fold(0.0, f64::max)
    }

    /// Node-wise difference norm against another field in the same frame.
    pub fn difference(&self, other: &Self) -> Result<ResidualNorm> {
        let d = self.field.linear_combination(1.0, &other.field, -1.0)?;
        Ok(ResidualNorm::of_field(&d, None))
    }
}

/// `(α, β, γ)` with `α_j = Σ_i u_i ∂x_i/∂a_j`, on the label grid.
#[derive(Clone, Debug)]
pub struct LabelCovelocity {
    pub field: Field,
    pub time: f64,
    pub mode: DerivativeMode,
}

pub fn label_covelocity(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<LabelCovelocity> {
    let g = deformation_gradient(m, t, s)?;
    let u = m.velocities(t)?;
    let field = Field::vector_from_fn_indexed(m.labels().clone(), |n| g.field.tensor(n).transpose() * u.vector(n));
    Ok(LabelCovelocity {
        field,
        time: t,
        mode: g.mode,
    })
}

/// Cauchy invariants `½ curl_a (α, β, γ)`.
///
/// With exact first derivatives of both position and velocity, the curl is formed from
/// `Gᵀ F` (`G = ∂u/∂a`), where the second derivatives of `x` cancel. Otherwise the covelocity
/// is differenced on the label grid.
pub fn cauchy_invariants(m: &FlowMap, t: f64, s: &StencilSpec) -> Result<VorticityField<LabelFrame>> {
    if m.has_exact_gradient() && m.has_exact_velocity_gradient() {
        let f = deformation_gradient(m, t, s)?;
        let (g, _) = velocity_label_gradient(m, t, s)?;
        let field = Field::vector_from_fn_indexed(m.labels().clone(), |n| {
            let p = g.tensor(n).transpose() * f.field.tensor(n);
            0.5 * Vec3::new(p[(1, 2)] - p[(2, 1)], p[(2, 0)] - p[(0, 2)], p[(0, 1)] - p[(1, 0)])
        });
        return VorticityField::new(field, t, DerivativeMode::Exact);
    }
    let cov = label_covelocity(m, t, s)?;
    let field = curl(&cov.field, s)?.map(|v| 0.5 * v);
    VorticityField::new(field, t, DerivativeMode::FiniteDifference { order: s.order.value() })
}

/// Invariants at a single label together with the spatial vorticity `F A / J` they imply.
#[derive(Clone, Copy, Debug)]
pub struct PointInvariant {
    pub label: Vec3,
    pub spatial: Vec3,
    pub gradient: Mat3,
    pub mode: DerivativeMode,
}

/// Pointwise invariants at an arbitrary label; derivatives are central differences with
/// step `h` unless the map carries them exactly.
pub fn invariant_at(m: &FlowMap, a: &Vec3, t: f64, h: f64) -> Result<PointInvariant> {
    let (f, mf) = m.gradient_at(a, t, h)?;
    let (g, mg) = m.velocity_gradient_at(a, t, h)?;
    let p = g.transpose() * f;
    let label = 0.5 * Vec3::new(p[(1, 2)] - p[(2, 1)], p[(2, 0)] - p[(0, 2)], p[(0, 1)] - p[(1, 0)]);
    let j = f.determinant();
    if j.abs() < SINGULAR_JACOBIAN {
        return Err(Error::SingularMap { node: 0, det: j });
    }
    let mode = if mf == DerivativeMode::Exact && mg == DerivativeMode::Exact {
        DerivativeMode::Exact
    } else {
        DerivativeMode::FiniteDifference { order: 2 }
    };
    Ok(PointInvariant {
        label,
        spatial: f * label / j,
        gradient: f,
        mode,
    })
}

/// Drift of the invariants at one time relative to the reference time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftRow {
    pub t: f64,
    pub drift: ResidualNorm,
    pub max_magnitude: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub flow: String,
    pub reference_time: f64,
    pub rows: Vec<DriftRow>,
    pub mode: DerivativeMode,
    pub convention: String,
}

impl InvariantDrift {
    /// Largest drift over all nodes and times.
    pub fn max_drift(&self) -> f64 {
        self.rows.iter().map(|r| r.drift.linf).fold(0.0, f64::max)
    }

    /// Smallest ratio of the largest magnitude at a later time to that at the reference time.
    pub fn min_magnitude_ratio(&self) -> f64 {
        let first = self.rows.first().map_or(0.0, |r| r.max_magnitude);
        if first == 0.0 {
            return 1.0;
        }
        self.rows.iter().map(|r| r.max_magnitude / first).fold(f64::INFINITY, f64::min)
    }
}

/// `max |(A, B, C)(t) − (A, B, C)(t₀)|` over nodes for every `t` in `times`; `t₀ = times[0]`.
pub fn invariant_drift(m: &FlowMap, times: &[f64], s: &StencilSpec) -> Result<InvariantDrift> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter("invariant drift needs at least two times".into()));
    }
    let reference = cauchy_invariants(m, times[0], s)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let w = cauchy_invariants(m, t, s)?;
        rows.push(DriftRow {
            t,
            drift: w.difference(&reference)?,
            max_magnitude: w.max_magnitude(),
        });
    }
    Ok(InvariantDrift {
        flow: m.name().to_string(),
        reference_time: times[0],
        rows,
        mode: reference.mode(),
        convention: "half-curl".into(),
    })
}

/// `∂A/∂a + ∂B/∂b + ∂C/∂c`.
pub fn solenoidality_residual(w: &VorticityField<LabelFrame>, s: &StencilSpec) -> Result<ResidualNorm> {
    Ok(ResidualNorm::of_field(&divergence(w.field(), s)?, None))
}

/// Spatial half-curl `½ curl u` of a velocity field sampled on a spatial grid.
pub fn eulerian_vorticity(u: &Field, t: f64, s: &StencilSpec) -> Result<VorticityField<SpatialFrame>> {
    let field = curl(u, s)?.map(|v| 0.5 * v);
    VorticityField::new(field, t, DerivativeMode::FiniteDifference { order: s.order.value() })
}

/// Spatial half-curl of a velocity function at the nodes of `grid`, exact when its Jacobian is registered.
pub fn eulerian_vorticity_of(u: &VectorFunction, t: f64, grid: &LabelGrid, s: &StencilSpec) -> Result<VorticityField<SpatialFrame>> {
    if u.has_jacobian() {
        let field = Field::vector_from_fn(grid.clone(), |x| {
            let j = u.jacobian(x, t, 0.0);
            0.5 * Vec3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
        });
        return VorticityField::new(field, t, DerivativeMode::Exact);
    }
    eulerian_vorticity(&Field::vector_from_fn(grid.clone(), |x| u.value(x, t)), t, s)
}

/// Node-wise mismatch between the invariants at `t = 0` and the spatial vorticity of the
/// initial velocity, which coincide when labels are initial positions.
pub fn initial_consistency(m: &FlowMap, s: &StencilSpec) -> Result<ResidualNorm> {
    if m.convention() != LabelConvention::IdentityAtZero {
        return Err(Error::InvalidParameter("initial consistency needs labels equal to initial positions".into()));
    }
    let w = cauchy_invariants(m, 0.0, s)?;
    let x = eulerian_vorticity(&m.velocities(0.0)?, 0.0, s)?;
    let d = w.field().linear_combination(1.0, x.field(), -1.0)?;
    Ok(ResidualNorm::of_field(&d, None))
}

/// Mismatch `2 (A, B, C) − ∇_a φ × ∇_a ψ` for candidate vortex-line functions on the label grid.
pub fn vortex_line_function_residual(phi: &Field, psi: &Field, w: &VorticityField<LabelFrame>, s: &StencilSpec) -> Result<ResidualNorm> {
    if phi.grid() != w.field().grid() || psi.grid() != w.field().grid() {
        return Err(Error::GridMismatch);
    }
    let (gp, gq) = (gradient(phi, s)?, gradient(psi, s)?);
    let r = Field::vector_from_fn_indexed(phi.grid().clone(), |n| 2.0 * w.at(n) - gp.vector(n).cross(&gq.vector(n)));
    Ok(ResidualNorm::of_field(&r, None))
}


#[cfg(test)]
mod refinement {
    use super::*;
    use crate::flows::{catalog_flow, Params};

    #[test]
    fn point_vortex_drift_converges() {
        let drift = |cells: f64| {
            let p: Params = [("cells", cells), ("steps", 4096.0), ("duration", 1.0)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect();
            let e = catalog_flow("point_vortex", &p, None).unwrap();
            let times = e.map.trajectories().unwrap().times.clone();
            invariant_drift(&e.map, &times, &StencilSpec::default()).unwrap().max_drift()
        };
        let (coarse, fine) = (drift(32.0), drift(64.0));
        let order = (coarse / fine).log2();
        eprintln!("drift {coarse:e} {fine:e} order {order}");
        assert!(order >= 1.8, "order {order}");
    }
}
