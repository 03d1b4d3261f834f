//! Force and pressure potentials and residuals of the equations of motion in
//! spatial (Eulerian) and label (Lagrangian) form.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::field::{differentiate, Field, LabelGrid, Rank, ResidualNorm, StencilSpec, DEFAULT_RIND};
use crate::flowmap::{deformation_gradient, label_gradient, AccelerationSource, DerivativeMode, FlowMap};
use crate::functions::{ScalarFunction, VectorFunction, DEFAULT_STEP};
use crate::{Error, Mat3, Result, Vec3};

type DensityOf = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relation between pressure and density.
#[derive(Clone)]
pub enum Closure {
    /// Constant density; the pressure function is `p / ϱ`.
    Incompressible { density: f64 },
    /// Density `φ(p)`; the pressure function is `∫_{p_ref}^{p} dq / φ(q)`, evaluated in
    /// closed form when `pressure_function` is given, else by adaptive Simpson quadrature.
    Barotropic {
        density_of: DensityOf,
        reference_pressure: f64,
        pressure_function: Option<DensityOf>,
    },
}

impl fmt::Debug for Closure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Closure::Incompressible { density } => write!(f, "Incompressible {{ density: {density} }}"),
            Closure::Barotropic {
                reference_pressure,
                pressure_function,
                ..
            } => write!(
                f,
                "Barotropic {{ reference_pressure: {reference_pressure}, closed_form: {} }}",
                pressure_function.is_some()
            ),
        }
    }
}

/// Body-force potential `V`, pressure `p` and the closure linking `p` to density.
/// The combined potential is `Ω = V − f(p)`.
#[derive(Clone, Debug)]
pub struct ForcePotential {
    pub potential: ScalarFunction,
    pub pressure: Option<ScalarFunction>,
    pub closure: Closure,
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

impl ForcePotential {
    pub fn incompressible(potential: ScalarFunction, pressure: ScalarFunction, density: f64) -> Self {
        ForcePotential {
            potential,
            pressure: Some(pressure),
            closure: Closure::Incompressible { density },
        }
    }

    /// Body force only; the pressure is taken as uniform.
    pub fn without_pressure(potential: ScalarFunction, density: f64) -> Self {
        ForcePotential {
            potential,
            pressure: None,
            closure: Closure::Incompressible { density },
        }
    }

    /// No body force and uniform pressure.
    pub fn rest() -> Self {
        ForcePotential::incompressible(ScalarFunction::constant(0.0), ScalarFunction::constant(0.0), 1.0)
    }

    pub fn barotropic(
        potential: ScalarFunction,
        pressure: ScalarFunction,
        density_of: impl Fn(f64) -> f64 + Send + Sync + 'static,
        reference_pressure: f64,
    ) -> Self {
        ForcePotential {
            potential,
            pressure: Some(pressure),
            closure: Closure::Barotropic {
                density_of: Arc::new(density_of),
                reference_pressure,
                pressure_function: None,
            },
        }
    }

    /// Supply `f(p)` in closed form for a barotropic closure.
    pub fn with_pressure_function(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        if let Closure::Barotropic { pressure_function, .. } = &mut self.closure {
            *pressure_function = Some(Arc::new(f));
        }
        self
    }

    /// Add constants to `V` and `p`; gradients and residuals are unchanged.
    pub fn shifted(&self, dv: f64, dp: f64) -> Self {
        let mut out = self.clone();
        out.potential = self.potential.plus(&ScalarFunction::constant(dv));
        out.pressure = Some(match &self.pressure {
            Some(p) => p.plus(&ScalarFunction::constant(dp)),
            None => ScalarFunction::constant(dp),
        });
        out
    }

    /// Drop exact gradients so that every derivative is differenced.
    pub fn without_derivatives(&self) -> Self {
        ForcePotential {
            potential: self.potential.without_derivatives(),
            pressure: self.pressure.as_ref().map(|p| p.without_derivatives()),
            closure: self.closure.clone(),
        }
    }

    pub fn has_exact_gradient(&self) -> bool {
        self.potential.has_gradient() && self.pressure.as_ref().is_none_or(|p| p.has_gradient())
    }

    /// `f(p)`.
    pub fn pressure_function(&self, p: f64) -> f64 {
        match &self.closure {
            Closure::Incompressible { density } => p / density,
            Closure::Barotropic {
                density_of,
                reference_pressure,
                pressure_function,
            } => match pressure_function {
                Some(f) => f(p),
                None => adaptive_simpson(&|q| 1.0 / density_of(q), *reference_pressure, p, 1e-13),
            },
        }
    }

    /// `f'(p) = 1 / ϱ(p)`.
    fn pressure_function_slope(&self, p: f64) -> f64 {
        match &self.closure {
            Closure::Incompressible { density } => 1.0 / density,
            Closure::Barotropic { density_of, .. } => 1.0 / density_of(p),
        }
    }

    pub fn density(&self, x: &Vec3, t: f64) -> f64 {
        match &self.closure {
            Closure::Incompressible { density } => *density,
            Closure::Barotropic { density_of, .. } => {
                density_of(self.pressure.as_ref().map_or(0.0, |p| p.value(x, t)))
            }
        }
    }

    /// `Ω = V − f(p)`.
    pub fn omega(&self, x: &Vec3, t: f64) -> f64 {
        let fp = self.pressure.as_ref().map_or(0.0, |p| self.pressure_function(p.value(x, t)));
        self.potential.value(x, t) - fp
    }

    /// `∇Ω = ∇V − ∇p / ϱ(p)`, exact when both gradients are registered.
    pub fn omega_gradient(&self, x: &Vec3, t: f64, h: f64) -> Vec3 {
        let gv = self.potential.gradient(x, t, h);
        match &self.pressure {
            None => gv,
            Some(p) => gv - p.gradient(x, t, h) * self.pressure_function_slope(p.value(x, t)),
        }
    }
}

/// Per-component residual norms with the per-node residual vectors.
#[derive(Clone, Debug)]
pub struct EomResidual {
    pub components: [ResidualNorm; 3],
    pub field: Field,
    pub mode: DerivativeMode,
    pub acceleration: Option<AccelerationSource>,
}

impl EomResidual {
    pub fn linf(&self) -> f64 {
        self.components.iter().map(|c| c.linf).fold(0.0, f64::max)
    }

    fn from_field(field: Field, mode: DerivativeMode, acceleration: Option<AccelerationSource>, rind: Option<usize>) -> Self {
        let components = [0, 1, 2].map(|c| ResidualNorm::of_field(&field.component(c), rind));
        EomResidual {
            components,
            field,
            mode,
            acceleration,
        }
    }
}

fn missing_pressure_check(fp: &ForcePotential, r: EomResidual) -> Result<EomResidual> {
    if fp.pressure.is_none() && r.linf() > 1e-9 {
        return Err(Error::MissingPressure(r.linf()));
    }
    Ok(r)
}

/// Eulerian momentum residual `∂u/∂t + (u·∇)u − ∇Ω` at a single point, exact derivatives where registered.
pub fn eulerian_residual_at(u: &VectorFunction, fp: &ForcePotential, x: &Vec3, t: f64, h: f64) -> Vec3 {
    u.acceleration(x, t, h) - fp.omega_gradient(x, t, h)
}

/// Eulerian momentum residual from sampled fields on a spatial grid (axes x, y, z).
/// Spatial derivatives of `u` and `Ω` use the stencil.
pub fn eulerian_eom_residual_fields(u: &Field, du_dt: &Field, fp: &ForcePotential, t: f64, s: &StencilSpec) -> Result<EomResidual> {
    u.expect_rank(Rank::Vector)?;
    du_dt.expect_rank(Rank::Vector)?;
    let grid = u.grid().clone();
    let grad_u = label_gradient(u, s)?;
    let omega = Field::scalar_from_fn(grid.clone(), |x| fp.omega(x, t));
    let grad_omega: Vec<Field> = (0..3)
        .map(|k| {
            if k < grid.ndim() {
                differentiate(&omega, k, s)
            } else {
                Ok(Field::zeros(grid.clone(), Rank::Scalar))
            }
        })
        .collect::<Result<_>>()?;
    let field = Field::try_vector_from_fn(grid, |n, _| {
        let go = Vec3::new(grad_omega[0].scalar(n), grad_omega[1].scalar(n), grad_omega[2].scalar(n));
        Ok(du_dt.vector(n) + grad_u.tensor(n) * u.vector(n) - go)
    })?;
    let r = EomResidual::from_field(
        field,
        DerivativeMode::FiniteDifference { order: s.order.value() },
        None,
        Some(DEFAULT_RIND),
    );
    missing_pressure_check(fp, r)
}

/// Eulerian momentum residual of a velocity field on the nodes of `grid`.
/// Exact when `u` carries its Jacobian and `fp` its gradients, else grid differences.
pub fn eulerian_eom_residual(u: &VectorFunction, fp: &ForcePotential, t: f64, grid: &LabelGrid, s: &StencilSpec) -> Result<EomResidual> {
    if u.has_jacobian() && fp.has_exact_gradient() {
        let field = Field::vector_from_fn(grid.clone(), |x| eulerian_residual_at(u, fp, x, t, DEFAULT_STEP));
        return missing_pressure_check(fp, EomResidual::from_field(field, DerivativeMode::Exact, None, None));
    }
    let uf = Field::vector_from_fn(grid.clone(), |x| u.value(x, t));
    let dt = 1e-4;
    let du = Field::vector_from_fn(grid.clone(), |x| u.time_derivative(x, t, dt));
    eulerian_eom_residual_fields(&uf, &du, fp, t, s)
}

/// Lagrangian momentum residual `Σ_k ẍ_k ∂x_k/∂a_j − ∂Ω/∂a_j` at every label node.
///
/// With exact map gradients and exact potential gradients, `∂Ω/∂a = Fᵀ ∇Ω`.
/// Otherwise `F` and `∂Ω/∂a` are both differenced over the label grid.
pub fn lagrangian_eom_residual(m: &FlowMap, fp: &ForcePotential, t: f64, s: &StencilSpec) -> Result<EomResidual> {
    let g = deformation_gradient(m, t, s)?;
    let (acc, src) = m.accelerations(t)?;
    let x = m.positions(t)?;
    let grid = m.labels().clone();
    let exact = g.mode == DerivativeMode::Exact && fp.has_exact_gradient();
    let field = if exact {
        Field::try_vector_from_fn(grid, |n, _| {
            let f = g.field.tensor(n);
            Ok(f.transpose() * (acc.vector(n) - fp.omega_gradient(&x.vector(n), t, DEFAULT_STEP)))
        })?
    } else {
        let omega = Field::try_scalar_from_fn(grid.clone(), |n, _| Ok(fp.omega(&x.vector(n), t)))?;
        let d_omega: Vec<Field> = (0..3)
            .map(|k| {
                if k < grid.ndim() {
                    differentiate(&omega, k, s)
                } else {
                    Ok(Field::zeros(grid.clone(), Rank::Scalar))
                }
            })
            .collect::<Result<_>>()?;
        Field::try_vector_from_fn(grid, |n, _| {
            let f: Mat3 = g.field.tensor(n);
            let mut r = f.transpose() * acc.vector(n);
            for (k, d) in d_omega.iter().enumerate() {
                r[k] -= d.scalar(n);
            }
            Ok(r)
        })?
    };
    let (mode, rind) = if exact {
        (DerivativeMode::Exact, None)
    } else {
        (DerivativeMode::FiniteDifference { order: s.order.value() }, Some(DEFAULT_RIND))
    };
    missing_pressure_check(fp, EomResidual::from_field(field, mode, Some(src), rind))
}

/// Serializable summary of an [`EomResidual`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EomSummary {
    pub linf: [f64; 3],
    pub l2: [f64; 3],
    pub mode: DerivativeMode,
}

impl From<&EomResidual> for EomSummary {
    fn from(r: &EomResidual) -> Self {
        EomSummary {
            linf: [0, 1, 2].map(|c| r.components[c].linf),
            l2: [0, 1, 2].map(|c| r.components[c].l2),
            mode: r.mode,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incompressible_omega_is_v_minus_p_over_rho() {
        let fp = ForcePotential::incompressible(
            ScalarFunction::new(|x, _| x.x * 2.0),
            ScalarFunction::new(|x, _| x.y * x.y),
            3.0,
        );
        let x = Vec3::new(0.3, 1.7, -0.2);
        assert_eq!(fp.omega(&x, 0.0), 0.6 - 1.7 * 1.7 / 3.0);
    }

    #[test]
    fn isothermal_pressure_function_by_quadrature() {
        let c2 = 2.0;
        let fp = ForcePotential::barotropic(
            ScalarFunction::constant(0.0),
            ScalarFunction::constant(1.0),
            move |p| p / c2,
            1.0,
        );
        for p in [0.5f64, 1.0, 3.0, 10.0] {
            let exact = c2 * p.ln();
            assert!((fp.pressure_function(p) - exact).abs() < 1e-11, "p = {p}");
        }
    }

    #[test]
    fn rest_has_zero_residual() {
        let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
        let r = eulerian_eom_residual(&VectorFunction::zero(), &ForcePotential::rest(), 0.0, &g, &StencilSpec::default()).unwrap();
        assert_eq!(r.linf(), 0.0);
    }

    #[test]
    fn missing_pressure_is_reported() {
        let w = 1.0;
        let u = VectorFunction::new(move |x, _| Vec3::new(-w * x.y, w * x.x, 0.0))
            .with_jacobian(move |_, _| Mat3::new(0.0, -w, 0.0, w, 0.0, 0.0, 0.0, 0.0, 0.0))
            .steady();
        let fp = ForcePotential::without_pressure(ScalarFunction::constant(0.0), 1.0);
        let g = LabelGrid::cube(-1.0, 1.0, 8, 2).unwrap();
        assert!(matches!(
            eulerian_eom_residual(&u, &fp, 0.0, &g, &StencilSpec::default()),
            Err(Error::MissingPressure(_))
        ));
    }
}
