//! Kinematic fixtures that are not part of the flow catalog: a compressible dilatation
//! and a three-dimensional point source.

use std::f64::consts::PI;

use crate::dynamics::ForcePotential;
use crate::field::{Axis, LabelGrid};
use crate::flowmap::{AnalyticMotion, FlowMap};
use crate::functions::{ScalarFunction, VectorFunction};
use crate::{Mat3, Result, Vec3};

/// Uniform dilatation `x = a (1 + t)`; density falls as `(1 + t)^-3`.
pub fn radial_stretching(grid: LabelGrid) -> FlowMap {
    let motion = AnalyticMotion::affine(
        |t| [Mat3::identity() * (1.0 + t), Mat3::identity(), Mat3::zeros()],
        |_| [Vec3::zeros(); 3],
    );
    FlowMap::analytic("radial_stretching", grid, motion).with_density_ratio(|_, t| (1.0 + t).powi(-3))
}

/// Three-dimensional point source of volume flux `q` at the origin, with the fluid held in
/// the harmonic potential `V = |x|² / 2`.
#[derive(Clone, Debug)]
pub struct RadialSource {
    pub map: FlowMap,
    pub velocity: VectorFunction,
    pub force: ForcePotential,
    pub flux: f64,
}

/// Default labels for [`radial_source`]: a box clear of the origin.
pub fn radial_source_grid(cells: usize) -> Result<LabelGrid> {
    LabelGrid::new(vec![
        Axis::closed(1.0, 2.0, cells),
        Axis::closed(-0.5, 0.5, cells),
        Axis::closed(-0.5, 0.5, cells),
    ])
}

pub fn radial_source(q: f64, grid: LabelGrid) -> RadialSource {
    let k = q / (4.0 * PI);
    // r(t)³ = r0³ + 3 k t
    let radius = move |r0: f64, t: f64| (r0 * r0 * r0 + 3.0 * k * t).cbrt();
    let position = move |a: &Vec3, t: f64| {
        let r0 = a.norm();
        a * (radius(r0, t) / r0)
    };
    let velocity = move |a: &Vec3, t: f64| {
        let r0 = a.norm();
        let r = radius(r0, t);
        a * (k / (r * r * r0))
    };
    let acceleration = move |a: &Vec3, t: f64| {
        let r0 = a.norm();
        let r = radius(r0, t);
        a * (-2.0 * k * k / (r.powi(5) * r0))
    };
    let gradient = move |a: &Vec3, t: f64| {
        let r0 = a.norm();
        let r = radius(r0, t);
        let ds = (r0 / (r * r) - r / (r0 * r0)) / r0;
        Mat3::identity() * (r / r0) + a * a.transpose() * ds
    };
    let velocity_gradient = move |a: &Vec3, t: f64| {
        let r0 = a.norm();
        let r = radius(r0, t);
        let rdot = k / (r * r);
        let drdot = -2.0 * k / (r * r * r) * (r0 * r0 / (r * r));
        let d = (drdot / r0 - rdot / (r0 * r0)) / r0;
        Mat3::identity() * (rdot / r0) + a * a.transpose() * d
    };
    let motion = AnalyticMotion::new(position, velocity)
        .with_acceleration(acceleration)
        .with_gradient(gradient)
        .with_velocity_gradient(velocity_gradient);
    let map = FlowMap::analytic("radial_source", grid, motion);

    let field = VectorFunction::new(move |x, _| x * (k / x.norm().powi(3))).with_jacobian(move |x, _| {
        let r = x.norm();
        (Mat3::identity() - 3.0 * x * x.transpose() / (r * r)) * (k / r.powi(3))
    });
    let field = field.steady();
    let c = q * q / (32.0 * PI * PI);
    let potential = ScalarFunction::new(|x, _| 0.5 * x.norm_squared())
        .with_gradient(|x, _| *x)
        .with_time_derivative(|_, _| 0.0);
    let pressure = ScalarFunction::new(move |x, _| 0.5 * x.norm_squared() - c / x.norm_squared().powi(2))
        .with_gradient(move |x, _| x + x * (4.0 * c / x.norm().powi(6)))
        .with_time_derivative(|_, _| 0.0);
    RadialSource {
        map,
        velocity: field,
        force: ForcePotential::incompressible(potential, pressure, 1.0),
        flux: q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::lagrangian_eom_residual;
    use crate::field::StencilSpec;
    use crate::flowmap::{density_residual, DensityMode};

    #[test]
    fn source_map_derivatives_are_consistent() {
        let s = radial_source(0.7, radial_source_grid(6).unwrap());
        assert!(s.map.derivative_cross_check(0.8, 1e-5).unwrap() < 1e-8);
        assert!(s.map.initial_identity_error().unwrap() < 1e-14);
    }

    #[test]
    fn source_balances_and_preserves_volume() {
        let s = radial_source(0.7, radial_source_grid(6).unwrap());
        let r = lagrangian_eom_residual(&s.map, &s.force, 0.8, &StencilSpec::default()).unwrap();
        assert!(r.linf() < 1e-12, "{}", r.linf());
        let d = density_residual(&s.map, 0.8, DensityMode::Lagrangian, &StencilSpec::default()).unwrap();
        assert!(d.norm.linf < 1e-12);
    }

    #[test]
    fn stretching_conserves_mass() {
        let m = radial_stretching(LabelGrid::cube(-1.0, 1.0, 6, 3).unwrap());
        let d = density_residual(&m, 1.5, DensityMode::Lagrangian, &StencilSpec::default()).unwrap();
        assert!(d.norm.linf < 1e-12);
    }
}
