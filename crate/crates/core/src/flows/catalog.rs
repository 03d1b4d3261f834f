use std::f64::consts::PI;

use super::{coarsen, integrate_trajectories, Built, FlowInfo, Params};
use crate::dynamics::ForcePotential;
use crate::field::{Axis, LabelGrid};
use crate::flowmap::{AnalyticMotion, Exclusion, FlowMap, LabelConvention};
use crate::functions::{ScalarFunction, VectorFunction};
use crate::{Error, Mat3, Result, Vec3};

const CHECK_CELLS: usize = 8;
/// Sampled maps are checked with differences in labels, which need a finer grid.
const CHECK_CELLS_SAMPLED: usize = 32;

pub(crate) fn build(info: &FlowInfo, p: &Params, grid: Option<LabelGrid>) -> Result<Built> {
    let cells = p["cells"].round() as usize;
    if cells < 4 {
        return Err(Error::InvalidParameter("cells must be at least 4".into()));
    }
    match info.name {
        "rigid_rotation" => affine(info, rigid_rotation(p["omega"], unit_axis(p["axis"])?), p["omega"], grid, cells),
        "uniform_translation" => affine(info, uniform_translation(p["speed"]), p["speed"], grid, cells),
        "simple_shear" => affine(info, simple_shear(p["gamma"]), p["gamma"], grid, cells),
        "stagnation" => affine(info, stagnation(p["k"]), p["k"], grid, cells),
        "gerstner" => gerstner(p, grid, cells),
        "point_vortex" => point_vortex(p, grid, cells),
        "taylor_green" => taylor_green(p, grid, cells),
        other => Err(Error::UnknownFlow(other.to_string())),
    }
}

fn time_scale(rate: f64) -> f64 {
    if rate != 0.0 {
        1.0 / rate.abs()
    } else {
        1.0
    }
}

/// `p/ϱ = s (x² + y²) / 2`.
fn planar_quadratic(s: f64) -> ScalarFunction {
    ScalarFunction::new(move |x, _| 0.5 * s * (x.x * x.x + x.y * x.y))
        .with_gradient(move |x, _| Vec3::new(s * x.x, s * x.y, 0.0))
        .with_hessian(move |_, _| Mat3::from_diagonal(&Vec3::new(s, s, 0.0)))
        .with_time_derivative(|_, _| 0.0)
}

fn zero() -> ScalarFunction {
    ScalarFunction::constant(0.0)
}

struct Affine {
    motion: AnalyticMotion,
    velocity: VectorFunction,
    force: ForcePotential,
}

fn affine(info: &FlowInfo, a: Affine, rate: f64, grid: Option<LabelGrid>, cells: usize) -> Result<Built> {
    let grid = match grid {
        Some(g) => g,
        None => LabelGrid::cube(-1.0, 1.0, cells, 3)?,
    };
    let ts = time_scale(rate);
    let map = FlowMap::analytic(info.name, grid.clone(), a.motion).with_time_scale(ts);
    let coarse = map.with_labels(coarsen(&grid, CHECK_CELLS)?)?;
    Ok(Built {
        map,
        force: a.force,
        velocity: Some(a.velocity),
        coarse,
        check_time: 0.37 * ts,
    })
}

fn unit_axis(k: f64) -> Result<Vec3> {
    match k.round() as i64 {
        0 => Ok(Vec3::x()),
        1 => Ok(Vec3::y()),
        2 => Ok(Vec3::z()),
        _ => Err(Error::InvalidParameter(format!("axis must be 0, 1 or 2, got {k}"))),
    }
}

/// `p/ϱ = s |x_⊥|² / 2`, distance measured from the line through the origin along `e`.
fn axial_quadratic(e: Vec3, s: f64) -> ScalarFunction {
    let proj = Mat3::identity() - e * e.transpose();
    ScalarFunction::new(move |x, _| 0.5 * s * (x.norm_squared() - e.dot(x).powi(2)))
        .with_gradient(move |x, _| s * (proj * x))
        .with_hessian(move |_, _| s * proj)
        .with_time_derivative(|_, _| 0.0)
}

fn rigid_rotation(w: f64, e: Vec3) -> Affine {
    let k = e.cross_matrix();
    let k2 = k * k;
    let rot = move |t: f64| {
        let (s, c) = (w * t).sin_cos();
        [
            Mat3::identity() + s * k + (1.0 - c) * k2,
            w * (c * k + s * k2),
            w * w * (-s * k + c * k2),
        ]
    };
    Affine {
        motion: AnalyticMotion::affine(rot, |_| [Vec3::zeros(); 3]),
        velocity: VectorFunction::new(move |x, _| w * e.cross(x))
            .with_jacobian(move |_, _| w * k)
            .steady(),
        force: ForcePotential::incompressible(zero(), axial_quadratic(e, w * w), 1.0),
    }
}

fn uniform_translation(u: f64) -> Affine {
    let e = Vec3::new(u, 0.0, 0.0);
    Affine {
        motion: AnalyticMotion::affine(|_| [Mat3::identity(), Mat3::zeros(), Mat3::zeros()], move |t| {
            [e * t, e, Vec3::zeros()]
        }),
        velocity: VectorFunction::new(move |_, _| e)
            .with_jacobian(|_, _| Mat3::zeros())
            .steady(),
        force: ForcePotential::incompressible(zero(), zero(), 1.0),
    }
}

fn simple_shear(g: f64) -> Affine {
    let m = move |t: f64| {
        [
            Mat3::new(1.0, g * t, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
            Mat3::new(0.0, g, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            Mat3::zeros(),
        ]
    };
    Affine {
        motion: AnalyticMotion::affine(m, |_| [Vec3::zeros(); 3]),
        velocity: VectorFunction::new(move |x, _| Vec3::new(g * x.y, 0.0, 0.0))
            .with_jacobian(move |_, _| Mat3::new(0.0, g, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
            .steady(),
        force: ForcePotential::incompressible(zero(), zero(), 1.0),
    }
}

fn stagnation(k: f64) -> Affine {
    let m = move |t: f64| {
        let (ep, em) = ((k * t).exp(), (-k * t).exp());
        [
            Mat3::from_diagonal(&Vec3::new(ep, em, 1.0)),
            Mat3::from_diagonal(&Vec3::new(k * ep, -k * em, 0.0)),
            Mat3::from_diagonal(&Vec3::new(k * k * ep, k * k * em, 0.0)),
        ]
    };
    Affine {
        motion: AnalyticMotion::affine(m, |_| [Vec3::zeros(); 3]),
        velocity: VectorFunction::new(move |x, _| Vec3::new(k * x.x, -k * x.y, 0.0))
            .with_jacobian(move |_, _| Mat3::from_diagonal(&Vec3::new(k, -k, 0.0)))
            .steady(),
        force: ForcePotential::incompressible(zero(), planar_quadratic(-k * k), 1.0),
    }
}

/// Trochoidal wave `x = a − (e^{kb}/k) sin k(a − ct)`, `y = b + (e^{kb}/k) cos k(a − ct)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Trochoid {
    pub k: f64,
    pub c: f64,
    pub g: f64,
}

impl Trochoid {
    fn phase(&self, a: &Vec3, t: f64) -> (f64, f64, f64) {
        let e = (self.k * a.y).exp();
        let (s, c) = (self.k * (a.x - self.c * t)).sin_cos();
        (e, s, c)
    }

    fn position(&self, a: &Vec3, t: f64) -> Vec3 {
        let (e, s, c) = self.phase(a, t);
        Vec3::new(a.x - e / self.k * s, a.y + e / self.k * c, a.z)
    }

    fn gradient(&self, a: &Vec3, t: f64) -> Mat3 {
        let (e, s, c) = self.phase(a, t);
        Mat3::new(1.0 - e * c, -e * s, 0.0, -e * s, 1.0 + e * c, 0.0, 0.0, 0.0, 1.0)
    }

    fn velocity(&self, a: &Vec3, t: f64) -> Vec3 {
        let (e, s, c) = self.phase(a, t);
        Vec3::new(self.c * e * c, self.c * e * s, 0.0)
    }

    fn velocity_gradient(&self, a: &Vec3, t: f64) -> Mat3 {
        let (e, s, c) = self.phase(a, t);
        let w = self.c * self.k * e;
        Mat3::new(-w * s, w * c, 0.0, w * c, w * s, 0.0, 0.0, 0.0, 0.0)
    }

    fn acceleration(&self, a: &Vec3, t: f64) -> Vec3 {
        let (e, s, c) = self.phase(a, t);
        Vec3::new(self.g * e * s, -self.g * e * c, 0.0)
    }

    /// Labels of the particle at `x`: fixed-point iteration (a contraction while `e^{kb} < 1`)
    /// followed by Newton polishing.
    pub fn labels_of(&self, x: &Vec3, t: f64) -> Vec3 {
        let mut a = Vec3::new(x.x, x.y, x.z);
        for _ in 0..200 {
            let (e, s, c) = self.phase(&a, t);
            let next = Vec3::new(x.x + e / self.k * s, x.y - e / self.k * c, x.z);
            let done = (next - a).norm() < 1e-6 * (1.0 + x.norm());
            a = next;
            if done {
                break;
            }
        }
        for _ in 0..4 {
            let r = self.position(&a, t) - x;
            let f = self.gradient(&a, t);
            let det = f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)];
            a.x -= (f[(1, 1)] * r.x - f[(0, 1)] * r.y) / det;
            a.y -= (-f[(1, 0)] * r.x + f[(0, 0)] * r.y) / det;
        }
        a
    }
}

fn gerstner(p: &Params, grid: Option<LabelGrid>, cells: usize) -> Result<Built> {
    let (k, g) = (p["k"], p["g"]);
    if !(k > 0.0) || !(g > 0.0) {
        return Err(Error::InvalidParameter("gerstner needs k > 0 and g > 0".into()));
    }
    let tr = Trochoid { k, c: (g / k).sqrt(), g };
    let grid = match grid {
        Some(g) => g,
        None => {
            if !(p["b_min"] < p["b_max"]) {
                return Err(Error::InvalidParameter("gerstner needs b_min < b_max".into()));
            }
            LabelGrid::new(vec![
                Axis::periodic(0.0, 2.0 * PI / k, cells),
                Axis::closed(p["b_min"], p["b_max"], cells),
            ])?
        }
    };
    let b_top = grid.axis(1)?.upper();
    if (2.0 * k * b_top).exp() >= 1.0 {
        return Err(Error::Degenerate(format!(
            "gerstner labels reach b = {b_top} where exp(2kb) >= 1"
        )));
    }
    let motion = AnalyticMotion::new(move |a, t| tr.position(a, t), move |a, t| tr.velocity(a, t))
        .with_acceleration(move |a, t| tr.acceleration(a, t))
        .with_gradient(move |a, t| tr.gradient(a, t))
        .with_velocity_gradient(move |a, t| tr.velocity_gradient(a, t));
    let ts = 1.0 / (k * tr.c);
    let map = FlowMap::analytic("gerstner", grid.clone(), motion)
        .with_time_scale(ts)
        .with_convention(LabelConvention::Generalized);

    let potential = ScalarFunction::new(move |x, _| -g * x.y)
        .with_gradient(move |_, _| Vec3::new(0.0, -g, 0.0))
        .with_hessian(|_, _| Mat3::zeros())
        .with_time_derivative(|_, _| 0.0);
    let pressure = ScalarFunction::new(move |x, t| {
        let a = tr.labels_of(x, t);
        -g * a.y + g * (2.0 * k * a.y).exp() / (2.0 * k)
    })
    .with_gradient(move |x, t| {
        let a = tr.labels_of(x, t);
        let (e, s, c) = tr.phase(&a, t);
        -g * Vec3::new(e * s, 1.0 - e * c, 0.0)
    });
    let velocity = VectorFunction::new(move |x, t| tr.velocity(&tr.labels_of(x, t), t)).with_jacobian(move |x, t| {
        let a = tr.labels_of(x, t);
        let f = tr.gradient(&a, t);
        tr.velocity_gradient(&a, t) * f.try_inverse().unwrap_or_else(Mat3::zeros)
    });
    let coarse = map.with_labels(coarsen(&grid, CHECK_CELLS)?)?;
    Ok(Built {
        map,
        force: ForcePotential::incompressible(potential, pressure, 1.0),
        velocity: Some(velocity),
        coarse,
        check_time: 0.37 * ts,
    })
}

fn sample_times(p: &Params) -> Result<(Vec<f64>, f64)> {
    let (duration, samples, steps) = (p["duration"], p["samples"].round() as usize, p["steps"].round() as usize);
    if !(duration > 0.0) || samples < 2 || steps == 0 || steps % (samples - 1) != 0 {
        return Err(Error::InvalidParameter(
            "need duration > 0, samples >= 2 and steps divisible by samples - 1".into(),
        ));
    }
    let times = (0..samples).map(|i| duration * i as f64 / (samples - 1) as f64).collect();
    Ok((times, duration / steps as f64))
}

fn sampled(
    name: &str,
    field: VectorFunction,
    force: ForcePotential,
    grid: LabelGrid,
    p: &Params,
    bounds: Option<(Vec3, Vec3)>,
    time_scale: f64,
) -> Result<Built> {
    let (times, dt) = sample_times(p)?;
    let map = integrate_trajectories(&field, grid.clone(), &times, dt, bounds)?
        .with_name(name)
        .with_time_scale(time_scale);
    let check_time = times[1];
    let coarse = integrate_trajectories(&field, coarsen(&grid, CHECK_CELLS_SAMPLED)?, &[check_time], dt, bounds)?
        .with_name(name)
        .with_time_scale(time_scale);
    Ok(Built {
        map,
        force,
        velocity: Some(field),
        coarse,
        check_time,
    })
}

/// Radius of the disk of labels excluded around a point vortex.
pub const VORTEX_CORE: f64 = 0.1;

pub(crate) fn point_vortex_field(gamma: f64) -> VectorFunction {
    let s = gamma / (2.0 * PI);
    VectorFunction::new(move |x, _| {
        let r2 = x.x * x.x + x.y * x.y;
        Vec3::new(-s * x.y / r2, s * x.x / r2, 0.0)
    })
    .with_jacobian(move |x, _| {
        let r2 = x.x * x.x + x.y * x.y;
        let r4 = r2 * r2;
        let (xx, yy, xy) = (x.x * x.x, x.y * x.y, x.x * x.y);
        Mat3::new(
            2.0 * s * xy / r4,
            s * (yy - xx) / r4,
            0.0,
            s * (yy - xx) / r4,
            -2.0 * s * xy / r4,
            0.0,
            0.0,
            0.0,
            0.0,
        )
    })
    .steady()
}

fn point_vortex(p: &Params, grid: Option<LabelGrid>, cells: usize) -> Result<Built> {
    let gamma = p["circulation"];
    if gamma == 0.0 {
        return Err(Error::InvalidParameter("point vortex circulation must be nonzero".into()));
    }
    let grid = match grid {
        Some(g) => g,
        None => LabelGrid::new(vec![
            Axis::closed(p["x_min"], p["x_max"], cells),
            Axis::closed(p["y_min"], p["y_max"], cells),
        ])?,
    };
    let exclusion = Exclusion {
        center: [0.0, 0.0],
        radius: VORTEX_CORE,
    };
    let mut rmax: f64 = 0.0;
    for a in grid.labels() {
        if exclusion.contains(&a) {
            return Err(Error::LabelExcluded([a.x, a.y, a.z]));
        }
        rmax = rmax.max(a.x.hypot(a.y));
    }
    let q = gamma * gamma / (8.0 * PI * PI);
    let pressure = ScalarFunction::new(move |x, _| -q / (x.x * x.x + x.y * x.y))
        .with_gradient(move |x, _| {
            let r2 = x.x * x.x + x.y * x.y;
            2.0 * q / (r2 * r2) * Vec3::new(x.x, x.y, 0.0)
        })
        .with_time_derivative(|_, _| 0.0);
    let force = ForcePotential::incompressible(zero(), pressure, 1.0);
    let reach = Vec3::new(rmax + 1.0, rmax + 1.0, 1.0);
    let mut built = sampled(
        "point_vortex",
        point_vortex_field(gamma),
        force,
        grid,
        p,
        Some((-reach, reach)),
        2.0 * PI / gamma.abs(),
    )?;
    built.map = built.map.with_exclusion(exclusion);
    built.coarse = built.coarse.with_exclusion(exclusion);
    Ok(built)
}

pub(crate) fn taylor_green_field() -> VectorFunction {
    VectorFunction::new(|x, _| Vec3::new(x.x.cos() * x.y.sin(), -x.x.sin() * x.y.cos(), 0.0))
        .with_jacobian(|x, _| {
            let (sx, cx) = x.x.sin_cos();
            let (sy, cy) = x.y.sin_cos();
            Mat3::new(-sx * sy, cx * cy, 0.0, -cx * cy, sx * sy, 0.0, 0.0, 0.0, 0.0)
        })
        .steady()
}

fn taylor_green(p: &Params, grid: Option<LabelGrid>, cells: usize) -> Result<Built> {
    let grid = match grid {
        Some(g) => g,
        None => LabelGrid::new(vec![
            Axis::periodic(0.0, 2.0 * PI, cells),
            Axis::periodic(0.0, 2.0 * PI, cells),
        ])?,
    };
    let pressure = ScalarFunction::new(|x, _| -((2.0 * x.x).cos() + (2.0 * x.y).cos()) / 4.0)
        .with_gradient(|x, _| Vec3::new((2.0 * x.x).sin() / 2.0, (2.0 * x.y).sin() / 2.0, 0.0))
        .with_time_derivative(|_, _| 0.0);
    let force = ForcePotential::incompressible(zero(), pressure, 1.0);
    sampled("taylor_green", taylor_green_field(), force, grid, p, None, 1.0)
}

#[cfg(test)]
mod tests {
    use super::super::catalog_flow;
    use super::*;
    use crate::dynamics::{eulerian_eom_residual, lagrangian_eom_residual};
    use crate::field::StencilSpec;
    use crate::flowmap::{density_residual, jacobian_det, deformation_gradient, DensityMode};

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn full_revolution_is_identity() {
        let w = 1.7;
        let e = catalog_flow("rigid_rotation", &params(&[("omega", w)]), None).unwrap();
        let t = 2.0 * PI / w;
        let x = e.map.positions(t).unwrap();
        let g = e.map.labels();
        let worst = (0..g.node_count()).map(|n| (x.vector(n) - g.label(n)).norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-9, "{worst}");
    }

    #[test]
    fn gerstner_jacobian_matches_depth_profile() {
        let e = catalog_flow("gerstner", &params(&[("k", 1.0)]), None).unwrap();
        for t in [0.0, 0.4, 2.3] {
            let j = jacobian_det(&deformation_gradient(&e.map, t, &StencilSpec::default()).unwrap()).unwrap();
            let g = e.map.labels();
            for n in 0..g.node_count() {
                let b = g.label(n).y;
                let expected = 1.0 - (2.0 * b).exp();
                assert!((j.scalar(n) - expected).abs() < 1e-13);
                assert!(expected > 0.0 && expected < 1.0);
            }
        }
    }

    #[test]
    fn gerstner_density_is_compared_against_its_own_start() {
        let e = catalog_flow("gerstner", &params(&[("k", 1.0)]), None).unwrap();
        assert!(e.map.initial_identity_error().unwrap() > 0.1);
        let r = density_residual(&e.map, 1.7, DensityMode::Lagrangian, &StencilSpec::default()).unwrap();
        assert!(r.norm.linf < 1e-13, "{}", r.norm.linf);
    }

    #[test]
    fn gerstner_reaching_the_surface_is_degenerate() {
        assert!(matches!(
            catalog_flow("gerstner", &params(&[("b_max", 0.0)]), None),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn gerstner_inversion_recovers_labels() {
        let tr = Trochoid { k: 2.0, c: (9.81f64 / 2.0).sqrt(), g: 9.81 };
        for (a, b) in [(0.3, -0.25), (1.4, -1.0), (2.9, -0.1)] {
            let lab = Vec3::new(a, b, 0.0);
            let back = tr.labels_of(&tr.position(&lab, 0.8), 0.8);
            assert!((back - lab).norm() < 1e-12, "{back:?}");
        }
    }

    #[test]
    fn gerstner_equations_of_motion_hold() {
        let e = catalog_flow("gerstner", &params(&[("k", 1.0)]), None).unwrap();
        let r = lagrangian_eom_residual(&e.map, &e.force, 0.9, &StencilSpec::default()).unwrap();
        assert!(r.linf() <= 1e-8, "{}", r.linf());
    }

    #[test]
    fn rotation_and_stagnation_balance_in_both_forms() {
        for name in ["rigid_rotation", "stagnation", "uniform_translation", "simple_shear"] {
            let e = catalog_flow(name, &Params::new(), None).unwrap();
            let r = lagrangian_eom_residual(&e.map, &e.force, 0.6, &StencilSpec::default()).unwrap();
            assert!(r.linf() <= 1e-10, "{name}: {}", r.linf());
            let g = LabelGrid::cube(-1.0, 1.0, 8, 3).unwrap();
            let u = e.velocity.as_ref().unwrap();
            let r = eulerian_eom_residual(u, &e.force, 0.6, &g, &StencilSpec::default()).unwrap();
            assert!(r.linf() <= 1e-12, "{name}: {}", r.linf());
        }
    }

    #[test]
    fn taylor_green_field_balances() {
        let e = catalog_flow("taylor_green", &params(&[("cells", 8.0), ("steps", 256.0)]), None).unwrap();
        let g = LabelGrid::cube(0.0, 2.0 * PI, 16, 2).unwrap();
        let r = eulerian_eom_residual(e.velocity.as_ref().unwrap(), &e.force, 0.0, &g, &StencilSpec::default()).unwrap();
        assert!(r.linf() <= 1e-12, "{}", r.linf());
    }

    #[test]
    fn point_vortex_particle_returns_after_one_period() {
        let gamma = 2.0 * PI;
        let r = 0.9;
        let period = 2.0 * PI * (2.0 * PI * r * r / gamma);
        let g = LabelGrid::new(vec![Axis::closed(r, r + 0.3, 4), Axis::closed(0.0, 0.3, 4)]).unwrap();
        let m = integrate_trajectories(&point_vortex_field(gamma), g.clone(), &[period], period / 2048.0, None).unwrap();
        let a = g.label(0);
        assert!((m.position(&a, period).unwrap() - a).norm() <= 1e-6);
    }

    #[test]
    fn point_vortex_rejects_core_labels() {
        let p = params(&[("x_min", -0.2), ("x_max", 0.2), ("cells", 8.0), ("steps", 64.0)]);
        assert!(matches!(catalog_flow("point_vortex", &p, None), Err(Error::LabelExcluded(_))));
    }

    #[test]
    fn sampled_entries_are_volume_preserving() {
        let p = params(&[("cells", 16.0), ("steps", 512.0)]);
        let e = catalog_flow("point_vortex", &p, None).unwrap();
        let r = density_residual(&e.map, 1.0, DensityMode::Lagrangian, &StencilSpec::fourth_order()).unwrap();
        assert!(r.norm.linf < 1e-4, "{}", r.norm.linf);
    }
}
