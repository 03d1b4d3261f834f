use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dynamics::lagrangian_eom_residual;
use crate::field::{Axis, LabelGrid};
use crate::flowmap::AnalyticMotion;
use crate::flows::fixtures::radial_stretching;
use crate::flows::{catalog_flow, Params};
use crate::functions::ScalarFunction;

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

fn polar_points(n: usize) -> Vec<Vec3> {
    let mut r = rng();
    (0..n)
        .map(|_| Vec3::new(r.gen_range(0.05..3.0), r.gen_range(0.01..PI - 0.01), r.gen_range(-PI..PI)))
        .collect()
}

fn elliptical_points(c: &EllipticalChart, n: usize) -> Vec<Vec3> {
    let mut r = rng();
    let m = 1e-2;
    (0..n)
        .map(|_| {
            Vec3::new(
                r.gen_range(c.beta + m..c.alpha - m),
                r.gen_range(c.gamma + m..c.beta - m),
                r.gen_range(m..c.gamma - m),
            )
        })
        .collect()
}

/// Off-axis box where every polar and cylindrical coordinate is regular.
fn off_axis_grid(cells: usize) -> LabelGrid {
    LabelGrid::new(vec![
        Axis::closed(0.2, 1.0, cells),
        Axis::closed(0.1, 0.9, cells),
        Axis::closed(0.15, 0.95, cells),
    ])
    .unwrap()
}

#[test]
fn polar_metric_is_one_r2_r2sin2() {
    let pts = polar_points(200);
    let m = chart_metrics(&PolarChart::default(), &pts).unwrap();
    for (rho, mc) in pts.iter().zip(&m) {
        let (r, s) = (rho[0], rho[1].sin());
        let want = [1.0, r * r, r * r * s * s];
        for i in 0..3 {
            assert!((mc.diagonal[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i]));
            assert!(mc.cross[i].abs() <= 1e-12);
        }
    }
}

#[test]
fn cylindrical_metric_is_one_r2_one() {
    let rho = Vec3::new(1.7, 2.5, -0.3);
    let m = chart_metrics(&CylindricalChart::default(), &[rho]).unwrap()[0];
    assert!((m.diagonal[0] - 1.0).abs() < 1e-14);
    assert!((m.diagonal[1] - 1.7 * 1.7).abs() < 1e-13);
    assert!((m.diagonal[2] - 1.0).abs() < 1e-14);
}

#[test]
fn polar_origin_is_outside() {
    let c = PolarChart::default();
    assert!(matches!(c.coordinates(&Vec3::zeros()), Err(Error::OutsideChart(_))));
    assert!(matches!(chart_metrics(&c, &[Vec3::new(0.0, 1.0, 0.0)]), Err(Error::OutsideChart(_))));
    assert!(c.coordinates(&Vec3::new(1.0, 0.0, 0.0)).is_err());
}

#[test]
fn elliptical_metric_matches_closed_form_and_is_positive() {
    let c = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    let pts = elliptical_points(&c, 500);
    let m = chart_metrics(&c, &pts).unwrap();
    for (rho, mc) in pts.iter().zip(&m) {
        let closed = c.closed_form_metric(rho);
        for i in 0..3 {
            assert!(closed[i] > 0.0);
            assert!((mc.diagonal[i] - closed[i]).abs() <= 1e-9 * closed[i], "{rho:?} {i}");
        }
    }
    let o = orthogonality_residual(&c, &pts).unwrap();
    assert!(o.orthogonal);
    assert!(o.value() <= 1e-8, "{o:?}");
}

#[test]
fn polar_orthogonality_is_exact() {
    let o = orthogonality_residual(&PolarChart::default(), &polar_points(300)).unwrap();
    assert!(o.value() <= 1e-10, "{o:?}");
}

#[test]
fn skewed_chart_is_flagged() {
    let o = orthogonality_residual(&SkewedChart, &[Vec3::new(0.3, 0.1, 0.0)]).unwrap();
    assert!(!o.orthogonal);
    assert!((o.worst_cross[2].abs() - 1.0).abs() < 1e-14);
    let m = FlowMap::analytic("rest", off_axis_grid(4), AnalyticMotion::new(|a, _| *a, |_, _| Vec3::zeros()));
    let err = curvilinear_eom_residual(&m, &SkewedChart, &ForcePotential::rest(), 0.0, RateMode::ChainRule);
    assert!(matches!(err, Err(Error::NonOrthogonalChart(_))));
}

#[test]
fn round_trips_on_random_points() {
    let mut r = rng();
    let ell = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    let charts: [(&dyn Chart, Vec<Vec3>); 3] = [
        (&PolarChart::default(), polar_points(10_000)),
        (
            &CylindricalChart::default(),
            (0..10_000)
                .map(|_| Vec3::new(r.gen_range(0.05..3.0), r.gen_range(-PI..PI), r.gen_range(-2.0..2.0)))
                .collect(),
        ),
        (&ell, elliptical_points(&ell, 10_000)),
    ];
    for (c, pts) in charts {
        let mut worst: f64 = 0.0;
        for rho in &pts {
            let x = c.position(rho);
            let back = c.coordinates(&x).unwrap();
            worst = worst.max((c.position(&back) - x).norm() / x.norm().max(1.0));
            worst = worst.max((back - rho).norm());
        }
        assert!(worst <= 1e-10, "{}: {worst:e}", c.name());
    }
}

#[test]
fn elliptical_roots_are_ordered() {
    let c = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    let rho = c.coordinates(&Vec3::new(0.7, 0.9, 0.4)).unwrap();
    assert!(c.alpha > rho[0] && rho[0] > c.beta && c.beta > rho[1] && rho[1] > c.gamma && c.gamma > rho[2]);
    assert!(c.coordinates(&Vec3::new(3.5, 0.1, 0.1)).is_err());
    assert!(c.coordinates(&Vec3::new(-0.5, 0.1, 0.1)).is_err());
}

#[test]
fn analytic_partials_match_differences() {
    let ell = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    let samples: [(&dyn Chart, Vec3); 3] = [
        (&PolarChart::default(), Vec3::new(1.3, 0.9, 2.1)),
        (&CylindricalChart::default(), Vec3::new(0.8, -1.2, 0.4)),
        (&ell, Vec3::new(2.5, 1.5, 0.5)),
    ];
    for (c, rho) in samples {
        let exact = jacobian(c, &rho);
        let errs: Vec<f64> = [1e-3, 5e-4].iter().map(|&h| (fd_jacobian(c, &rho, h) - exact).norm()).collect();
        assert!(errs[0] < 1e-5, "{}", c.name());
        // Second order: halving h quarters the error.
        let ratio = errs[0] / errs[1];
        assert!((3.5..4.5).contains(&ratio), "{} ratio {ratio}", c.name());
        let h = hessian(c, &rho);
        for k in 0..3 {
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = 1e-5;
                let col = (jacobian(c, &(rho + e)) - jacobian(c, &(rho - e))) / 2e-5;
                for j in 0..3 {
                    assert!((h[k][(i, j)] - col[(k, j)]).abs() < 1e-7, "{} {k}{i}{j}", c.name());
                }
            }
        }
    }
}

#[test]
fn determinant_identity_holds() {
    let ell = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    assert!(determinant_identity_residual(&PolarChart::default(), &polar_points(500)).unwrap() <= 1e-9);
    assert!(determinant_identity_residual(&ell, &elliptical_points(&ell, 500)).unwrap() <= 1e-9);
    assert!(determinant_identity_residual(&SkewedChart, &[Vec3::new(0.2, 0.4, 0.6)]).unwrap() <= 1e-12);
}

#[test]
fn generic_polar_balance_matches_explicit_forms() {
    let c = PolarChart::default();
    let mut r = rng();
    for rho in polar_points(50) {
        let rate = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let accel = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let (metric, _) = diagonal_metric(&c, &rho).unwrap();
        let dn = metric_derivatives(&c, &rho);
        let momentum_rate = metric.component_mul(&accel) + rate.component_mul(&(dn.transpose() * rate));
        let generic = momentum_rate - 0.5 * dn * rate.component_mul(&rate);
        let explicit = polar_phi(&rho, &rate, &accel);
        assert!((generic - explicit).norm() <= 1e-10 * (1.0 + rho[0] * rho[0]));
    }
}

fn rotation(axis: f64, grid: LabelGrid) -> crate::flows::CatalogEntry {
    catalog_flow("rigid_rotation", &params(&[("omega", 1.3), ("axis", axis)]), Some(grid)).unwrap()
}

#[test]
fn rigid_rotation_balances_in_polar_coordinates() {
    for axis in [0.0, 2.0] {
        let e = rotation(axis, off_axis_grid(6));
        let r = curvilinear_eom_residual(&e.map, &PolarChart::default(), &e.force, 0.7, RateMode::ChainRule).unwrap();
        assert!(r.linf() <= 1e-10, "axis {axis}: {:e}", r.linf());
    }
}

#[test]
fn rest_balances_in_every_orthogonal_chart() {
    let grid = LabelGrid::new(vec![
        Axis::closed(0.8, 1.2, 4),
        Axis::closed(0.6, 0.9, 4),
        Axis::closed(0.3, 0.45, 4),
    ])
    .unwrap();
    let m = FlowMap::analytic("rest", grid, AnalyticMotion::new(|a, _| *a, |_, _| Vec3::zeros()));
    let ell = EllipticalChart::new(3.0, 2.0, 1.0).unwrap();
    let fp = ForcePotential::incompressible(ScalarFunction::constant(0.0), ScalarFunction::constant(2.0), 1.0);
    let charts: [&dyn Chart; 4] = [&CartesianChart, &PolarChart::default(), &CylindricalChart::default(), &ell];
    for c in charts {
        for rates in [RateMode::ChainRule, RateMode::TimeDifference { dt: 0.01 }] {
            let r = curvilinear_eom_residual(&m, c, &fp, 0.5, rates).unwrap();
            assert!(r.linf() <= 1e-12, "{}", c.name());
        }
        let l = curvilinear_lagrangian_eom_residual(
            &m,
            c,
            &fp,
            0.5,
            RateMode::ChainRule,
            InitialCoordinates::FromPositions,
            &StencilSpec::second_order(),
        )
        .unwrap();
        assert!(l.linf() <= 1e-12, "{}", c.name());
        let d = curvilinear_density_residual(&m, c, 0.5, InitialCoordinates::FromPositions, &StencilSpec::second_order())
            .unwrap();
        assert!(d.general.linf <= 1e-12);
    }
}

#[test]
fn point_vortex_balances_in_cylindrical_coordinates() {
    // r and θ̇ are constant along each orbit, so centred differences are exact and only
    // integration and rounding error remain at every step size.
    let e = catalog_flow("point_vortex", &params(&[("cells", 8.0)]), None).unwrap();
    let c = CylindricalChart::default();
    for rates in [RateMode::ChainRule, RateMode::TimeDifference { dt: 0.02 }, RateMode::TimeDifference { dt: 0.01 }] {
        let r = curvilinear_eom_residual(&e.map, &c, &e.force, 0.5, rates).unwrap();
        assert!(r.linf() <= 1e-8, "{rates:?}: {:e}", r.linf());
    }
}

#[test]
fn lagrangian_form_of_rigid_rotation_vanishes() {
    for axis in [0.0, 2.0] {
        let e = rotation(axis, off_axis_grid(6));
        let r = curvilinear_lagrangian_eom_residual(
            &e.map,
            &PolarChart::default(),
            &e.force,
            0.7,
            RateMode::ChainRule,
            InitialCoordinates::FromPositions,
            &StencilSpec::second_order(),
        )
        .unwrap();
        assert!(r.linf() <= 1e-10, "axis {axis}: {:e}", r.linf());
        assert_eq!(r.mode, DerivativeMode::Exact);
    }
}

#[test]
fn cartesian_chart_reproduces_label_space_residual() {
    let e = catalog_flow("gerstner", &params(&[("cells", 16.0)]), None).unwrap();
    let s = StencilSpec::second_order();
    let wrong = ForcePotential::incompressible(
        ScalarFunction::new(|x, _| 0.4 * x.x * x.y).with_gradient(|x, _| Vec3::new(0.4 * x.y, 0.4 * x.x, 0.0)),
        ScalarFunction::new(|x, _| 8.0 * x.y).with_gradient(|_, _| Vec3::new(0.0, 8.0, 0.0)),
        1.0,
    );
    for map in [e.map.clone(), e.map.clone().finite_differences_only()] {
        for fp in [&e.force, &wrong] {
            let a = lagrangian_eom_residual(&map, fp, 0.3, &s).unwrap();
            let b = curvilinear_lagrangian_eom_residual(
                &map,
                &CartesianChart,
                fp,
                0.3,
                RateMode::ChainRule,
                InitialCoordinates::Labels,
                &s,
            )
            .unwrap();
            let gap = (0..a.field.node_count())
                .map(|n| (a.field.vector(n) - b.field.vector(n)).norm())
                .fold(0.0, f64::max);
            assert!(gap <= 1e-12, "gap {gap:e}");
        }
    }
}

#[test]
fn density_relation_for_rotation_and_stretching() {
    let s = StencilSpec::second_order();
    let e = rotation(2.0, off_axis_grid(6));
    let d = curvilinear_density_residual(&e.map, &PolarChart::default(), 0.7, InitialCoordinates::FromPositions, &s)
        .unwrap();
    assert!(d.general.linf <= 1e-10);
    assert!(d.orthogonal.unwrap().linf <= 1e-10);
    assert!(d.reduction_gap.unwrap() <= 1e-10);
    assert!(d.polar_form_gap.unwrap() <= 1e-12);

    let m = radial_stretching(off_axis_grid(6));
    for c in [&PolarChart::default() as &dyn Chart, &CylindricalChart::default(), &CartesianChart] {
        let d = curvilinear_density_residual(&m, c, 0.8, InitialCoordinates::FromPositions, &s).unwrap();
        assert!(d.general.linf <= 1e-10, "{}: {:e}", c.name(), d.general.linf);
        assert!(d.orthogonal.unwrap().linf <= 1e-10);
    }
}

#[test]
fn density_relation_holds_in_a_skewed_chart() {
    let m = radial_stretching(off_axis_grid(5));
    let d = curvilinear_density_residual(&m, &SkewedChart, 0.5, InitialCoordinates::FromPositions, &StencilSpec::second_order())
        .unwrap();
    assert!(d.general.linf <= 1e-10);
    assert!(d.orthogonal.is_none());
}

#[test]
fn angular_momentum_about_z() {
    let w = 1.3;
    let e = rotation(2.0, off_axis_grid(4));
    let times = [0.0, 0.5, 1.7, 3.0];
    let h = svanberg_invariant(&e.map, &times).unwrap();
    assert!(h.max_drift() <= 1e-10);
    let grid = e.map.labels();
    for n in 0..grid.node_count() {
        let a = grid.label(n);
        assert!((h.reference[n] - w * (a.x * a.x + a.y * a.y)).abs() <= 1e-12);
    }

    let rest = FlowMap::analytic("rest", off_axis_grid(3), AnalyticMotion::new(|a, _| *a, |_, _| Vec3::zeros()));
    let h = svanberg_invariant(&rest, &times).unwrap();
    assert_eq!(h.deviation_from(0.0), 0.0);

    let pv = catalog_flow("point_vortex", &params(&[("cells", 8.0)]), None).unwrap();
    let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.25).collect();
    let h = svanberg_invariant(&pv.map, &times).unwrap();
    assert!(h.deviation_from(1.0) <= 1e-6, "{:e}", h.deviation_from(1.0));
    assert!(h.max_drift() <= 1e-6);
}

#[test]
fn custom_chart_uses_differenced_partials() {
    let polar = PolarChart::default();
    let custom = CustomChart::new("polar-copy", move |x| polar.coordinates(x).unwrap_or(Vec3::zeros()), move |r| {
        polar.position(r)
    })
    .with_domain(move |r| polar.contains(r))
    .orthogonal(true);
    let rho = Vec3::new(1.2, 0.8, 0.3);
    let a = chart_metrics(&custom, &[rho]).unwrap()[0];
    let b = chart_metrics(&polar, &[rho]).unwrap()[0];
    for i in 0..3 {
        assert!((a.diagonal[i] - b.diagonal[i]).abs() < 1e-9);
    }
    assert!(chart_by_name("elliptical", &[1.0, 2.0, 3.0]).is_err());
    assert_eq!(chart_by_name("polar", &[]).unwrap().name(), "polar");
}
