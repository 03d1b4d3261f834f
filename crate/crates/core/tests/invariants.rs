use std::f64::consts::TAU;

use lagrangian_lab::biot_savart::{biot_savart_geometry, element_velocity};
use lagrangian_lab::cauchy::invariant_drift;
use lagrangian_lab::field::StencilSpec;
use lagrangian_lab::flowmap::{cofactor_identity_residual, density_residual, DensityMode};
use lagrangian_lab::flows::{catalog_flow, Params};
use lagrangian_lab::suite::{fit_order, Order};
use lagrangian_lab::Vec3;
use proptest::prelude::*;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn element_velocity_is_normal_to_axis_and_offset(x in vec3(2.0), omega in vec3(3.0), target in vec3(2.0)) {
        prop_assume!((target - x).norm() > 1e-2 && omega.norm() > 1e-3);
        prop_assert!(biot_savart_geometry(&x, &omega, 0.05, &target).worst() < 1e-12);
    }

    #[test]
    fn element_velocity_is_linear_in_vorticity(x in vec3(1.0), a in vec3(1.0), b in vec3(1.0), target in vec3(1.0)) {
        prop_assume!((target - x).norm() > 1e-2);
        let sum = element_velocity(&x, &(a + b), 1.0, &target);
        let parts = element_velocity(&x, &a, 1.0, &target) + element_velocity(&x, &b, 1.0, &target);
        prop_assert!((sum - parts).norm() <= 1e-12 * (1.0 + sum.norm()));
    }

    #[test]
    fn power_laws_fit_their_exponent(p in 0.5f64..5.0, c in 1e-6f64..1e2) {
        let points: Vec<(f64, f64)> = [8.0, 16.0, 32.0].iter().map(|n: &f64| (1.0 / n, c * n.powf(-p))).collect();
        match fit_order(&points) {
            Some(Order::Value(q)) => prop_assert!((q - p).abs() < 1e-9, "{q} vs {p}"),
            other => prop_assert!(c * 32f64.powf(-p) < 1e-12, "{other:?}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rigid_rotation_keeps_its_invariants(omega in 0.2f64..3.0, axis in 0usize..3) {
        let e = catalog_flow("rigid_rotation", &params(&[("omega", omega), ("axis", axis as f64)]), None).unwrap();
        let times: Vec<f64> = (0..5).map(|k| TAU / omega * k as f64 / 4.0).collect();
        prop_assert!(invariant_drift(&e.map, &times, &StencilSpec::fourth_order()).unwrap().max_drift() < 1e-10);
    }

    #[test]
    fn gerstner_waves_keep_volume(k in 0.5f64..2.0, t in 0.0f64..5.0) {
        let e = catalog_flow("gerstner", &params(&[("k", k), ("cells", 12.0)]), None).unwrap();
        let s = StencilSpec::fourth_order();
        prop_assert!(density_residual(&e.map, t, DensityMode::Lagrangian, &s).unwrap().norm.linf < 1e-12);
        prop_assert!(cofactor_identity_residual(&e.map, t, &s).unwrap().norm.linf < 1e-10);
    }
}
