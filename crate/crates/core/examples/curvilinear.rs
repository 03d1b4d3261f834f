//! Equations of motion written in cylindrical and spherical coordinates, plus the
//! angular-momentum invariant of planar flows about the z axis.
//!
//! ```text
//! cargo run --release --example curvilinear
//! ```

use lagrangian_lab::curvilinear::{
    chart_metrics, curvilinear_eom_residual, orthogonality_residual, svanberg_invariant, CylindricalChart, PolarChart,
    RateMode,
};
use lagrangian_lab::flows::{catalog_flow, Params};
use lagrangian_lab::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let polar = PolarChart::default();
    // Chart coordinates (r, θ, φ).
    let pts = [Vec3::new(1.0, 0.5, 0.2), Vec3::new(2.0, 1.2, -1.0)];
    for (p, m) in pts.iter().zip(chart_metrics(&polar, &pts)?) {
        println!("spherical metric at {:?}: {:?}", p.as_slice(), m.diagonal);
    }
    println!("orthogonality defect: {:.1e}", orthogonality_residual(&polar, &pts)?.value());

    let vortex = catalog_flow("point_vortex", &Params::from([("cells".to_string(), 8.0)]), None)?;
    let cyl = CylindricalChart::default();
    for rates in [RateMode::ChainRule, RateMode::TimeDifference { dt: 0.02 }, RateMode::TimeDifference { dt: 0.01 }] {
        let r = curvilinear_eom_residual(&vortex.map, &cyl, &vortex.force, 0.5, rates)?;
        println!("point vortex, cylindrical, {rates:?}: {:.2e}", r.linf());
    }

    let times: Vec<f64> = (0..5).map(|k| 0.25 * k as f64).collect();
    let h = svanberg_invariant(&vortex.map, &times)?;
    println!("r² dθ/dt drift {:.1e}, offset from Γ/2π {:.1e}", h.max_drift(), h.deviation_from(1.0));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
