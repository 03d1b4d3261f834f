//! Circulation around a material loop against the vorticity flux through a disk it bounds,
//! and the loop's circulation over time.
//!
//! ```text
//! cargo run --release --example circulation
//! ```

use lagrangian_lab::circulation::{circulation, kelvin_drift, stokes_residual, MaterialLoop, MaterialSurface};
use lagrangian_lab::field::{QuadratureRule, StencilSpec};
use lagrangian_lab::flows::{catalog_flow, Params};
use lagrangian_lab::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let wave = catalog_flow("gerstner", &Params::new(), None)?;
    let s = StencilSpec::second_order();
    let q = QuadratureRule::trapezoid();
    let center = Vec3::new(std::f64::consts::PI, -1.75, 0.0);
    let (radius, normal) = (0.5, Vec3::z());

    for n in [32, 64, 128] {
        let lp = MaterialLoop::circle(center, radius, normal, 4 * n)?;
        let disk = MaterialSurface::disk(center, radius, normal, n, 4 * n)?;
        let r = stokes_residual(&wave.map, &lp, &disk, 0.8, &s, &q)?;
        println!("{n:>4} radial cells: circulation {:+.6}  flux {:+.6}  gap {:.2e}", r.circulation, r.flux, r.residual);
    }

    let lp = MaterialLoop::circle(center, radius, normal, 256)?;
    let times: Vec<f64> = (0..9).map(|k| 0.25 * k as f64).collect();
    let k = kelvin_drift(&wave.map, &lp, None, &times, &s, &q)?;
    println!("circulation drift over t in [0, 2]: {:.2e}", k.circulation_drift);

    let c = circulation(&wave.map, &lp, 2.0, &q)?;
    println!("position form {:+.10}, label form {:+.10}", c.position_form, c.label_form);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
