//! Kinetic energy of material volumes and its balance against the boundary work,
//! plus the boundary form of a harmonic potential's energy.
//!
//! ```text
//! cargo run --release --example energy
//! ```

use lagrangian_lab::energy::{boundary_energy_identity, energy_flux_residual, MaterialVolume};
use lagrangian_lab::field::{QuadratureRule, StencilSpec};
use lagrangian_lab::flows::{catalog_flow, Params};
use lagrangian_lab::functions::ScalarFunction;
use lagrangian_lab::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let q = QuadratureRule::simpson();
    let wave = catalog_flow("gerstner", &Params::from([("cells".to_string(), 32.0)]), None)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let block = MaterialVolume::label_box(Vec3::new(0.0, -3.0, 0.0), Vec3::new(two_pi, -0.5, 1.0), 24)?;
    println!("wave block: mass {:.6}, living force at t=0 {:.6}", block.mass(&wave.map, &q)?, block.living_force(&wave.map, 0.0, &q)?);
    let ledger = energy_flux_residual(&wave.map, &wave.force, &block, &[0.3, 0.9, 1.5], 1e-3, &q)?;
    for r in &ledger.rows {
        println!("  t {:.1}: dK/dt {:+.3e}  boundary work {:+.3e}", r.time, r.rate, r.flux);
    }

    let s = StencilSpec::second_order();
    let lo = Vec3::new(0.0, 0.0, 0.0);
    let hi = Vec3::new(1.0, 1.0, 1.0);
    let saddle = ScalarFunction::new(|x, _| x.x * x.x - x.y * x.y);
    for cells in [8, 16, 32] {
        let id = boundary_energy_identity(&saddle, lo, hi, cells, &s, &q)?;
        println!("x² − y², {cells:>2} cells: volume {:.10} boundary {:.10}", id.volume, id.boundary);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
