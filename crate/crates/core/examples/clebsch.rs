//! Velocity from a potential and two vortex-line labels, and the residuals that say
//! whether the labels ride with the flow.
//!
//! ```text
//! cargo run --release --example clebsch
//! ```

use lagrangian_lab::clebsch::{
    clebsch_advection_residual, clebsch_divergence_residual, clebsch_preset, clebsch_vorticity_residual, laplace_residual,
    vortex_potential, PRESETS,
};
use lagrangian_lab::field::{Axis, LabelGrid, StencilSpec};
use lagrangian_lab::functions::VectorFunction;
use lagrangian_lab::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = LabelGrid::cube(-1.0, 1.0, 12, 3)?;
    let s = StencilSpec::fourth_order();
    println!("{:<22} {:>10} {:>10}", "preset", "vorticity", "div");
    for name in PRESETS {
        let ct = clebsch_preset(name, 0.7)?;
        let w = clebsch_vorticity_residual(&ct, &grid, 0.3, &s);
        let d = clebsch_divergence_residual(&ct, &grid, 0.3, &s);
        println!("{name:<22} {:>10.1e} {:>10.1e}", w.linf(), d.linf());
    }

    // Vortex-line labels are material only under the right carrier flow.
    let spin = VectorFunction::new(|x, _| Vec3::new(-0.7 * x.y, 0.7 * x.x, 0.0));
    let stream = VectorFunction::new(|_, _| Vec3::new(0.7, 0.0, 0.0));
    for (name, carrier, label) in [("rotation_invariants", &spin, "rigid rotation"), ("translating", &stream, "uniform stream")] {
        let ct = clebsch_preset(name, 0.7)?;
        let (a, b) = clebsch_advection_residual(&ct, carrier, &grid, 0.3, &s);
        let (wa, wb) = clebsch_advection_residual(&ct, &ct.velocity(), &grid, 0.3, &s);
        println!("{name} under {label}: {:.1e} {:.1e}; under its own velocity: {:.1e} {:.1e}", a.linf(), b.linf(), wa.linf(), wb.linf());
    }

    // The vortex potential is harmonic off its axis. Stencils that straddle the cut
    // along negative x are skipped.
    for (side, lo, hi) in [("positive x", 0.5, 2.5), ("negative x", -2.5, -0.5)] {
        let block = LabelGrid::new(vec![Axis::closed(lo, hi, 16), Axis::closed(-1.0, 1.0, 16), Axis::closed(0.0, 1.0, 4)])?;
        let lap = laplace_residual(&vortex_potential(1.0), &block, 0.0, &s);
        println!("vortex potential Laplacian, {side}: {:.1e} with {} points skipped", lap.linf(), lap.excluded);
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
