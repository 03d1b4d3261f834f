//! Recover the velocity of a compact Gaussian swirl from its vorticity by direct summation.
//!
//! ```text
//! cargo run --release --example biot_savart
//! ```

use lagrangian_lab::biot_savart::{velocity_from_vorticity, GaussianSwirl};
use lagrangian_lab::Vec3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let swirl = GaussianSwirl::default();
    // Cell faces of every grid below, so no target sits on a source node.
    let targets = [
        Vec3::new(0.125, 0.0, 0.0),
        Vec3::new(0.0, 0.25, 0.0),
        Vec3::new(-0.125, 0.125, 0.125),
    ];
    for cells in [16, 32, 64] {
        let src = swirl.source(cells)?;
        let u = velocity_from_vorticity(&src, &targets, &Default::default())?;
        let err = targets
            .iter()
            .zip(&u)
            .map(|(x, v)| (v - swirl.velocity(x)).norm() / swirl.velocity(x).norm())
            .fold(0.0, f64::max);
        println!("{cells:>3}³ source: worst relative error {:.2}%", 100.0 * err);
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
