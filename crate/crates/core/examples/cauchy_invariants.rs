//! Cauchy's vorticity invariants of the Gerstner wave stay fixed at every label,
//! and the differenced version converges to them at second order.
//!
//! ```text
//! cargo run --release --example cauchy_invariants
//! ```

use lagrangian_lab::cauchy::{cauchy_invariants, invariant_drift};
use lagrangian_lab::field::StencilSpec;
use lagrangian_lab::flows::{catalog_flow, Params};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = StencilSpec::second_order();
    let times: Vec<f64> = (0..6).map(|k| 0.4 * k as f64).collect();
    let mut previous: Option<f64> = None;
    for cells in [16, 32, 64] {
        let p = Params::from([("cells".to_string(), cells as f64)]);
        let wave = catalog_flow("gerstner", &p, None)?;
        let exact = invariant_drift(&wave.map, &times, &s)?.max_drift();
        let fd = invariant_drift(&wave.map.clone().finite_differences_only(), &times, &s)?.max_drift();
        let ratio = previous.map_or(String::new(), |e| format!("  ratio {:.2}", e / fd));
        println!("{cells:>3} cells: exact drift {exact:.1e}, differenced drift {fd:.3e}{ratio}");
        previous = Some(fd);
    }

    let wave = catalog_flow("gerstner", &Params::new(), None)?;
    let w = cauchy_invariants(&wave.map, 1.3, &s)?;
    println!("largest invariant magnitude at t = 1.3: {:.4}", w.max_magnitude());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
