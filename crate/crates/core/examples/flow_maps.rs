//! Build catalog flows and check the label-space identities every map must satisfy.
//!
//! ```text
//! cargo run --release --example flow_maps
//! ```

use lagrangian_lab::field::StencilSpec;
use lagrangian_lab::flowmap::{cofactor_identity_residual, density_residual, DensityMode};
use lagrangian_lab::flows::{catalog_flow, Params, CATALOG};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = StencilSpec::fourth_order();
    println!("{:<20} {:>10} {:>12} {:>12}", "flow", "self-check", "density", "cofactor");
    for info in &CATALOG {
        let e = catalog_flow(info.name, &Params::new(), None)?;
        let t = 0.5 * e.map.time_scale();
        let rho = density_residual(&e.map, t, DensityMode::Lagrangian, &s)?;
        let cof = cofactor_identity_residual(&e.map, t, &s)?;
        println!(
            "{:<20} {:>10.2e} {:>12.2e} {:>12.2e}",
            e.name(),
            e.validation.residual,
            rho.norm.linf,
            cof.norm.linf
        );
    }

    // The same wave, but with every derivative taken by label differences.
    let mut p = Params::new();
    p.insert("cells".into(), 32.0);
    let wave = catalog_flow("gerstner", &p, None)?;
    let fd = wave.map.clone().finite_differences_only();
    let exact = density_residual(&wave.map, 1.0, DensityMode::Lagrangian, &StencilSpec::second_order())?;
    let diffed = density_residual(&fd, 1.0, DensityMode::Lagrangian, &StencilSpec::second_order())?;
    println!("gerstner density, exact {:.2e} vs differenced {:.2e}", exact.norm.linf, diffed.norm.linf);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
