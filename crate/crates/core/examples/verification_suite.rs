//! Run the shipped suite in memory and print its rows, then a single convergence study.
//!
//! ```text
//! cargo run --release --example verification_suite
//! ```

use lagrangian_lab::suite::{convergence_study, default_suite_path, run_suite, CheckId, FlowSpec, RunContext, SuiteConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SuiteConfig::load(&default_suite_path())?;
    cfg.output = Default::default();
    let report = run_suite(&cfg)?;
    for r in report.rows() {
        println!("{:<16} {:<16} {:>4} {:>10.3e} {:?}", r.flow, r.check.name(), r.resolution, r.linf.unwrap_or(f64::NAN), r.verdict);
    }
    println!("passed {} hash {}", report.passed(), report.hash);

    let flow = FlowSpec {
        name: "gerstner".into(),
        params: Default::default(),
    };
    let table = convergence_study(CheckId::StokesResidual, &flow, &[32, 64, 128], &RunContext::default())?;
    for (h, e) in &table.points {
        println!("h {h:.4}  error {e:.3e}");
    }
    println!("fitted order {:?}", table.order);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
