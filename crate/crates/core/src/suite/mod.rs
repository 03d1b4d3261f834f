//! Verification suites: run (flow × check × resolution) matrices, fit convergence orders
//! and write reports.

mod checks;
mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use checks::{default_times, run_check, CheckId, Measurement, RunContext};
pub use config::{CheckSpec, Derivatives, FlowSpec, OutputSpec, SuiteConfig, SCHEMA_VERSION};
pub use report::{diff_reports, fit_order, Environment, Order, ReportBody, ReportRow, RowDifference, Verdict, VerificationReport, ORDER_FLOOR};

use crate::field::QuadratureRule;
use crate::{Error, Result};

/// Process exit codes of the command-line harness.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
}

/// Exit code for a library error raised outside the checks themselves.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::Io(_) => exit::IO,
        _ => exit::CHECK_FAILED,
    }
}

impl SuiteConfig {
    pub fn context(&self) -> RunContext {
        RunContext {
            stencil: self.stencil,
            quadrature: QuadratureRule::from(self.quadrature),
            derivatives: self.derivatives,
            times: self.times.clone(),
            seed: self.seed,
            rind: self.rind,
        }
    }
}

fn thread_count(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Execute every (flow, check, grid) combination. Rows run in a work pool and are
/// assembled in declaration order, so the report does not depend on the thread count.
pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    config.validate()?;
    let threads = thread_count(config.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let ctx = config.context();
    let jobs: Vec<(&FlowSpec, &CheckSpec, usize)> = config
        .flows
        .iter()
        .flat_map(|f| config.checks.iter().flat_map(move |c| config.grids.iter().map(move |&g| (f, c, g))))
        .collect();
    let results: Vec<Result<Measurement>> = pool.install(|| jobs.par_iter().map(|(f, c, g)| run_check(c.id, f, *g, &ctx)).collect());

    let mut rows: Vec<ReportRow> = jobs
        .iter()
        .zip(results)
        .map(|((f, c, g), r)| {
            let (m, error) = match r {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ReportRow {
                flow: f.name.clone(),
                check: c.id,
                anchor: c.id.anchor().to_string(),
                resolution: *g,
                time: m.as_ref().and_then(|m| m.time),
                linf: m.as_ref().map(|m| m.linf),
                l2: m.as_ref().map(|m| m.l2),
                max_location: m.as_ref().and_then(|m| m.max_location),
                measured_order: None,
                tolerance: c.tolerance,
                min_order: c.min_order,
                error,
                verdict: Verdict::Fail,
            }
        })
        .collect();

    if config.grids.len() >= 2 {
        for chunk in rows.chunks_mut(config.grids.len()) {
            let points: Option<Vec<(f64, f64)>> = chunk.iter().map(|r| r.linf.map(|e| (1.0 / r.resolution as f64, e))).collect();
            let order = points.and_then(|p| fit_order(&p));
            for r in chunk.iter_mut() {
                r.measured_order = order;
            }
        }
    }
    for r in &mut rows {
        r.verdict = r.derived_verdict();
    }
    VerificationReport::new(&config.name, config.seed, rows, Environment::current(threads))
}

/// Write the report and any plot files the config asks for.
pub fn write_outputs(config: &SuiteConfig, report: &VerificationReport) -> Result<()> {
    if let Some(p) = &config.output.json {
        report.write_json(p)?;
    }
    if let Some(p) = &config.output.csv {
        report.write_csv(p)?;
    }
    if let Some(dir) = &config.output.plot_dir {
        std::fs::create_dir_all(dir)?;
        for f in &config.flows {
            for c in &config.checks {
                let points: Vec<(f64, f64)> = report
                    .rows()
                    .iter()
                    .filter(|r| r.flow == f.name && r.check == c.id)
                    .filter_map(|r| r.linf.map(|e| (1.0 / r.resolution as f64, e)))
                    .collect();
                write_plot_data(&dir.join(format!("{}_{}.dat", f.name, c.id)), &points)?;
            }
        }
    }
    Ok(())
}

/// Two-column `h error` text, one line per resolution.
pub fn write_plot_data(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# h error")?;
    for (h, e) in points {
        writeln!(f, "{h:e} {e:e}")?;
    }
    f.flush()?;
    Ok(())
}

/// Errors of one check on one flow over increasing resolutions, with the fitted order.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceTable {
    pub check: CheckId,
    pub flow: String,
    pub resolutions: Vec<usize>,
    /// `(h, error)` with `h = 1/N`.
    pub points: Vec<(f64, f64)>,
    pub order: Option<Order>,
}

impl ConvergenceTable {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_plot_data(path, &self.points)
    }
}

pub fn convergence_study(check: CheckId, flow: &FlowSpec, resolutions: &[usize], ctx: &RunContext) -> Result<ConvergenceTable> {
    if resolutions.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two resolutions".into()));
    }
    let errors: Vec<f64> = resolutions
        .par_iter()
        .map(|&n| run_check(check, flow, n, ctx).map(|m| m.linf))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = resolutions.iter().zip(&errors).map(|(&n, &e)| (1.0 / n as f64, e)).collect();
    Ok(ConvergenceTable {
        check,
        flow: flow.name.clone(),
        resolutions: resolutions.to_vec(),
        order: fit_order(&points),
        points,
    })
}

/// Path of the default suite shipped with the crate.
pub fn default_suite_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("suites/cauchy-core.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_passes_with_no_rows() {
        let c = SuiteConfig::from_json(r#"{"schema": 1, "name": "empty", "flows": [{"name": "gerstner"}], "checks": [], "grids": [8]}"#).unwrap();
        let r = run_suite(&c).unwrap();
        assert!(r.rows().is_empty() && r.passed());
    }

    #[test]
    fn floor_errors_report_no_order() {
        let c = SuiteConfig::from_json(
            r#"{"schema": 1, "name": "floor", "flows": [{"name": "rigid_rotation"}],
                "checks": [{"id": "jacobian_drift", "tolerance": 1e-10, "min_order": 1.8}], "grids": [8, 16]}"#,
        )
        .unwrap();
        let r = run_suite(&c).unwrap();
        assert!(r.passed(), "{:?}", r.rows());
        assert!(r.rows().iter().all(|row| row.measured_order == Some(Order::Floor)));
    }

    #[test]
    fn failing_check_is_recorded_not_raised() {
        let c = SuiteConfig::from_json(
            r#"{"schema": 1, "name": "bad", "flows": [{"name": "point_vortex", "params": {"steps": 256}}],
                "checks": [{"id": "rk4_closure", "tolerance": 1}], "grids": [8]}"#,
        )
        .unwrap();
        let r = run_suite(&c).unwrap();
        assert!(!r.passed());
        assert!(r.rows()[0].error.is_some());
    }
}
