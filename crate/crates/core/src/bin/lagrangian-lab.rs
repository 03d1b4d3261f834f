use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lagrangian_lab::field::StencilSpec;
use lagrangian_lab::flows::{self, Params, CATALOG};
use lagrangian_lab::suite::{
    convergence_study, diff_reports, exit, exit_code, run_suite, write_outputs, CheckId, Derivatives, FlowSpec, RunContext,
    SuiteConfig, VerificationReport,
};
use lagrangian_lab::Error;

#[derive(Parser)]
#[command(name = "lagrangian-lab", version, about = "Verification suites for Lagrangian flow maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "LAGRANGIAN_LAB_THREADS", global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite config and write its report.
    Run {
        config: PathBuf,
        /// Replace the config's resolutions, e.g. `--grid 32,64`.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Restrict to these flows (added with default parameters if absent from the config).
        #[arg(long, value_delimiter = ',')]
        flow: Option<Vec<String>>,
        /// Directory for `<suite>.json`, `<suite>.csv` and `plots/`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Error against resolution for one check on one flow, with the fitted order.
    Converge {
        check: String,
        flow: String,
        #[arg(long, value_delimiter = ',', required = true)]
        grids: Vec<usize>,
        /// Flow parameter `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// Stencil order, 2 or 4.
        #[arg(long, default_value_t = 2)]
        stencil: u8,
        /// Use finite differences even where the flow has exact derivatives.
        #[arg(long)]
        finite_differences: bool,
        /// Two-column `h error` output file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// The flow catalog.
    Flows {
        #[command(subcommand)]
        action: FlowsAction,
    },
    /// Work with written reports.
    Report {
        #[command(subcommand)]
        action: ReportAction,
    },
}

#[derive(Subcommand)]
enum FlowsAction {
    List,
    Describe { name: String },
}

#[derive(Subcommand)]
enum ReportAction {
    /// Compare two reports row by row; exit 1 if they differ.
    Diff { a: PathBuf, b: PathBuf },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((k.to_string(), v))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e) as u8)
}

fn run(config: PathBuf, grid: Option<Vec<usize>>, flow: Option<Vec<String>>, out: Option<PathBuf>, common: Common) -> ExitCode {
    let mut cfg = match SuiteConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(g) = grid {
        cfg.grids = g;
    }
    if let Some(names) = flow {
        cfg.flows = names
            .into_iter()
            .map(|n| {
                cfg.flows.iter().find(|f| f.name == n).cloned().unwrap_or(FlowSpec {
                    name: n,
                    params: Params::new(),
                })
            })
            .collect();
    }
    if let Some(dir) = out {
        if let Err(e) = std::fs::create_dir_all(&dir) {
            return fail(&e.into());
        }
        cfg.output.json = Some(dir.join(format!("{}.json", cfg.name)));
        cfg.output.csv = Some(dir.join(format!("{}.csv", cfg.name)));
        cfg.output.plot_dir = Some(dir.join("plots"));
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate() {
        return fail(&e);
    }
    for p in [&cfg.output.json, &cfg.output.csv].into_iter().flatten() {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            if let Err(e) = std::fs::create_dir_all(dir) {
                return fail(&e.into());
            }
        }
    }
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Err(e) = write_outputs(&cfg, &report) {
        return fail(&e);
    }
    for r in report.rows() {
        let order = r.measured_order.map_or("-".to_string(), |o| o.to_string());
        let value = r.linf.map_or("error".to_string(), |v| format!("{v:.3e}"));
        println!("{:<5} {:<16} {:<20} {:>5} linf {:>10} order {:<12}", format!("{:?}", r.verdict).to_uppercase(), r.flow, r.check, r.resolution, value, order);
    }
    println!("hash {}", report.hash);
    if report.passed() {
        ExitCode::from(exit::PASS as u8)
    } else {
        for r in report.failing() {
            eprintln!(
                "failed: {} (tolerance {:e}){}",
                r.key(),
                r.tolerance,
                r.error.as_ref().map_or(String::new(), |e| format!(": {e}"))
            );
        }
        ExitCode::from(exit::CHECK_FAILED as u8)
    }
}

#[allow(clippy::too_many_arguments)]
fn converge(
    check: String,
    flow: String,
    grids: Vec<usize>,
    params: Vec<(String, f64)>,
    stencil: u8,
    finite_differences: bool,
    out: Option<PathBuf>,
    common: Common,
) -> Result<ExitCode, Error> {
    let check = CheckId::parse(&check)?;
    let spec = FlowSpec {
        name: flow,
        params: params.into_iter().collect(),
    };
    flows::resolve_params(flows::info(&spec.name).map_err(|e| Error::Config(e.to_string()))?, &spec.params)
        .map_err(|e| Error::Config(e.to_string()))?;
    let stencil = match stencil {
        2 => StencilSpec::second_order(),
        4 => StencilSpec::fourth_order(),
        o => return Err(Error::Config(format!("stencil order must be 2 or 4, got {o}"))),
    };
    let ctx = RunContext {
        stencil,
        derivatives: if finite_differences { Derivatives::FiniteDifference } else { Derivatives::Exact },
        seed: common.seed.unwrap_or(0),
        ..Default::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let table = pool.install(|| convergence_study(check, &spec, &grids, &ctx))?;
    println!("# {} on {} ({})", table.check, table.flow, table.check.resolution_meaning());
    println!("# h error");
    for (h, e) in &table.points {
        println!("{h:e} {e:e}");
    }
    println!("order {}", table.order.map_or("-".to_string(), |o| o.to_string()));
    if let Some(p) = out {
        table.write(&p)?;
    }
    Ok(ExitCode::from(exit::PASS as u8))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            grid,
            flow,
            out,
            common,
        } => run(config, grid, flow, out, common),
        Command::Converge {
            check,
            flow,
            grids,
            params,
            stencil,
            finite_differences,
            out,
            common,
        } => converge(check, flow, grids, params, stencil, finite_differences, out, common).unwrap_or_else(|e| fail(&e)),
        Command::Flows { action } => match action {
            FlowsAction::List => {
                for f in &CATALOG {
                    println!("{:<20} {}", f.name, f.summary);
                }
                ExitCode::SUCCESS
            }
            FlowsAction::Describe { name } => match flows::info(&name) {
                Ok(info) => match serde_json::to_string_pretty(info) {
                    Ok(s) => {
                        println!("{s}");
                        ExitCode::SUCCESS
                    }
                    Err(e) => fail(&e.into()),
                },
                Err(_) => fail(&Error::Config(format!("unknown flow `{name}`"))),
            },
        },
        Command::Report { action } => match action {
            ReportAction::Diff { a, b } => {
                let (ra, rb) = match (VerificationReport::read_json(&a), VerificationReport::read_json(&b)) {
                    (Ok(x), Ok(y)) => (x, y),
                    (Err(e), _) | (_, Err(e)) => return fail(&e),
                };
                let diffs = diff_reports(&ra, &rb);
                for d in &diffs {
                    println!("{d}");
                }
                if ra.hash == rb.hash && diffs.is_empty() {
                    println!("identical (hash {})", ra.hash);
                    ExitCode::SUCCESS
                } else {
                    println!("hashes {} {}", ra.hash, rb.hash);
                    ExitCode::from(exit::CHECK_FAILED as u8)
                }
            }
        },
    }
}
