use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::checks::CheckId;
use crate::field::{QuadratureKind, StencilSpec};
use crate::flows::{self, Params};
use crate::{Error, Result};

/// Version of the config and report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub id: CheckId,
    /// Largest accepted `L∞` error. Zero forces a failure on any non-exact check.
    pub tolerance: f64,
    /// Smallest accepted convergence order across the suite's grids.
    #[serde(default)]
    pub min_order: Option<f64>,
}

/// How flow-map derivatives are taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivatives {
    /// Closed-form derivatives where the flow provides them.
    #[default]
    Exact,
    /// Label-space finite differences everywhere.
    FiniteDifference,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Directory for two-column `h error` files, one per (flow, check).
    #[serde(default)]
    pub plot_dir: Option<PathBuf>,
}

fn default_stencil() -> StencilSpec {
    StencilSpec::second_order()
}

fn default_quadrature() -> QuadratureKind {
    QuadratureKind::Trapezoid
}

fn default_true() -> bool {
    true
}

/// A verification suite: every flow is run through every check at every grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema: u32,
    pub name: String,
    pub flows: Vec<FlowSpec>,
    pub checks: Vec<CheckSpec>,
    /// Resolutions; their meaning depends on the check (label cells, loop points, RK4 steps).
    pub grids: Vec<usize>,
    /// Evaluation times; when absent each check picks times from the flow.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default = "default_stencil")]
    pub stencil: StencilSpec,
    #[serde(default = "default_quadrature")]
    pub quadrature: QuadratureKind,
    #[serde(default)]
    pub derivatives: Derivatives,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    /// Leave the boundary rind out of residual norms where a check allows it.
    #[serde(default = "default_true")]
    pub rind: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: SuiteConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c = Self::from_json(&text)?;
        // Output paths in a config are relative to the config file.
        if let Some(dir) = path.parent() {
            for p in [&mut c.output.json, &mut c.output.csv, &mut c.output.plot_dir].into_iter().flatten() {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema));
        }
        for f in &self.flows {
            let info = flows::info(&f.name).map_err(|_| Error::Config(format!("unknown flow `{}`", f.name)))?;
            flows::resolve_params(info, &f.params).map_err(|e| Error::Config(format!("flow `{}`: {e}", f.name)))?;
        }
        for c in &self.checks {
            if !(c.tolerance >= 0.0) {
                return bad(format!("check `{}`: tolerance must be a non-negative number", c.id));
            }
            if let Some(o) = c.min_order {
                if !(o > 0.0) {
                    return bad(format!("check `{}`: min_order must be positive", c.id));
                }
                if self.grids.len() < 2 {
                    return bad(format!("check `{}` asks for an order but fewer than two grids are given", c.id));
                }
            }
        }
        if self.grids.is_empty() {
            return bad("at least one grid is required".into());
        }
        if self.grids.iter().any(|&g| g < 4) {
            return bad("grids must be at least 4".into());
        }
        let mut sorted = self.grids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.grids.len() {
            return bad("grids must be distinct".into());
        }
        if let Some(t) = &self.times {
            if t.is_empty() || t.iter().any(|v| !v.is_finite()) || t.windows(2).any(|w| w[1] <= w[0]) {
                return bad("times must be finite and strictly increasing".into());
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}
