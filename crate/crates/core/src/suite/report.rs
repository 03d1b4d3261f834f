use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::checks::CheckId;
use super::config::SCHEMA_VERSION;
use crate::{Error, Result};

/// Errors below this are rounding noise; no order is fitted to them.
pub const ORDER_FLOOR: f64 = 1e-12;

/// A fitted convergence order, or the statement that the errors sit at the rounding floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Order {
    Value(f64),
    Floor,
}

impl Order {
    pub fn value(self) -> Option<f64> {
        match self {
            Order::Value(v) => Some(v),
            Order::Floor => None,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Value(v) => write!(f, "{v:.3}"),
            Order::Floor => f.write_str("n/a (floor)"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Value(v) => s.serialize_f64(*v),
            Order::Floor => s.serialize_str("n/a (floor)"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Order::Value(v)),
            Raw::Text(t) if t == "n/a (floor)" => Ok(Order::Floor),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad order `{t}`"))),
        }
    }
}

/// Least-squares slope of `log error` against `log h`. Returns [`Order::Floor`] when every
/// error is below [`ORDER_FLOOR`]; `None` with fewer than two usable points.
pub fn fit_order(points: &[(f64, f64)]) -> Option<Order> {
    if points.len() < 2 {
        return None;
    }
    if points.iter().all(|(_, e)| *e < ORDER_FLOOR) {
        return Some(Order::Floor);
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| Order::Value(sxy / sxx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub flow: String,
    pub check: CheckId,
    pub anchor: String,
    pub resolution: usize,
    pub time: Option<f64>,
    pub linf: Option<f64>,
    pub l2: Option<f64>,
    pub max_location: Option<[f64; 3]>,
    /// Present exactly when the (flow, check) pair ran at two or more resolutions.
    pub measured_order: Option<Order>,
    pub tolerance: f64,
    pub min_order: Option<f64>,
    pub error: Option<String>,
    pub verdict: Verdict,
}

impl ReportRow {
    /// The verdict implied by the row's own data.
    pub fn derived_verdict(&self) -> Verdict {
        let value_ok = self.error.is_none() && self.linf.is_some_and(|e| e <= self.tolerance);
        let order_ok = match (self.min_order, self.measured_order) {
            (None, _) | (Some(_), Some(Order::Floor)) => true,
            (Some(min), Some(Order::Value(o))) => o >= min,
            (Some(_), None) => false,
        };
        if value_ok && order_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn key(&self) -> String {
        format!("{}/{}/{}", self.flow, self.check, self.resolution)
    }
}

/// Run conditions that do not affect the numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub precision: String,
    pub threads: usize,
    /// Seconds since the Unix epoch when the report was assembled.
    pub timestamp: u64,
}

impl Environment {
    pub fn current(threads: usize) -> Self {
        Environment {
            version: env!("CARGO_PKG_VERSION").to_string(),
            precision: "f64".into(),
            threads,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// Everything the determinism hash covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBody {
    pub schema: u32,
    pub suite: String,
    pub version: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(flatten)]
    pub body: ReportBody,
    /// SHA-256 of the body's JSON.
    pub hash: String,
    pub environment: Environment,
}

impl VerificationReport {
    pub fn new(suite: &str, seed: u64, rows: Vec<ReportRow>, env: Environment) -> Result<Self> {
        let verdict = if rows.iter().all(|r| r.verdict == Verdict::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let body = ReportBody {
            schema: SCHEMA_VERSION,
            suite: suite.to_string(),
            version: env.version.clone(),
            seed,
            rows,
            verdict,
        };
        let hash = body_hash(&body)?;
        Ok(VerificationReport {
            body,
            hash,
            environment: env,
        })
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.body.rows
    }

    pub fn passed(&self) -> bool {
        self.body.verdict == Verdict::Pass
    }

    pub fn failing(&self) -> impl Iterator<Item = &ReportRow> {
        self.body.rows.iter().filter(|r| r.verdict == Verdict::Fail)
    }

    /// Recompute every verdict and the hash from the stored data.
    pub fn verify(&self) -> Result<()> {
        for r in &self.body.rows {
            if r.derived_verdict() != r.verdict {
                return Err(Error::Format(format!("row {} has an inconsistent verdict", r.key())));
            }
        }
        if body_hash(&self.body)? != self.hash {
            return Err(Error::Format("report hash does not match its rows".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record([
            "flow", "check", "anchor", "resolution", "time", "linf", "l2", "max_x", "max_y", "max_z", "measured_order",
            "tolerance", "verdict", "error",
        ])
        .map_err(csv_error)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        for r in &self.body.rows {
            let loc = r.max_location.map_or([None; 3], |l| l.map(Some));
            w.write_record([
                r.flow.clone(),
                r.check.to_string(),
                r.anchor.clone(),
                r.resolution.to_string(),
                opt(r.time),
                opt(r.linf),
                opt(r.l2),
                opt(loc[0]),
                opt(loc[1]),
                opt(loc[2]),
                r.measured_order.map_or(String::new(), |o| o.to_string()),
                format!("{:e}", r.tolerance),
                if r.verdict == Verdict::Pass { "pass" } else { "fail" }.into(),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

fn body_hash(body: &ReportBody) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(body)?)))
}

/// One field that differs between two reports.
#[derive(Clone, Debug, PartialEq)]
pub struct RowDifference {
    pub key: String,
    pub field: &'static str,
    pub left: String,
    pub right: String,
}

impl fmt::Display for RowDifference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {} -> {}", self.key, self.field, self.left, self.right)
    }
}

/// Row-by-row comparison keyed by (flow, check, resolution).
pub fn diff_reports(a: &VerificationReport, b: &VerificationReport) -> Vec<RowDifference> {
    let mut out = Vec::new();
    let show = |v: &dyn fmt::Debug| format!("{v:?}");
    for ra in a.rows() {
        match b.rows().iter().find(|rb| rb.key() == ra.key()) {
            None => out.push(RowDifference {
                key: ra.key(),
                field: "row",
                left: "present".into(),
                right: "missing".into(),
            }),
            Some(rb) => {
                let fields: [(&'static str, String, String); 6] = [
                    ("linf", show(&ra.linf), show(&rb.linf)),
                    ("l2", show(&ra.l2), show(&rb.l2)),
                    ("time", show(&ra.time), show(&rb.time)),
                    ("measured_order", show(&ra.measured_order), show(&rb.measured_order)),
                    ("tolerance", show(&ra.tolerance), show(&rb.tolerance)),
                    ("verdict", show(&ra.verdict), show(&rb.verdict)),
                ];
                for (field, left, right) in fields {
                    if left != right {
                        out.push(RowDifference {
                            key: ra.key(),
                            field,
                            left,
                            right,
                        });
                    }
                }
            }
        }
    }
    for rb in b.rows() {
        if !a.rows().iter().any(|ra| ra.key() == rb.key()) {
            out.push(RowDifference {
                key: rb.key(),
                field: "row",
                left: "missing".into(),
                right: "present".into(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(linf: f64, tol: f64) -> ReportRow {
        let mut r = ReportRow {
            flow: "f".into(),
            check: CheckId::InvariantDrift,
            anchor: CheckId::InvariantDrift.anchor().into(),
            resolution: 8,
            time: Some(0.5),
            linf: Some(linf),
            l2: Some(linf),
            max_location: None,
            measured_order: None,
            tolerance: tol,
            min_order: None,
            error: None,
            verdict: Verdict::Fail,
        };
        r.verdict = r.derived_verdict();
        r
    }

    #[test]
    fn order_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|h| (*h, 3.0 * h * h)).collect();
        let o = fit_order(&pts).unwrap().value().unwrap();
        assert!((o - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&[(0.1, 1e-15), (0.05, 3e-16)]), Some(Order::Floor));
        assert_eq!(fit_order(&[(0.1, 1.0)]), None);
    }

    #[test]
    fn order_serializes_floor_as_text() {
        assert_eq!(serde_json::to_string(&Order::Floor).unwrap(), "\"n/a (floor)\"");
        let back: Order = serde_json::from_str("1.5").unwrap();
        assert_eq!(back, Order::Value(1.5));
    }

    #[test]
    fn hash_ignores_environment() {
        let a = VerificationReport::new("s", 1, vec![row(1e-3, 1e-2)], Environment::current(1)).unwrap();
        let mut env = Environment::current(8);
        env.timestamp += 100;
        let b = VerificationReport::new("s", 1, vec![row(1e-3, 1e-2)], env).unwrap();
        assert_eq!(a.hash, b.hash);
        assert!(a.passed());
        a.verify().unwrap();
    }

    #[test]
    fn zero_tolerance_fails_and_is_listed() {
        let r = VerificationReport::new("s", 0, vec![row(1e-3, 1e-2), row(1e-3, 0.0)], Environment::current(1)).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failing().count(), 1);
    }

    #[test]
    fn tampered_verdict_is_detected() {
        let mut r = VerificationReport::new("s", 0, vec![row(1.0, 1e-2)], Environment::current(1)).unwrap();
        r.body.rows[0].verdict = Verdict::Pass;
        assert!(r.verify().is_err());
    }

    #[test]
    fn json_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = VerificationReport::new("s", 3, vec![row(1e-3, 1e-2)], Environment::current(2)).unwrap();
        let p = dir.path().join("r.json");
        r.write_json(&p).unwrap();
        let back = VerificationReport::read_json(&p).unwrap();
        assert_eq!(back, r);
        assert!(diff_reports(&r, &back).is_empty());
        r.write_csv(&dir.path().join("r.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
    }
}
