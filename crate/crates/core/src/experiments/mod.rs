//! Named experiments, protocol scripts and the JSON result document shared
//! by the command line tool and the Python bindings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::Boundary;
use crate::protocols::{CorrectionPolicy, LogEntry};
use crate::state::Mode;

mod named;
mod runner;
pub mod script;

pub use named::run_experiment;
pub use runner::run_script;
pub use script::{ModeKind, Op, ProtocolScript, ScriptOp};

pub const EXPERIMENTS: [&str; 6] = [
    "prepare-gs",
    "toric-fig3",
    "reference-phase",
    "s3-interfere",
    "magnetic-fusion",
    "electric-fusion",
];

/// Couplings swept by `reference-phase` when none are given.
pub const DEFAULT_COUPLINGS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// Settings shared by every experiment. `None` means "use the
/// experiment's default".
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub group: Option<String>,
    pub lattice: Option<(usize, usize)>,
    pub boundary: Option<Boundary>,
    pub mode: ModeKind,
    pub seed: Option<u64>,
    pub prune_eps: f64,
    pub jobs: Option<usize>,
    /// Element names for `s3-interfere`.
    pub h: Vec<String>,
    pub policy: CorrectionPolicy,
    pub couplings: Vec<f64>,
    pub irrep: Option<String>,
    /// Conjugacy class representative for magnetic experiments.
    pub class: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            group: None,
            lattice: None,
            boundary: None,
            mode: ModeKind::Branch,
            seed: None,
            prune_eps: 1e-12,
            jobs: None,
            h: Vec::new(),
            policy: CorrectionPolicy::PaperCorrection,
            couplings: Vec::new(),
            irrep: None,
            class: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if self.mode == ModeKind::Sample && self.seed.is_none() {
            return Err(Error::Validation("sample mode needs --seed".into()));
        }
        if !(self.prune_eps >= 0.0 && self.prune_eps < 1e-3) {
            return Err(Error::Validation(format!(
                "prune epsilon {} outside [0, 1e-3)",
                self.prune_eps
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::Validation("--jobs must be positive".into()));
        }
        if let Some(u) = self.couplings.iter().find(|u| !u.is_finite() || **u < 0.0) {
            return Err(Error::Validation(format!(
                "coupling {u} must be finite and non-negative"
            )));
        }
        Ok(())
    }

    pub fn make_mode(&self) -> Mode {
        match (self.mode, self.seed) {
            (ModeKind::Sample, Some(seed)) => Mode::sample(seed),
            _ => Mode::branch(),
        }
    }

    fn engine(&self) -> EngineInfo {
        EngineInfo {
            name: "qdsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: self.mode,
            seed: self.seed,
            prune_eps: self.prune_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineInfo {
    pub name: String,
    pub version: String,
    pub mode: ModeKind,
    pub seed: Option<u64>,
    pub prune_eps: f64,
}

/// Everything a run produces. Serialized with sorted keys and floats
/// rounded to 12 significant digits so equal runs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub experiment: String,
    pub parameters: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<ProtocolScript>,
    pub log: Vec<LogEntry>,
    pub summary: BTreeMap<String, f64>,
    pub distributions: BTreeMap<String, BTreeMap<String, f64>>,
    pub stabilizers: BTreeMap<String, f64>,
    pub engine: EngineInfo,
}

impl ResultDocument {
    pub fn new(experiment: &str, opts: &RunOptions) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters: BTreeMap::new(),
            script: None,
            log: Vec::new(),
            summary: BTreeMap::new(),
            distributions: BTreeMap::new(),
            stabilizers: BTreeMap::new(),
            engine: opts.engine(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn record(&mut self, key: impl Into<String>, value: f64) {
        self.summary.insert(key.into(), value);
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("document is serializable");
        round_floats(&mut v);
        v
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("value is serializable") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("bad result document: {e}")))
    }

    /// `key,value` rows of the summary table.
    pub fn to_csv_summary(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in &self.summary {
            let v = serde_json::to_string(&round_sig(*v)).expect("finite floats serialize");
            w.write_record([k.as_str(), &v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn emit(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::CsvSummary => self.to_csv_summary(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    CsvSummary,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv-summary" => Ok(Self::CsvSummary),
            _ => Err(Error::Validation(format!("unknown format {s:?} (json or csv-summary)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Json => "json",
            Self::CsvSummary => "csv-summary",
        })
    }
}

/// Rounds to 12 significant digits; also folds `-0.0` into `0.0`.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            *v = serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-0.0), 0.0);
        assert_eq!(round_sig(2.0 / 3e5), 6.66666666667e-6);
        assert_eq!(round_sig(1e-30), 1e-30);
    }

    #[test]
    fn document_round_trip() {
        let mut doc = ResultDocument::new("x", &RunOptions::default());
        doc.record("p", 0.1 + 0.2);
        doc.log.push(LogEntry::new("op").site("v[0,0]").param("h", "c+"));
        let back = ResultDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back.summary["p"], 0.3);
        assert_eq!(back.log, doc.log);
        assert!(doc.to_csv_summary().contains("p,0.3\n"));
    }

    #[test]
    fn option_validation() {
        let mut o = RunOptions {
            mode: ModeKind::Sample,
            ..Default::default()
        };
        assert!(o.validate().is_err());
        o.seed = Some(3);
        assert!(o.validate().is_ok());
        o.couplings = vec![-1.0];
        assert!(o.validate().is_err());
    }
}
