use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::spec::{ExperimentKind, ExperimentSpec};
use crate::error::{invalid, Result};

/// How the estimate must relate to the analytic value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Estimate at most the bound.
    Le,
    /// Estimate at least the bound.
    Ge,
    /// Estimate equal to the value.
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Relation {
    /// The interval is never ignored: `le` passes iff ci_low ≤ bound, `ge` iff
    /// ci_high ≥ bound, `eq` iff the interval contains the value.
    pub fn verdict(self, ci_low: f64, ci_high: f64, bound: f64) -> Verdict {
        let ok = match self {
            Relation::Le => ci_low <= bound,
            Relation::Ge => ci_high >= bound,
            Relation::Eq => ci_low <= bound && bound <= ci_high,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "==",
        }
    }
}

/// One CSV row. Column order is the field order below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub experiment: ExperimentKind,
    pub point: usize,
    pub n: Option<usize>,
    pub k: Option<usize>,
    #[serde(rename = "S")]
    pub s: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub param: String,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: f64,
    pub relation: Relation,
    pub verdict: Verdict,
}

/// Column names of the CSV output, in order.
pub const CSV_COLUMNS: [&str; 15] = [
    "experiment", "point", "n", "k", "S", "epsilon", "delta", "param", "trials", "estimate", "ci_low", "ci_high",
    "bound", "relation", "verdict",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub rows: Vec<Row>,
    /// Excluded from the files so repeated runs stay byte-identical.
    #[serde(skip)]
    pub duration: Duration,
}

impl ExperimentResult {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn violations(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail).collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            w.write_record(CSV_COLUMNS)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn to_json(&self) -> Result<String> {
        let summary = JsonSummary {
            experiment: self.spec.experiment,
            seed: self.spec.seed,
            spec: self.spec.clone(),
            all_pass: self.all_pass(),
            violations: self.violations().len(),
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows: self.rows.clone(),
        };
        Ok(serde_json::to_string_pretty(&summary)? + "\n")
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, returning both paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        std::fs::write(&csv_path, self.to_csv()?)?;
        std::fs::write(&json_path, self.to_json()?)?;
        Ok((csv_path, json_path))
    }

    /// Reads a JSON summary written by [`write`](Self::write).
    pub fn read_json(path: &Path) -> Result<Self> {
        let summary: JsonSummary = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(ExperimentResult { spec: summary.spec, rows: summary.rows, duration: Duration::ZERO })
    }

    /// Reads rows from a CSV written by [`write`](Self::write). The [`ExperimentSpec`] is
    /// not stored in the CSV, so only the rows are meaningful.
    pub fn read_csv_rows(path: &Path) -> Result<Vec<Row>> {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonSummary {
    experiment: ExperimentKind,
    seed: u64,
    spec: ExperimentSpec,
    all_pass: bool,
    violations: usize,
    columns: Vec<String>,
    rows: Vec<Row>,
}

/// Plain-text table of estimate against bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub text: String,
    pub all_pass: bool,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".into(), |x| x.to_string())
}

/// Renders `rows`; an empty set is an error.
pub fn summarize(rows: &[Row]) -> Result<Summary> {
    if rows.is_empty() {
        return invalid("no result rows to summarize");
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{:<16} {:>5} {:>3} {:>3} {:>3} {:>7} {:<22} {:>8} {:>10} {:>21} {:>2} {:>10}  verdict",
        "experiment", "point", "n", "k", "S", "epsilon", "param", "trials", "estimate", "99% interval", "", "bound"
    );
    let mut failures = 0;
    for r in rows {
        let flag = if r.verdict == Verdict::Pass {
            "pass"
        } else {
            failures += 1;
            "FAIL  <--"
        };
        let _ = writeln!(
            text,
            "{:<16} {:>5} {:>3} {:>3} {:>3} {:>7} {:<22} {:>8} {:>10.6} [{:>9.6}, {:>9.6}] {:>2} {:>10.6}  {flag}",
            r.experiment.name(),
            r.point,
            opt(r.n),
            opt(r.k),
            opt(r.s),
            opt(r.epsilon),
            r.param,
            r.trials,
            r.estimate,
            r.ci_low,
            r.ci_high,
            r.relation.symbol(),
            r.bound,
        );
    }
    let _ = writeln!(text, "{} rows, {} violations", rows.len(), failures);
    Ok(Summary { text, all_pass: failures == 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(verdict: Verdict) -> Row {
        Row {
            experiment: ExperimentKind::Theorem1,
            point: 0,
            n: Some(4),
            k: None,
            s: Some(10),
            epsilon: Some(0.6),
            delta: None,
            param: String::new(),
            trials: 100,
            estimate: 0.01,
            ci_low: 0.0,
            ci_high: 0.05,
            bound: 0.078125,
            relation: Relation::Le,
            verdict,
        }
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(Relation::Le.verdict(0.1, 0.3, 0.2), Verdict::Pass);
        assert_eq!(Relation::Le.verdict(0.21, 0.3, 0.2), Verdict::Fail);
        assert_eq!(Relation::Ge.verdict(0.1, 0.3, 0.25), Verdict::Pass);
        assert_eq!(Relation::Ge.verdict(0.1, 0.2, 0.25), Verdict::Fail);
        assert_eq!(Relation::Eq.verdict(0.1, 0.3, 0.2), Verdict::Pass);
        assert_eq!(Relation::Eq.verdict(0.1, 0.3, 0.4), Verdict::Fail);
    }

    #[test]
    fn summary_flags_failures() {
        let s = summarize(&[row(Verdict::Pass)]).unwrap();
        assert!(s.all_pass);
        let s = summarize(&[row(Verdict::Pass), row(Verdict::Fail)]).unwrap();
        assert!(!s.all_pass);
        assert!(s.text.contains("FAIL"));
        assert!(summarize(&[]).is_err());
    }
}
