use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::MAX_QUBITS;

/// Smallest trial count accepted for any experiment.
pub const MIN_TRIALS: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Theorem1,
    GuessBound,
    Soundness,
    AeFidelity,
    ClassicalProbs,
    FullRun,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Theorem1,
        ExperimentKind::GuessBound,
        ExperimentKind::Soundness,
        ExperimentKind::AeFidelity,
        ExperimentKind::ClassicalProbs,
        ExperimentKind::FullRun,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Theorem1 => "theorem1",
            ExperimentKind::GuessBound => "guess_bound",
            ExperimentKind::Soundness => "soundness",
            ExperimentKind::AeFidelity => "ae_fidelity",
            ExperimentKind::ClassicalProbs => "classical_probs",
            ExperimentKind::FullRun => "full_run",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
    }

    /// Trials used when neither the file nor the flags set them.
    pub fn default_trials(self) -> u64 {
        match self {
            ExperimentKind::AeFidelity | ExperimentKind::FullRun => 1_000,
            _ => 10_000,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config {
            field: "experiment".into(),
            message: format!("unknown kind `{s}`; valid kinds: {}", Self::valid_names()),
        })
    }
}

/// A config value given either as one scalar or as a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Every field of a config file, all optional. Command-line flags fill the
/// same shape and take precedence field by field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub experiment: Option<String>,
    pub n: Option<OneOrMany<usize>>,
    pub k: Option<OneOrMany<usize>>,
    #[serde(rename = "S", alias = "s")]
    pub s: Option<OneOrMany<usize>>,
    pub epsilon: Option<OneOrMany<f64>>,
    pub delta: Option<OneOrMany<f64>>,
    /// Input fidelities for `ae_fidelity`.
    pub fidelity: Option<OneOrMany<f64>>,
    /// Random states per grid point for `soundness`.
    pub states: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl SpecFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config { field: "config".into(), message: e.to_string() })
    }

    /// Field-wise merge: values in `flags` win.
    pub fn overridden_by(self, flags: SpecFile) -> SpecFile {
        SpecFile {
            experiment: flags.experiment.or(self.experiment),
            n: flags.n.or(self.n),
            k: flags.k.or(self.k),
            s: flags.s.or(self.s),
            epsilon: flags.epsilon.or(self.epsilon),
            delta: flags.delta.or(self.delta),
            fidelity: flags.fidelity.or(self.fidelity),
            states: flags.states.or(self.states),
            trials: flags.trials.or(self.trials),
            seed: flags.seed.or(self.seed),
            out: flags.out.or(self.out),
        }
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub n: Vec<usize>,
    /// Honest-agent counts; empty means every k in 2..=n.
    pub k: Vec<usize>,
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub states: usize,
    pub trials: u64,
    pub seed: u64,
    /// Not written to result files, so outputs do not depend on where they land.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

fn config_err<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config { field: field.into(), message: message.into() })
}

fn non_empty<T>(field: &str, v: Vec<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        return config_err(field, "must list at least one value");
    }
    Ok(v)
}

fn open_unit(field: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return config_err(field, format!("{v} is outside (0, 1)"));
    }
    Ok(())
}

impl ExperimentSpec {
    /// Resolves defaults and checks ranges.
    pub fn from_file(file: SpecFile) -> Result<Self> {
        let kind: ExperimentKind = match &file.experiment {
            Some(name) => name.parse()?,
            None => {
                return config_err("experiment", format!("missing experiment kind; valid kinds: {}", ExperimentKind::valid_names()))
            }
        };
        use ExperimentKind::*;
        let default_n = match kind {
            Theorem1 | ClassicalProbs => vec![3, 4, 5],
            GuessBound | Soundness | FullRun => vec![4],
            AeFidelity => vec![3, 4, 5, 6],
        };
        let default_k = match kind {
            GuessBound => vec![2, 3, 4],
            Soundness => vec![3],
            _ => vec![],
        };
        let default_s = match kind {
            Theorem1 => vec![8, 10],
            ClassicalProbs => vec![1, 2, 3, 4, 5],
            _ => vec![5],
        };
        let default_eps = match kind {
            GuessBound => vec![0.2, 0.4, 0.6],
            _ => vec![0.6],
        };
        let get = |o: &Option<OneOrMany<usize>>, d: Vec<usize>| o.as_ref().map_or(d, |v| v.to_vec());
        let getf = |o: &Option<OneOrMany<f64>>, d: Vec<f64>| o.as_ref().map_or(d, |v| v.to_vec());
        let spec = ExperimentSpec {
            experiment: kind,
            n: non_empty("n", get(&file.n, default_n))?,
            k: get(&file.k, default_k),
            s: non_empty("S", get(&file.s, default_s))?,
            epsilon: non_empty("epsilon", getf(&file.epsilon, default_eps))?,
            delta: non_empty("delta", getf(&file.delta, vec![0.05]))?,
            fidelity: non_empty("fidelity", getf(&file.fidelity, vec![0.8, 0.9, 0.95]))?,
            states: file.states.unwrap_or(100),
            trials: file.trials.unwrap_or(kind.default_trials()),
            seed: file.seed.unwrap_or(0),
            out: file.out,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n.iter().find(|&&n| !(2..=MAX_QUBITS).contains(&n)) {
            return config_err("n", format!("{n} is outside 2..={MAX_QUBITS}"));
        }
        if let Some(k) = self.k.iter().find(|&&k| k == 0) {
            return config_err("k", format!("{k}: at least one agent must be honest"));
        }
        let max_n = *self.n.iter().max().expect("non-empty");
        if !self.k.is_empty() && self.k.iter().all(|&k| k > max_n) {
            return config_err("k", format!("every k exceeds the largest n ({max_n})"));
        }
        if let Some(s) = self.s.iter().find(|&&s| s == 0 || s > 60) {
            return config_err("S", format!("{s} is outside 1..=60"));
        }
        open_unit("epsilon", &self.epsilon)?;
        open_unit("delta", &self.delta)?;
        if let Some(f) = self.fidelity.iter().find(|f| !(**f >= 0.0 && **f <= 1.0)) {
            return config_err("fidelity", format!("{f} is outside [0, 1]"));
        }
        if self.states == 0 {
            return config_err("states", "must be at least 1");
        }
        if self.trials < MIN_TRIALS {
            return config_err("trials", format!("{} is below the minimum of {MIN_TRIALS}", self.trials));
        }
        Ok(())
    }

    /// Honest-agent counts to run for `n`.
    pub fn ks_for(&self, n: usize) -> Vec<usize> {
        if self.k.is_empty() {
            (2..=n).collect()
        } else {
            self.k.iter().copied().filter(|&k| k <= n).collect()
        }
    }
}

/// Loads `file` (if any), applies `flags` on top and resolves the result.
pub fn parse_config(file: Option<&Path>, flags: SpecFile) -> Result<ExperimentSpec> {
    let base = match file {
        Some(p) => SpecFile::load(p)?,
        None => SpecFile::default(),
    };
    ExperimentSpec::from_file(base.overridden_by(flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(e: Error) -> String {
        match e {
            Error::Config { field, .. } => field,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn flags_win_over_file() {
        let file: SpecFile =
            serde_json::from_str(r#"{"experiment":"theorem1","n":4,"k":3,"S":8,"epsilon":0.6,"delta":0.05}"#).unwrap();
        let flags = SpecFile { s: Some(OneOrMany::One(10)), ..Default::default() };
        let spec = ExperimentSpec::from_file(file.overridden_by(flags)).unwrap();
        assert_eq!(spec.s, vec![10]);
        assert_eq!(spec.n, vec![4]);
        assert_eq!(spec.k, vec![3]);
    }

    #[test]
    fn bad_epsilon_names_field() {
        let file = SpecFile {
            experiment: Some("theorem1".into()),
            epsilon: Some(OneOrMany::One(1.5)),
            ..Default::default()
        };
        assert_eq!(field_of(ExperimentSpec::from_file(file).unwrap_err()), "epsilon");
    }

    #[test]
    fn missing_kind_lists_valid_kinds() {
        let err = ExperimentSpec::from_file(SpecFile::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("experiment"));
        for k in ExperimentKind::ALL {
            assert!(text.contains(k.name()));
        }
        assert_eq!(field_of("nope".parse::<ExperimentKind>().unwrap_err()), "experiment");
    }

    #[test]
    fn lists_and_ranges() {
        let file: SpecFile = serde_json::from_str(r#"{"experiment":"soundness","n":[3,4],"trials":50}"#).unwrap();
        assert_eq!(field_of(ExperimentSpec::from_file(file).unwrap_err()), "trials");
        let file: SpecFile = serde_json::from_str(r#"{"experiment":"soundness","n":[1]}"#).unwrap();
        assert_eq!(field_of(ExperimentSpec::from_file(file).unwrap_err()), "n");
        assert!(serde_json::from_str::<SpecFile>(r#"{"experiment":"soundness","bogus":1}"#).is_err());
    }

    #[test]
    fn default_k_spans_two_to_n() {
        let spec = ExperimentSpec::from_file(SpecFile { experiment: Some("theorem1".into()), ..Default::default() })
            .unwrap();
        assert_eq!(spec.ks_for(4), vec![2, 3, 4]);
        assert_eq!(spec.trials, 10_000);
    }
}
