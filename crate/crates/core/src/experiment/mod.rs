//! Seeded Monte Carlo drivers, config parsing and result files.

mod result;
mod run;
mod spec;

pub use result::{summarize, ExperimentResult, Relation, Row, Summary, Verdict, CSV_COLUMNS};
pub use run::{random_test_state, run_experiment, trailing_malicious};
pub use spec::{parse_config, ExperimentKind, ExperimentSpec, OneOrMany, SpecFile, MIN_TRIALS};
