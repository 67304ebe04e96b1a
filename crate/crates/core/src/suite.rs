//! Suites of named experiments with expected outcomes.
//!
//! ```toml
//! [[experiment]]
//! name = "torus a=2"
//! expect = "StrictInequalityConfirmed"
//! kind = "zeros"
//! trials = 2000
//! [experiment.model]
//! kind = "torus"
//! a = 2.0
//! [experiment.basis]
//! frequency = [1, 1]
//! ```
//!
//! Besides `name` and `expect`, an entry may set `max_abs_error` (bound on
//! |estimate − theory|) and `exact = true` (zero standard error). Every other
//! key is an experiment config key. The suite seed replaces per-entry seeds.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Outcome};
use crate::error::{Error, Result};
use crate::report::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expectation {
    EqualityConfirmed,
    StrictInequalityConfirmed,
    BoundViolated,
    Inconclusive,
    /// Identity and embedding checks must pass.
    Pass,
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub name: String,
    pub expect: Expectation,
    pub max_abs_error: Option<f64>,
    pub exact: bool,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub name: String,
    pub estimate: Option<f64>,
    pub theory: Option<f64>,
    pub bound: Option<f64>,
    pub verdict: String,
    pub passed: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteSummary {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn table(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        let mut s = format!(
            "{:<width$}  {:>12}  {:>12}  {:>12}  {:<26}  {}\n",
            "name", "estimate", "theory", "bound", "verdict", "result"
        );
        for r in &self.rows {
            let _ = write!(
                s,
                "{:<width$}  {:>12}  {:>12}  {:>12}  {:<26}  {}",
                r.name,
                fmt(r.estimate),
                fmt(r.theory),
                fmt(r.bound),
                r.verdict,
                if r.passed { "pass" } else { "FAIL" }
            );
            if !r.note.is_empty() {
                let _ = write!(s, "  ({})", r.note);
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    experiment: Vec<toml::Table>,
}

pub fn parse_suite(text: &str) -> Result<Vec<SuiteEntry>> {
    let file: SuiteFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if file.experiment.is_empty() {
        return Err(Error::Config("suite contains no experiments".into()));
    }
    file.experiment
        .into_iter()
        .enumerate()
        .map(|(i, mut t)| {
            let name = match t.remove("name") {
                Some(toml::Value::String(s)) => s,
                _ => return Err(Error::Config(format!("experiment {i} needs a string `name`"))),
            };
            let ctx = |m: String| Error::Config(format!("experiment `{name}`: {m}"));
            let expect: Expectation = t
                .remove("expect")
                .ok_or_else(|| ctx("missing `expect`".into()))?
                .try_into()
                .map_err(|e: toml::de::Error| ctx(e.to_string()))?;
            let max_abs_error = match t.remove("max_abs_error") {
                None => None,
                Some(v) => Some(v.as_float().ok_or_else(|| ctx("max_abs_error must be a float".into()))?),
            };
            let exact = match t.remove("exact") {
                None => false,
                Some(v) => v.as_bool().ok_or_else(|| ctx("exact must be a boolean".into()))?,
            };
            let config = ExperimentConfig::from_table(t).map_err(|e| ctx(e.to_string()))?;
            Ok(SuiteEntry {
                name,
                expect,
                max_abs_error,
                exact,
                config,
            })
        })
        .collect()
}

pub fn load_suite(path: &Path) -> Result<Vec<SuiteEntry>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_suite(&text)
}

fn verdict_matches(expect: Expectation, v: Verdict) -> bool {
    matches!(
        (expect, v),
        (Expectation::EqualityConfirmed, Verdict::EqualityConfirmed)
            | (Expectation::StrictInequalityConfirmed, Verdict::StrictInequalityConfirmed)
            | (Expectation::BoundViolated, Verdict::BoundViolated)
            | (Expectation::Inconclusive, Verdict::Inconclusive)
    )
}

fn evaluate(entry: &SuiteEntry, outcome: Result<Outcome>) -> SuiteRow {
    let mut row = SuiteRow {
        name: entry.name.clone(),
        estimate: None,
        theory: None,
        bound: None,
        verdict: "-".into(),
        passed: false,
        note: String::new(),
    };
    match outcome {
        Err(e) => {
            row.verdict = "error".into();
            row.note = e.to_string();
        }
        Ok(Outcome::Report(r)) => {
            row.estimate = Some(r.estimate);
            row.theory = Some(r.theory);
            row.bound = Some(r.bound);
            row.verdict = r.verdict.to_string();
            let mut notes = Vec::new();
            if !verdict_matches(entry.expect, r.verdict) {
                notes.push(format!("expected {:?}", entry.expect));
            }
            // a verdict alone says nothing about the theoretical value unless it equals the bound
            if !r.consistent {
                notes.push("estimate outside 3σ of theory".to_string());
            }
            if let Some(tol) = entry.max_abs_error {
                if !((r.estimate - r.theory).abs() < tol) {
                    notes.push(format!("|estimate - theory| >= {tol}"));
                }
            }
            if entry.exact && r.stderr != 0.0 {
                notes.push("trials not all equal".to_string());
            }
            row.passed = notes.is_empty();
            row.note = notes.join("; ");
        }
        Ok(Outcome::Identities(r)) => {
            row.verdict = if r.passed() { "Pass".into() } else { "Fail".into() };
            row.passed = entry.expect == Expectation::Pass && r.passed();
            row.note = r.failures.join("; ");
        }
        Ok(Outcome::Embed(e)) => {
            row.estimate = Some(e.predicted_average);
            row.bound = Some(e.weyl_bound);
            row.verdict = "Pass".into();
            row.passed = entry.expect == Expectation::Pass;
        }
    }
    if matches!(row.verdict.as_str(), "Pass" | "Fail") && entry.expect != Expectation::Pass {
        row.passed = false;
        row.note = format!("expected {:?}", entry.expect);
    }
    row
}

/// Runs every entry with the given seed; failures are collected, not
/// propagated.
pub fn run_entries(entries: &[SuiteEntry], seed: u64, threads: Option<usize>) -> SuiteSummary {
    let rows = entries
        .iter()
        .map(|entry| {
            let mut cfg = entry.config.clone();
            cfg.seed = Some(seed);
            if threads.is_some() {
                cfg.threads = threads;
            }
            log::info!("running suite entry `{}`", entry.name);
            let outcome = cfg.run();
            if let Ok(o) = &outcome {
                if let Err(e) = cfg.write_outputs(o) {
                    log::warn!("could not write outputs of `{}`: {e}", entry.name);
                }
            }
            evaluate(entry, outcome)
        })
        .collect();
    SuiteSummary { seed, rows }
}

/// Loads and runs a suite file. Errors only for unreadable or invalid suites.
pub fn run_suite(path: &Path, seed: u64, threads: Option<usize>) -> Result<SuiteSummary> {
    let entries = load_suite(path)?;
    Ok(run_entries(&entries, seed, threads))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[[experiment]]
name = "circle"
expect = "EqualityConfirmed"
exact = true
trials = 10
[experiment.model]
kind = "circle"
[experiment.basis]
l = 3

[[experiment]]
name = "identities"
expect = "Pass"
kind = "verify"
[experiment.model]
kind = "torus"
a = 2.0
[experiment.basis]
frequency = [1, 1]
"#;

    #[test]
    fn small_suite_passes() {
        let entries = parse_suite(SMALL).unwrap();
        assert_eq!(entries.len(), 2);
        let s = run_entries(&entries, 5, Some(2));
        assert!(s.all_passed(), "{}", s.table());
        assert_eq!(s.exit_code(), 0);
    }

    #[test]
    fn empty_suite_is_config_error() {
        let e = parse_suite("").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn bad_entries_are_config_errors() {
        assert!(parse_suite("[[experiment]]\nexpect = \"Pass\"").is_err());
        assert!(parse_suite("[[experiment]]\nname = \"x\"\nexpect = \"Maybe\"").is_err());
        assert!(parse_suite("[[experiment]]\nname = \"x\"\nexpect = \"Pass\"\nbogus = 1").is_err());
    }

    #[test]
    fn wrong_expectation_fails() {
        let text = SMALL.replacen("expect = \"EqualityConfirmed\"", "expect = \"StrictInequalityConfirmed\"", 1);
        let s = run_entries(&parse_suite(&text).unwrap(), 5, Some(1));
        assert!(!s.rows[0].passed);
        assert!(s.rows[1].passed);
        assert_eq!(s.exit_code(), 1);
    }

    #[test]
    fn errors_are_aggregated() {
        let text = "[[experiment]]\nname = \"broken\"\nexpect = \"Pass\"\nkind = \"verify\"\n[experiment.model]\nkind = \"sphere2\"\n\n[[experiment]]\nname = \"ok\"\nexpect = \"Pass\"\nkind = \"embed\"\n[experiment.model]\nkind = \"sphere2\"\n[experiment.basis]\nl = 2\n";
        let s = run_entries(&parse_suite(text).unwrap(), 1, Some(1));
        assert!(!s.rows[0].passed);
        assert_eq!(s.rows[0].verdict, "error");
        assert!(s.rows[1].passed);
    }
}
