//! Experiment reports and the 3σ verdict rules.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::stats::mean_stderr;

/// Certified trials required before a statistical verdict is issued.
pub const MIN_CERTIFIED: usize = 500;
/// Width of the acceptance band in standard errors.
pub const SIGMAS: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    EqualityConfirmed,
    StrictInequalityConfirmed,
    BoundViolated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::EqualityConfirmed => "EqualityConfirmed",
            Verdict::StrictInequalityConfirmed => "StrictInequalityConfirmed",
            Verdict::BoundViolated => "BoundViolated",
            Verdict::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Certified,
    Uncertified,
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: TrialStatus,
    pub value: f64,
    /// Independent count for the same trial when an oracle is run.
    pub oracle: Option<f64>,
    pub grid_warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub estimate: f64,
    pub stderr: f64,
    /// Certified trials compared against the oracle.
    pub compared: usize,
    /// Certified trials whose count differs from the oracle count.
    pub mismatches: usize,
    /// Trials the oracle itself could not certify.
    pub oracle_uncertified: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub basis: String,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub certified: usize,
    pub uncertified: usize,
    pub infinite_trials: usize,
    pub theory: f64,
    pub bound: f64,
    /// Additional absolute slack used in the comparisons (discretization error).
    pub slack: f64,
    pub verdict: Verdict,
    /// |estimate − theory| within 3σ + slack and the bound not violated.
    pub consistent: bool,
    pub lambda: Option<f64>,
    #[serde(rename = "N")]
    pub n_dim: usize,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub grid_warnings: usize,
    /// Config that reproduces this report, when run from one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub elapsed_ms: f64,
    #[serde(skip)]
    pub per_trial: Vec<TrialRecord>,
}

/// Numerical floor for comparisons when the standard error vanishes.
fn exact_tol(x: f64) -> f64 {
    1e-9 * x.abs().max(1.0)
}

/// Verdict of an estimate against a bound, using 3σ bands widened by `slack`.
pub fn classify(estimate: f64, stderr: f64, bound: f64, certified: usize, slack: f64) -> Verdict {
    let band = SIGMAS * stderr + slack + exact_tol(bound);
    if estimate - band > bound {
        return Verdict::BoundViolated;
    }
    if stderr > 0.0 && certified < MIN_CERTIFIED {
        return Verdict::Inconclusive;
    }
    if (estimate - bound).abs() <= band {
        Verdict::EqualityConfirmed
    } else if estimate + band < bound {
        Verdict::StrictInequalityConfirmed
    } else {
        Verdict::Inconclusive
    }
}

pub fn is_consistent(estimate: f64, stderr: f64, theory: f64, verdict: Verdict, slack: f64) -> bool {
    verdict != Verdict::BoundViolated
        && (estimate - theory).abs() <= SIGMAS * stderr + slack + exact_tol(theory)
}

/// Inputs a report is built from; the run functions fill this in.
pub(crate) struct ReportInput {
    pub kind: &'static str,
    pub basis: String,
    pub theory: f64,
    pub bound: f64,
    pub slack: f64,
    pub lambda: Option<f64>,
    pub n_dim: usize,
    pub betas: Vec<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub per_trial: Vec<TrialRecord>,
    pub elapsed_ms: f64,
}

impl ExperimentReport {
    pub(crate) fn build(input: ReportInput) -> Self {
        let certified: Vec<f64> = input
            .per_trial
            .iter()
            .filter(|t| t.status == TrialStatus::Certified)
            .map(|t| t.value)
            .collect();
        let (estimate, stderr) = mean_stderr(&certified);
        let count = |s| input.per_trial.iter().filter(|t| t.status == s).count();
        let verdict = classify(estimate, stderr, input.bound, certified.len(), input.slack);

        let with_oracle: Vec<&TrialRecord> = input
            .per_trial
            .iter()
            .filter(|t| t.status == TrialStatus::Certified && t.oracle.is_some())
            .collect();
        let oracle = input.per_trial.iter().any(|t| t.oracle.is_some()).then(|| {
                let vals: Vec<f64> = with_oracle
                    .iter()
                    .filter_map(|t| t.oracle)
                    .filter(|v| v.is_finite())
                    .collect();
                let (estimate, stderr) = mean_stderr(&vals);
                OracleSummary {
                    estimate,
                    stderr,
                    compared: vals.len(),
                    mismatches: with_oracle
                        .iter()
                        .filter(|t| t.oracle.is_some_and(|o| o.is_finite() && o != t.value))
                        .count(),
                    oracle_uncertified: input
                        .per_trial
                        .iter()
                        .filter(|t| t.oracle.is_some_and(|o| !o.is_finite()))
                        .count(),
                }
            });

        Self {
            kind: input.kind.to_string(),
            basis: input.basis,
            estimate,
            stderr,
            trials: input.per_trial.len(),
            certified: certified.len(),
            uncertified: count(TrialStatus::Uncertified),
            infinite_trials: count(TrialStatus::Infinite),
            theory: input.theory,
            bound: input.bound,
            slack: input.slack,
            verdict,
            consistent: is_consistent(estimate, stderr, input.theory, verdict, input.slack),
            lambda: input.lambda,
            n_dim: input.n_dim,
            betas: input.betas,
            seed: input.seed,
            config_hash: input.config_hash,
            code_version: crate::CODE_VERSION.to_string(),
            oracle,
            grid_warnings: input.per_trial.iter().filter(|t| t.grid_warning).count(),
            config: None,
            elapsed_ms: input.elapsed_ms,
            per_trial: input.per_trial,
        }
    }

    /// JSON with timing fields removed, for reproducibility comparisons.
    pub fn to_json_without_timing(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("elapsed_ms");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Per-trial CSV: trial,status,value,oracle,grid_warning
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "trial,status,value,oracle,grid_warning")?;
        for t in &self.per_trial {
            let status = match t.status {
                TrialStatus::Certified => "certified",
                TrialStatus::Uncertified => "uncertified",
                TrialStatus::Infinite => "infinite",
            };
            let oracle = t.oracle.map(|o| o.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", t.trial, status, t.value, oracle, t.grid_warning)?;
        }
        Ok(())
    }

    /// Aligned one-screen summary.
    pub fn text_table(&self) -> String {
        let mut s = String::new();
        let rows: Vec<(&str, String)> = vec![
            ("kind", self.kind.clone()),
            ("basis", self.basis.clone()),
            ("estimate", format!("{:.6}", self.estimate)),
            ("stderr", format!("{:.6}", self.stderr)),
            ("theory", format!("{:.6}", self.theory)),
            ("bound", format!("{:.6}", self.bound)),
            ("verdict", self.verdict.to_string()),
            ("consistent", self.consistent.to_string()),
            (
                "trials",
                format!(
                    "{} (certified {}, uncertified {}, infinite {})",
                    self.trials, self.certified, self.uncertified, self.infinite_trials
                ),
            ),
            ("seed", self.seed.to_string()),
            ("config_hash", self.config_hash.clone()),
        ];
        for (k, v) in rows {
            s.push_str(&format!("{k:<12} {v}\n"));
        }
        if let Some(o) = &self.oracle {
            s.push_str(&format!(
                "{:<12} {:.6} ± {:.6} ({} compared, {} mismatches)\n",
                "oracle", o.estimate, o.stderr, o.compared, o.mismatches
            ));
        }
        s
    }
}

/// Stable short hash of any serializable configuration.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}
