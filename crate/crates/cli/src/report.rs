//! Run reports: the versioned JSON record of what an estimator produced.
//!
//! Reports are the machine-readable output of `estimate` and `simulate` runs.
//! The schema is pinned by `schema_version` and golden-file tests; complex
//! numbers are serialized as `[re, im]` pairs.  Everything in a report is a
//! pure function of the scenario and its seeds — wall-clock timing is printed
//! to stderr instead, so identical inputs give byte-identical reports.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::CliResult;
use crate::snapshots::write_atomic;

/// Complex number as a `[re, im]` pair in JSON.
pub type ComplexPair = [f64; 2];

/// Top-level report for one scenario run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: ScenarioEcho,
    pub estimates: Vec<EstimateReport>,
}

/// Echo of the scenario facts an estimate depends on, so a report file is
/// interpretable on its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub slots: usize,
    pub sensors: usize,
    /// Indices of the occupied slots (0..slots); equals `0..sensors` for a
    /// uniform array.
    pub active_slots: Vec<usize>,
    pub spacing_over_lambda: f64,
    pub snapshots: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    pub true_support_t: Vec<f64>,
    pub true_amplitudes: Vec<ComplexPair>,
}

/// Result of one estimator on one realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: String,
    /// Estimated directions, ascending in t.  Empty for spectrum-only runs.
    pub support_t: Vec<f64>,
    /// The same directions in degrees (asin(t)).
    pub support_theta_deg: Vec<f64>,
    /// Fitted complex amplitudes aligned with `support_t`; empty when the
    /// method does not estimate amplitudes.
    pub amplitudes: Vec<ComplexPair>,
    /// For the grid-free method: whether the certificate identified a model
    /// within the array's resolvable source budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvable: Option<bool>,
    /// Grid-free only: optimal value of the sparse objective (sum of moduli).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic_norm: Option<f64>,
    /// Data-fit residual ‖A x̂ − y‖₂ where meaningful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    /// Grid-free only: |dual objective − Σ|x̂ᵢ||, the strong-duality check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality_gap_check: Option<f64>,
    /// Sampled spectrum for the gridded methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumReport>,
    /// Sampled dual-certificate modulus for the grid-free method.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_polynomial: Option<DualSamples>,
    /// Pass/fail against the scenario's expected support, when provided.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assertion: Option<SupportAssertion>,
}

/// A sampled curve over a grid of directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// What the values are: "power" (spectral estimators, linear scale) or
    /// "amplitude-modulus" (gridded sparse/least-squares solutions).
    pub quantity: String,
    pub grid_theta_deg: Vec<f64>,
    pub values: Vec<f64>,
}

/// |H(t)| samples of the dual certificate on a uniform t-grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualSamples {
    pub t: Vec<f64>,
    pub modulus: Vec<f64>,
}

/// Comparison of an estimated support against the scenario's expected one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportAssertion {
    pub expected_t: Vec<f64>,
    pub tolerance_t: f64,
    /// For each expected direction: was some estimate within tolerance?
    pub matched: Vec<bool>,
    /// Estimated directions not matching any expected one.
    pub spurious: usize,
    pub passed: bool,
}

impl SupportAssertion {
    /// Match each expected direction against the estimated support.
    pub fn check(expected_t: &[f64], tolerance_t: f64, estimated_t: &[f64]) -> Self {
        let matched: Vec<bool> = expected_t
            .iter()
            .map(|&e| estimated_t.iter().any(|&s| (s - e).abs() <= tolerance_t))
            .collect();
        let spurious = estimated_t
            .iter()
            .filter(|&&s| !expected_t.iter().any(|&e| (s - e).abs() <= tolerance_t))
            .count();
        let passed = matched.iter().all(|&m| m) && spurious == 0;
        SupportAssertion {
            expected_t: expected_t.to_vec(),
            tolerance_t,
            matched,
            spurious,
            passed,
        }
    }
}

impl Report {
    /// Pretty JSON with a trailing newline; byte-deterministic for fixed data.
    pub fn to_json(&self) -> CliResult<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::CliError::Io(format!("cannot serialize report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    /// Write the report atomically.
    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// CSV rendering of a spectrum (one `theta_deg,value` row per grid point).
pub fn spectrum_csv(spectrum: &SpectrumReport) -> String {
    let mut out = String::from("theta_deg,value\n");
    for (theta, v) in spectrum.grid_theta_deg.iter().zip(&spectrum.values) {
        out.push_str(&format!("{theta},{v}\n"));
    }
    out
}

/// CSV rendering of an estimated support with amplitudes.
pub fn support_csv(estimate: &EstimateReport) -> String {
    let mut out = String::from("t,theta_deg,amplitude_re,amplitude_im\n");
    for (i, &t) in estimate.support_t.iter().enumerate() {
        let theta = estimate.support_theta_deg[i];
        match estimate.amplitudes.get(i) {
            Some(a) => out.push_str(&format!("{t},{theta},{},{}\n", a[0], a[1])),
            None => out.push_str(&format!("{t},{theta},,\n")),
        }
    }
    out
}
