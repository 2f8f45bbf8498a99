//! Scenario files: the human-readable description of an experiment.
//!
//! A scenario bundles everything needed to reproduce a run — array layout,
//! source list, noise level and seeds, and the estimators to apply.  The
//! format is JSON with a pinned `schema_version`; unknown fields are rejected
//! so typos fail loudly instead of being silently ignored.  Directions may be
//! given either in degrees (`theta_deg`) or directly as `t = sin(theta)`;
//! exactly one of the two must be present per source.

use beamcs::{add_noise, synthesize, ArrayGeometry, Source, SourceScene};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Schema revision this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Top-level scenario description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Must equal [`SCHEMA_VERSION`]; bumped on incompatible format changes.
    pub schema_version: u32,
    /// Sensor array layout.
    pub geometry: GeometrySpec,
    /// True sources.  May be empty (pure-noise or all-zero measurements).
    #[serde(default)]
    pub scene: Vec<SourceSpec>,
    /// Signal-to-noise ratio in dB; omit for a noiseless measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    /// Base seed for the noise draws (snapshot `l` uses `noise_seed + l`).
    #[serde(default)]
    pub noise_seed: u64,
    /// Number of snapshots to synthesize.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// How source phases evolve across snapshots.
    #[serde(default)]
    pub phase_policy: PhasePolicy,
    /// Estimators to run (used when no method is forced on the command line).
    #[serde(default)]
    pub estimators: Vec<EstimatorSpec>,
    /// Optional ground-truth support for report-level assertions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_support_t: Option<Vec<f64>>,
    /// Tolerance (in t-units) for those assertions.
    #[serde(default = "default_support_tol")]
    pub support_tolerance_t: f64,
}

fn default_snapshots() -> usize {
    1
}

fn default_support_tol() -> f64 {
    1e-3
}

/// Array layout: `slots` nominal positions at `spacing_over_lambda` pitch,
/// optionally thinned by a mask.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub slots: usize,
    pub spacing_over_lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
}

/// Which slots carry sensors.  Either an explicit boolean per slot or a
/// seeded random thinning that keeps `keep` sensors (endpoints always kept).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaskSpec {
    Explicit(Vec<bool>),
    Random { keep: usize, seed: u64 },
}

/// One true source.  Direction as `theta_deg` or `t` (exactly one), with an
/// amplitude that is either a nonnegative modulus (optionally rotated by
/// `phase_deg`) or a complex `[re, im]` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub amplitude: AmplitudeSpec,
    #[serde(default)]
    pub phase_deg: f64,
}

/// Source amplitude: a modulus, or a complex value as `[re, im]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmplitudeSpec {
    Modulus(f64),
    Complex([f64; 2]),
}

impl SourceSpec {
    /// Direction as t = sin(theta), validating that exactly one of the two
    /// direction fields is present.
    pub fn direction_t(&self) -> CliResult<f64> {
        match (self.theta_deg, self.t) {
            (Some(theta), None) => {
                if !(-90.0..=90.0).contains(&theta) {
                    return Err(CliError::Config(format!(
                        "theta_deg must lie in [-90, 90], got {theta}"
                    )));
                }
                Ok((theta * PI / 180.0).sin())
            }
            (None, Some(t)) => Ok(t),
            (Some(_), Some(_)) => Err(CliError::Config(
                "source specifies both theta_deg and t; pick one".into(),
            )),
            (None, None) => Err(CliError::Config(
                "source specifies neither theta_deg nor t".into(),
            )),
        }
    }

    /// Complex amplitude (modulus and phase folded together).
    pub fn complex_amplitude(&self) -> Complex64 {
        let base = match self.amplitude {
            AmplitudeSpec::Modulus(m) => Complex64::new(m, 0.0),
            AmplitudeSpec::Complex([re, im]) => Complex64::new(re, im),
        };
        base * Complex64::from_polar(1.0, self.phase_deg * PI / 180.0)
    }
}

/// Source-phase behavior across snapshots.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhasePolicy {
    /// Phases stay exactly as written in the scene for every snapshot.
    #[default]
    Fixed,
    /// Each snapshot adds an independent uniform random phase per source
    /// (stationary powers, decorrelated snapshots — the multi-snapshot model
    /// the covariance-based estimators assume).
    RandomPerSnapshot { seed: u64 },
}

/// One estimator invocation with its method-specific parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub method: Method,
    /// Residual budget for the sparse methods; a number, or "noise-norm" to
    /// use the exact norm of the realized noise on the first snapshot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<EpsilonSpec>,
    /// Model order for the subspace and rooting methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<usize>,
    /// Grid pitch in degrees for the gridded methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step_deg: Option<f64>,
}

/// Residual budget: fixed value or a policy resolved against the realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Fixed(f64),
    Policy(EpsilonPolicy),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonPolicy {
    /// ‖n‖₂ of the realized noise on the snapshot being estimated.
    NoiseNorm,
}

/// Estimation methods exposed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Conventional (delay-and-sum) beamformer power spectrum.
    Cbf,
    /// Minimum-energy (least-ℓ2) gridded extension.
    L2,
    /// Gridded sparse recovery (basis pursuit denoising).
    CsGrid,
    /// Grid-free sparse recovery via the semidefinite dual.
    Gridfree,
    /// Minimum-variance distortionless-response spectrum.
    Mvdr,
    /// MUSIC pseudospectrum.
    Music,
    /// Minimum-norm pseudospectrum.
    Minnorm,
    /// Rooting variant of MVDR.
    RootMvdr,
    /// Rooting variant of MUSIC.
    RootMusic,
    /// Rooting variant of minimum-norm.
    RootMinnorm,
}

impl Method {
    /// Kebab-case name as used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Method::Cbf => "cbf",
            Method::L2 => "l2",
            Method::CsGrid => "cs-grid",
            Method::Gridfree => "gridfree",
            Method::Mvdr => "mvdr",
            Method::Music => "music",
            Method::Minnorm => "minnorm",
            Method::RootMvdr => "root-mvdr",
            Method::RootMusic => "root-music",
            Method::RootMinnorm => "root-minnorm",
        }
    }
}

/// Concrete measurements synthesized from a scenario.
#[derive(Debug, Clone)]
pub struct Realization {
    pub geometry: ArrayGeometry,
    /// One complex measurement vector per snapshot (active sensors only).
    pub snapshots: Vec<DVector<Complex64>>,
    /// Exact ℓ2 norm of the realized noise per snapshot (0 when noiseless).
    pub noise_norms: Vec<f64>,
}

impl Scenario {
    /// Parse a scenario from a JSON string.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Read and parse a scenario file.
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Io(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (this build reads {})",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if self.snapshots == 0 {
            return Err(CliError::Config("snapshots must be at least 1".into()));
        }
        if !(self.support_tolerance_t.is_finite() && self.support_tolerance_t > 0.0) {
            return Err(CliError::Config(format!(
                "support_tolerance_t must be positive, got {}",
                self.support_tolerance_t
            )));
        }
        for src in &self.scene {
            src.direction_t()?;
            match src.amplitude {
                AmplitudeSpec::Modulus(m) if !(m.is_finite() && m >= 0.0) => {
                    return Err(CliError::Config(format!(
                        "source amplitude modulus must be finite and nonnegative, got {m}"
                    )));
                }
                AmplitudeSpec::Complex([re, im]) if !(re.is_finite() && im.is_finite()) => {
                    return Err(CliError::Config(
                        "source amplitude [re, im] must be finite".into(),
                    ));
                }
                _ => {}
            }
            if !src.phase_deg.is_finite() {
                return Err(CliError::Config("source phase must be finite".into()));
            }
        }
        let all_zero = self
            .scene
            .iter()
            .all(|s| s.complex_amplitude().norm() == 0.0);
        if self.snr_db.is_some() && all_zero {
            return Err(CliError::Config(
                "snr_db is meaningless for an empty (all-zero) scene; omit it".into(),
            ));
        }
        Ok(())
    }

    /// Build the array geometry described by the scenario.
    pub fn build_geometry(&self) -> CliResult<ArrayGeometry> {
        let g = &self.geometry;
        let geometry = match &g.mask {
            None => ArrayGeometry::ula(g.slots, g.spacing_over_lambda)?,
            Some(MaskSpec::Explicit(active)) => {
                if active.len() != g.slots {
                    return Err(CliError::Config(format!(
                        "mask has {} entries but geometry has {} slots",
                        active.len(),
                        g.slots
                    )));
                }
                ArrayGeometry::masked(active.clone(), g.spacing_over_lambda)?
            }
            Some(MaskSpec::Random { keep, seed }) => {
                ArrayGeometry::random_subarray(g.slots, *keep, g.spacing_over_lambda, *seed)?
            }
        };
        Ok(geometry)
    }

    /// Synthesize the measurements: deterministic in the scenario's seeds.
    pub fn realize(&self) -> CliResult<Realization> {
        let geometry = self.build_geometry()?;
        let directions: Vec<f64> = self
            .scene
            .iter()
            .map(|s| s.direction_t())
            .collect::<CliResult<_>>()?;
        let base_amplitudes: Vec<Complex64> =
            self.scene.iter().map(|s| s.complex_amplitude()).collect();

        // One phase stream for the whole run so snapshot l's draw depends only
        // on (seed, l, K) and never on how earlier snapshots were consumed.
        let mut phase_rng = match self.phase_policy {
            PhasePolicy::Fixed => None,
            PhasePolicy::RandomPerSnapshot { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };

        let mut snapshots = Vec::with_capacity(self.snapshots);
        let mut noise_norms = Vec::with_capacity(self.snapshots);
        for l in 0..self.snapshots {
            let amplitudes: Vec<Complex64> = match phase_rng.as_mut() {
                None => base_amplitudes.clone(),
                Some(rng) => base_amplitudes
                    .iter()
                    .map(|&a| a * Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
                    .collect(),
            };
            let pairs: Vec<(f64, Complex64)> = directions
                .iter()
                .copied()
                .zip(amplitudes)
                .collect();
            let scene = SourceScene::from_pairs(&pairs)?;
            let clean = synthesize(&geometry, &scene)?;
            match self.snr_db {
                None => {
                    snapshots.push(clean.y);
                    noise_norms.push(0.0);
                }
                Some(snr) => {
                    let (noisy, noise) =
                        add_noise(&clean, snr, self.noise_seed.wrapping_add(l as u64))?;
                    snapshots.push(noisy.y);
                    noise_norms.push(noise.norm());
                }
            }
        }
        Ok(Realization {
            geometry,
            snapshots,
            noise_norms,
        })
    }

    /// Scene as core sources (fixed phases), mostly for report metadata.
    pub fn scene_sources(&self) -> CliResult<Vec<Source>> {
        self.scene
            .iter()
            .map(|s| {
                Ok(Source {
                    t: s.direction_t()?,
                    amplitude: s.complex_amplitude(),
                })
            })
            .collect()
    }
}
