//! Estimator dispatch: turn a realized scenario plus method parameters into
//! an [`EstimateReport`].
//!
//! All angle handling at this layer is in degrees; directions are converted
//! to `t = sin(theta)` exactly once on the way in and back to degrees on the
//! way out.  Parameters an estimator genuinely needs (noise budget, model
//! order, grid pitch) are mandatory — there are no silent defaults.

use beamcs::atomic::{grid_free_solve, GridFreeOptions};
use beamcs::classical::{
    amplitudes_from_support, eig_split, local_maxima, min_energy_extension, min_norm_spectrum,
    music_spectrum, mvdr_spectrum, root_min_norm, root_music, root_mvdr, CrossSpectral,
};
use beamcs::ArrayGeometry;
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;

use crate::error::{CliError, CliResult};
use crate::report::{
    DualSamples, EstimateReport, Report, ScenarioEcho, SpectrumReport, SupportAssertion,
};
use crate::scenario::{EpsilonPolicy, EpsilonSpec, EstimatorSpec, Method, Scenario};

/// Everything an estimator can be run against: measurements plus the facts
/// needed to resolve parameter policies and annotate the report.
#[derive(Debug, Clone)]
pub struct Workload {
    pub geometry: ArrayGeometry,
    pub snapshots: Vec<DVector<Complex64>>,
    /// Exact noise norms per snapshot when the noise was drawn by us;
    /// `None` for ingested data where the noise level is unknown.
    pub noise_norms: Option<Vec<f64>>,
    pub snr_db: Option<f64>,
    /// Ground truth for the report echo (empty for ingested data).
    pub true_support_t: Vec<f64>,
    pub true_amplitudes: Vec<Complex64>,
    /// Expected support for report assertions, with tolerance in t.
    pub expected: Option<(Vec<f64>, f64)>,
}

impl Workload {
    /// Build from a scenario by synthesizing its measurements.
    pub fn from_scenario(scenario: &Scenario) -> CliResult<Self> {
        let realization = scenario.realize()?;
        let sources = scenario.scene_sources()?;
        Ok(Workload {
            geometry: realization.geometry,
            snapshots: realization.snapshots,
            noise_norms: Some(realization.noise_norms),
            snr_db: scenario.snr_db,
            true_support_t: sources.iter().map(|s| s.t).collect(),
            true_amplitudes: sources.iter().map(|s| s.amplitude).collect(),
            expected: scenario
                .expected_support_t
                .clone()
                .map(|e| (e, scenario.support_tolerance_t)),
        })
    }

    /// Build from ingested snapshot data (no ground truth, unknown noise).
    pub fn from_snapshots(geometry: ArrayGeometry, snapshots: Vec<DVector<Complex64>>) -> Self {
        Workload {
            geometry,
            snapshots,
            noise_norms: None,
            snr_db: None,
            true_support_t: Vec::new(),
            true_amplitudes: Vec::new(),
            expected: None,
        }
    }

    /// Report header describing this workload.
    pub fn echo(&self) -> ScenarioEcho {
        ScenarioEcho {
            slots: self.geometry.slots(),
            sensors: self.geometry.num_active(),
            active_slots: self.geometry.active_slots().collect(),
            spacing_over_lambda: self.geometry.spacing_over_lambda(),
            snapshots: self.snapshots.len(),
            snr_db: self.snr_db,
            true_support_t: self.true_support_t.clone(),
            true_amplitudes: self
                .true_amplitudes
                .iter()
                .map(|a| [a.re, a.im])
                .collect(),
        }
    }
}

/// Fully resolved estimator parameters (policies already applied).
#[derive(Debug, Clone, Copy, Default)]
pub struct ResolvedParams {
    pub epsilon: Option<f64>,
    pub sources: Option<usize>,
    pub grid_step_deg: Option<f64>,
}

/// Resolve an epsilon specification against the workload.
pub fn resolve_epsilon(spec: &EpsilonSpec, workload: &Workload) -> CliResult<f64> {
    match spec {
        EpsilonSpec::Fixed(v) => {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(CliError::Config(format!(
                    "epsilon must be finite and >= 0, got {v}"
                )));
            }
            Ok(*v)
        }
        EpsilonSpec::Policy(EpsilonPolicy::NoiseNorm) => match &workload.noise_norms {
            Some(norms) => Ok(norms[0]),
            None => Err(CliError::Config(
                "epsilon \"noise-norm\" needs a synthesized scenario; \
                 ingested data has an unknown noise level — give a numeric epsilon"
                    .into(),
            )),
        },
    }
}

/// Resolve the parameters of one scenario estimator entry.
pub fn resolve_estimator(spec: &EstimatorSpec, workload: &Workload) -> CliResult<ResolvedParams> {
    let epsilon = spec
        .epsilon
        .as_ref()
        .map(|e| resolve_epsilon(e, workload))
        .transpose()?;
    if let Some(k) = spec.sources {
        if k == 0 {
            return Err(CliError::Config("sources must be at least 1".into()));
        }
    }
    if let Some(step) = spec.grid_step_deg {
        if !(step.is_finite() && step > 0.0 && step <= 180.0) {
            return Err(CliError::Config(format!(
                "grid-step must lie in (0, 180] degrees, got {step}"
            )));
        }
    }
    Ok(ResolvedParams {
        epsilon,
        sources: spec.sources,
        grid_step_deg: spec.grid_step_deg,
    })
}

/// Run every estimator the scenario lists and assemble the report.
pub fn run_scenario(scenario: &Scenario) -> CliResult<Report> {
    let workload = Workload::from_scenario(scenario)?;
    if scenario.estimators.is_empty() {
        return Err(CliError::Config(
            "scenario lists no estimators; add some or pass --method".into(),
        ));
    }
    let mut estimates = Vec::new();
    for spec in &scenario.estimators {
        let params = resolve_estimator(spec, &workload)?;
        estimates.push(run_estimator(&workload, spec.method, &params)?);
    }
    Ok(Report {
        schema_version: crate::scenario::SCHEMA_VERSION,
        scenario: workload.echo(),
        estimates,
    })
}

/// Run a single estimator against a workload and assemble a one-entry report.
pub fn run_single(
    workload: &Workload,
    method: Method,
    params: &ResolvedParams,
) -> CliResult<Report> {
    let estimate = run_estimator(workload, method, params)?;
    Ok(Report {
        schema_version: crate::scenario::SCHEMA_VERSION,
        scenario: workload.echo(),
        estimates: vec![estimate],
    })
}

fn require<T: Copy>(value: Option<T>, what: &str, method: Method) -> CliResult<T> {
    value.ok_or_else(|| {
        CliError::Config(format!(
            "method '{}' requires {what} (no silent default)",
            method.name()
        ))
    })
}

/// Uniform grid of directions: degrees from −90 to 90 at `step_deg`, plus the
/// corresponding t-values.
pub fn degree_grid(step_deg: f64) -> (Vec<f64>, Vec<f64>) {
    let mut thetas = Vec::new();
    let mut k = 0usize;
    loop {
        let theta = -90.0 + step_deg * k as f64;
        if theta > 90.0 + 1e-9 {
            break;
        }
        thetas.push(theta.min(90.0));
        k += 1;
    }
    let ts = thetas
        .iter()
        .map(|&th| (th * PI / 180.0).sin().clamp(-1.0, 1.0))
        .collect();
    (thetas, ts)
}

fn to_degrees(t: f64) -> f64 {
    t.clamp(-1.0, 1.0).asin() * 180.0 / PI
}

/// Top-`k` strict local maxima of a sampled curve (argmax fallback when the
/// curve has no interior peak), returned in ascending index order.
fn peak_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut peaks = local_maxima(values);
    if peaks.is_empty() && !values.is_empty() {
        let argmax = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        peaks.push(argmax);
    }
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(k);
    peaks.sort_unstable();
    peaks
}

/// Least-squares amplitudes on the first snapshot, but only when there is a
/// single snapshot — with several, per-snapshot phases make one complex
/// amplitude per source meaningless.
fn fit_if_single(
    workload: &Workload,
    support: &[f64],
) -> CliResult<(Vec<Complex64>, Option<f64>)> {
    if workload.snapshots.len() != 1 || support.is_empty() {
        return Ok((Vec::new(), None));
    }
    let fit = amplitudes_from_support(&workload.geometry, &workload.snapshots[0], support)?;
    Ok((fit.amplitudes, Some(fit.residual)))
}

fn attach_assertion(workload: &Workload, report: &mut EstimateReport) {
    if let Some((expected, tol)) = &workload.expected {
        report.assertion = Some(SupportAssertion::check(expected, *tol, &report.support_t));
    }
}

/// Run one estimator; the heart of the CLI.
pub fn run_estimator(
    workload: &Workload,
    method: Method,
    params: &ResolvedParams,
) -> CliResult<EstimateReport> {
    let started = Instant::now();
    let mut report = dispatch(workload, method, params)?;
    report.support_theta_deg = report.support_t.iter().map(|&t| to_degrees(t)).collect();
    attach_assertion(workload, &mut report);
    eprintln!(
        "[timing] {} finished in {:.3} s",
        method.name(),
        started.elapsed().as_secs_f64()
    );
    Ok(report)
}

fn blank(method: Method) -> EstimateReport {
    EstimateReport {
        method: method.name().to_string(),
        support_t: Vec::new(),
        support_theta_deg: Vec::new(),
        amplitudes: Vec::new(),
        resolvable: None,
        atomic_norm: None,
        residual: None,
        duality_gap_check: None,
        spectrum: None,
        dual_polynomial: None,
        assertion: None,
    }
}

fn dispatch(
    workload: &Workload,
    method: Method,
    params: &ResolvedParams,
) -> CliResult<EstimateReport> {
    let geometry = &workload.geometry;
    let y0 = &workload.snapshots[0];
    let mut report = blank(method);

    match method {
        Method::Cbf => {
            let step = require(params.grid_step_deg, "--grid-step", method)?;
            let (thetas, ts) = degree_grid(step);
            let csm = CrossSpectral::from_snapshots(geometry, &workload.snapshots)?;
            let power: Vec<f64> = ts
                .iter()
                .map(|&t| {
                    let a = geometry.steering_vector(t)?;
                    Ok((a.dotc(&(csm.matrix() * &a))).re.max(0.0))
                })
                .collect::<beamcs::Result<_>>()?;
            if let Some(k) = params.sources {
                let idx = peak_indices(&power, k);
                report.support_t = idx.iter().map(|&i| ts[i]).collect();
                let (amps, residual) = fit_if_single(workload, &report.support_t)?;
                report.amplitudes = amps.iter().map(|a| [a.re, a.im]).collect();
                report.residual = residual;
            }
            report.spectrum = Some(SpectrumReport {
                quantity: "power".into(),
                grid_theta_deg: thetas,
                values: power,
            });
        }
        Method::L2 => {
            let step = require(params.grid_step_deg, "--grid-step", method)?;
            let (thetas, ts) = degree_grid(step);
            let x = min_energy_extension(geometry, y0, &ts)?;
            finish_gridded(&mut report, &thetas, &ts, &x, params.sources);
            report.residual = Some(grid_residual(geometry, y0, &ts, &x)?);
        }
        Method::CsGrid => {
            let step = require(params.grid_step_deg, "--grid-step", method)?;
            let epsilon = require(params.epsilon, "--epsilon", method)?;
            let (thetas, ts) = degree_grid(step);
            let a = geometry.sensing_matrix(&ts)?;
            let problem = beamcs::bpdn::BpdnProblem::new(a, y0.clone(), epsilon)?;
            let solution = beamcs::bpdn::bpdn_solve(&problem, &Default::default())?;
            let x: Vec<Complex64> = solution.x.iter().copied().collect();
            finish_gridded(&mut report, &thetas, &ts, &x, params.sources);
            report.residual = Some(solution.residual);
        }
        Method::Gridfree => {
            let (filled, _est) = gridfree_estimate(workload, params)?;
            report = filled;
        }
        Method::Mvdr => {
            let step = require(params.grid_step_deg, "--grid-step", method)?;
            let (thetas, ts) = degree_grid(step);
            let csm = CrossSpectral::from_snapshots(geometry, &workload.snapshots)?;
            let spec = mvdr_spectrum(&csm, &ts)?;
            if let Some(k) = params.sources {
                let idx = peak_indices(&spec.power, k);
                report.support_t = idx.iter().map(|&i| ts[i]).collect();
                let (amps, residual) = fit_if_single(workload, &report.support_t)?;
                report.amplitudes = amps.iter().map(|a| [a.re, a.im]).collect();
                report.residual = residual;
            }
            report.spectrum = Some(SpectrumReport {
                quantity: "power".into(),
                grid_theta_deg: thetas,
                values: spec.power,
            });
        }
        Method::Music | Method::Minnorm => {
            let step = require(params.grid_step_deg, "--grid-step", method)?;
            let k = require(params.sources, "--sources", method)?;
            let (thetas, ts) = degree_grid(step);
            let csm = CrossSpectral::from_snapshots(geometry, &workload.snapshots)?;
            let split = eig_split(&csm, k)?;
            let power = match method {
                Method::Music => music_spectrum(&split, &ts)?,
                _ => min_norm_spectrum(&split, &ts)?,
            };
            let idx = peak_indices(&power, k);
            report.support_t = idx.iter().map(|&i| ts[i]).collect();
            let (amps, residual) = fit_if_single(workload, &report.support_t)?;
            report.amplitudes = amps.iter().map(|a| [a.re, a.im]).collect();
            report.residual = residual;
            report.spectrum = Some(SpectrumReport {
                quantity: "power".into(),
                grid_theta_deg: thetas,
                values: power,
            });
        }
        Method::RootMvdr | Method::RootMusic | Method::RootMinnorm => {
            let k = require(params.sources, "--sources", method)?;
            let csm = CrossSpectral::from_snapshots(geometry, &workload.snapshots)?;
            let support = match method {
                Method::RootMvdr => root_mvdr(&csm, k)?,
                Method::RootMusic => root_music(&eig_split(&csm, k)?, k)?,
                _ => root_min_norm(&eig_split(&csm, k)?, k)?,
            };
            report.support_t = support;
            let (amps, residual) = fit_if_single(workload, &report.support_t)?;
            report.amplitudes = amps.iter().map(|a| [a.re, a.im]).collect();
            report.residual = residual;
        }
    }
    Ok(report)
}

/// Grid-free solve with the report fields filled in; the raw estimate is
/// returned too so figure rendering can reach the dual vector and its roots.
fn gridfree_estimate(
    workload: &Workload,
    params: &ResolvedParams,
) -> CliResult<(EstimateReport, beamcs::atomic::DoaEstimate)> {
    let epsilon = require(params.epsilon, "--epsilon (0 for noiseless)", Method::Gridfree)?;
    let opts = GridFreeOptions {
        epsilon,
        max_sources: params.sources,
        ..Default::default()
    };
    let est = grid_free_solve(&workload.geometry, &workload.snapshots[0], &opts)?;
    let mut report = blank(Method::Gridfree);
    report.support_t = est.support.clone();
    report.amplitudes = est.amplitudes.iter().map(|a| [a.re, a.im]).collect();
    report.resolvable = Some(est.resolvable);
    report.atomic_norm = Some(est.atomic_norm);
    report.residual = Some(est.residual);
    report.duality_gap_check = Some(est.duality_gap_check);
    let samples = 1001;
    let t: Vec<f64> = (0..samples)
        .map(|i| -1.0 + 2.0 * i as f64 / (samples - 1) as f64)
        .collect();
    let modulus = t.iter().map(|&ti| est.dual.eval(ti).norm()).collect();
    report.dual_polynomial = Some(DualSamples { t, modulus });
    Ok((report, est))
}

/// [`run_estimator`] for the grid-free method, additionally returning the raw
/// estimate for figure rendering (avoids solving the program twice).
pub fn run_gridfree_rich(
    workload: &Workload,
    params: &ResolvedParams,
) -> CliResult<(EstimateReport, beamcs::atomic::DoaEstimate)> {
    let started = Instant::now();
    let (mut report, est) = gridfree_estimate(workload, params)?;
    report.support_theta_deg = report.support_t.iter().map(|&t| to_degrees(t)).collect();
    attach_assertion(workload, &mut report);
    eprintln!(
        "[timing] gridfree finished in {:.3} s",
        started.elapsed().as_secs_f64()
    );
    Ok((report, est))
}

/// Shared tail for the gridded linear methods (`l2`, `cs-grid`): record the
/// modulus profile, and when a model order is given, report the top bins with
/// their complex grid amplitudes.
fn finish_gridded(
    report: &mut EstimateReport,
    thetas: &[f64],
    ts: &[f64],
    x: &[Complex64],
    sources: Option<usize>,
) {
    let moduli: Vec<f64> = x.iter().map(|v| v.norm()).collect();
    if let Some(k) = sources {
        let idx = peak_indices(&moduli, k);
        report.support_t = idx.iter().map(|&i| ts[i]).collect();
        report.amplitudes = idx.iter().map(|&i| [x[i].re, x[i].im]).collect();
    }
    report.spectrum = Some(SpectrumReport {
        quantity: "amplitude-modulus".into(),
        grid_theta_deg: thetas.to_vec(),
        values: moduli,
    });
}

/// ‖A x − y‖₂ for a gridded amplitude vector.
fn grid_residual(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    ts: &[f64],
    x: &[Complex64],
) -> CliResult<f64> {
    let a = geometry.sensing_matrix(ts)?;
    let xv = DVector::from_iterator(x.len(), x.iter().copied());
    Ok((a * xv - y).norm())
}

