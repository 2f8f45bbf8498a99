//! Figure bundles: canned scenario runs that write the CSV curves, JSON
//! estimates and SVG panels for each of the six simulation studies shipped
//! under `scenarios/`.
//!
//! Every bundle is a plain scenario run (the JSON files are embedded at
//! compile time, so the binary works from any directory) followed by plot
//! rendering from the report data.  Artifacts land in `<out>/fig<N>/`.

use beamcs::atomic::DoaEstimate;
use beamcs::rooting::{autocorrelation, build_p_plus, poly_roots};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::report::{spectrum_csv, support_csv, EstimateReport, Report};
use crate::run::{resolve_estimator, run_estimator, run_gridfree_rich, Workload};
use crate::scenario::{Method, Scenario};
use crate::snapshots::write_atomic;
use crate::svg::{unit_circle_plot, Plot, SeriesKind};

const FIG1A: &str = include_str!("../../../scenarios/fig1a.json");
const FIG1B: &str = include_str!("../../../scenarios/fig1b.json");
const FIG1C: &str = include_str!("../../../scenarios/fig1c.json");
const FIG2: &str = include_str!("../../../scenarios/fig2.json");
const FIG3: &str = include_str!("../../../scenarios/fig3.json");
const FIG4_REAL10: &str = include_str!("../../../scenarios/fig4_real10.json");
const FIG4_REAL11: &str = include_str!("../../../scenarios/fig4_real11.json");
const FIG4_COMPLEX10: &str = include_str!("../../../scenarios/fig4_complex10.json");
const FIG4_CLOSE: &str = include_str!("../../../scenarios/fig4_complex10_close.json");
const FIG5: &str = include_str!("../../../scenarios/fig5.json");
const FIG6: &str = include_str!("../../../scenarios/fig6.json");

/// Reproduce one of the six simulation figures into `<out_dir>/fig<id>/`.
pub fn reproduce_figure(id: u32, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let dir = out_dir.join(format!("fig{id}"));
    match id {
        1 => figure1(&dir),
        2 => figure2(&dir),
        3 => figure3(&dir),
        4 => figure4(&dir),
        5 => figure5(&dir),
        6 => figure6(&dir),
        _ => Err(CliError::Config(format!(
            "unknown figure id {id}; valid ids are 1..=6"
        ))),
    }
}

/// Run a scenario, keeping the raw grid-free estimate when there is one.
fn run_rich(json: &str) -> CliResult<(Scenario, Report, Option<DoaEstimate>)> {
    let scenario = Scenario::from_json(json)?;
    let workload = Workload::from_scenario(&scenario)?;
    let mut estimates = Vec::new();
    let mut rich = None;
    for spec in &scenario.estimators {
        let params = resolve_estimator(spec, &workload)?;
        if spec.method == Method::Gridfree {
            let (report, est) = run_gridfree_rich(&workload, &params)?;
            estimates.push(report);
            rich = Some(est);
        } else {
            estimates.push(run_estimator(&workload, spec.method, &params)?);
        }
    }
    let report = Report {
        schema_version: crate::scenario::SCHEMA_VERSION,
        scenario: workload.echo(),
        estimates,
    };
    Ok((scenario, report, rich))
}

/// Write the report plus per-estimate CSV renderings.
fn write_common(dir: &Path, stem: &str, report: &Report) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let report_path = dir.join(format!("{stem}_report.json"));
    report.write(&report_path)?;
    written.push(report_path);
    for est in &report.estimates {
        if let Some(spectrum) = &est.spectrum {
            let p = dir.join(format!("{stem}_{}_spectrum.csv", est.method));
            write_atomic(&p, spectrum_csv(spectrum).as_bytes())?;
            written.push(p);
        }
        if !est.support_t.is_empty() {
            let p = dir.join(format!("{stem}_{}_support.csv", est.method));
            write_atomic(&p, support_csv(est).as_bytes())?;
            written.push(p);
        }
        if let Some(dual) = &est.dual_polynomial {
            let mut csv = String::from("t,modulus\n");
            for (t, m) in dual.t.iter().zip(&dual.modulus) {
                csv.push_str(&format!("{t},{m}\n"));
            }
            let p = dir.join(format!("{stem}_{}_dual.csv", est.method));
            write_atomic(&p, csv.as_bytes())?;
            written.push(p);
        }
    }
    Ok(written)
}

fn find<'r>(report: &'r Report, method: &str) -> CliResult<&'r EstimateReport> {
    report
        .estimates
        .iter()
        .find(|e| e.method == method)
        .ok_or_else(|| CliError::Config(format!("figure scenario lacks a '{method}' estimate")))
}

fn truth_points_theta(scenario: &Scenario) -> CliResult<Vec<(f64, f64)>> {
    scenario
        .scene_sources()?
        .iter()
        .map(|s| Ok((s.t.asin() * 180.0 / PI, s.amplitude.norm())))
        .collect()
}

fn truth_points_t(scenario: &Scenario) -> CliResult<Vec<(f64, f64)>> {
    scenario
        .scene_sources()?
        .iter()
        .map(|s| Ok((s.t, s.amplitude.norm())))
        .collect()
}

fn normalized(values: &[f64]) -> Vec<f64> {
    let peak = values.iter().cloned().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return values.to_vec();
    }
    values.iter().map(|v| v / peak).collect()
}

fn db(values: &[f64], floor_db: f64) -> Vec<f64> {
    let peak = values.iter().cloned().fold(0.0f64, f64::max);
    values
        .iter()
        .map(|&v| {
            if peak <= 0.0 || v <= 0.0 {
                floor_db
            } else {
                (10.0 * (v / peak).log10()).max(floor_db)
            }
        })
        .collect()
}

/// Basis-mismatch study: gridded sparse recovery vs the beamformer on a
/// coarse grid, an off-grid scene, and a refined grid.
fn figure1(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (stem, json, label) in [
        ("panel_a", FIG1A, "sources on the 5-degree grid"),
        ("panel_b", FIG1B, "17-degree source off the 5-degree grid"),
        ("panel_c", FIG1C, "1-degree grid"),
    ] {
        let (scenario, report, _) = run_rich(json)?;
        written.extend(write_common(dir, stem, &report)?);

        let cbf = find(&report, "cbf")?;
        let cs = find(&report, "cs-grid")?;
        let cbf_spec = cbf.spectrum.as_ref().unwrap();
        let cs_spec = cs.spectrum.as_ref().unwrap();
        let mut plot = Plot::new(
            &format!("Gridded sparse recovery: {label}"),
            "angle (degrees)",
            "normalized magnitude",
        )
        .with_x_range(-90.0, 90.0)
        .with_y_range(0.0, 1.12);
        // CBF power normalized to its own peak (amplitude scale).
        let cbf_mag: Vec<f64> = cbf_spec.values.iter().map(|v| v.max(0.0).sqrt()).collect();
        plot.add(
            SeriesKind::Line,
            "beamformer",
            cbf_spec
                .grid_theta_deg
                .iter()
                .copied()
                .zip(normalized(&cbf_mag))
                .collect(),
        );
        plot.add(
            SeriesKind::Stems,
            "sparse (grid)",
            cs_spec
                .grid_theta_deg
                .iter()
                .copied()
                .zip(normalized(&cs_spec.values))
                .collect(),
        );
        plot.add(SeriesKind::Markers, "truth", truth_points_theta(&scenario)?);
        let svg_path = dir.join(format!("{stem}.svg"));
        write_atomic(&svg_path, plot.render().as_bytes())?;
        written.push(svg_path);
    }
    Ok(written)
}

/// Dual certificate geometry: |H(t)| grazing the level one at the support,
/// and the conjugate-reciprocal root pairs pinching the unit circle.
fn figure2(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let (scenario, report, est) = run_rich(FIG2)?;
    let mut written = write_common(dir, "dual", &report)?;
    let est = est.expect("fig2 scenario runs gridfree");

    written.push(dual_modulus_svg(
        dir,
        "dual_modulus.svg",
        "Dual polynomial modulus, noiseless three-source scene",
        &report,
        &scenario,
    )?);
    written.push(root_scatter_svg(dir, "roots.svg", &est)?);
    Ok(written)
}

/// High-dynamic-range recovery: the weak source the beamformer misses.
fn figure3(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let (scenario, report, _) = run_rich(FIG3)?;
    let mut written = write_common(dir, "recovery", &report)?;

    let cbf = find(&report, "cbf")?;
    let gf = find(&report, "gridfree")?;
    let cbf_spec = cbf.spectrum.as_ref().unwrap();
    let floor = -50.0;
    let mut plot = Plot::new(
        "Grid-free recovery of a 40 dB dynamic-range scene",
        "angle (degrees)",
        "magnitude (dB re max)",
    )
    .with_x_range(-90.0, 90.0)
    .with_y_range(floor, 6.0);
    plot.add(
        SeriesKind::Line,
        "beamformer",
        cbf_spec
            .grid_theta_deg
            .iter()
            .copied()
            .zip(db(&cbf_spec.values, floor))
            .collect(),
    );
    let est_db: Vec<(f64, f64)> = gf
        .support_theta_deg
        .iter()
        .zip(&gf.amplitudes)
        .map(|(&th, a)| {
            let m = Complex64::new(a[0], a[1]).norm();
            (th, if m > 0.0 { (20.0 * m.log10()).max(floor) } else { floor })
        })
        .collect();
    plot.add(SeriesKind::Stems, "grid-free", est_db);
    let truth_db: Vec<(f64, f64)> = truth_points_theta(&scenario)?
        .into_iter()
        .map(|(th, m)| (th, if m > 0.0 { (20.0 * m.log10()).max(floor) } else { floor }))
        .collect();
    plot.add(SeriesKind::Markers, "truth", truth_db);
    let p = dir.join("magnitude.svg");
    write_atomic(&p, plot.render().as_bytes())?;
    written.push(p);
    Ok(written)
}

/// Source-count boundary: ten sources resolve, eleven exceed the budget,
/// complex amplitudes behave the same, and a separation violation breaks
/// the guarantee.
fn figure4(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (stem, json, title) in [
        ("real10", FIG4_REAL10, "10 positive sources (resolvable)"),
        ("real11", FIG4_REAL11, "11 sources (over the budget)"),
        ("complex10", FIG4_COMPLEX10, "10 complex sources, separated"),
        ("complex10_close", FIG4_CLOSE, "10 complex sources, separation violated"),
    ] {
        let (scenario, report, est) = run_rich(json)?;
        written.extend(write_common(dir, stem, &report)?);
        let est = est.expect("fig4 scenarios run gridfree");

        let gf = find(&report, "gridfree")?;
        let mut plot = Plot::new(
            &format!("{title} — resolvable: {}", est.resolvable),
            "t = sin(angle)",
            "amplitude modulus",
        )
        .with_x_range(-1.0, 1.0);
        plot.add(SeriesKind::Stems, "truth", truth_points_t(&scenario)?);
        let est_pts: Vec<(f64, f64)> = gf
            .support_t
            .iter()
            .zip(&gf.amplitudes)
            .map(|(&t, a)| (t, Complex64::new(a[0], a[1]).norm()))
            .collect();
        plot.add(SeriesKind::Markers, "estimated", est_pts);
        let p = dir.join(format!("{stem}.svg"));
        write_atomic(&p, plot.render().as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// Non-uniform array: 13 live sensors of 21 slots, still exact.
fn figure5(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let (scenario, report, est) = run_rich(FIG5)?;
    let mut written = write_common(dir, "masked", &report)?;
    let est = est.expect("fig5 scenario runs gridfree");

    written.push(dual_modulus_svg(
        dir,
        "dual_modulus.svg",
        "Dual polynomial modulus, 13-of-21 sensor mask",
        &report,
        &scenario,
    )?);
    written.push(root_scatter_svg(dir, "roots.svg", &est)?);
    Ok(written)
}

/// Noisy measurements at 20 dB SNR with the noise-norm budget.
fn figure6(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let (scenario, report, _) = run_rich(FIG6)?;
    let mut written = write_common(dir, "noisy", &report)?;
    written.push(dual_modulus_svg(
        dir,
        "dual_modulus.svg",
        "Dual polynomial modulus, SNR 20 dB",
        &report,
        &scenario,
    )?);
    Ok(written)
}

/// |H(t)| curve with the estimated support and the truth marked at level one.
fn dual_modulus_svg(
    dir: &Path,
    name: &str,
    title: &str,
    report: &Report,
    scenario: &Scenario,
) -> CliResult<PathBuf> {
    let gf = find(report, "gridfree")?;
    let dual = gf
        .dual_polynomial
        .as_ref()
        .ok_or_else(|| CliError::Config("gridfree estimate lacks dual samples".into()))?;
    let mut plot = Plot::new(title, "t = sin(angle)", "|H(t)|")
        .with_x_range(-1.0, 1.0)
        .with_y_range(0.0, 1.15);
    plot.add(
        SeriesKind::Line,
        "|H|",
        dual.t.iter().copied().zip(dual.modulus.iter().copied()).collect(),
    );
    plot.add(
        SeriesKind::Markers,
        "estimated",
        gf.support_t.iter().map(|&t| (t, 1.0)).collect(),
    );
    plot.add(
        SeriesKind::Markers,
        "truth",
        truth_points_t(scenario)?
            .into_iter()
            .map(|(t, _)| (t, 1.0))
            .collect(),
    );
    let p = dir.join(name);
    write_atomic(&p, plot.render().as_bytes())?;
    Ok(p)
}

/// Scatter of the certificate polynomial's roots against the unit circle,
/// with the accepted (support) roots circled.
fn root_scatter_svg(dir: &Path, name: &str, est: &DoaEstimate) -> CliResult<PathBuf> {
    let c: Vec<Complex64> = est.dual.c.iter().copied().collect();
    let r = autocorrelation(&c)?;
    let p_plus = build_p_plus(&r)?;
    let all_roots = poly_roots(&p_plus)?;
    let f = est.dual.geometry.spacing_over_lambda();
    let accepted: Vec<Complex64> = est
        .support
        .iter()
        .map(|&t| Complex64::from_polar(1.0, 2.0 * PI * f * t))
        .collect();
    let svg = unit_circle_plot("Certificate polynomial roots", &all_roots, &accepted);
    let p = dir.join(name);
    write_atomic(&p, svg.as_bytes())?;
    Ok(p)
}
