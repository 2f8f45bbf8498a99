//! `beamcs` — command-line front end for grid-free compressive beamforming.
//!
//! Four subcommands cover the experiment lifecycle: `simulate` synthesizes
//! measurements from a scenario file, `estimate` runs one or more estimators
//! and writes a versioned JSON report (plus optional CSV/SVG renderings),
//! `reproduce-figure` rebuilds the shipped simulation studies, and `ingest`
//! validates externally produced snapshot CSVs.
//!
//! Angles are degrees on the command line and in scenario files; internally
//! everything is t = sin(theta).  Exit codes: 0 success, 2 configuration or
//! parse error, 3 solver failure, 1 I/O trouble.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

use beamcs_cli::error::{CliError, CliResult};
use beamcs_cli::figures;
use beamcs_cli::report::{spectrum_csv, support_csv, Report};
use beamcs_cli::run::{self, resolve_epsilon, ResolvedParams, Workload};
use beamcs_cli::scenario::{EpsilonPolicy, EpsilonSpec, Method, Scenario};
use beamcs_cli::snapshots::{write_atomic, SnapshotFile};
use beamcs_cli::svg::{Plot, SeriesKind};

#[derive(Parser)]
#[command(
    name = "beamcs",
    version,
    about = "Grid-free compressive beamforming: simulation, estimation, figure reproduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// JSON report only.
    Json,
    /// JSON report plus CSV renderings of spectra and supports.
    Csv,
    /// JSON report plus SVG plots.
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the measurements of a scenario into a snapshot CSV.
    Simulate {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output snapshot CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's SNR (dB).
        #[arg(long)]
        snr: Option<f64>,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run estimators against a scenario or an ingested snapshot file.
    Estimate {
        /// Scenario JSON file (synthesizes its own measurements).
        #[arg(long, conflicts_with = "input")]
        scenario: Option<PathBuf>,
        /// Snapshot CSV to estimate from instead of synthesizing.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Run a single method with the flags below; without it, a scenario's
        /// own estimator list is run.
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Noise budget: a number, or "noise-norm" for the realized noise
        /// norm (scenario runs only).
        #[arg(long)]
        epsilon: Option<String>,
        /// Model order for subspace/root methods (also caps grid-free).
        #[arg(long)]
        sources: Option<usize>,
        /// Grid pitch in degrees for gridded methods.
        #[arg(long = "grid-step")]
        grid_step: Option<f64>,
        /// Override the scenario's SNR (dB).
        #[arg(long)]
        snr: Option<f64>,
        /// Override the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the report and renderings.
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
        /// What to write besides the JSON report.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Rebuild the artifact bundle of one shipped simulation figure (1-6).
    ReproduceFigure {
        /// Figure id.
        id: u32,
        /// Directory to place `fig<id>/` under.
        #[arg(long = "out-dir", default_value = "figures")]
        out_dir: PathBuf,
    },
    /// Validate a snapshot CSV and print a summary.
    Ingest {
        /// Snapshot CSV file.
        file: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            snr,
            seed,
        } => simulate(&scenario, &out, snr, seed),
        Command::Estimate {
            scenario,
            input,
            method,
            epsilon,
            sources,
            grid_step,
            snr,
            seed,
            out_dir,
            format,
        } => estimate(
            scenario.as_deref(),
            input.as_deref(),
            method,
            epsilon.as_deref(),
            sources,
            grid_step,
            snr,
            seed,
            &out_dir,
            format,
        ),
        Command::ReproduceFigure { id, out_dir } => {
            let written = figures::reproduce_figure(id, &out_dir)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Ingest { file } => ingest(&file),
    }
}

fn load_scenario(path: &Path, snr: Option<f64>, seed: Option<u64>) -> CliResult<Scenario> {
    let mut scenario = Scenario::from_path(path)?;
    if let Some(snr) = snr {
        scenario.snr_db = Some(snr);
    }
    if let Some(seed) = seed {
        scenario.noise_seed = seed;
    }
    Ok(scenario)
}

fn simulate(path: &Path, out: &Path, snr: Option<f64>, seed: Option<u64>) -> CliResult<()> {
    let scenario = load_scenario(path, snr, seed)?;
    let realization = scenario.realize()?;
    let file = SnapshotFile::new(
        realization.geometry.clone(),
        "normalized",
        realization.snapshots.clone(),
    )?;
    file.write(out)?;
    println!(
        "wrote {} ({} sensors x {} snapshots)",
        out.display(),
        realization.geometry.num_active(),
        realization.snapshots.len()
    );
    Ok(())
}

fn parse_epsilon_flag(s: &str) -> CliResult<EpsilonSpec> {
    if s == "noise-norm" {
        return Ok(EpsilonSpec::Policy(EpsilonPolicy::NoiseNorm));
    }
    s.parse::<f64>().map(EpsilonSpec::Fixed).map_err(|_| {
        CliError::Config(format!(
            "--epsilon must be a number or \"noise-norm\", got '{s}'"
        ))
    })
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    scenario: Option<&Path>,
    input: Option<&Path>,
    method: Option<Method>,
    epsilon: Option<&str>,
    sources: Option<usize>,
    grid_step: Option<f64>,
    snr: Option<f64>,
    seed: Option<u64>,
    out_dir: &Path,
    format: OutputFormat,
) -> CliResult<()> {
    if method.is_none() && (epsilon.is_some() || sources.is_some() || grid_step.is_some()) {
        return Err(CliError::Config(
            "--epsilon/--sources/--grid-step select parameters for --method; \
             without --method the scenario's estimator list is used as written"
                .into(),
        ));
    }

    let report = match (scenario, input) {
        (Some(path), None) => {
            let scenario = load_scenario(path, snr, seed)?;
            match method {
                None => run::run_scenario(&scenario)?,
                Some(method) => {
                    let workload = Workload::from_scenario(&scenario)?;
                    let params = ResolvedParams {
                        epsilon: epsilon
                            .map(parse_epsilon_flag)
                            .transpose()?
                            .map(|e| resolve_epsilon(&e, &workload))
                            .transpose()?,
                        sources,
                        grid_step_deg: grid_step,
                    };
                    run::run_single(&workload, method, &params)?
                }
            }
        }
        (None, Some(path)) => {
            if snr.is_some() || seed.is_some() {
                return Err(CliError::Config(
                    "--snr/--seed control synthesis and only apply to --scenario runs".into(),
                ));
            }
            let method = method.ok_or_else(|| {
                CliError::Config("estimating from --input requires --method".into())
            })?;
            let file = SnapshotFile::read(path)?;
            let workload = Workload::from_snapshots(file.geometry.clone(), file.snapshots.clone());
            let params = ResolvedParams {
                epsilon: epsilon
                    .map(parse_epsilon_flag)
                    .transpose()?
                    .map(|e| resolve_epsilon(&e, &workload))
                    .transpose()?,
                sources,
                grid_step_deg: grid_step,
            };
            run::run_single(&workload, method, &params)?
        }
        (None, None) => {
            return Err(CliError::Config(
                "estimate needs --scenario <file> or --input <file>".into(),
            ));
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with prevents this"),
    };

    let report_path = out_dir.join("report.json");
    report.write(&report_path)?;
    println!("wrote {}", report_path.display());

    match format {
        OutputFormat::Json => {}
        OutputFormat::Csv => write_estimate_csvs(out_dir, &report)?,
        OutputFormat::Svg => write_estimate_svgs(out_dir, &report)?,
    }
    Ok(())
}

fn write_estimate_csvs(out_dir: &Path, report: &Report) -> CliResult<()> {
    for est in &report.estimates {
        if let Some(spectrum) = &est.spectrum {
            let p = out_dir.join(format!("{}_spectrum.csv", est.method));
            write_atomic(&p, spectrum_csv(spectrum).as_bytes())?;
            println!("wrote {}", p.display());
        }
        if !est.support_t.is_empty() {
            let p = out_dir.join(format!("{}_support.csv", est.method));
            write_atomic(&p, support_csv(est).as_bytes())?;
            println!("wrote {}", p.display());
        }
        if let Some(dual) = &est.dual_polynomial {
            let mut csv = String::from("t,modulus\n");
            for (t, m) in dual.t.iter().zip(&dual.modulus) {
                csv.push_str(&format!("{t},{m}\n"));
            }
            let p = out_dir.join(format!("{}_dual.csv", est.method));
            write_atomic(&p, csv.as_bytes())?;
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn write_estimate_svgs(out_dir: &Path, report: &Report) -> CliResult<()> {
    for est in &report.estimates {
        if let Some(spectrum) = &est.spectrum {
            let mut plot = Plot::new(
                &format!("{} spectrum", est.method),
                "angle (degrees)",
                &spectrum.quantity,
            )
            .with_x_range(-90.0, 90.0);
            plot.add(
                SeriesKind::Line,
                &est.method,
                spectrum
                    .grid_theta_deg
                    .iter()
                    .copied()
                    .zip(spectrum.values.iter().copied())
                    .collect(),
            );
            let p = out_dir.join(format!("{}_spectrum.svg", est.method));
            write_atomic(&p, plot.render().as_bytes())?;
            println!("wrote {}", p.display());
        }
        if !est.support_t.is_empty() {
            let mut plot = Plot::new(
                &format!("{} estimated support", est.method),
                "angle (degrees)",
                "amplitude modulus",
            )
            .with_x_range(-90.0, 90.0);
            let pts: Vec<(f64, f64)> = est
                .support_theta_deg
                .iter()
                .enumerate()
                .map(|(i, &th)| {
                    let m = est
                        .amplitudes
                        .get(i)
                        .map_or(1.0, |a| (a[0] * a[0] + a[1] * a[1]).sqrt());
                    (th, m)
                })
                .collect();
            plot.add(SeriesKind::Stems, "estimated", pts);
            let p = out_dir.join(format!("{}_support.svg", est.method));
            write_atomic(&p, plot.render().as_bytes())?;
            println!("wrote {}", p.display());
        }
        if let Some(dual) = &est.dual_polynomial {
            let mut plot = Plot::new(
                "dual polynomial modulus",
                "t = sin(angle)",
                "|H(t)|",
            )
            .with_x_range(-1.0, 1.0)
            .with_y_range(0.0, 1.15);
            plot.add(
                SeriesKind::Line,
                "|H|",
                dual.t.iter().copied().zip(dual.modulus.iter().copied()).collect(),
            );
            let p = out_dir.join(format!("{}_dual.svg", est.method));
            write_atomic(&p, plot.render().as_bytes())?;
            println!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn ingest(path: &Path) -> CliResult<()> {
    let file = SnapshotFile::read(path)?;
    println!(
        "{}: {} sensors, {} snapshots, spacing {} wavelengths, frequency label '{}'",
        path.display(),
        file.geometry.num_active(),
        file.snapshots.len(),
        file.geometry.spacing_over_lambda(),
        file.frequency
    );
    for (l, y) in file.snapshots.iter().enumerate() {
        println!("  snapshot {l}: norm {:.6e}", y.norm());
    }
    Ok(())
}
