//! Classical array-processing baselines: grid-evaluated spectra, their
//! polynomial-rooting variants, and least-squares amplitude recovery on a
//! fixed support.
//!
//! Grid spectra (conventional, minimum-energy, MVDR, MUSIC, minimum-norm)
//! work on any geometry; the rooting variants replace the grid search with
//! [`crate::rooting::support_from_null_spectrum`] and therefore require a
//! filled uniform line, where lags between sensors are integers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::error::{Error, Result};
use crate::rooting::support_from_null_spectrum;

/// Evenly spaced directions covering `[-1, 1]` inclusive.
pub fn uniform_grid(count: usize) -> Vec<f64> {
    assert!(count >= 2, "a grid needs at least two points");
    (0..count)
        .map(|k| -1.0 + 2.0 * k as f64 / (count - 1) as f64)
        .collect()
}

/// Conventional (delay-and-sum) beamformer output `a(t)^H y` per grid point.
pub fn conventional_spectrum(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    grid: &[f64],
) -> Result<Vec<Complex64>> {
    check_length(geometry, y)?;
    grid.iter()
        .map(|&t| Ok(geometry.steering_vector(t)?.dotc(y)))
        .collect()
}

/// Minimum-energy grid extension: the smallest-norm grid amplitude vector
/// reproducing the measurement, `x = A^H (A A^H)^{-1} y`.
///
/// Every measurement is explained exactly, which is why this baseline never
/// concentrates energy: it spreads it over the whole grid.
pub fn min_energy_extension(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    grid: &[f64],
) -> Result<Vec<Complex64>> {
    check_length(geometry, y)?;
    let a = geometry.sensing_matrix(grid)?;
    let gram = &a * a.adjoint();
    let chol = nalgebra::Cholesky::new(gram).ok_or_else(|| {
        Error::Singular("grid too coarse: steering covariance is rank deficient".into())
    })?;
    let w = chol.solve(y);
    let x = a.adjoint() * w;
    Ok(x.iter().copied().collect())
}

/// Sample cross-spectral matrix `(1/L) sum_l y_l y_l^H` with its geometry.
#[derive(Debug, Clone)]
pub struct CrossSpectral {
    geometry: ArrayGeometry,
    matrix: DMatrix<Complex64>,
}

impl CrossSpectral {
    /// Averages snapshot outer products.
    pub fn from_snapshots(
        geometry: &ArrayGeometry,
        snapshots: &[DVector<Complex64>],
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Domain(
                "cross-spectral estimation needs at least one snapshot".into(),
            ));
        }
        let m = geometry.num_active();
        let mut c = DMatrix::<Complex64>::zeros(m, m);
        for (l, y) in snapshots.iter().enumerate() {
            if y.len() != m {
                return Err(Error::Domain(format!(
                    "snapshot {l} has {} entries, geometry has {m} active sensors",
                    y.len()
                )));
            }
            c.gerc(Complex64::new(1.0, 0.0), y, y, Complex64::new(1.0, 0.0));
        }
        c /= Complex64::new(snapshots.len() as f64, 0.0);
        Ok(Self {
            geometry: geometry.clone(),
            matrix: hermitianize(&c),
        })
    }

    /// Wraps an externally built matrix (validated and re-symmetrized).
    pub fn from_matrix(geometry: &ArrayGeometry, matrix: DMatrix<Complex64>) -> Result<Self> {
        let m = geometry.num_active();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::Domain(format!(
                "cross-spectral matrix is {}x{}, geometry has {m} active sensors",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = (&matrix - matrix.adjoint()).norm();
        if defect > 1e-8 * matrix.norm().max(1.0) {
            return Err(Error::Domain(format!(
                "cross-spectral matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            geometry: geometry.clone(),
            matrix: hermitianize(&matrix),
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

fn hermitianize(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (c + c.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigendecomposition of a cross-spectral matrix split at source count `k`.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    geometry: ArrayGeometry,
    /// `M x k`, eigenvectors of the `k` largest eigenvalues.
    signal: DMatrix<Complex64>,
    /// `M x (M - k)`, the orthogonal complement.
    noise: DMatrix<Complex64>,
    /// All eigenvalues, descending.
    eigenvalues: Vec<f64>,
}

impl SubspaceSplit {
    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }
    pub fn signal(&self) -> &DMatrix<Complex64> {
        &self.signal
    }
    pub fn noise(&self) -> &DMatrix<Complex64> {
        &self.noise
    }
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn num_sources(&self) -> usize {
        self.signal.ncols()
    }
}

/// Splits the eigenvectors of the cross-spectral matrix into the `k`
/// dominant (signal) directions and their complement (noise).
pub fn eig_split(csm: &CrossSpectral, k: usize) -> Result<SubspaceSplit> {
    let m = csm.matrix.nrows();
    if k == 0 || k >= m {
        return Err(Error::Domain(format!(
            "source count {k} must lie in 1..{m} to leave a noise subspace"
        )));
    }
    let eig = SymmetricEigen::new(csm.matrix.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let signal = DMatrix::from_columns(
        &order[..k]
            .iter()
            .map(|&c| eig.eigenvectors.column(c).into_owned())
            .collect::<Vec<_>>(),
    );
    let noise = DMatrix::from_columns(
        &order[k..]
            .iter()
            .map(|&c| eig.eigenvectors.column(c).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok(SubspaceSplit {
        geometry: csm.geometry.clone(),
        signal,
        noise,
        eigenvalues: order.iter().map(|&c| eig.eigenvalues[c]).collect(),
    })
}

/// Minimum-variance spectrum with a record of any diagonal loading that was
/// needed to invert the cross-spectral matrix.
#[derive(Debug, Clone)]
pub struct MvdrSpectrum {
    /// `1 / (a(t)^H C^{-1} a(t))` per grid point.
    pub power: Vec<f64>,
    /// Loading actually added to the diagonal, if any.
    pub diagonal_loading: Option<f64>,
}

/// Cholesky of `C`, loading the diagonal by growing multiples of
/// `1e-10 * trace(C)/M` when the matrix is numerically singular.
fn loaded_cholesky(
    csm: &CrossSpectral,
) -> Result<(nalgebra::Cholesky<Complex64, nalgebra::Dyn>, Option<f64>)> {
    let m = csm.matrix.nrows();
    let trace_avg = csm.matrix.diagonal().iter().map(|d| d.re).sum::<f64>() / m as f64;
    let base = 1e-10 * trace_avg.max(f64::MIN_POSITIVE);
    let mut loading = 0.0;
    loop {
        let mut c = csm.matrix.clone();
        if loading > 0.0 {
            for i in 0..m {
                c[(i, i)] += Complex64::new(loading, 0.0);
            }
        }
        if let Some(ch) = nalgebra::Cholesky::new(c) {
            return Ok((ch, (loading > 0.0).then_some(loading)));
        }
        loading = if loading == 0.0 { base } else { loading * 100.0 };
        if loading > 1e-2 * trace_avg.max(f64::MIN_POSITIVE) {
            return Err(Error::Singular(
                "cross-spectral matrix is not positive definite even under loading".into(),
            ));
        }
    }
}

/// Minimum-variance (distortionless response) spectrum on a grid.
pub fn mvdr_spectrum(csm: &CrossSpectral, grid: &[f64]) -> Result<MvdrSpectrum> {
    let (chol, diagonal_loading) = loaded_cholesky(csm)?;
    let mut power = Vec::with_capacity(grid.len());
    for &t in grid {
        let a = csm.geometry.steering_vector(t)?;
        let s = chol.solve(&a);
        let q = a.dotc(&s).re;
        power.push(1.0 / q.max(1e-300));
    }
    Ok(MvdrSpectrum {
        power,
        diagonal_loading,
    })
}

/// Subspace spectrum `1 / ||U_n^H a(t)||^2` on a grid (pseudospectrum: the
/// values rank directions, they are not powers).
pub fn music_spectrum(split: &SubspaceSplit, grid: &[f64]) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&t| {
            let a = split.geometry.steering_vector(t)?;
            let q = (split.noise.adjoint() * &a).norm_squared();
            Ok(1.0 / q.max(1e-30))
        })
        .collect()
}

/// Which algebraic form of the minimum-norm vector to evaluate; both give
/// the same vector and exist as a cross-check on the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinNormForm {
    /// `v = U_n d^H / ||d||^2` with `d` the first row of the noise basis.
    Noise,
    /// `v = (e_0 - U_s b^H) / (1 - ||b||^2)` with `b` the first row of the
    /// signal basis.
    Signal,
}

/// The minimum-norm array vector: unit first entry, contained in the noise
/// subspace, smallest Euclidean norm.
pub fn min_norm_vector(split: &SubspaceSplit, form: MinNormForm) -> Result<DVector<Complex64>> {
    let m = split.noise.nrows();
    match form {
        MinNormForm::Noise => {
            let d = split.noise.row(0).into_owned();
            let norm_sq = d.norm_squared();
            if norm_sq < 1e-24 {
                return Err(Error::Degenerate(
                    "first sensor is orthogonal to the noise subspace".into(),
                ));
            }
            let v = &split.noise * d.adjoint() / Complex64::new(norm_sq, 0.0);
            Ok(DVector::from_column_slice(v.as_slice()))
        }
        MinNormForm::Signal => {
            let b = split.signal.row(0).into_owned();
            let norm_sq = b.norm_squared();
            if norm_sq > 1.0 - 1e-12 {
                return Err(Error::Degenerate(
                    "first sensor lies in the signal subspace".into(),
                ));
            }
            let mut v = -(&split.signal * b.adjoint());
            v[0] += Complex64::new(1.0, 0.0);
            v /= Complex64::new(1.0 - norm_sq, 0.0);
            debug_assert_eq!(v.len(), m);
            Ok(v)
        }
    }
}

/// Minimum-norm pseudospectrum `1 / |a(t)^H v|^2` on a grid.
pub fn min_norm_spectrum(split: &SubspaceSplit, grid: &[f64]) -> Result<Vec<f64>> {
    let v = min_norm_vector(split, MinNormForm::Noise)?;
    grid.iter()
        .map(|&t| {
            let a = split.geometry.steering_vector(t)?;
            let q = a.dotc(&v).norm_sqr();
            Ok(1.0 / q.max(1e-30))
        })
        .collect()
}

fn require_ula(geometry: &ArrayGeometry, what: &str) -> Result<()> {
    if !geometry.is_ula() {
        return Err(Error::Domain(format!(
            "{what} roots a lag polynomial and needs a filled uniform line"
        )));
    }
    Ok(())
}

/// Root variant of the minimum-variance method: roots `a(t)^H C^{-1} a(t)`.
pub fn root_mvdr(csm: &CrossSpectral, k: usize) -> Result<Vec<f64>> {
    require_ula(&csm.geometry, "root minimum-variance")?;
    let (chol, _) = loaded_cholesky(csm)?;
    let psi = chol.inverse();
    support_from_null_spectrum(&psi, k, csm.geometry.spacing_over_lambda())
}

/// Root variant of the subspace method: roots `a(t)^H U_n U_n^H a(t)`.
pub fn root_music(split: &SubspaceSplit, k: usize) -> Result<Vec<f64>> {
    require_ula(&split.geometry, "root subspace search")?;
    let psi = &split.noise * split.noise.adjoint();
    support_from_null_spectrum(&psi, k, split.geometry.spacing_over_lambda())
}

/// Root variant of the minimum-norm method: roots `|a(t)^H v|^2` via
/// `Psi = v v^H`.
pub fn root_min_norm(split: &SubspaceSplit, k: usize) -> Result<Vec<f64>> {
    require_ula(&split.geometry, "root minimum-norm")?;
    let v = min_norm_vector(split, MinNormForm::Noise)?;
    let psi = &v * v.adjoint();
    support_from_null_spectrum(&psi, k, split.geometry.spacing_over_lambda())
}

/// Least-squares amplitudes on a fixed support, with conditioning report.
#[derive(Debug, Clone)]
pub struct AmplitudeFit {
    /// One complex amplitude per support direction.
    pub amplitudes: Vec<Complex64>,
    /// Spectral condition number of the steering matrix on the support.
    pub condition: f64,
    /// Set when `condition > 1e10`: closely spaced support directions make
    /// the amplitudes unreliable even though the fit succeeded.
    pub ill_conditioned: bool,
    /// Euclidean norm of `y - A x`.
    pub residual: f64,
}

/// Fits `y ~ sum_i x_i a(t_i)` by least squares over the given support.
pub fn amplitudes_from_support(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    support: &[f64],
) -> Result<AmplitudeFit> {
    check_length(geometry, y)?;
    if support.is_empty() {
        return Ok(AmplitudeFit {
            amplitudes: Vec::new(),
            condition: 1.0,
            ill_conditioned: false,
            residual: y.norm(),
        });
    }
    if support.len() > geometry.num_active() {
        return Err(Error::Domain(format!(
            "{} support directions exceed the {} active sensors",
            support.len(),
            geometry.num_active()
        )));
    }
    let a = geometry.sensing_matrix(support)?;
    let qr = a.clone().qr();
    let rhs = qr.q().adjoint() * y;
    let x = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Singular("coincident support directions".into()))?;
    let gram = a.adjoint() * &a;
    let eigs = SymmetricEigen::new(gram).eigenvalues;
    let (lo, hi) = (eigs.min(), eigs.max());
    let condition = if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY };
    let residual = (&a * &x - y).norm();
    Ok(AmplitudeFit {
        amplitudes: x.iter().copied().collect(),
        condition,
        ill_conditioned: condition > 1e10,
        residual,
    })
}

/// Indices of strict interior local maxima of a sampled spectrum.
pub fn local_maxima(power: &[f64]) -> Vec<usize> {
    (1..power.len().saturating_sub(1))
        .filter(|&i| power[i] > power[i - 1] && power[i] > power[i + 1])
        .collect()
}

fn check_length(geometry: &ArrayGeometry, y: &DVector<Complex64>) -> Result<()> {
    if y.len() != geometry.num_active() {
        return Err(Error::Domain(format!(
            "measurement has {} entries, geometry has {} active sensors",
            y.len(),
            geometry.num_active()
        )));
    }
    Ok(())
}
