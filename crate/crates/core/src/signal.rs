//! Source scenes, snapshots and the noise model.
//!
//! A scene is a finite set of point sources, each a direction `t = sin(theta)`
//! with a complex amplitude.  A snapshot is one narrowband measurement vector
//! over the active sensors.  Noise is drawn from a seeded ChaCha8 stream and
//! rescaled so that the realized noise norm satisfies the SNR definition
//! `SNR = 20*log10(||y|| / ||n||)` exactly, which keeps every experiment
//! bit-reproducible from `(scene, seed)` alone.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{check_direction, ArrayGeometry};
use crate::error::{Error, Result};

/// A point source: direction sine and complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    /// Direction `t = sin(theta)` in `[-1, 1]`.
    pub t: f64,
    /// Complex amplitude.
    pub amplitude: Complex64,
}

/// A finite collection of point sources.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceScene {
    sources: Vec<Source>,
}

impl SourceScene {
    /// Builds a scene, validating every direction.
    pub fn new(sources: Vec<Source>) -> Result<Self> {
        for s in &sources {
            check_direction(s.t)?;
            if !(s.amplitude.re.is_finite() && s.amplitude.im.is_finite()) {
                return Err(Error::Domain(format!(
                    "source amplitude must be finite, got {}",
                    s.amplitude
                )));
            }
        }
        Ok(Self { sources })
    }

    /// Convenience constructor from `(t, amplitude)` pairs.
    pub fn from_pairs(pairs: &[(f64, Complex64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(t, amplitude)| Source { t, amplitude })
                .collect(),
        )
    }

    /// The sources in insertion order.
    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    /// Directions in insertion order.
    pub fn directions(&self) -> Vec<f64> {
        self.sources.iter().map(|s| s.t).collect()
    }

    /// Sum of amplitude moduli (the scene's atomic norm when the sources are
    /// separated enough to be identifiable).
    pub fn total_modulus(&self) -> f64 {
        self.sources.iter().map(|s| s.amplitude.norm()).sum()
    }
}

/// One narrowband measurement vector over the active sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Measurement, one entry per active slot in slot order.
    pub y: DVector<Complex64>,
    /// Geometry the measurement was taken with.
    pub geometry: ArrayGeometry,
    /// SNR used when noise was added; `None` for a noiseless snapshot.
    pub snr_db: Option<f64>,
}

impl Snapshot {
    /// Wraps a raw measurement vector, checking its length.
    pub fn new(y: DVector<Complex64>, geometry: ArrayGeometry, snr_db: Option<f64>) -> Result<Self> {
        if y.len() != geometry.num_active() {
            return Err(Error::Domain(format!(
                "snapshot has {} entries but geometry has {} active sensors",
                y.len(),
                geometry.num_active()
            )));
        }
        Ok(Self { y, geometry, snr_db })
    }
}

/// Noiseless snapshot of `scene` under `geometry`: `y = sum_i x_i a(t_i)`.
pub fn synthesize(geometry: &ArrayGeometry, scene: &SourceScene) -> Result<Snapshot> {
    let mut y = DVector::zeros(geometry.num_active());
    for s in scene.sources() {
        let a = geometry.steering_vector(s.t)?;
        y.axpy(s.amplitude, &a, Complex64::new(1.0, 0.0));
    }
    Ok(Snapshot {
        y,
        geometry: geometry.clone(),
        snr_db: None,
    })
}

/// Adds circular complex Gaussian noise scaled so that
/// `||n|| = ||y|| * 10^(-snr_db/20)` holds exactly.
///
/// The draw comes from `ChaCha8` seeded with `seed`, consuming two standard
/// normals per sensor (real then imaginary), so identical inputs give
/// bit-identical outputs.  Returns the noise realization alongside the noisy
/// snapshot so callers can hand its exact norm to estimators.
pub fn add_noise(snapshot: &Snapshot, snr_db: f64, seed: u64) -> Result<(Snapshot, DVector<Complex64>)> {
    if !snr_db.is_finite() {
        return Err(Error::Domain(format!(
            "snr_db must be finite (omit noise for the noiseless case), got {snr_db}"
        )));
    }
    let signal_norm = snapshot.y.norm();
    if signal_norm == 0.0 {
        return Err(Error::Degenerate(
            "cannot set a finite SNR on an identically-zero snapshot".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = DVector::zeros(snapshot.y.len());
    for i in 0..n.len() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        n[i] = Complex64::new(re, im);
    }
    let raw_norm = n.norm();
    if raw_norm == 0.0 {
        return Err(Error::Degenerate("noise draw was identically zero".into()));
    }
    let target = signal_norm * 10f64.powf(-snr_db / 20.0);
    n.scale_mut(target / raw_norm);
    let noisy = Snapshot {
        y: &snapshot.y + &n,
        geometry: snapshot.geometry.clone(),
        snr_db: Some(snr_db),
    };
    Ok((noisy, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn geom() -> ArrayGeometry {
        ArrayGeometry::ula(8, 0.5).unwrap()
    }

    #[test]
    fn synthesize_single_source_is_scaled_steering() {
        let g = geom();
        let t = 0.35;
        let x = Complex64::new(0.4, -1.1);
        let scene = SourceScene::from_pairs(&[(t, x)]).unwrap();
        let snap = synthesize(&g, &scene).unwrap();
        let a = g.steering_vector(t).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!((snap.y[i] - x * a[i]).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn synthesize_is_linear_in_the_scene() {
        let g = geom();
        let s1 = SourceScene::from_pairs(&[(0.2, Complex64::new(1.0, 0.5))]).unwrap();
        let s2 = SourceScene::from_pairs(&[(-0.66, Complex64::new(-0.3, 2.0))]).unwrap();
        let both = SourceScene::from_pairs(&[
            (0.2, Complex64::new(1.0, 0.5)),
            (-0.66, Complex64::new(-0.3, 2.0)),
        ])
        .unwrap();
        let sum = synthesize(&g, &s1).unwrap().y + synthesize(&g, &s2).unwrap().y;
        let joint = synthesize(&g, &both).unwrap().y;
        assert_abs_diff_eq!((sum - joint).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn noise_norm_matches_snr_exactly() {
        let g = geom();
        let scene = SourceScene::from_pairs(&[(0.1, Complex64::new(1.0, 0.0))]).unwrap();
        let snap = synthesize(&g, &scene).unwrap();
        for &snr in &[0.0, 10.0, 20.0, 37.5] {
            let (noisy, n) = add_noise(&snap, snr, 42).unwrap();
            let expected = snap.y.norm() * 10f64.powf(-snr / 20.0);
            assert_abs_diff_eq!(n.norm() / expected, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(((&noisy.y - &snap.y).norm() - n.norm()).abs(), 0.0, epsilon = 1e-12);
            assert_eq!(noisy.snr_db, Some(snr));
        }
    }

    #[test]
    fn noise_is_reproducible_and_seed_sensitive() {
        let g = geom();
        let scene = SourceScene::from_pairs(&[(0.1, Complex64::new(1.0, 0.0))]).unwrap();
        let snap = synthesize(&g, &scene).unwrap();
        let (a, _) = add_noise(&snap, 20.0, 7).unwrap();
        let (b, _) = add_noise(&snap, 20.0, 7).unwrap();
        assert_eq!(a.y, b.y);
        let (c, _) = add_noise(&snap, 20.0, 8).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn zero_signal_with_finite_snr_is_degenerate() {
        let g = geom();
        let snap = Snapshot::new(DVector::zeros(8), g, None).unwrap();
        assert!(matches!(
            add_noise(&snap, 20.0, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn infinite_snr_is_rejected() {
        let g = geom();
        let scene = SourceScene::from_pairs(&[(0.1, Complex64::new(1.0, 0.0))]).unwrap();
        let snap = synthesize(&g, &scene).unwrap();
        assert!(add_noise(&snap, f64::INFINITY, 1).is_err());
    }

    #[test]
    fn scene_validation_rejects_bad_directions() {
        assert!(SourceScene::from_pairs(&[(1.5, Complex64::new(1.0, 0.0))]).is_err());
        assert!(SourceScene::from_pairs(&[(0.0, Complex64::new(f64::NAN, 0.0))]).is_err());
    }

    #[test]
    fn total_modulus_sums_amplitudes() {
        let scene = SourceScene::from_pairs(&[
            (-0.126, Complex64::new(1.0, 0.0)),
            (0.275, Complex64::new(0.0, 0.01)),
            (0.67, Complex64::new(-0.6, 0.0)),
        ])
        .unwrap();
        assert_abs_diff_eq!(scene.total_modulus(), 1.61, epsilon = 1e-12);
    }
}
