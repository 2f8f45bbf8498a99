//! Linear array geometry and steering vectors.
//!
//! Sensors sit on a uniform grid of slots with spacing `d` (expressed as the
//! ratio `d/lambda`); a subarray is described by deactivating slots.  A source
//! at direction `t = sin(theta)` produces the steering vector
//! `a_m(t) = exp(j*2*pi*(d/lambda)*m*t)` on slot `m`, so direction estimation
//! is frequency estimation of a complex exponential sampled at the active
//! slots.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Placement of sensors on a uniform slot grid.
///
/// `slots()` is the full aperture length `M_full`; `num_active()` is the
/// number of physical sensors.  A plain ULA has every slot active.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    spacing_over_lambda: f64,
    active: Vec<bool>,
    num_active: usize,
}

impl ArrayGeometry {
    /// Uniform linear array with `slots` sensors spaced `spacing_over_lambda`
    /// wavelengths apart.
    pub fn ula(slots: usize, spacing_over_lambda: f64) -> Result<Self> {
        Self::masked(vec![true; slots], spacing_over_lambda)
    }

    /// Subarray of a uniform slot grid; `active[m]` marks slot `m` populated.
    pub fn masked(active: Vec<bool>, spacing_over_lambda: f64) -> Result<Self> {
        let num_active = active.iter().filter(|&&a| a).count();
        if active.len() < 2 || num_active < 2 {
            return Err(Error::Domain(format!(
                "array needs at least 2 slots and 2 active sensors, got {} slots / {} active",
                active.len(),
                num_active
            )));
        }
        if !(spacing_over_lambda.is_finite() && spacing_over_lambda > 0.0) {
            return Err(Error::Domain(format!(
                "sensor spacing d/lambda must be finite and positive, got {spacing_over_lambda}"
            )));
        }
        Ok(Self {
            spacing_over_lambda,
            active,
            num_active,
        })
    }

    /// Random subarray keeping `keep` of `slots` sensors (first and last slot
    /// always kept so the aperture is preserved); deterministic in `seed`.
    pub fn random_subarray(
        slots: usize,
        keep: usize,
        spacing_over_lambda: f64,
        seed: u64,
    ) -> Result<Self> {
        if keep < 2 || keep > slots {
            return Err(Error::Domain(format!(
                "cannot keep {keep} of {slots} slots"
            )));
        }
        let mut active = vec![false; slots];
        active[0] = true;
        active[slots - 1] = true;
        if keep > 2 {
            let mut interior: Vec<usize> = (1..slots - 1).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            interior.shuffle(&mut rng);
            for &m in interior.iter().take(keep - 2) {
                active[m] = true;
            }
        }
        Self::masked(active, spacing_over_lambda)
    }

    /// Sensor spacing as a fraction of the wavelength.
    pub fn spacing_over_lambda(&self) -> f64 {
        self.spacing_over_lambda
    }

    /// Full aperture length `M_full` (populated or not).
    pub fn slots(&self) -> usize {
        self.active.len()
    }

    /// Number of populated slots (the measurement dimension).
    pub fn num_active(&self) -> usize {
        self.num_active
    }

    /// Per-slot activity mask.
    pub fn active(&self) -> &[bool] {
        &self.active
    }

    /// Indices of populated slots in increasing order.
    pub fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(m, &a)| a.then_some(m))
    }

    /// Whether every slot is populated.
    pub fn is_ula(&self) -> bool {
        self.num_active == self.active.len()
    }

    /// Steering vector at direction `t = sin(theta)`, active slots only.
    ///
    /// Entry order follows slot order, so element `i` corresponds to the
    /// `i`-th populated slot.  All entries have unit modulus.
    pub fn steering_vector(&self, t: f64) -> Result<DVector<Complex64>> {
        check_direction(t)?;
        let w = 2.0 * std::f64::consts::PI * self.spacing_over_lambda * t;
        let entries: Vec<Complex64> = self
            .active_slots()
            .map(|m| Complex64::from_polar(1.0, w * m as f64))
            .collect();
        Ok(DVector::from_vec(entries))
    }

    /// Sensing matrix whose columns are steering vectors over `grid`.
    pub fn sensing_matrix(&self, grid: &[f64]) -> Result<DMatrix<Complex64>> {
        let mut a = DMatrix::zeros(self.num_active, grid.len());
        for (j, &t) in grid.iter().enumerate() {
            a.set_column(j, &self.steering_vector(t)?);
        }
        Ok(a)
    }
}

/// Validates that `t` is a physical direction sine.
pub(crate) fn check_direction(t: f64) -> Result<()> {
    if !(t.is_finite() && (-1.0..=1.0).contains(&t)) {
        return Err(Error::Domain(format!(
            "direction t = sin(theta) must lie in [-1, 1], got {t}"
        )));
    }
    Ok(())
}

/// Largest number of sources recoverable without a grid from `m` sensors:
/// `floor((m - 1) / 2)`.
pub fn k_max(m: usize) -> Result<usize> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "sensor count must be at least 2, got {m}"
        )));
    }
    Ok((m - 1) / 2)
}

/// Separation `lambda / (M d)` (in `t` units) under which recovery of
/// arbitrary complex amplitudes is guaranteed, using the full aperture
/// `M = slots()`.
pub fn min_separation(geometry: &ArrayGeometry) -> f64 {
    1.0 / (geometry.slots() as f64 * geometry.spacing_over_lambda)
}

/// Distance between directions on the `t` circle of circumference 2:
/// `min(|t1 - t2|, 2 - |t1 - t2|)`.
pub fn wraparound_distance(t1: f64, t2: f64) -> f64 {
    let d = (t1 - t2).abs();
    d.min(2.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ula_steering_has_unit_modulus_and_linear_phase() {
        let geom = ArrayGeometry::ula(8, 0.5).unwrap();
        let t = 15f64.to_radians().sin();
        let a = geom.steering_vector(t).unwrap();
        assert_eq!(a.len(), 8);
        for (m, v) in a.iter().enumerate() {
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-14);
            let expected = std::f64::consts::PI * m as f64 * t;
            let diff = (v.arg() - expected).rem_euclid(2.0 * std::f64::consts::PI);
            let diff = diff.min(2.0 * std::f64::consts::PI - diff);
            assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn masked_steering_keeps_slot_phases() {
        let mask = vec![true, false, true, true, false, true];
        let geom = ArrayGeometry::masked(mask, 0.5).unwrap();
        assert_eq!(geom.num_active(), 4);
        assert_eq!(geom.slots(), 6);
        let t = 0.3;
        let a = geom.steering_vector(t).unwrap();
        let full = ArrayGeometry::ula(6, 0.5).unwrap().steering_vector(t).unwrap();
        let kept: Vec<usize> = geom.active_slots().collect();
        assert_eq!(kept, vec![0, 2, 3, 5]);
        for (i, &m) in kept.iter().enumerate() {
            assert_abs_diff_eq!((a[i] - full[m]).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn direction_domain_is_enforced() {
        let geom = ArrayGeometry::ula(4, 0.5).unwrap();
        assert!(geom.steering_vector(1.2).is_err());
        assert!(geom.steering_vector(f64::NAN).is_err());
        assert!(geom.steering_vector(-1.0).is_ok());
    }

    #[test]
    fn geometry_validation() {
        assert!(ArrayGeometry::ula(1, 0.5).is_err());
        assert!(ArrayGeometry::ula(4, 0.0).is_err());
        assert!(ArrayGeometry::ula(4, -0.5).is_err());
        assert!(ArrayGeometry::masked(vec![true, false], 0.5).is_err());
    }

    #[test]
    fn random_subarray_is_deterministic_and_keeps_aperture() {
        let a = ArrayGeometry::random_subarray(21, 13, 0.5, 7).unwrap();
        let b = ArrayGeometry::random_subarray(21, 13, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_active(), 13);
        assert!(a.active()[0] && a.active()[20]);
        let c = ArrayGeometry::random_subarray(21, 13, 0.5, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn k_max_matches_hand_values() {
        assert_eq!(k_max(21).unwrap(), 10);
        assert_eq!(k_max(2).unwrap(), 0);
        assert_eq!(k_max(8).unwrap(), 3);
        assert!(k_max(1).is_err());
    }

    #[test]
    fn min_separation_matches_hand_values() {
        let g21 = ArrayGeometry::ula(21, 0.5).unwrap();
        assert_abs_diff_eq!(min_separation(&g21), 2.0 / 21.0, epsilon = 1e-15);
        let g64 = ArrayGeometry::ula(64, 0.25).unwrap();
        assert_abs_diff_eq!(min_separation(&g64), 1.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn wraparound_distance_values() {
        assert_abs_diff_eq!(wraparound_distance(-0.126, 0.275), 0.401, epsilon = 1e-12);
        assert_abs_diff_eq!(wraparound_distance(-0.9, 0.9), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(wraparound_distance(0.4, 0.4), 0.0, epsilon = 1e-15);
    }
}
