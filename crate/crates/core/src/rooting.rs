//! Support recovery by polynomial rooting.
//!
//! Two pipelines share this machinery:
//!
//! * the grid-free pipeline roots `z^(M-1) * (1 - R(z))`, where `R` is the
//!   autocorrelation Laurent polynomial of the dual vector, so that directions
//!   appear where the dual polynomial has unit modulus;
//! * the root variants of the cross-spectral methods root
//!   `z^(M-1) * N(z)`, where `N` is the Laurent form of a null spectrum
//!   `a(t)^H Psi a(t)`.
//!
//! Roots are computed as eigenvalues of the balanced companion matrix using a
//! shifted complex Hessenberg QR iteration; unit-circle roots are then
//! clustered by angle and converted to directions via
//! `t = arg(z) / (2*pi*(d/lambda))`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::atomic::DualVector;
use crate::error::{Error, Result};

/// Laurent polynomial `sum_{m=-order}^{order} coeff[m] z^m` stored with the
/// coefficient of `z^m` at index `m + order`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl LaurentPoly {
    /// Builds from coefficients indexed `m + order`, `m in [-order, order]`.
    pub fn new(order: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * order + 1 {
            return Err(Error::Domain(format!(
                "Laurent polynomial of order {order} needs {} coefficients, got {}",
                2 * order + 1,
                coeffs.len()
            )));
        }
        Ok(Self { order, coeffs })
    }

    /// Maximum exponent magnitude.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of `z^m`.
    pub fn coeff(&self, m: isize) -> Complex64 {
        self.coeffs[(m + self.order as isize) as usize]
    }

    /// All coefficients, index `m + order`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Evaluates on the unit circle at `z = exp(j*omega)`.
    pub fn eval_circle(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let m = idx as isize - self.order as isize;
            acc += c * Complex64::from_polar(1.0, m as f64 * omega);
        }
        acc
    }

    /// Largest deviation from Hermitian symmetry `coeff(-m) = conj(coeff(m))`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = self.coeff(0).im.abs();
        for m in 1..=self.order as isize {
            worst = worst.max((self.coeff(-m) - self.coeff(m).conj()).norm());
        }
        worst
    }
}

/// Autocorrelation of `c`: `r_m = sum_l c_l * conj(c_{l+m})` for `m >= 0`,
/// mirrored as `r_{-m} = conj(r_m)`.
///
/// On the unit circle `R(z) = |sum_m c_m z^{-m}|^2`, the squared modulus of
/// the dual polynomial at `z = exp(j*2*pi*(d/lambda)*t)`.
pub fn autocorrelation(c: &[Complex64]) -> Result<LaurentPoly> {
    if c.is_empty() {
        return Err(Error::Domain("autocorrelation of an empty sequence".into()));
    }
    let m_len = c.len();
    let order = m_len - 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
    for m in 0..m_len {
        let mut r = Complex64::new(0.0, 0.0);
        for l in 0..m_len - m {
            r += c[l] * c[l + m].conj();
        }
        coeffs[order + m] = r;
        coeffs[order - m] = r.conj();
    }
    // The zero-lag term is a squared norm; force its imaginary part to zero.
    coeffs[order].im = 0.0;
    LaurentPoly::new(order, coeffs)
}

/// Ascending coefficients of `P_+(z) = z^order * (1 - R(z))`: the center
/// coefficient is `1 - r_0` and the coefficient at power `m + order` is
/// `-r_m` for `m != 0`.
pub fn build_p_plus(r: &LaurentPoly) -> Result<Vec<Complex64>> {
    let defect = r.hermitian_defect();
    let scale = r.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if defect > 1e-8 * scale.max(1.0) {
        return Err(Error::Domain(format!(
            "autocorrelation input is not Hermitian symmetric (defect {defect:.3e})"
        )));
    }
    let order = r.order();
    let mut p = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
    for (k, slot) in p.iter_mut().enumerate() {
        let m = k as isize - order as isize;
        *slot = -r.coeff(m);
    }
    p[order] += 1.0;
    Ok(p)
}

/// All complex roots of `sum_k coeffs[k] z^k` (ascending powers).
///
/// Exact zero trailing coefficients contribute roots at the origin;
/// leading coefficients below `1e-13` of the largest are treated as zero so
/// the numerical degree matches the data.  A polynomial whose coefficients
/// are all zero is degenerate, and a (nonzero) constant has no roots.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let max_mag = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max_mag == 0.0 {
        return Err(Error::Degenerate(
            "polynomial with all-zero coefficients has no well-defined roots".into(),
        ));
    }
    let mut hi = coeffs.len();
    while hi > 1 && coeffs[hi - 1].norm() <= 1e-13 * max_mag {
        hi -= 1;
    }
    let mut lo = 0;
    let mut roots = Vec::new();
    while lo < hi - 1 && coeffs[lo].norm() == 0.0 {
        roots.push(Complex64::new(0.0, 0.0));
        lo += 1;
    }
    let work = &coeffs[lo..hi];
    let degree = work.len() - 1;
    if degree == 0 {
        return Ok(roots);
    }
    if degree == 1 {
        roots.push(-work[0] / work[1]);
        return Ok(roots);
    }
    // Companion matrix (upper Hessenberg): ones on the subdiagonal and the
    // negated monic coefficients in the last column.
    let lead = work[degree];
    let mut h = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 0..degree {
        h[(i, degree - 1)] = -work[i] / lead;
        if i + 1 < degree {
            h[(i + 1, i)] = Complex64::new(1.0, 0.0);
        }
    }
    balance(&mut h);
    roots.extend(hessenberg_eigenvalues(h)?);
    Ok(roots)
}

/// Magnitude proxy used while balancing (cheap 1-norm of a complex entry).
fn mag1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Diagonal similarity scaling by powers of two equalizing row and column
/// norms; leaves eigenvalues untouched while improving their conditioning.
fn balance(h: &mut DMatrix<Complex64>) {
    let n = h.nrows();
    let radix = 2.0f64;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += mag1(h[(j, i)]);
                    r += mag1(h[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            while cc < r / radix {
                f *= radix;
                cc *= radix * radix;
            }
            while cc >= r * radix {
                f /= radix;
                cc /= radix * radix;
            }
            if (cc + r / f) < 0.95 * s {
                converged = false;
                let g = 1.0 / f;
                for j in 0..n {
                    h[(i, j)] *= g;
                }
                for j in 0..n {
                    h[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Givens rotation `[[c, s], [-conj(s), c]]` (c real) zeroing the second
/// component of `(x, y)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if x.norm() == 0.0 {
        return (0.0, r / y);
    }
    let c = x.norm() / r;
    let s = (x / x.norm()) * y.conj() / r;
    (c, s)
}

/// Eigenvalues of the two-by-two complex matrix `[[a, b], [c, d]]`.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let l1 = if (half + disc).norm() >= (half - disc).norm() {
        mid + disc
    } else {
        mid - disc
    };
    let det = a * d - b * c;
    let l2 = if l1.norm() > 0.0 { det / l1 } else { mid - disc };
    (l1, l2)
}

/// Eigenvalues of an upper Hessenberg complex matrix via shifted QR with
/// Givens rotations (Wilkinson shifts, occasional exceptional shifts).
fn hessenberg_eigenvalues(mut h: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = Vec::with_capacity(n);
    let mut hi = n;
    let mut stalled = 0usize;
    let mut budget = 80 * n;
    while hi > 0 {
        if hi == 1 {
            eig.push(h[(0, 0)]);
            hi = 0;
            continue;
        }
        // Find the start of the trailing irreducible block.
        let mut l = hi - 1;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi - 1 {
            eig.push(h[(hi - 1, hi - 1)]);
            hi -= 1;
            stalled = 0;
            continue;
        }
        if l == hi - 2 {
            let (l1, l2) = eig2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            eig.push(l1);
            eig.push(l2);
            hi -= 2;
            stalled = 0;
            continue;
        }
        if budget == 0 {
            return Err(Error::NonConvergence {
                routine: "hessenberg eigenvalue iteration",
                iterations: 80 * n,
            });
        }
        budget -= 1;
        stalled += 1;
        let shift = if stalled % 12 == 0 {
            // Exceptional shift breaks symmetry-induced cycling.
            Complex64::new(
                h[(hi - 1, hi - 2)].norm() + h[(hi - 2, hi - 3.min(hi - 2))].norm(),
                0.0,
            )
        } else {
            let (s1, s2) = eig2(
                h[(hi - 2, hi - 2)],
                h[(hi - 2, hi - 1)],
                h[(hi - 1, hi - 2)],
                h[(hi - 1, hi - 1)],
            );
            let d = h[(hi - 1, hi - 1)];
            if (s1 - d).norm() <= (s2 - d).norm() {
                s1
            } else {
                s2
            }
        };
        qr_step(&mut h, l, hi, shift);
    }
    Ok(eig)
}

/// One explicit shifted QR sweep on the active window `l..hi`.
fn qr_step(h: &mut DMatrix<Complex64>, l: usize, hi: usize, shift: Complex64) {
    for i in l..hi {
        h[(i, i)] -= shift;
    }
    let mut rots = Vec::with_capacity(hi - l);
    for i in l..hi - 1 {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        rots.push((c, s));
        for j in i..hi {
            let a = h[(i, j)];
            let b = h[(i + 1, j)];
            h[(i, j)] = c * a + s * b;
            h[(i + 1, j)] = -s.conj() * a + c * b;
        }
    }
    for (k, &(c, s)) in rots.iter().enumerate() {
        let i = l + k;
        let top = (i + 2).min(hi);
        for r in l..top {
            let a = h[(r, i)];
            let b = h[(r, i + 1)];
            h[(r, i)] = c * a + s.conj() * b;
            h[(r, i + 1)] = -s * a + c * b;
        }
    }
    for i in l..hi {
        h[(i, i)] += shift;
    }
}

/// Tuning knobs for unit-circle root selection.
#[derive(Debug, Clone, Copy)]
pub struct RootSelection {
    /// Keep roots with `| 1 - |z| |` below this.
    pub unit_circle_tol: f64,
    /// Merge roots whose angles differ by less than this (radians).
    pub angle_cluster_tol: f64,
}

impl Default for RootSelection {
    fn default() -> Self {
        Self {
            unit_circle_tol: 1e-2,
            angle_cluster_tol: 1e-3,
        }
    }
}

/// Roots retained near the unit circle, clustered and converted to
/// directions; sorted by `t`.
#[derive(Debug, Clone, Default)]
pub struct UnitRootSet {
    /// Directions `t = arg(z) / (2*pi*(d/lambda))`.
    pub t_values: Vec<f64>,
    /// Cluster angles `arg(z)` (radians).
    pub angles: Vec<f64>,
    /// Smallest `| 1 - |z| |` within each cluster.
    pub residuals: Vec<f64>,
}

impl UnitRootSet {
    /// Number of retained clusters.
    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    /// Whether no cluster survived.
    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }
}

/// Filters `roots` to the unit circle, merges conjugate-reciprocal twins by
/// angle (inverse-residual weighted mean) and converts angles to directions,
/// discarding non-physical `|t| > 1`.
pub fn select_unit_circle(
    roots: &[Complex64],
    spacing_over_lambda: f64,
    selection: &RootSelection,
) -> UnitRootSet {
    let mut near: Vec<(f64, f64)> = roots
        .iter()
        .filter_map(|z| {
            let res = (1.0 - z.norm()).abs();
            (res < selection.unit_circle_tol && z.norm() > 0.0).then(|| (z.arg(), res))
        })
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0));
    if near.is_empty() {
        return UnitRootSet::default();
    }
    // Cluster sorted angles, then possibly merge across the -pi/pi seam.
    let mut clusters: Vec<Vec<(f64, f64)>> = Vec::new();
    for &(ang, res) in &near {
        match clusters.last_mut() {
            Some(cl) if ang - cl.last().unwrap().0 <= selection.angle_cluster_tol => {
                cl.push((ang, res))
            }
            _ => clusters.push(vec![(ang, res)]),
        }
    }
    if clusters.len() > 1 {
        let wrap_gap = (near[0].0 + 2.0 * std::f64::consts::PI) - near.last().unwrap().0;
        if wrap_gap <= selection.angle_cluster_tol {
            let tail = clusters.pop().unwrap();
            for (ang, res) in tail {
                clusters[0].push((ang - 2.0 * std::f64::consts::PI, res));
            }
        }
    }
    let mut entries: Vec<(f64, f64, f64)> = Vec::new();
    for cl in clusters {
        let mut wsum = 0.0;
        let mut asum = 0.0;
        let mut best = f64::INFINITY;
        for &(ang, res) in &cl {
            let w = 1.0 / (res + 1e-12);
            wsum += w;
            asum += w * ang;
            best = best.min(res);
        }
        let mut ang = asum / wsum;
        if ang <= -std::f64::consts::PI {
            ang += 2.0 * std::f64::consts::PI;
        }
        let t = ang / (2.0 * std::f64::consts::PI * spacing_over_lambda);
        if t.abs() <= 1.0 + 1e-9 {
            entries.push((t.clamp(-1.0, 1.0), ang, best));
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = UnitRootSet::default();
    for (t, ang, res) in entries {
        out.t_values.push(t);
        out.angles.push(ang);
        out.residuals.push(res);
    }
    out
}

/// Coefficient magnitude below which the shifted polynomial of a dual vector
/// counts as non-informative (the dual polynomial has unit modulus almost
/// everywhere, so no isolated support exists).
pub const DEGENERATE_P_TOL: f64 = 1e-6;

/// Support of a dual vector: roots `P_+` built from the autocorrelation of
/// the dual coefficients, filtered to the unit circle.
///
/// Errors with [`Error::Degenerate`] when `P_+` is numerically the zero
/// polynomial, the unresolvable-signal signature.
pub fn support_from_dual(dual: &DualVector, selection: &RootSelection) -> Result<UnitRootSet> {
    let r = autocorrelation(dual.c.as_slice())?;
    let p = build_p_plus(&r)?;
    let peak = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak <= DEGENERATE_P_TOL {
        return Err(Error::Degenerate(
            "dual polynomial is non-informative (unit modulus everywhere)".into(),
        ));
    }
    let roots = poly_roots(&p)?;
    Ok(select_unit_circle(
        &roots,
        dual.geometry.spacing_over_lambda(),
        selection,
    ))
}

/// Laurent coefficients of the null spectrum `a(t)^H Psi a(t)`:
/// `psi_l = sum_{m - n = l} Psi[m, n]`.
pub fn null_spectrum_poly(psi: &DMatrix<Complex64>) -> Result<LaurentPoly> {
    let m = psi.nrows();
    if m == 0 || psi.ncols() != m {
        return Err(Error::Domain(format!(
            "null spectrum needs a square matrix, got {}x{}",
            psi.nrows(),
            psi.ncols()
        )));
    }
    let scale = psi.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let herm_defect = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .map(|(i, j)| (psi[(i, j)] - psi[(j, i)].conj()).norm())
        .fold(0.0, f64::max);
    if herm_defect > 1e-8 * scale {
        return Err(Error::Domain(format!(
            "null-spectrum matrix is not Hermitian (defect {herm_defect:.3e})"
        )));
    }
    let order = m - 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
    for row in 0..m {
        for col in 0..m {
            let l = row as isize - col as isize;
            coeffs[(l + order as isize) as usize] += psi[(row, col)];
        }
    }
    LaurentPoly::new(order, coeffs)
}

/// Root-method support recovery: roots `z^(M-1) N(z)` and keeps the `k`
/// roots inside (or on) the unit circle closest to it, one per
/// conjugate-reciprocal pair, returning their directions sorted by `t`.
pub fn support_from_null_spectrum(
    psi: &DMatrix<Complex64>,
    k: usize,
    spacing_over_lambda: f64,
) -> Result<Vec<f64>> {
    let n = null_spectrum_poly(psi)?;
    let order = n.order();
    // Ascending coefficient of z^p in z^order * N(z) is psi_{order - p}.
    let coeffs: Vec<Complex64> = (0..=2 * order)
        .map(|p| n.coeff(order as isize - p as isize))
        .collect();
    let roots = poly_roots(&coeffs)?;
    // One member of each conjugate-reciprocal pair lies inside the circle;
    // the tiny slack admits on-circle doubles that round slightly outside.
    let mut inside: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| {
            let m = z.norm();
            m > 0.0 && m <= 1.0 + 1e-9
        })
        .collect();
    inside.sort_by(|a, b| (1.0 - a.norm()).abs().total_cmp(&(1.0 - b.norm()).abs()));
    let mut picked: Vec<Complex64> = Vec::with_capacity(k);
    for z in inside {
        if picked.len() == k {
            break;
        }
        let ang = z.arg();
        // A double root on the circle can land on both sides of it; treat
        // angle-coincident candidates as one pair member.
        if picked.iter().any(|p| {
            let d = (p.arg() - ang).abs();
            d.min(2.0 * std::f64::consts::PI - d) < 1e-6
        }) {
            continue;
        }
        let t = ang / (2.0 * std::f64::consts::PI * spacing_over_lambda);
        if t.abs() > 1.0 + 1e-9 {
            continue;
        }
        picked.push(z);
    }
    if picked.len() < k {
        return Err(Error::InsufficientRoots {
            found: picked.len(),
            requested: k,
        });
    }
    let mut ts: Vec<f64> = picked
        .iter()
        .map(|z| (z.arg() / (2.0 * std::f64::consts::PI * spacing_over_lambda)).clamp(-1.0, 1.0))
        .collect();
    ts.sort_by(f64::total_cmp);
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Naive full correlation used as an independent reference.
    fn naive_autocorr(cs: &[Complex64], m: usize) -> Complex64 {
        (0..cs.len() - m).map(|l| cs[l] * cs[l + m].conj()).sum()
    }

    #[test]
    fn autocorrelation_matches_naive_reference() {
        let cs: Vec<Complex64> = (0..8)
            .map(|i| c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos() * 0.5))
            .collect();
        let r = autocorrelation(&cs).unwrap();
        assert_eq!(r.order(), 7);
        for m in 0..8 {
            let expected = naive_autocorr(&cs, m);
            assert_abs_diff_eq!((r.coeff(m as isize) - expected).norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                (r.coeff(-(m as isize)) - expected.conj()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn autocorrelation_equals_squared_modulus_on_circle() {
        let cs: Vec<Complex64> = (0..6)
            .map(|i| c((0.3 * i as f64).cos(), (0.9 * i as f64).sin()))
            .collect();
        let r = autocorrelation(&cs).unwrap();
        for k in 0..40 {
            let omega = -std::f64::consts::PI + k as f64 * 0.157;
            let h: Complex64 = cs
                .iter()
                .enumerate()
                .map(|(m, &cm)| cm * Complex64::from_polar(1.0, -(m as f64) * omega))
                .sum();
            let val = r.eval_circle(omega);
            assert_abs_diff_eq!(val.re, h.norm_sqr(), epsilon = 1e-10);
            assert_abs_diff_eq!(val.im, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn build_p_plus_hand_example() {
        let inv = 1.0 / 2f64.sqrt();
        let r = autocorrelation(&[c(inv, 0.0), c(inv, 0.0)]).unwrap();
        let p = build_p_plus(&r).unwrap();
        let expected = [c(-0.5, 0.0), c(0.0, 0.0), c(-0.5, 0.0)];
        for (got, want) in p.iter().zip(expected.iter()) {
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn poly_roots_quadratics() {
        // z^2 - 1
        let roots = poly_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut mags: Vec<f64> = roots.iter().map(|z| z.re).collect();
        mags.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(mags[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mags[1], 1.0, epsilon = 1e-12);
        // z^2 + 1
        let roots = poly_roots(&[c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut ims: Vec<f64> = roots.iter().map(|z| z.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ims[1], 1.0, epsilon = 1e-12);
    }

    /// Expands `prod (z - roots[i])` into ascending coefficients.
    fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        coeffs
    }

    fn assert_root_multiset_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let mut remaining = want.to_vec();
        for &z in got {
            let (idx, dist) = remaining
                .iter()
                .enumerate()
                .map(|(i, &w)| (i, (z - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!(dist < tol, "root {z} is {dist:.3e} from nearest expected");
            remaining.swap_remove(idx);
        }
    }

    #[test]
    fn poly_roots_recovers_planted_roots() {
        let planted = vec![
            c(0.4, 0.9),
            c(-1.2, 0.3),
            c(0.0, -2.0),
            c(2.5, 0.0),
            c(-0.1, -0.1),
            c(0.8, -0.6),
            c(-0.33, 1.7),
        ];
        let coeffs = poly_from_roots(&planted);
        let roots = poly_roots(&coeffs).unwrap();
        assert_root_multiset_close(&roots, &planted, 1e-8);
    }

    #[test]
    fn poly_roots_scaling_invariance() {
        let planted = vec![c(0.9, 0.1), c(-0.5, -0.8), c(1.5, 0.0), c(0.2, 1.1)];
        let coeffs = poly_from_roots(&planted);
        let scaled: Vec<Complex64> = coeffs.iter().map(|&a| a * 1e6).collect();
        let r1 = poly_roots(&coeffs).unwrap();
        let r2 = poly_roots(&scaled).unwrap();
        assert_root_multiset_close(&r1, &r2, 1e-12);
    }

    #[test]
    fn poly_roots_handles_origin_roots_and_degenerate_input() {
        // z^2 * (z - 2)
        let coeffs = [c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)];
        let roots = poly_roots(&coeffs).unwrap();
        let zeros = roots.iter().filter(|z| z.norm() < 1e-12).count();
        assert_eq!(zeros, 2);
        assert!(roots.iter().any(|z| (z - c(2.0, 0.0)).norm() < 1e-10));
        // constant
        assert!(poly_roots(&[c(3.0, 0.0)]).unwrap().is_empty());
        // all zero
        assert!(matches!(
            poly_roots(&[c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn poly_roots_large_degree_unit_circle() {
        // Roots of z^24 - 1 are the 24th roots of unity.
        let mut coeffs = vec![c(0.0, 0.0); 25];
        coeffs[0] = c(-1.0, 0.0);
        coeffs[24] = c(1.0, 0.0);
        let roots = poly_roots(&coeffs).unwrap();
        let planted: Vec<Complex64> = (0..24)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 24.0))
            .collect();
        assert_root_multiset_close(&roots, &planted, 1e-9);
    }

    #[test]
    fn select_unit_circle_merges_reciprocal_twins() {
        let phi = 0.8f64;
        let roots = vec![
            Complex64::from_polar(0.999, phi),
            Complex64::from_polar(1.0 / 0.999, phi + 2e-5),
            Complex64::from_polar(0.5, -1.0), // far from the circle
        ];
        let sel = select_unit_circle(&roots, 0.5, &RootSelection::default());
        assert_eq!(sel.len(), 1);
        assert_abs_diff_eq!(sel.angles[0], phi, epsilon = 1e-4);
        assert_abs_diff_eq!(sel.t_values[0], phi / std::f64::consts::PI, epsilon = 1e-4);
    }

    #[test]
    fn select_unit_circle_wraps_around_pi() {
        let roots = vec![
            Complex64::from_polar(1.0, std::f64::consts::PI - 1e-5),
            Complex64::from_polar(1.0, -std::f64::consts::PI + 1e-5),
        ];
        let sel = select_unit_circle(&roots, 0.5, &RootSelection::default());
        assert_eq!(sel.len(), 1);
    }

    #[test]
    fn select_unit_circle_discards_nonphysical_directions() {
        // With d/lambda = 1/4 an angle of pi maps to t = 2: outside [-1, 1].
        let roots = vec![
            Complex64::from_polar(1.0, std::f64::consts::PI),
            Complex64::from_polar(1.0, 0.4),
        ];
        let sel = select_unit_circle(&roots, 0.25, &RootSelection::default());
        assert_eq!(sel.len(), 1);
        assert_abs_diff_eq!(sel.t_values[0], 0.4 / (0.5 * std::f64::consts::PI), epsilon = 1e-12);
    }

    #[test]
    fn null_spectrum_poly_matches_quadratic_form() {
        let m = 4;
        let mut psi = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let v = c(
                    ((i * 3 + j) as f64 * 0.37).sin(),
                    ((i as f64) - (j as f64)) * 0.21,
                );
                psi[(i, j)] = v;
            }
        }
        let herm = (psi.clone() + psi.adjoint()) * c(0.5, 0.0);
        let n = null_spectrum_poly(&herm).unwrap();
        for k in 0..25 {
            let t = -0.96 + 0.08 * k as f64;
            let omega = std::f64::consts::PI * t; // d/lambda = 1/2
            let a: Vec<Complex64> = (0..m)
                .map(|i| Complex64::from_polar(1.0, omega * i as f64))
                .collect();
            let mut quad = c(0.0, 0.0);
            for i in 0..m {
                for j in 0..m {
                    quad += a[i].conj() * herm[(i, j)] * a[j];
                }
            }
            // N(z) at z = exp(j*omega) is sum psi_l z^{-l}.
            let val = n.eval_circle(-omega);
            assert_abs_diff_eq!((val - quad).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn null_spectrum_rejects_non_hermitian() {
        let mut psi = DMatrix::<Complex64>::identity(3, 3);
        psi[(0, 1)] = c(1.0, 0.0);
        assert!(null_spectrum_poly(&psi).is_err());
    }

    #[test]
    fn root_pipeline_recovers_single_source_projector() {
        // Psi = I - a a^H / M annihilates exactly the steering direction.
        let m = 8;
        let t0 = 0.37;
        let omega = std::f64::consts::PI * t0;
        let a: Vec<Complex64> = (0..m)
            .map(|i| Complex64::from_polar(1.0, omega * i as f64))
            .collect();
        let mut psi = DMatrix::<Complex64>::identity(m, m);
        for i in 0..m {
            for j in 0..m {
                psi[(i, j)] -= a[i] * a[j].conj() / m as f64;
            }
        }
        let ts = support_from_null_spectrum(&psi, 1, 0.5).unwrap();
        assert_eq!(ts.len(), 1);
        assert_abs_diff_eq!(ts[0], t0, epsilon = 1e-7);
    }

    #[test]
    fn insufficient_roots_is_reported() {
        // The identity matrix has a constant null spectrum: no roots at all.
        let psi = DMatrix::<Complex64>::identity(4, 4);
        match support_from_null_spectrum(&psi, 2, 0.5) {
            Err(Error::InsufficientRoots { found, requested }) => {
                assert_eq!(found, 0);
                assert_eq!(requested, 2);
            }
            other => panic!("expected InsufficientRoots, got {other:?}"),
        }
    }
}
