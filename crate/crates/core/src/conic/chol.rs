//! Blocked dense Cholesky sized for interior-point Schur complements.
//!
//! The Schur matrices produced by the solver reach a few thousand rows;
//! an unblocked factorization is memory-bound there, so panels are
//! factored unblocked and the trailing matrix is updated with `gemm`-level
//! products, strip by strip to stay on the lower triangle.  Only the lower
//! triangle of the input is referenced or written.

use nalgebra::{DMatrix, DVector};

/// Panel width for the blocked factorization.
const PANEL: usize = 64;
/// Column-strip width for the trailing update.
const STRIP: usize = 256;

/// In-place lower Cholesky of the symmetric matrix stored in the lower
/// triangle of `a`; returns `false` when a pivot is not strictly positive.
pub(super) fn cholesky_lower_in_place(a: &mut DMatrix<f64>) -> bool {
    let n = a.nrows();
    let mut k = 0;
    while k < n {
        let nb = PANEL.min(n - k);
        if !factor_panel(a, k, nb) {
            return false;
        }
        let rows = n - k - nb;
        if rows > 0 {
            // A21 <- A21 * L11^{-T}, then the trailing lower triangle loses
            // L21 * L21^T.  The panel inverse turns both into plain products.
            let linv_t = invert_lower_panel(a, k, nb).transpose();
            let a21 = a.view((k + nb, k), (rows, nb)).into_owned();
            a.view_mut((k + nb, k), (rows, nb)).gemm(1.0, &a21, &linv_t, 0.0);
            let l21 = a.view((k + nb, k), (rows, nb)).into_owned();
            let mut j = 0;
            while j < rows {
                let w = STRIP.min(rows - j);
                let strip_t = l21.view((j, 0), (w, nb)).transpose();
                let left = l21.view((j, 0), (rows - j, nb));
                a.view_mut((k + nb + j, k + nb + j), (rows - j, w))
                    .gemm(-1.0, &left, &strip_t, 1.0);
                j += w;
            }
        }
        k += nb;
    }
    true
}

/// Unblocked factorization of the `nb`-wide diagonal panel at `(k, k)`.
fn factor_panel(a: &mut DMatrix<f64>, k: usize, nb: usize) -> bool {
    for j in 0..nb {
        let cj = k + j;
        let mut d = a[(cj, cj)];
        for t in 0..j {
            let v = a[(cj, k + t)];
            d -= v * v;
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[(cj, cj)] = d;
        for i in j + 1..nb {
            let ri = k + i;
            let mut s = a[(ri, cj)];
            for t in 0..j {
                s -= a[(ri, k + t)] * a[(cj, k + t)];
            }
            a[(ri, cj)] = s / d;
        }
    }
    true
}

/// Explicit inverse of the already-factored lower panel at `(k, k)`.
fn invert_lower_panel(a: &DMatrix<f64>, k: usize, nb: usize) -> DMatrix<f64> {
    let mut inv = DMatrix::zeros(nb, nb);
    for c in 0..nb {
        inv[(c, c)] = 1.0 / a[(k + c, k + c)];
        for r in c + 1..nb {
            let mut s = 0.0;
            for t in c..r {
                s += a[(k + r, k + t)] * inv[(t, c)];
            }
            inv[(r, c)] = -s / a[(k + r, k + r)];
        }
    }
    inv
}

fn forward(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for j in 0..n {
        let xj = b[j] / l[(j, j)];
        b[j] = xj;
        if xj != 0.0 {
            for i in j + 1..n {
                b[i] -= l[(i, j)] * xj;
            }
        }
    }
}

fn backward(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for j in (0..n).rev() {
        let mut s = b[j];
        for i in j + 1..n {
            s -= l[(i, j)] * b[i];
        }
        b[j] = s / l[(j, j)];
    }
}

/// Cholesky factor of a symmetric positive (semi)definite matrix, with the
/// diagonal shift that was needed to make the pivots positive.
pub(super) struct SpdFactor {
    l: DMatrix<f64>,
    /// Diagonal regularization actually applied (zero in the clean case).
    #[allow(dead_code)]
    pub(super) regularization: f64,
}

/// Factors `m`, retrying with a geometrically growing diagonal shift when
/// rounding has pushed a pivot negative; `None` once the shift would exceed
/// `1e-5` of the diagonal scale.
pub(super) fn factor_spd(m: &DMatrix<f64>) -> Option<SpdFactor> {
    let n = m.nrows();
    let scale = (0..n)
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut reg = 0.0;
    loop {
        let mut a = m.clone_owned();
        if reg > 0.0 {
            for i in 0..n {
                a[(i, i)] += reg;
            }
        }
        if cholesky_lower_in_place(&mut a) {
            return Some(SpdFactor {
                l: a,
                regularization: reg,
            });
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        if reg > 1e-5 * scale {
            return None;
        }
    }
}

impl SpdFactor {
    pub(super) fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        forward(&self.l, x.as_mut_slice());
        backward(&self.l, x.as_mut_slice());
        x
    }

    pub(super) fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone_owned();
        for c in 0..x.ncols() {
            let mut col: DVector<f64> = x.column(c).into_owned();
            forward(&self.l, col.as_mut_slice());
            backward(&self.l, col.as_mut_slice());
            x.set_column(c, &col);
        }
        x
    }
}
