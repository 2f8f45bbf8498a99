//! Conic optimization: semidefinite blocks, nonnegative scalars, and free
//! variables under linear equality constraints.
//!
//! Problems are stated in the primal standard form
//!
//! ```text
//!     minimize    sum_b <C_b, X_b>  +  c_n' s  +  c_f' u
//!     subject to  sum_b <A_kb, X_b> + a_kn' s + F_k u  =  b_k,
//!                 X_b  >= 0  (symmetric positive semidefinite),
//!                 s >= 0 elementwise,  u free,
//! ```
//!
//! (`maximize` flips the objective) and solved with a primal-dual
//! interior-point method using Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector (see [`SolverOptions`] for the tolerances).
//!
//! Hermitian problems are posed over real symmetric blocks through
//! [`HermitianEmbedding`]: a complex matrix `X = A + iB` corresponds to the
//! real block `[[A, -B], [B, A]]`, a Hermitian functional `K` to the real
//! functional `T(K)/2`.  The realified problem is solved *without* imposing
//! the paired block structure: the feasible set and all functionals are
//! invariant under conjugation by `J = [[0, -I], [I, 0]]`, so averaging an
//! optimal point with its conjugate — which is what [`HermitianEmbedding::extract`]
//! does — yields an optimal point in the structured form, at the cost of one
//! matrix average instead of quadratically many extra constraints.

mod chol;
mod ipm;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Entry of a sparse real symmetric coefficient matrix: both `(i, j)` and
/// `(j, i)` hold `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Linear functional over the variable tuple (PSD blocks, nonnegative
/// scalars, free scalars).
#[derive(Debug, Clone, Default)]
pub struct LinForm {
    /// Per-block sparse symmetric coefficient matrices.
    pub psd: Vec<(usize, Vec<SymEntry>)>,
    /// Coefficients on nonnegative scalars.
    pub nonneg: Vec<(usize, f64)>,
    /// Coefficients on free scalars.
    pub free: Vec<(usize, f64)>,
}

impl LinForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(i, j)` (and `(j, i)`) of `block`; chainable.
    pub fn psd(mut self, block: usize, i: usize, j: usize, value: f64) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.push_psd(block, vec![SymEntry { i, j, value }]);
        self
    }

    /// Appends a batch of entries to `block`; chainable.
    pub fn psd_entries(mut self, block: usize, entries: Vec<SymEntry>) -> Self {
        self.push_psd(block, entries);
        self
    }

    pub fn nonneg(mut self, index: usize, value: f64) -> Self {
        self.nonneg.push((index, value));
        self
    }

    pub fn free(mut self, index: usize, value: f64) -> Self {
        self.free.push((index, value));
        self
    }

    fn push_psd(&mut self, block: usize, mut entries: Vec<SymEntry>) {
        for e in &mut entries {
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
        }
        match self.psd.iter_mut().find(|(b, _)| *b == block) {
            Some((_, v)) => v.extend(entries),
            None => self.psd.push((block, entries)),
        }
    }
}

/// One linear equality `form == rhs`.
#[derive(Debug, Clone)]
pub struct Equality {
    pub form: LinForm,
    pub rhs: f64,
}

impl Equality {
    pub fn new(form: LinForm, rhs: f64) -> Self {
        Self { form, rhs }
    }
}

/// A conic program in the standard form described in the module docs.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub block_sizes: Vec<usize>,
    pub num_nonneg: usize,
    pub num_free: usize,
    pub maximize: bool,
    pub objective: LinForm,
    pub equalities: Vec<Equality>,
}

impl ConicProblem {
    pub fn new(block_sizes: Vec<usize>, num_nonneg: usize, num_free: usize) -> Self {
        Self {
            block_sizes,
            num_nonneg,
            num_free,
            maximize: false,
            objective: LinForm::new(),
            equalities: Vec::new(),
        }
    }

    /// Checks indices, finiteness, and solvability preconditions.
    pub fn validate(&self) -> Result<()> {
        if let Some(&s) = self.block_sizes.iter().find(|&&s| s == 0) {
            return Err(Error::Domain(format!("PSD block of size {s} is not allowed")));
        }
        if self.equalities.is_empty() {
            return Err(Error::Domain(
                "a conic program needs at least one equality constraint".into(),
            ));
        }
        let mut free_touched = vec![false; self.num_free];
        self.check_form(&self.objective, "objective", &mut vec![false; self.num_free])?;
        for (k, eq) in self.equalities.iter().enumerate() {
            if !eq.rhs.is_finite() {
                return Err(Error::Domain(format!(
                    "equality {k} has non-finite right-hand side"
                )));
            }
            self.check_form(&eq.form, &format!("equality {k}"), &mut free_touched)?;
        }
        if let Some(idx) = free_touched.iter().position(|t| !t) {
            return Err(Error::Domain(format!(
                "free variable {idx} appears in no equality; its reduced system would be singular"
            )));
        }
        if self.num_free > self.equalities.len() {
            return Err(Error::Domain(format!(
                "{} free variables cannot be pinned down by {} equalities",
                self.num_free,
                self.equalities.len()
            )));
        }
        Ok(())
    }

    fn check_form(&self, form: &LinForm, what: &str, free_touched: &mut [bool]) -> Result<()> {
        for (block, entries) in &form.psd {
            let size = *self.block_sizes.get(*block).ok_or_else(|| {
                Error::Domain(format!("{what} references PSD block {block} of {}", self.block_sizes.len()))
            })?;
            for e in entries {
                if e.i.max(e.j) >= size {
                    return Err(Error::Domain(format!(
                        "{what} entry ({}, {}) is outside block {block} of size {size}",
                        e.i, e.j
                    )));
                }
                if !e.value.is_finite() {
                    return Err(Error::Domain(format!("{what} has a non-finite coefficient")));
                }
            }
        }
        for &(idx, v) in &form.nonneg {
            if idx >= self.num_nonneg {
                return Err(Error::Domain(format!(
                    "{what} references nonnegative variable {idx} of {}",
                    self.num_nonneg
                )));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("{what} has a non-finite coefficient")));
            }
        }
        for &(idx, v) in &form.free {
            if idx >= self.num_free {
                return Err(Error::Domain(format!(
                    "{what} references free variable {idx} of {}",
                    self.num_free
                )));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("{what} has a non-finite coefficient")));
            }
            free_touched[idx] = true;
        }
        Ok(())
    }

    /// One-line size summary, handy in logs and failure messages.
    pub fn summary(&self) -> String {
        let nnz: usize = self
            .equalities
            .iter()
            .map(|eq| eq.form.psd.iter().map(|(_, v)| v.len()).sum::<usize>())
            .sum();
        format!(
            "{} psd block(s) {:?}, {} nonneg, {} free, {} equalities ({} psd nnz)",
            self.block_sizes.len(),
            self.block_sizes,
            self.num_nonneg,
            self.num_free,
            self.equalities.len(),
            nnz
        )
    }

    /// Validates and solves the program.
    pub fn solve(&self, opts: &SolverOptions) -> Result<ConicSolution> {
        self.validate()?;
        ipm::solve(self, opts)
    }
}

/// Interior-point stopping rules.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative duality-gap tolerance `|P - D| / (1 + |P| + |D|)`.
    pub gap_tol: f64,
    /// Relative primal and dual feasibility tolerance.
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Per-iteration progress on stderr.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// All tolerances met.
    Optimal,
    /// Iteration or progress budget exhausted; the iterate is returned as-is.
    MaxIterations,
    /// The equalities admit no point in the cone.
    Infeasible,
}

/// Solver output: final iterate, multipliers, and quality measures.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub psd: Vec<DMatrix<f64>>,
    pub nonneg: Vec<f64>,
    pub free: Vec<f64>,
    /// Equality multipliers, oriented so `sum_k lambda_k b_k` bounds the
    /// objective in the problem's own orientation.
    pub equality_multipliers: Vec<f64>,
    pub objective_value: f64,
    /// Relative duality gap at exit.
    pub duality_gap: f64,
    /// Relative primal infeasibility at exit.
    pub primal_residual: f64,
    /// Relative dual infeasibility at exit.
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Complex-Hermitian to real-symmetric translation for one PSD block.
///
/// See the module docs for why the paired structure need not be enforced
/// with constraints.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEmbedding {
    complex_size: usize,
}

impl HermitianEmbedding {
    pub fn new(complex_size: usize) -> Self {
        assert!(complex_size >= 1, "embedding needs at least one row");
        Self { complex_size }
    }

    pub fn complex_size(&self) -> usize {
        self.complex_size
    }

    /// Dimension of the realified block (`2n`).
    pub fn real_size(&self) -> usize {
        2 * self.complex_size
    }

    /// Real functional computing `Re trace(E X)` on the realified block,
    /// for an arbitrary complex coefficient matrix given as `(row, col, value)`
    /// entries.
    pub fn re_functional(&self, entries: &[(usize, usize, Complex64)]) -> Vec<SymEntry> {
        let mut k = BTreeMap::new();
        for &(i, j, v) in entries {
            accumulate_hermitian_part(&mut k, i, j, v);
        }
        self.realify(&k)
    }

    /// Real functional computing `Im trace(E X)` on the realified block.
    pub fn im_functional(&self, entries: &[(usize, usize, Complex64)]) -> Vec<SymEntry> {
        let mut k = BTreeMap::new();
        let minus_i = Complex64::new(0.0, -1.0);
        for &(i, j, v) in entries {
            accumulate_hermitian_part(&mut k, i, j, minus_i * v);
        }
        self.realify(&k)
    }

    /// Entries of `T(K)/2` for the Hermitian matrix accumulated in `k`.
    fn realify(&self, k: &BTreeMap<(usize, usize), Complex64>) -> Vec<SymEntry> {
        let n = self.complex_size;
        let mut out = Vec::new();
        for (&(i, j), &v) in k {
            let (a, b) = (v.re, v.im);
            if i == j {
                debug_assert!(b.abs() < 1e-12 * (1.0 + a.abs()));
                if a != 0.0 {
                    out.push(SymEntry { i, j: i, value: a * 0.5 });
                    out.push(SymEntry { i: n + i, j: n + i, value: a * 0.5 });
                }
            } else {
                if a != 0.0 {
                    out.push(SymEntry { i, j, value: a * 0.5 });
                    out.push(SymEntry { i: n + i, j: n + j, value: a * 0.5 });
                }
                if b != 0.0 {
                    out.push(SymEntry { i: j, j: n + i, value: b * 0.5 });
                    out.push(SymEntry { i, j: n + j, value: -b * 0.5 });
                }
            }
        }
        out
    }

    /// `T(X) = [[A, -B], [B, A]]` for `X = A + iB`.
    pub fn embed(&self, x: &DMatrix<Complex64>) -> DMatrix<f64> {
        let n = self.complex_size;
        assert_eq!(x.nrows(), n);
        assert_eq!(x.ncols(), n);
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = x[(i, j)].re;
                s[(n + i, n + j)] = x[(i, j)].re;
                s[(n + i, j)] = x[(i, j)].im;
                s[(i, n + j)] = -x[(i, j)].im;
            }
        }
        s
    }

    /// Recovers the Hermitian matrix from a realified block, averaging the
    /// block with its `J`-conjugate so unstructured solver output maps onto
    /// the structured form exactly.
    pub fn extract(&self, s: &DMatrix<f64>) -> DMatrix<Complex64> {
        let n = self.complex_size;
        assert_eq!(s.nrows(), 2 * n);
        assert_eq!(s.ncols(), 2 * n);
        DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(
                0.5 * (s[(i, j)] + s[(n + i, n + j)]),
                0.5 * (s[(n + i, j)] - s[(i, n + j)]),
            )
        })
    }
}

/// Adds the entry's share of `K = (E + E^H)/2` into the upper-triangle map.
///
/// An off-diagonal pair `(i, j)`/`(j, i)` of a Hermitian matrix is one degree
/// of freedom stored once at the upper position, so each input entry lands a
/// single halved (or conjugate-halved) contribution there; a diagonal entry
/// keeps only its real part.
fn accumulate_hermitian_part(
    k: &mut BTreeMap<(usize, usize), Complex64>,
    i: usize,
    j: usize,
    v: Complex64,
) {
    let (key, val) = match i.cmp(&j) {
        std::cmp::Ordering::Equal => ((i, i), Complex64::new(v.re, 0.0)),
        std::cmp::Ordering::Less => ((i, j), v * 0.5),
        std::cmp::Ordering::Greater => ((j, i), v.conj() * 0.5),
    };
    *k.entry(key).or_insert_with(|| Complex64::new(0.0, 0.0)) += val;
}

/// Equalities pinning a realified block of complex size `s` to the arrow
/// sparsity `[[t*I, c], [c^H, t]]`: every off-diagonal entry of the leading
/// `(s-1)`-block vanishes and all diagonal entries equal the corner.
pub fn arrow_block_structure(embedding: &HermitianEmbedding, block: usize) -> Vec<Equality> {
    let s = embedding.complex_size();
    assert!(s >= 2, "an arrow block needs at least one spoke");
    let corner = s - 1;
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    for i in 0..corner {
        for j in i + 1..corner {
            let e = [(i, j, one)];
            out.push(Equality::new(
                LinForm::new().psd_entries(block, embedding.re_functional(&e)),
                0.0,
            ));
            out.push(Equality::new(
                LinForm::new().psd_entries(block, embedding.im_functional(&e)),
                0.0,
            ));
        }
    }
    for i in 0..corner {
        let e = [(i, i, one), (corner, corner, -one)];
        out.push(Equality::new(
            LinForm::new().psd_entries(block, embedding.re_functional(&e)),
            0.0,
        ));
    }
    out
}
