//! Grid-free direction estimation via the dual of the atomic-norm problem.
//!
//! The measurement `y` is modeled as a sparse combination of steering atoms
//! with continuous directions.  Instead of discretizing, the dual of the
//! atomic-norm denoising problem is solved as a semidefinite program; the
//! optimal dual vector `c` defines a polynomial `H(t) = a(t)^H c` whose
//! modulus touches one exactly on the support, which is then recovered by
//! rooting (see [`crate::rooting`]) and amplitudes by least squares on the
//! recovered steering vectors.
//!
//! The dual constraint `sup_t |H(t)| <= 1` is exactly the bounded-real
//! condition on a trigonometric polynomial, which is semidefinite
//! representable: there exists a Hermitian `Q` with
//!
//! ```text
//!     [ Q    c ]
//!     [ c^H  1 ]  >= 0,      sum_i Q_{i,i+j} = (j == 0) for all j,
//! ```
//!
//! and in the noisy variant the `-eps * ||c||_2` penalty enters through a
//! second block `[[tau*I, c], [c^H, tau]] >= 0`, equivalent to
//! `||c||_2 <= tau`.  Both blocks are posed over real symmetric matrices
//! through [`HermitianEmbedding`].

use nalgebra::DVector;
use num_complex::Complex64;

use crate::array::{k_max, ArrayGeometry};
use crate::classical::amplitudes_from_support;
use crate::conic::{
    arrow_block_structure, ConicProblem, Equality, HermitianEmbedding, LinForm, SolveStatus,
    SolverOptions,
};
use crate::error::{Error, Result};
use crate::rooting::{autocorrelation, poly_roots, support_from_dual, RootSelection};

/// Optimal dual vector of the atomic-norm program together with the data
/// needed to evaluate its polynomial.
#[derive(Debug, Clone)]
pub struct DualVector {
    /// Dual coefficients, one per array slot (zero on inactive slots).
    pub c: DVector<Complex64>,
    /// Geometry the dual was solved against.
    pub geometry: ArrayGeometry,
    /// Noise budget the dual was solved with (`0` for noiseless).
    pub epsilon: f64,
}

impl DualVector {
    /// Dual polynomial `H(t) = a(t)^H c = sum_m c_m exp(-j*2*pi*(d/lambda)*m*t)`
    /// summed over all slots (inactive slots hold zero coefficients).
    ///
    /// `|H(t)| <= 1` for feasible duals, with equality on the support.
    pub fn eval(&self, t: f64) -> Complex64 {
        let omega = 2.0 * std::f64::consts::PI * self.geometry.spacing_over_lambda() * t;
        self.c
            .iter()
            .enumerate()
            .map(|(m, &cm)| cm * Complex64::from_polar(1.0, -(m as f64) * omega))
            .sum()
    }

    /// Largest `|H(t)|` over a uniform grid of `n` points on `[-1, 1]`.
    pub fn max_modulus_on_grid(&self, n: usize) -> f64 {
        (0..n)
            .map(|k| {
                let t = -1.0 + 2.0 * k as f64 / (n.max(2) - 1) as f64;
                self.eval(t).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Supremum of `|H|` over the whole unit circle, computed by rooting the
    /// derivative of `|H|^2` so off-grid peaks cannot be missed.  Falls back
    /// to a dense grid if the rooting degenerates (e.g. `c = 0`).
    pub fn max_modulus(&self) -> f64 {
        let grid = self.max_modulus_on_grid(4096);
        let r = match autocorrelation(self.c.as_slice()) {
            Ok(r) => r,
            Err(_) => return grid,
        };
        let n = r.order() as isize;
        if n == 0 {
            return self.c[0].norm();
        }
        // |H|^2 on the circle is R(w) = sum_m r_m e^{jmw}; its critical
        // points are circle roots of the polynomial sum_m (jm r_m) z^{m+n}.
        let deriv: Vec<Complex64> = (-n..=n)
            .map(|m| Complex64::new(0.0, m as f64) * r.coeff(m))
            .collect();
        let roots = match poly_roots(&deriv) {
            Ok(roots) => roots,
            Err(_) => return grid,
        };
        let mut best = grid;
        for z in roots {
            if (z.norm() - 1.0).abs() < 5e-2 {
                best = best.max(r.eval_circle(z.arg()).re.max(0.0).sqrt());
            }
        }
        best
    }
}

/// Zero-pads a measurement over active sensors to full slot length.
fn pad_measurement(geometry: &ArrayGeometry, y: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if y.len() != geometry.num_active() {
        return Err(Error::Domain(format!(
            "measurement has {} entries, geometry has {} active sensors",
            y.len(),
            geometry.num_active()
        )));
    }
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain("measurement contains non-finite values".into()));
    }
    let mut full = DVector::zeros(geometry.slots());
    for (value, slot) in y.iter().zip(geometry.active_slots()) {
        full[slot] = *value;
    }
    Ok(full)
}

/// Shared scaffolding of both duals: the bounded-modulus block with its
/// normalization, trace, and masked-slot constraints, plus the data term of
/// the objective.  Returns the problem and the slot count.
fn bounded_modulus_block(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    extra_blocks: usize,
) -> Result<(ConicProblem, usize)> {
    let m = geometry.slots();
    let emb = HermitianEmbedding::new(m + 1);
    let one = Complex64::new(1.0, 0.0);
    let mut problem = ConicProblem::new(vec![emb.real_size(); 1 + extra_blocks], 0, 0);
    problem.maximize = true;

    let full = pad_measurement(geometry, y)?;
    // Re(c^H y) = Re trace(E S) for E with E[m, corner] = y_m.
    let data: Vec<(usize, usize, Complex64)> = full
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(slot, &v)| (slot, m, v))
        .collect();
    problem.objective = LinForm::new().psd_entries(0, emb.re_functional(&data));

    // Corner entry equals one.
    problem.equalities.push(Equality::new(
        LinForm::new().psd_entries(0, emb.re_functional(&[(m, m, one)])),
        1.0,
    ));
    // Trace parametrization of the modulus bound: the j-th diagonal of Q
    // sums to one for j = 0 and to zero otherwise.
    for j in 0..m {
        let entries: Vec<(usize, usize, Complex64)> =
            (0..m - j).map(|i| (i + j, i, one)).collect();
        problem.equalities.push(Equality::new(
            LinForm::new().psd_entries(0, emb.re_functional(&entries)),
            if j == 0 { 1.0 } else { 0.0 },
        ));
        if j > 0 {
            problem.equalities.push(Equality::new(
                LinForm::new().psd_entries(0, emb.im_functional(&entries)),
                0.0,
            ));
        }
    }
    // Slots without a sensor carry no dual weight.
    for (slot, &active) in geometry.active().iter().enumerate() {
        if !active {
            let e = [(m, slot, one)];
            problem.equalities.push(Equality::new(
                LinForm::new().psd_entries(0, emb.re_functional(&e)),
                0.0,
            ));
            problem.equalities.push(Equality::new(
                LinForm::new().psd_entries(0, emb.im_functional(&e)),
                0.0,
            ));
        }
    }
    Ok((problem, m))
}

/// Dual of exact atomic-norm interpolation:
/// `maximize Re(c^H y)` subject to `sup_t |a(t)^H c| <= 1`.
pub fn build_dual_sdp(geometry: &ArrayGeometry, y: &DVector<Complex64>) -> Result<ConicProblem> {
    let (problem, _) = bounded_modulus_block(geometry, y, 0)?;
    Ok(problem)
}

/// Dual of atomic-norm denoising with noise budget `epsilon`:
/// `maximize Re(c^H y) - epsilon * ||c||_2` under the same modulus bound.
///
/// A zero budget reduces to [`build_dual_sdp`]: the norm block would be
/// unconstrained and only inflate the problem.
pub fn build_dual_sdp_noisy(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    epsilon: f64,
) -> Result<ConicProblem> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Domain(format!("noise budget {epsilon} must be finite and >= 0")));
    }
    if epsilon == 0.0 {
        return build_dual_sdp(geometry, y);
    }
    let (mut problem, m) = bounded_modulus_block(geometry, y, 1)?;
    let emb = HermitianEmbedding::new(m + 1);
    let one = Complex64::new(1.0, 0.0);

    // ||c||_2 <= tau as the block [[tau*I, c], [c^H, tau]] >= 0.
    problem.equalities.extend(arrow_block_structure(&emb, 1));
    // The spokes of the norm block are the dual coefficients themselves.
    for slot in 0..m {
        let spoke = [(m, slot, one)];
        let neg = [(m, slot, -one)];
        problem.equalities.push(Equality::new(
            LinForm::new()
                .psd_entries(1, emb.re_functional(&spoke))
                .psd_entries(0, emb.re_functional(&neg)),
            0.0,
        ));
        problem.equalities.push(Equality::new(
            LinForm::new()
                .psd_entries(1, emb.im_functional(&spoke))
                .psd_entries(0, emb.im_functional(&neg)),
            0.0,
        ));
    }
    // Objective gains the -epsilon * tau term on the norm block's corner.
    let tau = emb.re_functional(&[(m, m, Complex64::new(-epsilon, 0.0))]);
    problem.objective = std::mem::take(&mut problem.objective).psd_entries(1, tau);
    Ok(problem)
}

/// Knobs of [`grid_free_solve`].
#[derive(Debug, Clone)]
pub struct GridFreeOptions {
    /// Noise budget: the recovered measure explains `y` up to this Euclidean
    /// error.  Zero demands exact interpolation.
    pub epsilon: f64,
    /// Interior-point stopping rules.
    pub solver: SolverOptions,
    /// Root selection thresholds for support recovery.
    pub roots: RootSelection,
    /// Cap on reported sources; defaults to the identifiability limit
    /// `(M - 1) / 2` for `M` active sensors.
    pub max_sources: Option<usize>,
}

impl Default for GridFreeOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            solver: SolverOptions::default(),
            roots: RootSelection::default(),
            max_sources: None,
        }
    }
}

/// Output of the grid-free estimator.
#[derive(Debug, Clone)]
pub struct DoaEstimate {
    /// Recovered directions, ascending in `t = sin(theta)`.
    pub support: Vec<f64>,
    /// Least-squares amplitudes, one per support direction.
    pub amplitudes: Vec<Complex64>,
    /// `||y - A x||_2` of the amplitude fit, in the units of `y`.
    pub residual: f64,
    /// Optimal value of the estimation program: the atomic norm of the
    /// recovered measure (up to the duality gap).
    pub atomic_norm: f64,
    /// The dual certificate; its polynomial peaks at the support.
    pub dual: DualVector,
    /// Per-direction root-selection residuals (distance of the root cluster
    /// from the unit circle); small values mean crisp peaks.
    pub root_residuals: Vec<f64>,
    /// `false` when the certificate did not isolate the support: the
    /// modulus polynomial was degenerate, or more peaks appeared than the
    /// identifiability cap and the list was truncated to the best ones.
    pub resolvable: bool,
    /// `|Re(c^H y) - eps*||c||_2 - sum_i |x_i||`: how far the certificate's
    /// objective sits from the strength of the fitted amplitudes.  At an
    /// exact optimum the two coincide.
    pub duality_gap_check: f64,
    /// Relative duality gap reported by the solver.
    pub solver_gap: f64,
    /// Interior-point iterations spent.
    pub iterations: usize,
    /// Condition number of the steering matrix on the support.
    pub fit_condition: f64,
}

/// Grid-free direction-of-amplitude estimation: solves the dual program,
/// roots the certificate polynomial, and fits amplitudes on the support.
pub fn grid_free_solve(
    geometry: &ArrayGeometry,
    y: &DVector<Complex64>,
    opts: &GridFreeOptions,
) -> Result<DoaEstimate> {
    if !opts.epsilon.is_finite() || opts.epsilon < 0.0 {
        return Err(Error::Domain(format!(
            "noise budget {} must be finite and >= 0",
            opts.epsilon
        )));
    }
    let cap = match opts.max_sources {
        Some(k) => k,
        None => k_max(geometry.num_active())?,
    };
    let scale = y.norm();
    let empty_dual = |eps| DualVector {
        c: DVector::zeros(geometry.slots()),
        geometry: geometry.clone(),
        epsilon: eps,
    };
    if scale == 0.0 {
        pad_measurement(geometry, y)?; // still validate the length
        return Ok(DoaEstimate {
            support: Vec::new(),
            amplitudes: Vec::new(),
            residual: 0.0,
            atomic_norm: 0.0,
            dual: empty_dual(opts.epsilon),
            root_residuals: Vec::new(),
            resolvable: true,
            duality_gap_check: 0.0,
            solver_gap: 0.0,
            iterations: 0,
            fit_condition: 1.0,
        });
    }

    // Solve at unit measurement norm so tolerances mean the same thing at
    // every SNR; the dual vector is scale invariant and needs no undo.
    let y_hat = y / Complex64::new(scale, 0.0);
    let eps_hat = opts.epsilon / scale;
    let problem = build_dual_sdp_noisy(geometry, &y_hat, eps_hat)?;
    let sol = problem.solve(&opts.solver)?;
    if sol.status == SolveStatus::Infeasible {
        // c = 0 is always feasible, so this can only be numerical failure.
        return Err(Error::SolverFailure(
            "dual program reported infeasible despite admitting c = 0".into(),
        ));
    }
    if sol.duality_gap > 1e-4 || sol.primal_residual > 1e-4 {
        return Err(Error::SolverFailure(format!(
            "dual program did not converge: gap {:.2e}, feasibility {:.2e}",
            sol.duality_gap, sol.primal_residual
        )));
    }

    let m = geometry.slots();
    let emb = HermitianEmbedding::new(m + 1);
    let s = emb.extract(&sol.psd[0]);
    let mut c = DVector::from_fn(m, |slot, _| s[(slot, m)]);
    for (slot, &active) in geometry.active().iter().enumerate() {
        if !active {
            c[slot] = Complex64::new(0.0, 0.0);
        }
    }
    let mut dual = DualVector {
        c,
        geometry: geometry.clone(),
        epsilon: opts.epsilon,
    };
    // The iterate is feasible only up to solver tolerance; shrink the
    // certificate so its modulus bound holds exactly.
    let sup = dual.max_modulus();
    if sup > 1.0 {
        dual.c /= Complex64::new(sup * (1.0 + 1e-12), 0.0);
    }

    let atomic_norm = sol.objective_value * scale;
    let mut resolvable = true;
    let (mut support, mut root_residuals) = match support_from_dual(&dual, &opts.roots) {
        Ok(set) => (set.t_values, set.residuals),
        Err(Error::Degenerate(_)) => {
            resolvable = false;
            (Vec::new(), Vec::new())
        }
        Err(e) => return Err(e),
    };
    if support.len() > cap {
        // More touching points than identifiable sources: keep the crispest.
        resolvable = false;
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by(|&a, &b| root_residuals[a].total_cmp(&root_residuals[b]));
        order.truncate(cap);
        order.sort_unstable();
        support = order.iter().map(|&i| support[i]).collect();
        root_residuals = order.iter().map(|&i| root_residuals[i]).collect();
    }

    let fit = amplitudes_from_support(geometry, y, &support)?;
    let dual_value: f64 = dual
        .c
        .iter()
        .zip(pad_measurement(geometry, y)?.iter())
        .map(|(cm, ym)| (cm.conj() * ym).re)
        .sum::<f64>()
        - opts.epsilon * dual.c.norm();
    let primal_value: f64 = fit.amplitudes.iter().map(|x| x.norm()).sum();
    Ok(DoaEstimate {
        support,
        amplitudes: fit.amplitudes,
        residual: fit.residual,
        atomic_norm,
        dual,
        root_residuals,
        resolvable,
        duality_gap_check: (dual_value - primal_value).abs(),
        solver_gap: sol.duality_gap,
        iterations: sol.iterations,
        fit_condition: fit.condition,
    })
}
