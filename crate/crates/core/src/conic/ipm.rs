//! Interior-point core: Nesterov-Todd scaled Mehrotra predictor-corrector
//! over block-diagonal semidefinite cones with equality constraints and
//! free variables.
//!
//! The Newton system is reduced to the Schur complement in the equality
//! multipliers; each Schur entry `<A_k, W A_l W>` is accumulated directly
//! from the sparse constraint entries and the dense scaling matrix, which
//! keeps the formation cost proportional to the constraint sparsity rather
//! than the block dimension.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::chol::factor_spd;
use super::{ConicProblem, ConicSolution, LinForm, SolveStatus, SolverOptions};
use crate::error::{Error, Result};

/// Uniform sparse entry: the coefficient matrix contains
/// `v * (E_ij + E_ji)` with `i <= j`; diagonal values are stored halved so
/// every code path (dot, scatter, Schur) is case-free.
#[derive(Debug, Clone, Copy)]
struct UEntry {
    i: usize,
    j: usize,
    v: f64,
}

struct Constraint {
    /// `(block index, entries)`, one tuple per touched block.
    per_block: Vec<(usize, Vec<UEntry>)>,
}

struct Model {
    /// All block sizes: user PSD blocks first, then one 1x1 per nonneg var.
    sizes: Vec<usize>,
    /// Objective per block, internal minimize orientation.
    c_blocks: Vec<DMatrix<f64>>,
    c_free: DVector<f64>,
    cons: Vec<Constraint>,
    /// For each block, `(constraint index, position in its per_block list)`.
    by_block: Vec<Vec<(usize, usize)>>,
    b: DVector<f64>,
    f_mat: DMatrix<f64>,
    /// `+1` when the user minimizes, `-1` when the user maximizes.
    sign: f64,
    num_user_blocks: usize,
    num_nonneg: usize,
    b_norm: f64,
    c_norm: f64,
}

fn uniform_entries(form: &LinForm, num_user_blocks: usize) -> Vec<(usize, Vec<UEntry>)> {
    let mut out: Vec<(usize, Vec<UEntry>)> = Vec::new();
    for (block, entries) in &form.psd {
        let ues = entries
            .iter()
            .map(|e| {
                let (i, j) = if e.i <= e.j { (e.i, e.j) } else { (e.j, e.i) };
                UEntry {
                    i,
                    j,
                    v: if i == j { e.value * 0.5 } else { e.value },
                }
            })
            .collect();
        out.push((*block, ues));
    }
    for &(idx, v) in &form.nonneg {
        out.push((num_user_blocks + idx, vec![UEntry { i: 0, j: 0, v: v * 0.5 }]));
    }
    out
}

fn compile(problem: &ConicProblem) -> Model {
    let num_user_blocks = problem.block_sizes.len();
    let mut sizes = problem.block_sizes.clone();
    sizes.extend(std::iter::repeat(1).take(problem.num_nonneg));
    let sign = if problem.maximize { -1.0 } else { 1.0 };

    let mut c_blocks: Vec<DMatrix<f64>> =
        sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
    for (block, entries) in uniform_entries(&problem.objective, num_user_blocks) {
        scatter_block(&entries, sign, &mut c_blocks[block]);
    }
    let mut c_free = DVector::zeros(problem.num_free);
    for &(idx, v) in &problem.objective.free {
        c_free[idx] += sign * v;
    }

    let p = problem.equalities.len();
    let mut b = DVector::zeros(p);
    let mut f_mat = DMatrix::zeros(p, problem.num_free);
    let mut cons = Vec::with_capacity(p);
    for (k, eq) in problem.equalities.iter().enumerate() {
        b[k] = eq.rhs;
        for &(idx, v) in &eq.form.free {
            f_mat[(k, idx)] += v;
        }
        cons.push(Constraint {
            per_block: uniform_entries(&eq.form, num_user_blocks),
        });
    }

    let mut by_block: Vec<Vec<(usize, usize)>> = vec![Vec::new(); sizes.len()];
    for (k, c) in cons.iter().enumerate() {
        for (pos, (block, _)) in c.per_block.iter().enumerate() {
            by_block[*block].push((k, pos));
        }
    }

    let b_norm = b.norm();
    let c_norm_sq: f64 =
        c_blocks.iter().map(|c| c.norm_squared()).sum::<f64>() + c_free.norm_squared();
    let c_norm = c_norm_sq.sqrt();

    Model {
        sizes,
        c_blocks,
        c_free,
        cons,
        by_block,
        b,
        f_mat,
        sign,
        num_user_blocks,
        num_nonneg: problem.num_nonneg,
        b_norm,
        c_norm,
    }
}

fn dot_block(entries: &[UEntry], m: &DMatrix<f64>) -> f64 {
    entries.iter().map(|e| 2.0 * e.v * m[(e.i, e.j)]).sum()
}

fn scatter_block(entries: &[UEntry], weight: f64, m: &mut DMatrix<f64>) {
    for e in entries {
        m[(e.i, e.j)] += e.v * weight;
        m[(e.j, e.i)] += e.v * weight;
    }
}

/// `A(mats)`: one inner product per equality constraint.
fn apply_a(model: &Model, mats: &[DMatrix<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        model.cons.len(),
        model.cons.iter().map(|c| {
            c.per_block
                .iter()
                .map(|(b, es)| dot_block(es, &mats[*b]))
                .sum::<f64>()
        }),
    )
}

/// Block `b` of the adjoint `A*(lam)`.
fn adjoint_block(model: &Model, lam: &DVector<f64>, block: usize) -> DMatrix<f64> {
    let s = model.sizes[block];
    let mut out = DMatrix::zeros(s, s);
    for &(k, pos) in &model.by_block[block] {
        let w = lam[k];
        if w != 0.0 {
            scatter_block(&model.cons[k].per_block[pos].1, w, &mut out);
        }
    }
    out
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn fro_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Nesterov-Todd scaling point and factor data for one block.
struct BlockScaling {
    w: DMatrix<f64>,
    zinv: DMatrix<f64>,
    lx: DMatrix<f64>,
    lz: DMatrix<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<BlockScaling> {
    let chol_x = nalgebra::Cholesky::new(x.clone())?;
    let chol_z = nalgebra::Cholesky::new(z.clone())?;
    let lx = chol_x.l();
    let lz = chol_z.l();
    let zinv = chol_z.inverse();
    let mid = sym(lx.transpose() * z * &lx);
    let eig = SymmetricEigen::new(mid);
    if eig.eigenvalues.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return None;
    }
    // W = G G^T with G = L_x V D^{-1/4} satisfies W Z W = X.
    let mut g = &lx * &eig.eigenvectors;
    for (c, &d) in eig.eigenvalues.iter().enumerate() {
        let scale = d.powf(-0.25);
        g.column_mut(c).scale_mut(scale);
    }
    let w = sym(&g * g.transpose());
    Some(BlockScaling { w, zinv, lx, lz })
}

/// Largest `alpha` keeping `base + alpha * delta` positive semidefinite,
/// where `l` is the Cholesky factor of `base` (`inf` when unconstrained).
fn max_step(l: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let y1 = match l.solve_lower_triangular(delta) {
        Some(y) => y,
        None => return 0.0,
    };
    let y2 = match l.solve_lower_triangular(&y1.transpose()) {
        Some(y) => y,
        None => return 0.0,
    };
    let eig = SymmetricEigen::new(sym(y2));
    let lmin = eig.eigenvalues.min();
    if lmin >= -1e-14 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Schur complement `M_kl = sum_blocks <A_k, W A_l W>` accumulated from the
/// sparse entries via
/// `<E_ab + E_ba, W (E_cd + E_dc) W> = 2 (W_ac W_bd + W_ad W_bc)`.
fn build_schur(model: &Model, scalings: &[BlockScaling]) -> DMatrix<f64> {
    let p = model.cons.len();
    let mut m = DMatrix::zeros(p, p);
    for (block, scaling) in scalings.iter().enumerate() {
        let w = &scaling.w;
        let touch = &model.by_block[block];
        for (a, &(ka, pa)) in touch.iter().enumerate() {
            let ea = &model.cons[ka].per_block[pa].1;
            for &(kb, pb) in touch.iter().take(a + 1) {
                let eb = &model.cons[kb].per_block[pb].1;
                let mut s = 0.0;
                for e in ea {
                    for f in eb {
                        s += e.v
                            * f.v
                            * (w[(e.i, f.i)] * w[(e.j, f.j)] + w[(e.i, f.j)] * w[(e.j, f.i)]);
                    }
                }
                s *= 2.0;
                m[(ka, kb)] += s;
                if ka != kb {
                    m[(kb, ka)] += s;
                }
            }
        }
    }
    m
}

struct Residuals {
    p_obj: f64,
    d_obj: f64,
    r_p: DVector<f64>,
    r_d: Vec<DMatrix<f64>>,
    r_f: DVector<f64>,
    rel_gap: f64,
    rel_p: f64,
    rel_d: f64,
}

fn residuals(
    model: &Model,
    x: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    u: &DVector<f64>,
    lam: &DVector<f64>,
) -> Residuals {
    let nf = model.c_free.len();
    let p_obj = model
        .c_blocks
        .iter()
        .zip(x)
        .map(|(c, xb)| fro_dot(c, xb))
        .sum::<f64>()
        + model.c_free.dot(u);
    let d_obj = model.b.dot(lam);
    let mut r_p = &model.b - apply_a(model, x);
    if nf > 0 {
        r_p -= &model.f_mat * u;
    }
    let r_d: Vec<DMatrix<f64>> = (0..model.sizes.len())
        .map(|bi| &model.c_blocks[bi] - adjoint_block(model, lam, bi) - &z[bi])
        .collect();
    let r_f = if nf > 0 {
        &model.c_free - model.f_mat.transpose() * lam
    } else {
        DVector::zeros(0)
    };
    let rel_gap = (p_obj - d_obj).abs() / (1.0 + p_obj.abs() + d_obj.abs());
    let rel_p = r_p.norm() / (1.0 + model.b_norm);
    let rd_norm =
        (r_d.iter().map(|m| m.norm_squared()).sum::<f64>() + r_f.norm_squared()).sqrt();
    let rel_d = rd_norm / (1.0 + model.c_norm);
    Residuals {
        p_obj,
        d_obj,
        r_p,
        r_d,
        r_f,
        rel_gap,
        rel_p,
        rel_d,
    }
}

pub(super) fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    let model = compile(problem);
    let nblocks = model.sizes.len();
    let p = model.b.len();
    let nf = model.c_free.len();
    let nu: f64 = model.sizes.iter().sum::<usize>() as f64;

    let xi = model.b.amax().max(1.0);
    let zeta = model
        .c_blocks
        .iter()
        .map(|c| c.amax())
        .fold(0.0, f64::max)
        .max(if nf > 0 { model.c_free.amax() } else { 0.0 })
        .max(1.0);
    let mut x: Vec<DMatrix<f64>> = model
        .sizes
        .iter()
        .map(|&s| DMatrix::identity(s, s) * xi)
        .collect();
    let mut z: Vec<DMatrix<f64>> = model
        .sizes
        .iter()
        .map(|&s| DMatrix::identity(s, s) * zeta)
        .collect();
    let mut u = DVector::<f64>::zeros(nf);
    let mut lam = DVector::<f64>::zeros(p);

    let mu0 = xi * zeta;
    let mut best_metric = f64::INFINITY;
    let mut best_iter = 0usize;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0usize;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let res = residuals(&model, &x, &z, &u, &lam);
        let mu = x
            .iter()
            .zip(&z)
            .map(|(xb, zb)| fro_dot(xb, zb))
            .sum::<f64>()
            / nu;

        if opts.verbose {
            eprintln!(
                "ipm iter {iter:3}  mu {mu:9.2e}  gap {:9.2e}  pres {:9.2e}  dres {:9.2e}",
                res.rel_gap, res.rel_p, res.rel_d
            );
        }

        if res.rel_gap <= opts.gap_tol
            && res.rel_p <= opts.feas_tol
            && res.rel_d <= opts.feas_tol
        {
            status = SolveStatus::Optimal;
            break;
        }
        // A dual objective racing to +inf while staying dual-feasible is the
        // practical certificate that no primal point satisfies A(X) + Fu = b.
        if res.d_obj > 1e12 * (1.0 + model.c_norm) && res.rel_d < 1e-6 {
            status = SolveStatus::Infeasible;
            break;
        }
        if res.p_obj < -1e12 * (1.0 + model.b_norm) && res.rel_p < 1e-6 {
            return Err(Error::SolverFailure(
                "objective appears unbounded below".into(),
            ));
        }
        if mu < 1e-12 * mu0.max(1.0) && res.rel_p > 1e-6 {
            status = SolveStatus::Infeasible;
            break;
        }
        let metric = res.rel_gap.max(res.rel_p).max(res.rel_d);
        if metric < 0.99 * best_metric {
            best_metric = metric;
            best_iter = iter;
        } else if iter - best_iter > 20 {
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let scalings: Option<Vec<BlockScaling>> = x
            .iter()
            .zip(&z)
            .map(|(xb, zb)| nt_scaling(xb, zb))
            .collect();
        let Some(scalings) = scalings else { break };

        let schur = build_schur(&model, &scalings);
        let Some(factor) = factor_spd(&schur) else { break };

        let reduced: Option<(DMatrix<f64>, nalgebra::Cholesky<f64, nalgebra::Dyn>)> = if nf > 0
        {
            let minv_f = factor.solve_mat(&model.f_mat);
            let small = sym(model.f_mat.transpose() * &minv_f);
            match nalgebra::Cholesky::new(small) {
                Some(ch) => Some((minv_f, ch)),
                None => {
                    return Err(Error::SolverFailure(
                        "free-variable reduced system is singular".into(),
                    ))
                }
            }
        } else {
            None
        };
        let solve_saddle = |rhs: &DVector<f64>, rf: &DVector<f64>| {
            if let Some((minv_f, small)) = &reduced {
                let t = factor.solve_vec(rhs);
                let rhs_u = model.f_mat.transpose() * &t - rf;
                let du = small.solve(&rhs_u);
                let dl = t - minv_f * &du;
                (dl, du)
            } else {
                (factor.solve_vec(rhs), DVector::zeros(0))
            }
        };

        let wrdw: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(&res.r_d)
            .map(|(s, rd)| sym(&s.w * rd * &s.w))
            .collect();
        let a_wrdw = apply_a(&model, &wrdw);

        // One factorization serves the predictor, the corrector, and the
        // centering fallback; only the complementarity target changes.
        let direction = |rc: &[DMatrix<f64>]| {
            let rhs = &res.r_p - apply_a(&model, rc) + &a_wrdw;
            let (dl, du) = solve_saddle(&rhs, &res.r_f);
            let dz: Vec<DMatrix<f64>> = (0..nblocks)
                .map(|bi| &res.r_d[bi] - adjoint_block(&model, &dl, bi))
                .collect();
            let dx: Vec<DMatrix<f64>> = (0..nblocks)
                .map(|bi| &rc[bi] - sym(&scalings[bi].w * &dz[bi] * &scalings[bi].w))
                .collect();
            (dx, dz, dl, du)
        };
        let step_bounds = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = scalings
                .iter()
                .zip(dx)
                .map(|(s, d)| max_step(&s.lx, d))
                .fold(f64::INFINITY, f64::min);
            let ad = scalings
                .iter()
                .zip(dz)
                .map(|(s, d)| max_step(&s.lz, d))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|xb| -xb).collect();
        let (dx_a, dz_a, _, _) = direction(&rc_aff);
        let (apm, adm) = step_bounds(&dx_a, &dz_a);
        let (ap_aff, ad_aff) = (apm.min(1.0), adm.min(1.0));
        let mu_aff = (x
            .iter()
            .zip(&z)
            .zip(dx_a.iter().zip(&dz_a))
            .map(|((xb, zb), (dxb, dzb))| {
                fro_dot(xb, zb)
                    + ap_aff * fro_dot(dxb, zb)
                    + ad_aff * fro_dot(xb, dzb)
                    + ap_aff * ad_aff * fro_dot(dxb, dzb)
            })
            .sum::<f64>()
            / nu)
            .max(0.0);
        let sigma = ((mu_aff / mu).min(1.0)).powi(3).clamp(1e-8, 1.0);

        let rc_corr: Vec<DMatrix<f64>> = (0..nblocks)
            .map(|bi| {
                let second = sym(&dx_a[bi] * &dz_a[bi] * &scalings[bi].zinv);
                &scalings[bi].zinv * (sigma * mu) - &x[bi] - second
            })
            .collect();
        let (mut dx, mut dz, mut dl, mut du) = direction(&rc_corr);
        let (apm, adm) = step_bounds(&dx, &dz);
        let mut ap = (0.98 * apm).min(1.0);
        let mut ad = (0.98 * adm).min(1.0);
        if ap.min(ad) < 0.01 {
            // The second-order term overshot; fall back to a centering step.
            let rc_center: Vec<DMatrix<f64>> = (0..nblocks)
                .map(|bi| &scalings[bi].zinv * (0.8 * mu) - &x[bi])
                .collect();
            (dx, dz, dl, du) = direction(&rc_center);
            let (apm, adm) = step_bounds(&dx, &dz);
            ap = (0.98 * apm).min(1.0);
            ad = (0.98 * adm).min(1.0);
        }

        // Guard the update with an explicit definiteness check, shrinking the
        // step if rounding at the boundary spoiled it.
        let advance = |alpha: f64, base: &[DMatrix<f64>], delta: &[DMatrix<f64>]| {
            let cand: Vec<DMatrix<f64>> = base
                .iter()
                .zip(delta)
                .map(|(b, d)| sym(b + d * alpha))
                .collect();
            cand.iter()
                .all(|m| nalgebra::Cholesky::new(m.clone()).is_some())
                .then_some(cand)
        };
        let mut x_next = None;
        for _ in 0..12 {
            if let Some(c) = advance(ap, &x, &dx) {
                x_next = Some(c);
                break;
            }
            ap *= 0.7;
        }
        let mut z_next = None;
        for _ in 0..12 {
            if let Some(c) = advance(ad, &z, &dz) {
                z_next = Some(c);
                break;
            }
            ad *= 0.7;
        }
        let (Some(xn), Some(zn)) = (x_next, z_next) else { break };
        x = xn;
        z = zn;
        u += du * ap;
        lam += dl * ad;
    }

    let res = residuals(&model, &x, &z, &u, &lam);
    let psd = x[..model.num_user_blocks].to_vec();
    let nonneg = (0..model.num_nonneg)
        .map(|q| x[model.num_user_blocks + q][(0, 0)])
        .collect();
    Ok(ConicSolution {
        psd,
        nonneg,
        free: u.iter().copied().collect(),
        equality_multipliers: lam.iter().map(|&l| model.sign * l).collect(),
        objective_value: model.sign * res.p_obj,
        duality_gap: res.rel_gap,
        primal_residual: res.rel_p,
        dual_residual: res.rel_d,
        iterations,
        status,
    })
}
