//! Homogeneous self-dual interior-point loop.
//!
//! The embedding carries `(x, y, s, τ, κ)` with residuals
//!
//! ```text
//! r_p = A x − b τ
//! r_d = Aᵀy + s − c τ        (cone part)      r_f = A_fᵀ y − c_f τ   (free part)
//! r_g = c·x − b·y + κ
//! ```
//!
//! Each Newton step shrinks all residuals by `1 − α(1 − σ)` and targets `σμ`
//! on the complementarity. Hermitian blocks use Nesterov–Todd scaling
//! `R⁻¹XR⁻† = R†SR = Λ`, obtained from `L = chol(X)` and the eigenvectors of
//! `L†SL`; the Schur complement is `H_jl = Σ_b ⟨A_jb, W A_lb W⟩` with `W = RR†`.
//! Free primal variables are eliminated through a second Cholesky on
//! `A_fᵀ H⁻¹ A_f`.

use alloc::vec;
use alloc::vec::Vec;

use super::dense::{Cholesky, SpdMatrix};
use super::{LinearFunctional, ScalarVar, SdpProblem, SdpSolution, SolveStatus, SolverDiagnostics, SolverOptions};
use crate::hermlin::{self, ComplexMatrix, HermitianOperator};

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateLog {
    pub iteration: usize,
    /// `c·x/τ`.
    pub primal_objective: f64,
    /// `b·y/τ`.
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `(x·s + τκ)/(ν + 1)`.
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    /// Primal minus dual objective with the infeasibility terms removed
    /// (`c·x̂ − b·ŷ − ŷ·r̂_p + x̂·r̂_d`); weak duality says it is `x̂·ŝ ≥ 0`.
    pub corrected_gap: f64,
    /// `x̂·ŝ` computed directly from the cone variables.
    pub complementarity: f64,
    pub step: f64,
}

struct BlockData {
    dim: usize,
    c: HermitianOperator,
    rows: Vec<(usize, HermitianOperator)>,
}

struct Compiled {
    m: usize,
    b: Vec<f64>,
    blocks: Vec<BlockData>,
    lp_c: Vec<f64>,
    lp_cols: Vec<Vec<(usize, f64)>>,
    free_c: Vec<f64>,
    free_cols: Vec<Vec<(usize, f64)>>,
}

impl Compiled {
    fn new(p: &SdpProblem) -> Self {
        let mut blocks: Vec<BlockData> = p
            .block_dims
            .iter()
            .map(|&d| BlockData { dim: d, c: HermitianOperator::zeros(d), rows: Vec::new() })
            .collect();
        let mut lp_c = vec![0.0; p.num_nonneg];
        let mut lp_cols = vec![Vec::new(); p.num_nonneg];
        let mut free_c = vec![0.0; p.num_free];
        let mut free_cols = vec![Vec::new(); p.num_free];

        let obj: &LinearFunctional = &p.objective;
        for (bid, a) in &obj.block_terms {
            blocks[bid.0].c.add_scaled(1.0, a);
        }
        for (v, a) in &obj.scalar_terms {
            match *v {
                ScalarVar::Nonneg(k) => lp_c[k] += a,
                ScalarVar::Free(k) => free_c[k] += a,
            }
        }
        for (j, con) in p.constraints.iter().enumerate() {
            for (bid, a) in &con.lhs.block_terms {
                let rows = &mut blocks[bid.0].rows;
                match rows.last_mut() {
                    Some((r, acc)) if *r == j => acc.add_scaled(1.0, a),
                    _ => rows.push((j, a.clone())),
                }
            }
            for (v, a) in &con.lhs.scalar_terms {
                let col = match *v {
                    ScalarVar::Nonneg(k) => &mut lp_cols[k],
                    ScalarVar::Free(k) => &mut free_cols[k],
                };
                match col.last_mut() {
                    Some((r, acc)) if *r == j => *acc += a,
                    _ => col.push((j, *a)),
                }
            }
        }
        // Duplicate (row, block) terms that were not adjacent still need merging.
        for blk in &mut blocks {
            blk.rows.sort_by_key(|(r, _)| *r);
            let mut merged: Vec<(usize, HermitianOperator)> = Vec::with_capacity(blk.rows.len());
            for (r, a) in blk.rows.drain(..) {
                match merged.last_mut() {
                    Some((r0, acc)) if *r0 == r => acc.add_scaled(1.0, &a),
                    _ => merged.push((r, a)),
                }
            }
            blk.rows = merged;
        }
        Self {
            m: p.constraints.len(),
            b: p.constraints.iter().map(|c| c.rhs).collect(),
            blocks,
            lp_c,
            lp_cols,
            free_c,
            free_cols,
        }
    }

    fn nu(&self) -> f64 {
        (self.blocks.iter().map(|b| b.dim).sum::<usize>() + self.lp_c.len()) as f64
    }

    /// `A x` for the cone part plus `A_f x_f`.
    fn apply(&self, xb: &[HermitianOperator], xl: &[f64], xf: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (blk, x) in self.blocks.iter().zip(xb) {
            for (j, a) in &blk.rows {
                out[*j] += hermlin::frob_inner_unchecked(a, x);
            }
        }
        for (col, &x) in self.lp_cols.iter().zip(xl) {
            for &(j, a) in col {
                out[j] += a * x;
            }
        }
        for (col, &x) in self.free_cols.iter().zip(xf) {
            for &(j, a) in col {
                out[j] += a * x;
            }
        }
        out
    }

    fn adjoint_block(&self, b: usize, y: &[f64]) -> HermitianOperator {
        let blk = &self.blocks[b];
        let mut out = HermitianOperator::zeros(blk.dim);
        for (j, a) in &blk.rows {
            if y[*j] != 0.0 {
                out.add_scaled(y[*j], a);
            }
        }
        out
    }

    fn adjoint_cols(cols: &[Vec<(usize, f64)>], y: &[f64]) -> Vec<f64> {
        cols.iter().map(|col| col.iter().map(|&(j, a)| a * y[j]).sum()).collect()
    }
}

#[derive(Clone)]
struct Iterate {
    xb: Vec<HermitianOperator>,
    sb: Vec<HermitianOperator>,
    xl: Vec<f64>,
    sl: Vec<f64>,
    xf: Vec<f64>,
    y: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rp: Vec<f64>,
    rdb: Vec<HermitianOperator>,
    rdl: Vec<f64>,
    rf: Vec<f64>,
    rg: f64,
}

struct BlockScaling {
    /// `R` with `R⁻¹ X R⁻† = R† S R = Λ`.
    r: ComplexMatrix,
    /// `W = R R†`.
    w: ComplexMatrix,
    lambda: Vec<f64>,
    lx_inv: ComplexMatrix,
    ls_inv: ComplexMatrix,
}

struct Direction {
    xb: Vec<HermitianOperator>,
    sb: Vec<HermitianOperator>,
    xl: Vec<f64>,
    sl: Vec<f64>,
    xf: Vec<f64>,
    y: Vec<f64>,
    tau: f64,
    kappa: f64,
}

/// Factored Newton matrix `[[H, A_f], [A_fᵀ, 0]]`.
///
/// `H` is replaced by `H + γ A_f A_fᵀ`, which leaves the solution unchanged (the right-hand
/// side is shifted by `γ A_f r_f`) but keeps it definite when some `y` enter only through
/// free columns.
struct Kkt {
    h: Cholesky,
    gamma: f64,
    /// Columns `H⁻¹ a_f`, one per free variable.
    h_inv_af: Vec<Vec<f64>>,
    f: Option<Cholesky>,
}

impl Kkt {
    fn solve(&self, cp: &Compiled, ry: &[f64], rf: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let Some(f) = &self.f else {
            return (self.h.solve(ry), Vec::new());
        };
        let mut z = ry.to_vec();
        for (col, r) in cp.free_cols.iter().zip(rf) {
            for &(j, a) in col {
                z[j] += self.gamma * a * r;
            }
        }
        self.h.solve_in_place(&mut z);
        let mut rhs: Vec<f64> =
            cp.free_cols.iter().zip(rf).map(|(col, r)| col.iter().map(|&(j, a)| a * z[j]).sum::<f64>() - r).collect();
        f.solve_in_place(&mut rhs);
        let mut dy = z;
        for (col, &dxf) in self.h_inv_af.iter().zip(&rhs) {
            for (d, c) in dy.iter_mut().zip(col) {
                *d -= c * dxf;
            }
        }
        (dy, rhs)
    }
}

pub(super) fn run(problem: &SdpProblem, opts: &SolverOptions) -> SdpSolution {
    let cp = Compiled::new(problem);
    let nu = cp.nu();
    let nb = cp.blocks.len();

    let mut it = Iterate {
        xb: cp.blocks.iter().map(|b| HermitianOperator::identity(b.dim)).collect(),
        sb: cp.blocks.iter().map(|b| HermitianOperator::identity(b.dim)).collect(),
        xl: vec![1.0; cp.lp_c.len()],
        sl: vec![1.0; cp.lp_c.len()],
        xf: vec![0.0; cp.free_c.len()],
        y: vec![0.0; cp.m],
        tau: 1.0,
        kappa: 1.0,
    };

    let b_norm = 1.0 + cp.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let c_norm = 1.0
        + cp.blocks
            .iter()
            .fold(0.0f64, |a, b| a.max(max_abs(&b.c)))
            .max(cp.lp_c.iter().chain(&cp.free_c).fold(0.0f64, |a, v| a.max(v.abs())));

    let mut trace = Vec::new();
    let mut status = SolveStatus::NumericalFailure;
    let mut diag = SolverDiagnostics::default();
    let mut iterations = 0;
    let mut last_step = 1.0;

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let res = residuals(&cp, &it);
        let mu = complementarity(&it) / (nu + 1.0);

        let tau = it.tau;
        let pobj = objective(&cp, &it) / tau;
        let dobj = dot(&cp.b, &it.y) / tau;
        let pres = max_abs_vec(&res.rp) / tau / b_norm;
        let dres =
            res.rdb.iter().map(max_abs).fold(0.0f64, f64::max).max(max_abs_vec(&res.rdl)).max(max_abs_vec(&res.rf))
                / tau
                / c_norm;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        diag = SolverDiagnostics {
            primal_residual: pres,
            dual_residual: dres,
            relative_gap: gap,
            tau,
            kappa: it.kappa,
            mu,
        };

        let xs = cone_inner(&it) / (tau * tau);
        let corrected = pobj - dobj - dot(&it.y, &res.rp) / (tau * tau) + cone_inner_res(&it, &res) / (tau * tau);
        debug_assert!(
            corrected >= -1e-9 * (1.0 + pobj.abs() + dobj.abs() + xs.abs()),
            "weak duality violated at iterate {iter}: corrected gap {corrected:e}"
        );
        if opts.record_trace {
            trace.push(IterateLog {
                iteration: iter,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_residual: pres,
                dual_residual: dres,
                mu,
                tau,
                kappa: it.kappa,
                corrected_gap: corrected,
                complementarity: xs,
                step: last_step,
            });
        }

        if pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if let Some(s) = infeasibility(&cp, &it, opts.feas_tol) {
            status = s;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(scal) = scalings(&it) else { break };
        let Some(kkt) = factor(&cp, &scal, &it) else { break };

        // q solves K q = [b + A(W c W); c_f], shared by predictor and corrector.
        let wcw: Vec<HermitianOperator> = cp.blocks.iter().zip(&scal).map(|(b, s)| b.c.congruence(&s.w)).collect();
        let g: Vec<f64> = it.xl.iter().zip(&it.sl).map(|(x, s)| x / s).collect();
        let gc: Vec<f64> = g.iter().zip(&cp.lp_c).map(|(g, c)| g * c).collect();
        let mut vy = cp.apply(&wcw, &gc, &[]);
        for (v, b) in vy.iter_mut().zip(&cp.b) {
            *v += b;
        }
        let q = kkt.solve(&cp, &vy, &cp.free_c);

        // Predictor.
        let t_pred: Vec<HermitianOperator> = scal
            .iter()
            .map(|s| {
                let l2: Vec<f64> = s.lambda.iter().map(|l| -l * l).collect();
                HermitianOperator::from_diag(&l2)
            })
            .collect();
        let tl_pred: Vec<f64> = it.xl.iter().zip(&it.sl).map(|(x, s)| -x * s).collect();
        let aff = direction(&cp, &it, &res, &scal, &kkt, &q, &wcw, &g, 1.0, &t_pred, &tl_pred, -it.tau * it.kappa);
        let alpha_aff = max_step(&it, &aff, &scal).min(1.0);
        let mu_aff = complementarity_after(&it, &aff, alpha_aff) / (nu + 1.0);
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = ratio * ratio * ratio;

        // Corrector.
        let t_corr: Vec<HermitianOperator> = (0..nb)
            .map(|b| {
                let s = &scal[b];
                let ds_t = aff.sb[b].congruence_adjoint(&s.r);
                let t_hat = HermitianOperator::from_diag(&s.lambda.iter().map(|l| -l).collect::<Vec<_>>());
                let dx_t = t_hat.sub(&ds_t);
                let jordan = HermitianOperator::symmetrized(dx_t.matmul(&ds_t));
                let mut t = jordan.scale(-1.0);
                for (k, l) in s.lambda.iter().enumerate() {
                    let e = t.as_matrix()[(k, k)].re + sigma * mu - l * l;
                    let mut mm = t.into_matrix();
                    mm[(k, k)] = hermlin::C64::new(e, 0.0);
                    t = HermitianOperator::symmetrized(mm);
                }
                t
            })
            .collect();
        let tl_corr: Vec<f64> =
            (0..it.xl.len()).map(|k| sigma * mu - it.xl[k] * it.sl[k] - aff.xl[k] * aff.sl[k]).collect();
        let rtau = sigma * mu - it.tau * it.kappa - aff.tau * aff.kappa;
        let dir = direction(&cp, &it, &res, &scal, &kkt, &q, &wcw, &g, 1.0 - sigma, &t_corr, &tl_corr, rtau);
        let alpha = (opts.step_fraction * max_step(&it, &dir, &scal)).min(1.0);
        if alpha.is_nan() || alpha <= 1e-12 {
            break;
        }
        last_step = alpha;
        step(&mut it, &dir, alpha);
    }

    let tau = it.tau;
    let inv = 1.0 / tau;
    SdpSolution {
        status,
        primal_value: objective(&cp, &it) * inv,
        dual_value: dot(&cp.b, &it.y) * inv,
        blocks: it.xb.iter().map(|x| x.scale(inv)).collect(),
        nonneg: it.xl.iter().map(|x| x * inv).collect(),
        free: it.xf.iter().map(|x| x * inv).collect(),
        y: it.y.iter().map(|x| x * inv).collect(),
        dual_blocks: it.sb.iter().map(|x| x.scale(inv)).collect(),
        dual_nonneg: it.sl.iter().map(|x| x * inv).collect(),
        iterations,
        diagnostics: diag,
        trace,
    }
}

fn residuals(cp: &Compiled, it: &Iterate) -> Residuals {
    let mut rp = cp.apply(&it.xb, &it.xl, &it.xf);
    for (r, b) in rp.iter_mut().zip(&cp.b) {
        *r -= b * it.tau;
    }
    let rdb = (0..cp.blocks.len())
        .map(|b| {
            let mut r = cp.adjoint_block(b, &it.y);
            r.add_scaled(1.0, &it.sb[b]);
            r.add_scaled(-it.tau, &cp.blocks[b].c);
            r
        })
        .collect();
    let rdl = Compiled::adjoint_cols(&cp.lp_cols, &it.y)
        .into_iter()
        .zip(&it.sl)
        .zip(&cp.lp_c)
        .map(|((a, s), c)| a + s - c * it.tau)
        .collect();
    let rf =
        Compiled::adjoint_cols(&cp.free_cols, &it.y).into_iter().zip(&cp.free_c).map(|(a, c)| a - c * it.tau).collect();
    let rg = objective(cp, it) - dot(&cp.b, &it.y) + it.kappa;
    Residuals { rp, rdb, rdl, rf, rg }
}

fn objective(cp: &Compiled, it: &Iterate) -> f64 {
    cp.blocks.iter().zip(&it.xb).map(|(b, x)| hermlin::frob_inner_unchecked(&b.c, x)).sum::<f64>()
        + dot(&cp.lp_c, &it.xl)
        + dot(&cp.free_c, &it.xf)
}

fn cone_inner(it: &Iterate) -> f64 {
    it.xb.iter().zip(&it.sb).map(|(x, s)| hermlin::frob_inner_unchecked(x, s)).sum::<f64>() + dot(&it.xl, &it.sl)
}

/// `x·r_d + x_f·r_f`.
fn cone_inner_res(it: &Iterate, res: &Residuals) -> f64 {
    it.xb.iter().zip(&res.rdb).map(|(x, r)| hermlin::frob_inner_unchecked(x, r)).sum::<f64>()
        + dot(&it.xl, &res.rdl)
        + dot(&it.xf, &res.rf)
}

fn complementarity(it: &Iterate) -> f64 {
    cone_inner(it) + it.tau * it.kappa
}

fn complementarity_after(it: &Iterate, d: &Direction, a: f64) -> f64 {
    let mut total = 0.0;
    for b in 0..it.xb.len() {
        let mut x = it.xb[b].clone();
        x.add_scaled(a, &d.xb[b]);
        let mut s = it.sb[b].clone();
        s.add_scaled(a, &d.sb[b]);
        total += hermlin::frob_inner_unchecked(&x, &s);
    }
    for k in 0..it.xl.len() {
        total += (it.xl[k] + a * d.xl[k]) * (it.sl[k] + a * d.sl[k]);
    }
    total + (it.tau + a * d.tau) * (it.kappa + a * d.kappa)
}

fn infeasibility(cp: &Compiled, it: &Iterate, tol: f64) -> Option<SolveStatus> {
    // Dual ray: b·y > 0 with Aᵀy + s ≈ 0 certifies primal infeasibility.
    let by = dot(&cp.b, &it.y);
    if by > 0.0 {
        let mut norm = 0.0f64;
        for b in 0..cp.blocks.len() {
            let mut r = cp.adjoint_block(b, &it.y);
            r.add_scaled(1.0, &it.sb[b]);
            norm = norm.max(max_abs(&r));
        }
        let al = Compiled::adjoint_cols(&cp.lp_cols, &it.y);
        for (a, s) in al.iter().zip(&it.sl) {
            norm = norm.max((a + s).abs());
        }
        for a in Compiled::adjoint_cols(&cp.free_cols, &it.y) {
            norm = norm.max(a.abs());
        }
        if norm <= tol * by {
            return Some(SolveStatus::Infeasible);
        }
    }
    // Primal ray: c·x < 0 with A x ≈ 0 certifies dual infeasibility.
    let cx = objective(cp, it);
    if cx < 0.0 {
        let ax = cp.apply(&it.xb, &it.xl, &it.xf);
        if max_abs_vec(&ax) <= tol * (-cx) {
            return Some(SolveStatus::Unbounded);
        }
    }
    None
}

fn scalings(it: &Iterate) -> Option<Vec<BlockScaling>> {
    it.xb
        .iter()
        .zip(&it.sb)
        .map(|(x, s)| {
            let lx = x.as_matrix().cholesky().ok()?;
            let ls = s.as_matrix().cholesky().ok()?;
            let inner = s.congruence_adjoint(&lx);
            let e = inner.eig().ok()?;
            let lambda: Vec<f64> = e.values.iter().map(|&v| libm::sqrt(v.max(f64::MIN_POSITIVE))).collect();
            let n = lambda.len();
            let scale = ComplexMatrix::from_fn(n, |r, c| e.vectors[(r, c)] / libm::sqrt(lambda[c]));
            let r = lx.matmul(&scale);
            let w = r.matmul_adjoint(&r);
            let w = HermitianOperator::symmetrized(w).into_matrix();
            Some(BlockScaling {
                r,
                w,
                lambda,
                lx_inv: lx.lower_triangular_inverse(),
                ls_inv: ls.lower_triangular_inverse(),
            })
        })
        .collect()
}

fn factor(cp: &Compiled, scal: &[BlockScaling], it: &Iterate) -> Option<Kkt> {
    let m = cp.m;
    let mut h = SpdMatrix::zeros(m);
    for (blk, s) in cp.blocks.iter().zip(scal) {
        let waw: Vec<HermitianOperator> = blk.rows.iter().map(|(_, a)| a.congruence(&s.w)).collect();
        for (li, (l, _)) in blk.rows.iter().enumerate() {
            for (j, a) in blk.rows.iter().take(li + 1) {
                let v = hermlin::frob_inner_unchecked(a, &waw[li]);
                let (r, c) = if j <= l { (*j, *l) } else { (*l, *j) };
                h.add(r, c, v);
            }
        }
    }
    for (k, col) in cp.lp_cols.iter().enumerate() {
        let g = it.xl[k] / it.sl[k];
        for (i, &(j, aj)) in col.iter().enumerate() {
            for &(l, al) in &col[..=i] {
                let (r, c) = if j <= l { (j, l) } else { (l, j) };
                h.add(r, c, g * aj * al);
            }
        }
    }
    if cp.free_cols.is_empty() {
        h.mirror_upper();
        let (hc, _) = h.factor()?;
        return Some(Kkt { h: hc, gamma: 0.0, h_inv_af: Vec::new(), f: None });
    }
    let col_norm = cp.free_cols.iter().map(|c| c.iter().map(|(_, a)| a * a).sum::<f64>()).fold(0.0, f64::max);
    let gamma = (1.0 + h.max_diag()) / col_norm.max(f64::MIN_POSITIVE);
    for col in &cp.free_cols {
        for (i, &(j, aj)) in col.iter().enumerate() {
            for &(l, al) in &col[..=i] {
                let (r, c) = if j <= l { (j, l) } else { (l, j) };
                h.add(r, c, gamma * aj * al);
            }
        }
    }
    h.mirror_upper();
    let (hc, _) = h.factor()?;
    let h_inv_af: Vec<Vec<f64>> = cp
        .free_cols
        .iter()
        .map(|col| {
            let mut v = vec![0.0; m];
            for &(j, a) in col {
                v[j] += a;
            }
            hc.solve_in_place(&mut v);
            v
        })
        .collect();
    let nf = cp.free_cols.len();
    let mut f = SpdMatrix::zeros(nf);
    for (p, colp) in cp.free_cols.iter().enumerate() {
        for (q, hq) in h_inv_af.iter().enumerate().skip(p) {
            let v: f64 = colp.iter().map(|&(j, a)| a * hq[j]).sum();
            f.add(p, q, v);
        }
    }
    f.mirror_upper();
    let (fc, _) = f.factor()?;
    Some(Kkt { h: hc, gamma, h_inv_af, f: Some(fc) })
}

#[allow(clippy::too_many_arguments)]
fn direction(
    cp: &Compiled,
    it: &Iterate,
    res: &Residuals,
    scal: &[BlockScaling],
    kkt: &Kkt,
    q: &(Vec<f64>, Vec<f64>),
    wcw: &[HermitianOperator],
    g: &[f64],
    eta: f64,
    t_blocks: &[HermitianOperator],
    t_lp: &[f64],
    r_tau: f64,
) -> Direction {
    let nb = cp.blocks.len();
    // D_c = R T̂ R† with T̂_jk = 2 T_jk / (λ_j + λ_k).
    let dc: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let s = &scal[b];
            let t = t_blocks[b].as_matrix();
            let that = ComplexMatrix::from_fn(s.lambda.len(), |r, c| t[(r, c)] * (2.0 / (s.lambda[r] + s.lambda[c])));
            HermitianOperator::symmetrized(that).congruence(&s.r)
        })
        .collect();
    let dcl: Vec<f64> = t_lp.iter().zip(&it.sl).map(|(t, s)| t / s).collect();

    // base_b = D_c + η W r_d W, base_l = D_c + η g r_d.
    let base_b: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let mut v = dc[b].clone();
            v.add_scaled(eta, &res.rdb[b].congruence(&scal[b].w));
            v
        })
        .collect();
    let base_l: Vec<f64> = (0..g.len()).map(|k| dcl[k] + eta * g[k] * res.rdl[k]).collect();

    let mut uy = cp.apply(&base_b, &base_l, &[]);
    for (u, r) in uy.iter_mut().zip(&res.rp) {
        *u = -eta * r - *u;
    }
    let uf: Vec<f64> = res.rf.iter().map(|r| -eta * r).collect();
    let (py, pf) = kkt.solve(cp, &uy, &uf);
    let (qy, qf) = q;

    let dx0: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let mut v = base_b[b].clone();
            v.add_scaled(1.0, &cp.adjoint_block(b, &py).congruence(&scal[b].w));
            v
        })
        .collect();
    let dx1: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let mut v = cp.adjoint_block(b, qy).congruence(&scal[b].w);
            v.add_scaled(-1.0, &wcw[b]);
            v
        })
        .collect();
    let atp = Compiled::adjoint_cols(&cp.lp_cols, &py);
    let atq = Compiled::adjoint_cols(&cp.lp_cols, qy);
    let dxl0: Vec<f64> = (0..g.len()).map(|k| base_l[k] + g[k] * atp[k]).collect();
    let dxl1: Vec<f64> = (0..g.len()).map(|k| g[k] * (atq[k] - cp.lp_c[k])).collect();

    let c_dot = |xb: &[HermitianOperator], xl: &[f64]| -> f64 {
        cp.blocks.iter().zip(xb).map(|(b, x)| hermlin::frob_inner_unchecked(&b.c, x)).sum::<f64>() + dot(&cp.lp_c, xl)
    };
    let num = -eta * res.rg - r_tau / it.tau - (c_dot(&dx0, &dxl0) + dot(&cp.free_c, &pf) - dot(&cp.b, &py));
    let den = c_dot(&dx1, &dxl1) + dot(&cp.free_c, qf) - dot(&cp.b, qy) - it.kappa / it.tau;
    let dtau = num / den;

    let dy: Vec<f64> = py.iter().zip(qy).map(|(p, q)| p + dtau * q).collect();
    let dxf: Vec<f64> = pf.iter().zip(qf).map(|(p, q)| p + dtau * q).collect();
    let dxb: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let mut v = dx0[b].clone();
            v.add_scaled(dtau, &dx1[b]);
            v
        })
        .collect();
    let dxl: Vec<f64> = (0..g.len()).map(|k| dxl0[k] + dtau * dxl1[k]).collect();
    let dsb: Vec<HermitianOperator> = (0..nb)
        .map(|b| {
            let mut v = res.rdb[b].scale(-eta);
            v.add_scaled(-1.0, &cp.adjoint_block(b, &dy));
            v.add_scaled(dtau, &cp.blocks[b].c);
            v
        })
        .collect();
    let aty = Compiled::adjoint_cols(&cp.lp_cols, &dy);
    let dsl: Vec<f64> = (0..g.len()).map(|k| -eta * res.rdl[k] - aty[k] + dtau * cp.lp_c[k]).collect();
    let dkappa = (r_tau - it.kappa * dtau) / it.tau;
    Direction { xb: dxb, sb: dsb, xl: dxl, sl: dsl, xf: dxf, y: dy, tau: dtau, kappa: dkappa }
}

/// Largest `α` keeping every cone variable in its cone (may exceed 1).
fn max_step(it: &Iterate, d: &Direction, scal: &[BlockScaling]) -> f64 {
    let mut alpha = f64::INFINITY;
    let mut bound = |min_ratio: f64| {
        if min_ratio < 0.0 {
            alpha = alpha.min(-1.0 / min_ratio);
        }
    };
    for (b, s) in scal.iter().enumerate() {
        for (dv, linv) in [(&d.xb[b], &s.lx_inv), (&d.sb[b], &s.ls_inv)] {
            let m = dv.congruence(linv);
            if let Ok(e) = m.min_eigenvalue() {
                bound(e);
            } else {
                bound(-f64::INFINITY);
            }
        }
    }
    for k in 0..it.xl.len() {
        bound(d.xl[k] / it.xl[k]);
        bound(d.sl[k] / it.sl[k]);
    }
    bound(d.tau / it.tau);
    bound(d.kappa / it.kappa);
    alpha
}

fn step(it: &mut Iterate, d: &Direction, a: f64) {
    for (x, dx) in it.xb.iter_mut().zip(&d.xb) {
        x.add_scaled(a, dx);
    }
    for (s, ds) in it.sb.iter_mut().zip(&d.sb) {
        s.add_scaled(a, ds);
    }
    axpy(&mut it.xl, a, &d.xl);
    axpy(&mut it.sl, a, &d.sl);
    axpy(&mut it.xf, a, &d.xf);
    axpy(&mut it.y, a, &d.y);
    it.tau += a * d.tau;
    it.kappa += a * d.kappa;
}

fn axpy(x: &mut [f64], a: f64, d: &[f64]) {
    for (xi, di) in x.iter_mut().zip(d) {
        *xi += a * di;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn max_abs(h: &HermitianOperator) -> f64 {
    h.as_matrix().as_slice().iter().fold(0.0f64, |a, z| a.max(z.norm()))
}
