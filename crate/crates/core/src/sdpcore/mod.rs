//! Dense semidefinite programming for small block-structured problems.
//!
//! Problems are stated in primal standard form
//!
//! ```text
//! minimize    Σ_b ⟨C_b, X_b⟩ + c_+ · x_+ + c_f · x_f
//! subject to  Σ_b ⟨A_jb, X_b⟩ + a_j+ · x_+ + a_jf · x_f = b_j   (j = 1..m)
//!             X_b ⪰ 0 (complex Hermitian),  x_+ ≥ 0,  x_f free
//! ```
//!
//! and [`solve`] returns the primal optimum together with the dual
//! `maximize b·y  s.t.  C_b − Σ_j y_j A_jb = S_b ⪰ 0,  c_+ − a_+ᵀy ≥ 0,  c_f = a_fᵀy`.
//! Hermitian blocks are handled natively through the trace inner product, so
//! the dual slacks `S_b` are Hermitian operators that callers can read as
//! Lagrange multipliers directly.

mod dense;
mod ipm;
mod lmi;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hermlin::{self, HermitianOperator};

pub use ipm::IterateLog;
pub use lmi::{herm_basis, HermExpr, HermVar, Lmi, ScalarExpr, Var};

/// Handle to a PSD block variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

/// Handle to a scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScalarVar {
    Nonneg(usize),
    Free(usize),
}

/// Real-linear functional over all problem variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearFunctional {
    /// `⟨A, X_b⟩ = tr(A X_b)` terms.
    pub block_terms: Vec<(BlockId, HermitianOperator)>,
    pub scalar_terms: Vec<(ScalarVar, f64)>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn block(mut self, b: BlockId, coef: HermitianOperator) -> Self {
        self.block_terms.push((b, coef));
        self
    }

    pub fn scalar(mut self, v: ScalarVar, coef: f64) -> Self {
        self.scalar_terms.push((v, coef));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.block_terms.is_empty() && self.scalar_terms.is_empty()
    }

    /// Evaluates the functional on explicit variable values.
    pub fn evaluate(&self, blocks: &[HermitianOperator], nonneg: &[f64], free: &[f64]) -> f64 {
        let mut v = 0.0;
        for (b, a) in &self.block_terms {
            v += hermlin::frob_inner_unchecked(a, &blocks[b.0]);
        }
        for (s, a) in &self.scalar_terms {
            v += a * match *s {
                ScalarVar::Nonneg(k) => nonneg[k],
                ScalarVar::Free(k) => free[k],
            };
        }
        v
    }
}

/// `lhs(x) = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqConstraint {
    pub lhs: LinearFunctional,
    pub rhs: f64,
}

/// Primal standard-form SDP; see the module docs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub num_nonneg: usize,
    pub num_free: usize,
    /// Minimised.
    pub objective: LinearFunctional,
    pub constraints: Vec<EqConstraint>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, dim: usize) -> BlockId {
        self.block_dims.push(dim);
        BlockId(self.block_dims.len() - 1)
    }

    pub fn add_nonneg(&mut self) -> ScalarVar {
        self.num_nonneg += 1;
        ScalarVar::Nonneg(self.num_nonneg - 1)
    }

    pub fn add_free(&mut self) -> ScalarVar {
        self.num_free += 1;
        ScalarVar::Free(self.num_free - 1)
    }

    /// Adds a constraint and returns its index (the index of its dual multiplier).
    pub fn add_constraint(&mut self, lhs: LinearFunctional, rhs: f64) -> usize {
        self.constraints.push(EqConstraint { lhs, rhs });
        self.constraints.len() - 1
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Real dimension of the variable space (`d²` per Hermitian block).
    pub fn real_dimension(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum::<usize>() + self.num_nonneg + self.num_free
    }

    /// Structural checks: handles in range, coefficient dimensions, finite data,
    /// at least one variable, and no more constraints than real variables.
    pub fn validate(&self) -> Result<()> {
        if self.real_dimension() == 0 {
            return Err(Error::InvalidParameter("SDP has no variables".into()));
        }
        if self.constraints.len() > self.real_dimension() {
            return Err(Error::InvalidParameter(format!(
                "{} constraints exceed the {} real variable dimensions",
                self.constraints.len(),
                self.real_dimension()
            )));
        }
        if self.block_dims.contains(&0) {
            return Err(Error::InvalidParameter("zero-dimensional PSD block".into()));
        }
        let check = |f: &LinearFunctional| -> Result<()> {
            for (b, a) in &f.block_terms {
                let d = *self
                    .block_dims
                    .get(b.0)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown block {}", b.0)))?;
                hermlin::dim_check(d, a.dim())?;
                if !a.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
            for (s, a) in &f.scalar_terms {
                let ok = match *s {
                    ScalarVar::Nonneg(k) => k < self.num_nonneg,
                    ScalarVar::Free(k) => k < self.num_free,
                };
                if !ok {
                    return Err(Error::InvalidParameter(format!("unknown scalar {s:?}")));
                }
                if !a.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
            Ok(())
        };
        check(&self.objective)?;
        for c in &self.constraints {
            check(&c.lhs)?;
            if !c.rhs.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }

    /// Plain-text dump for cross-checking with other conic solvers.
    ///
    /// ```text
    /// povm-forge-sdp 1
    /// blocks <k> <d_1> ... <d_k>
    /// nonneg <p>
    /// free <q>
    /// constraints <m>
    /// objective
    /// b <block> <row> <col> <re> <im>      one line per nonzero upper-triangle entry
    /// n <index> <coef>                     nonneg scalar coefficient
    /// f <index> <coef>                     free scalar coefficient
    /// constraint <j> <rhs>
    /// ...same term lines...
    /// end
    /// ```
    ///
    /// Indices are zero-based and floats use Rust's shortest round-trip formatting.
    /// The objective is minimised.
    pub fn to_text(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "povm-forge-sdp 1");
        let _ = write!(s, "blocks {}", self.block_dims.len());
        for d in &self.block_dims {
            let _ = write!(s, " {d}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "nonneg {}", self.num_nonneg);
        let _ = writeln!(s, "free {}", self.num_free);
        let _ = writeln!(s, "constraints {}", self.constraints.len());
        let _ = writeln!(s, "objective");
        write_terms(&mut s, &self.objective);
        for (j, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "constraint {j} {:?}", c.rhs);
            write_terms(&mut s, &c.lhs);
        }
        let _ = writeln!(s, "end");
        s
    }
}

fn write_terms(s: &mut String, f: &LinearFunctional) {
    use core::fmt::Write;
    for (b, a) in &f.block_terms {
        let d = a.dim();
        for r in 0..d {
            for c in r..d {
                let z = a.entry(r, c);
                if z.re != 0.0 || z.im != 0.0 {
                    let _ = writeln!(s, "b {} {r} {c} {:?} {:?}", b.0, z.re, z.im);
                }
            }
        }
    }
    for (v, a) in &f.scalar_terms {
        let _ = match *v {
            ScalarVar::Nonneg(k) => writeln!(s, "n {k} {a:?}"),
            ScalarVar::Free(k) => writeln!(s, "f {k} {a:?}"),
        };
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Keep a per-iterate log in the solution.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200, step_fraction: 0.98, record_trace: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical-failure",
        })
    }
}

/// Residual summary of the last iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverDiagnostics {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
}

/// Primal/dual pair returned by [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub blocks: Vec<HermitianOperator>,
    pub nonneg: Vec<f64>,
    pub free: Vec<f64>,
    /// One multiplier per equality constraint.
    pub y: Vec<f64>,
    /// Dual slack `S_b` per PSD block.
    pub dual_blocks: Vec<HermitianOperator>,
    /// Dual slack per nonneg scalar.
    pub dual_nonneg: Vec<f64>,
    pub iterations: usize,
    pub diagnostics: SolverDiagnostics,
    pub trace: Vec<IterateLog>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn block(&self, b: BlockId) -> &HermitianOperator {
        &self.blocks[b.0]
    }

    pub fn dual_block(&self, b: BlockId) -> &HermitianOperator {
        &self.dual_blocks[b.0]
    }

    pub fn scalar(&self, v: ScalarVar) -> f64 {
        match v {
            ScalarVar::Nonneg(k) => self.nonneg[k],
            ScalarVar::Free(k) => self.free[k],
        }
    }

    /// `Ok(self)` when optimal, otherwise a solver error carrying the diagnostics.
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                detail: format!(
                    "after {} iterations: primal residual {:e}, dual residual {:e}, gap {:e}",
                    self.iterations,
                    self.diagnostics.primal_residual,
                    self.diagnostics.dual_residual,
                    self.diagnostics.relative_gap
                ),
            })
        }
    }
}

/// Solves `problem` with a homogeneous primal–dual interior-point method.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    Ok(ipm::run(problem, opts))
}

/// Residuals recomputed from the problem data, independently of the solver loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// Max over equality residuals, PSD-block violations and nonneg violations of the primal.
    pub max_primal_residual: f64,
    /// Max over dual-slack PSD violations, nonneg slack violations and free-variable stationarity.
    pub max_dual_residual: f64,
    /// `Σ ⟨X_b, S_b⟩ + x_+ · s_+` with `S` rebuilt from `y`.
    pub complementarity: f64,
    /// `|primal − dual|`.
    pub duality_gap: f64,
}

impl CertificateReport {
    pub fn passes(&self, feas_tol: f64, gap_tol: f64) -> bool {
        self.max_primal_residual <= feas_tol && self.max_dual_residual <= feas_tol && self.duality_gap <= gap_tol
    }
}

/// Recomputes primal and dual residuals of `solution` against `problem`.
///
/// The dual slack is rebuilt as `C − Σ y_j A_j` from the original functionals rather than
/// taken from the solver.
pub fn check_certificate(problem: &SdpProblem, solution: &SdpSolution) -> Result<CertificateReport> {
    problem.validate()?;
    let nb = problem.block_dims.len();
    if solution.blocks.len() != nb
        || solution.nonneg.len() != problem.num_nonneg
        || solution.free.len() != problem.num_free
        || solution.y.len() != problem.constraints.len()
    {
        return Err(Error::InvalidParameter("solution shape does not match problem".into()));
    }

    let mut primal: f64 = 0.0;
    for c in &problem.constraints {
        let v = c.lhs.evaluate(&solution.blocks, &solution.nonneg, &solution.free);
        primal = primal.max((v - c.rhs).abs());
    }
    for x in &solution.blocks {
        primal = primal.max(-x.min_eigenvalue()?);
    }
    for &x in &solution.nonneg {
        primal = primal.max(-x);
    }

    // S = C − Σ_j y_j A_j, assembled term by term.
    let mut s_blocks: Vec<HermitianOperator> =
        problem.block_dims.iter().map(|&d| HermitianOperator::zeros(d)).collect();
    let mut s_nonneg = vec![0.0; problem.num_nonneg];
    let mut s_free = vec![0.0; problem.num_free];
    let mut accumulate = |f: &LinearFunctional, w: f64| {
        for (b, a) in &f.block_terms {
            s_blocks[b.0].add_scaled(w, a);
        }
        for (v, a) in &f.scalar_terms {
            match *v {
                ScalarVar::Nonneg(k) => s_nonneg[k] += w * a,
                ScalarVar::Free(k) => s_free[k] += w * a,
            }
        }
    };
    accumulate(&problem.objective, 1.0);
    for (c, &yj) in problem.constraints.iter().zip(&solution.y) {
        accumulate(&c.lhs, -yj);
    }
    let mut dual: f64 = 0.0;
    for s in &s_blocks {
        dual = dual.max(-s.min_eigenvalue()?);
    }
    for &s in &s_nonneg {
        dual = dual.max(-s);
    }
    for &s in &s_free {
        dual = dual.max(s.abs());
    }

    let complementarity =
        s_blocks.iter().zip(&solution.blocks).map(|(s, x)| hermlin::frob_inner_unchecked(s, x)).sum::<f64>()
            + s_nonneg.iter().zip(&solution.nonneg).map(|(s, x)| s * x).sum::<f64>();

    let pv = problem.objective.evaluate(&solution.blocks, &solution.nonneg, &solution.free);
    let dv: f64 = problem.constraints.iter().zip(&solution.y).map(|(c, y)| c.rhs * y).sum();
    Ok(CertificateReport {
        max_primal_residual: primal,
        max_dual_residual: dual,
        complementarity,
        duality_gap: (pv - dv).abs(),
    })
}
