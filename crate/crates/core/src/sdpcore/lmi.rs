//! Linear-matrix-inequality front end.
//!
//! An [`Lmi`] collects real variables `y`, affine Hermitian expressions required
//! to be PSD, affine scalars required to be non-negative or zero, and a linear
//! objective to maximise. [`Lmi::finish`] emits the primal standard-form problem
//! whose dual is exactly this program, so after solving, `solution.y` holds the
//! variable values and the primal blocks are the Lagrange multipliers of the
//! PSD constraints.

use alloc::vec;
use alloc::vec::Vec;

use super::{BlockId, EqConstraint, LinearFunctional, ScalarVar, SdpProblem};
use crate::hermlin::{self, HermitianOperator, C64};

/// Real decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

/// `d²` real coordinates of a Hermitian matrix variable.
///
/// Coordinates are ordered as in [`herm_basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermVar {
    dim: usize,
    coords: Vec<Var>,
}

impl HermVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[Var] {
        &self.coords
    }

    pub fn expr(&self) -> HermExpr {
        let basis = herm_basis(self.dim);
        HermExpr {
            constant: HermitianOperator::zeros(self.dim),
            terms: self.coords.iter().zip(basis).map(|(v, b)| (*v, b)).collect(),
        }
    }

    /// Reads the variable back from a solved problem.
    pub fn value(&self, y: &[f64]) -> HermitianOperator {
        let mut out = HermitianOperator::zeros(self.dim);
        for (v, b) in self.coords.iter().zip(herm_basis(self.dim)) {
            out.add_scaled(y[v.0], &b);
        }
        out
    }
}

/// Basis of the real vector space of `d × d` Hermitian matrices: `E_kk`, then for each
/// `k < l` the pair `E_kl + E_lk`, `i E_kl − i E_lk`.
pub fn herm_basis(d: usize) -> Vec<HermitianOperator> {
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut diag = vec![0.0; d];
        diag[k] = 1.0;
        out.push(HermitianOperator::from_diag(&diag));
    }
    for k in 0..d {
        for l in k + 1..d {
            let mut re = HermitianOperator::zeros(d).into_matrix();
            re[(k, l)] = C64::new(1.0, 0.0);
            re[(l, k)] = C64::new(1.0, 0.0);
            out.push(HermitianOperator::symmetrized(re));
            let mut im = HermitianOperator::zeros(d).into_matrix();
            im[(k, l)] = C64::new(0.0, 1.0);
            im[(l, k)] = C64::new(0.0, -1.0);
            out.push(HermitianOperator::symmetrized(im));
        }
    }
    out
}

/// `constant + Σ y_v · coef`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    pub constant: f64,
    pub terms: Vec<(Var, f64)>,
}

impl ScalarExpr {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn var(v: Var) -> Self {
        Self { constant: 0.0, terms: vec![(v, 1.0)] }
    }

    pub fn plus(mut self, other: &ScalarExpr, s: f64) -> Self {
        self.constant += s * other.constant;
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, s * c)));
        self
    }

    pub fn plus_var(mut self, v: Var, c: f64) -> Self {
        self.terms.push((v, c));
        self
    }

    pub fn evaluate(&self, y: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * y[v.0]).sum::<f64>()
    }
}

/// `constant + Σ y_v · coef` with Hermitian coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HermExpr {
    pub constant: HermitianOperator,
    pub terms: Vec<(Var, HermitianOperator)>,
}

impl HermExpr {
    pub fn constant(c: HermitianOperator) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }

    pub fn plus(mut self, other: &HermExpr, s: f64) -> Self {
        self.constant.add_scaled(s, &other.constant);
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, c.scale(s))));
        self
    }

    pub fn plus_const(mut self, c: &HermitianOperator, s: f64) -> Self {
        self.constant.add_scaled(s, c);
        self
    }

    /// Adds `y_v · coef`.
    pub fn plus_var(mut self, v: Var, coef: HermitianOperator) -> Self {
        self.terms.push((v, coef));
        self
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant = self.constant.scale(s);
        for (_, c) in &mut self.terms {
            *c = c.scale(s);
        }
        self
    }

    /// Applies a real-linear map to the constant and every coefficient.
    pub fn map(mut self, f: impl Fn(&HermitianOperator) -> HermitianOperator) -> Self {
        self.constant = f(&self.constant);
        for (_, c) in &mut self.terms {
            *c = f(c);
        }
        self
    }

    /// `⟨A, expr⟩` as a scalar expression.
    pub fn inner(&self, a: &HermitianOperator) -> ScalarExpr {
        ScalarExpr {
            constant: hermlin::frob_inner_unchecked(a, &self.constant),
            terms: self
                .terms
                .iter()
                .map(|(v, c)| (*v, hermlin::frob_inner_unchecked(a, c)))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }

    pub fn trace(&self) -> ScalarExpr {
        self.inner(&HermitianOperator::identity(self.dim()))
    }

    /// Real and imaginary parts of entry `(r, c)`, `r < c`, as scalar expressions.
    pub fn off_diagonal(&self, r: usize, c: usize) -> (ScalarExpr, ScalarExpr) {
        let d = self.dim();
        let mut re = HermitianOperator::zeros(d).into_matrix();
        re[(r, c)] = C64::new(0.5, 0.0);
        re[(c, r)] = C64::new(0.5, 0.0);
        let mut im = HermitianOperator::zeros(d).into_matrix();
        im[(r, c)] = C64::new(0.0, -0.5);
        im[(c, r)] = C64::new(0.0, 0.5);
        (self.inner(&HermitianOperator::symmetrized(re)), self.inner(&HermitianOperator::symmetrized(im)))
    }

    pub fn diagonal(&self, k: usize) -> ScalarExpr {
        let mut e = vec![0.0; self.dim()];
        e[k] = 1.0;
        self.inner(&HermitianOperator::from_diag(&e))
    }

    pub fn evaluate(&self, y: &[f64]) -> HermitianOperator {
        let mut out = self.constant.clone();
        for (v, c) in &self.terms {
            out.add_scaled(y[v.0], c);
        }
        out
    }
}

/// Program `maximize b·y` subject to affine PSD, non-negativity and equality constraints.
#[derive(Debug, Clone, Default)]
pub struct Lmi {
    rows: Vec<LinearFunctional>,
    b: Vec<f64>,
    problem: SdpProblem,
}

impl Lmi {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.b.len()
    }

    pub fn var(&mut self) -> Var {
        self.rows.push(LinearFunctional::new());
        self.b.push(0.0);
        Var(self.b.len() - 1)
    }

    pub fn herm_var(&mut self, dim: usize) -> HermVar {
        HermVar { dim, coords: (0..dim * dim).map(|_| self.var()).collect() }
    }

    /// Adds `coef · y_v` to the maximised objective.
    pub fn maximize(&mut self, v: Var, coef: f64) {
        self.b[v.0] += coef;
    }

    pub fn maximize_expr(&mut self, e: &ScalarExpr) {
        for (v, c) in &e.terms {
            self.b[v.0] += c;
        }
    }

    /// `expr ⪰ 0`; the returned block holds its multiplier after solving.
    pub fn psd(&mut self, expr: &HermExpr) -> BlockId {
        let blk = self.problem.add_block(expr.dim());
        if !is_zero(&expr.constant) {
            self.problem.objective.block_terms.push((blk, expr.constant.clone()));
        }
        for (v, c) in &expr.terms {
            self.rows[v.0].block_terms.push((blk, c.scale(-1.0)));
        }
        blk
    }

    /// `expr ≥ 0`.
    pub fn nonneg(&mut self, expr: &ScalarExpr) -> ScalarVar {
        let s = self.problem.add_nonneg();
        self.scalar_constraint(s, expr);
        s
    }

    /// `expr = 0`.
    pub fn zero(&mut self, expr: &ScalarExpr) -> ScalarVar {
        let s = self.problem.add_free();
        self.scalar_constraint(s, expr);
        s
    }

    fn scalar_constraint(&mut self, s: ScalarVar, expr: &ScalarExpr) {
        if expr.constant != 0.0 {
            self.problem.objective.scalar_terms.push((s, expr.constant));
        }
        for (v, c) in &expr.terms {
            if *c != 0.0 {
                self.rows[v.0].scalar_terms.push((s, -c));
            }
        }
    }

    /// Standard-form problem whose dual is this program; at optimality `max b·y = min ⟨C, X⟩`.
    pub fn finish(self) -> SdpProblem {
        let mut p = self.problem;
        p.constraints = self.rows.into_iter().zip(self.b).map(|(lhs, rhs)| EqConstraint { lhs, rhs }).collect();
        p
    }
}

fn is_zero(a: &HermitianOperator) -> bool {
    a.as_matrix().as_slice().iter().all(|z| z.re == 0.0 && z.im == 0.0)
}
