//! Dense complex Hermitian linear algebra.
//!
//! Everything here works on small dense matrices (dimension ≤ 64 in practice).
//! [`HermitianOperator`] is the value type used for effects, states and
//! witnesses; it is symmetrised on construction so that roundoff coming out of
//! the solver never leaks a non-Hermitian part downstream.

mod eigen;
mod matrix;

use alloc::vec::Vec;

pub use eigen::Eigen;
pub use matrix::ComplexMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default absolute tolerance on eigenvalues for PSD checks.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

/// Default cap on the dimension produced by [`kron`].
pub const DEFAULT_DIM_CAP: usize = 256;

/// Dense `d × d` complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: ComplexMatrix,
}

impl HermitianOperator {
    /// Wraps `m` after replacing it by `(m + m†)/2`; rejects empty or non-finite input.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dim() == 0 {
            return Err(Error::InvalidParameter("operator dimension must be ≥ 1".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self::symmetrized(m))
    }

    /// Like [`new`](Self::new) but for values produced internally that are known to be finite.
    pub(crate) fn symmetrized(m: ComplexMatrix) -> Self {
        let n = m.dim();
        let mut out = m;
        for r in 0..n {
            out[(r, r)] = C64::new(out[(r, r)].re, 0.0);
            for c in r + 1..n {
                let avg = (out[(r, c)] + out[(c, r)].conj()) * 0.5;
                out[(r, c)] = avg;
                out[(c, r)] = avg.conj();
            }
        }
        Self { m: out }
    }

    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        Self::new(ComplexMatrix::from_row_major(entries)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: ComplexMatrix::zeros(dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: ComplexMatrix::identity(dim) }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self { m: ComplexMatrix::from_diag(diag) }
    }

    /// Rank-one operator `|v⟩⟨v|` (not normalised).
    pub fn projector(v: &[C64]) -> Self {
        Self::symmetrized(ComplexMatrix::outer(v, v))
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn pauli_y() -> Self {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        Self { m }
    }

    pub fn pauli_z() -> Self {
        Self::from_diag(&[1.0, -1.0])
    }

    pub fn from_real_rows<const N: usize>(rows: &[[f64; N]; N]) -> Self {
        Self::symmetrized(ComplexMatrix::from_fn(N, |r, c| C64::new(rows[r][c], 0.0)))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.m[(r, c)]
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.frobenius_norm()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { m: self.m.add(&rhs.m) }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { m: self.m.sub(&rhs.m) }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: self.m.scale(s) }
    }

    /// `self + s · rhs` in place.
    pub fn add_scaled(&mut self, s: f64, rhs: &Self) {
        for (a, b) in self.m.as_mut_slice().iter_mut().zip(rhs.m.as_slice()) {
            *a += b * s;
        }
    }

    /// `B A B†`, Hermitian for any square `B`.
    pub fn congruence(&self, b: &ComplexMatrix) -> Self {
        Self::symmetrized(b.matmul(&self.m).matmul_adjoint(b))
    }

    /// `B† A B`.
    pub fn congruence_adjoint(&self, b: &ComplexMatrix) -> Self {
        Self::symmetrized(b.adjoint().matmul(&self.m).matmul(b))
    }

    /// Product `A B` of two Hermitian operators (generally not Hermitian).
    pub fn matmul(&self, rhs: &Self) -> ComplexMatrix {
        self.m.matmul(&rhs.m)
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let av = self.m.matvec(v);
        v.iter().zip(&av).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn eig(&self) -> Result<Eigen> {
        eig_herm(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*eig_herm(self)?.values.last().expect("dim ≥ 1"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(eig_herm(self)?.values[0])
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol)
    }

    /// Largest modulus among off-diagonal entries.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    best = best.max(self.m[(r, c)].norm());
                }
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite()
    }
}

/// Eigendecomposition `A = Σ λ_k v_k v_k†`, eigenvalues descending.
pub fn eig_herm(a: &HermitianOperator) -> Result<Eigen> {
    eigen::jacobi_eigen(&a.m)
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    kron_capped(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product: `(A⊗B)[(j1,j2),(k1,k2)] = A[j1,k1]·B[j2,k2]`.
pub fn kron_capped(a: &HermitianOperator, b: &HermitianOperator, cap: usize) -> Result<HermitianOperator> {
    Ok(HermitianOperator { m: kron_matrix_capped(&a.m, &b.m, cap)? })
}

pub fn kron_matrix_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let (da, db) = (a.dim(), b.dim());
    let dim = da.saturating_mul(db);
    if dim > cap {
        return Err(Error::Size { dim, cap });
    }
    Ok(ComplexMatrix::from_fn(dim, |r, c| a[(r / db, c / db)] * b[(r % db, c % db)]))
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Which factor of a bipartite system to transpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial transpose on one factor of a `dA ⊗ dB` system.
pub fn partial_transpose(
    a: &HermitianOperator,
    dims: (usize, usize),
    subsystem: Subsystem,
) -> Result<HermitianOperator> {
    let mask = match subsystem {
        Subsystem::A => [true, false],
        Subsystem::B => [false, true],
    };
    partial_transpose_factors(a, &[dims.0, dims.1], &mask)
}

/// Partial transpose over every factor `k` of a multipartite system with `mask[k] = true`.
///
/// The index order is big-endian: the first factor is the most significant digit.
pub fn partial_transpose_factors(a: &HermitianOperator, dims: &[usize], mask: &[bool]) -> Result<HermitianOperator> {
    let total: usize = dims.iter().product();
    if total != a.dim() {
        return Err(Error::Dimension { expected: total, found: a.dim() });
    }
    if mask.len() != dims.len() {
        return Err(Error::Dimension { expected: dims.len(), found: mask.len() });
    }
    let perm = pt_index_map(dims, mask);
    let n = a.dim();
    let mut out = ComplexMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let (r2, c2) = perm(r, c);
            out[(r2, c2)] = a.m[(r, c)];
        }
    }
    Ok(HermitianOperator { m: out })
}

/// Maps a matrix position `(r, c)` to its position after the partial transpose.
pub(crate) fn pt_index_map<'a>(dims: &'a [usize], mask: &'a [bool]) -> impl Fn(usize, usize) -> (usize, usize) + 'a {
    move |r, c| {
        let (mut rr, mut cc) = (r, c);
        let (mut out_r, mut out_c) = (0usize, 0usize);
        let mut place = 1usize;
        for k in (0..dims.len()).rev() {
            let d = dims[k];
            let (ir, ic) = (rr % d, cc % d);
            rr /= d;
            cc /= d;
            let (nr, nc) = if mask[k] { (ic, ir) } else { (ir, ic) };
            out_r += nr * place;
            out_c += nc * place;
            place *= d;
        }
        (out_r, out_c)
    }
}

/// `A^{-1/2}` on the support of `A`; eigenvalues ≤ `tol` are treated as zero.
pub fn inv_sqrt_psd(a: &HermitianOperator, tol: f64) -> Result<HermitianOperator> {
    let e = eig_herm(a)?;
    let min = *e.values.last().expect("dim ≥ 1");
    if min < -tol {
        return Err(Error::NotPsd { index: 0, min_eig: min });
    }
    Ok(HermitianOperator::symmetrized(e.reconstruct_with(|l| if l > tol { 1.0 / libm::sqrt(l) } else { 0.0 })))
}

/// `A^{1/2}` for PSD `A`, clipping eigenvalues in `[-tol, 0)` to zero.
pub fn sqrt_psd(a: &HermitianOperator, tol: f64) -> Result<HermitianOperator> {
    let e = eig_herm(a)?;
    let min = *e.values.last().expect("dim ≥ 1");
    if min < -tol {
        return Err(Error::NotPsd { index: 0, min_eig: min });
    }
    Ok(HermitianOperator::symmetrized(e.reconstruct_with(|l| libm::sqrt(l.max(0.0)))))
}

/// `Re tr(A† B)`; equals `tr(AB)` for Hermitian inputs.
pub fn frob_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), found: b.dim() });
    }
    Ok(frob_inner_unchecked(a, b))
}

pub(crate) fn frob_inner_unchecked(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    a.m.as_slice().iter().zip(b.m.as_slice()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub(crate) fn dim_check(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// Normalises a vector in place; returns its original norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eig_identity() {
        let e = eig_herm(&HermitianOperator::identity(2)).unwrap();
        assert_eq!(e.values.len(), 2);
        assert!(e.values.iter().all(|&l| close(l, 1.0, 1e-14)));
    }

    #[test]
    fn eig_diagonal_keeps_basis() {
        let e = eig_herm(&HermitianOperator::from_diag(&[-1.0, 3.0])).unwrap();
        assert!(close(e.values[0], 3.0, 1e-14) && close(e.values[1], -1.0, 1e-14));
        assert!(close(e.vectors[(1, 0)].norm(), 1.0, 1e-14));
        assert!(close(e.vectors[(0, 1)].norm(), 1.0, 1e-14));
    }

    #[test]
    fn eig_pauli_x() {
        let e = eig_herm(&HermitianOperator::pauli_x()).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], -1.0, 1e-14));
    }

    #[test]
    fn eig_pauli_y_complex_phase() {
        let e = eig_herm(&HermitianOperator::pauli_y()).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], -1.0, 1e-14));
        let back = e.reconstruct_with(|l| l);
        assert!(back.sub(HermitianOperator::pauli_y().as_matrix()).frobenius_norm() < 1e-13);
    }

    #[test]
    fn kron_identities() {
        let i2 = HermitianOperator::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), HermitianOperator::identity(4));
        let p0 = HermitianOperator::from_diag(&[1.0, 0.0]);
        let p1 = HermitianOperator::from_diag(&[0.0, 1.0]);
        assert_eq!(kron(&p0, &p1).unwrap(), HermitianOperator::from_diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_xx_flips_00_to_11() {
        // |00> is basis index 0; (X⊗X)|00> picks column 0.
        let xx = kron(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_x()).unwrap();
        let col: Vec<C64> = xx.as_matrix().column(0);
        assert_eq!(col[3], C64::new(1.0, 0.0));
        assert!(col[..3].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn kron_respects_cap() {
        let a = HermitianOperator::identity(16);
        assert_eq!(kron(&a, &a).unwrap().dim(), 256);
        let b = HermitianOperator::identity(17);
        assert!(matches!(kron(&a, &b), Err(Error::Size { dim: 272, cap: 256 })));
    }

    #[test]
    fn partial_transpose_of_product() {
        let mut p = ComplexMatrix::zeros(2);
        p[(0, 0)] = C64::new(0.5, 0.0);
        p[(0, 1)] = C64::new(0.1, 0.3);
        p[(1, 0)] = C64::new(0.1, -0.3);
        p[(1, 1)] = C64::new(0.5, 0.0);
        let p = HermitianOperator::new(p).unwrap();
        let q = HermitianOperator::from_real_rows(&[[0.7, 0.2, 0.0], [0.2, 0.1, 0.05], [0.0, 0.05, 0.2]]);
        let pq = kron(&p, &q).unwrap();
        let pt = partial_transpose(&pq, (2, 3), Subsystem::A).unwrap();
        let expected = kron(&HermitianOperator::new(p.as_matrix().transpose()).unwrap(), &q).unwrap();
        assert!(pt.sub(&expected).frobenius_norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_bell_min_eigenvalue() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let v = [C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)];
        let bell = HermitianOperator::projector(&v);
        let pt = partial_transpose(&bell, (2, 2), Subsystem::B).unwrap();
        assert!(close(pt.min_eigenvalue().unwrap(), -0.5, 1e-13));
        let pta = partial_transpose(&bell, (2, 2), Subsystem::A).unwrap();
        assert!(close(pta.min_eigenvalue().unwrap(), -0.5, 1e-13));
    }

    #[test]
    fn partial_transpose_identity_and_errors() {
        let i4 = HermitianOperator::identity(4);
        assert_eq!(partial_transpose(&i4, (2, 2), Subsystem::A).unwrap(), i4);
        assert!(matches!(partial_transpose(&i4, (2, 3), Subsystem::A), Err(Error::Dimension { .. })));
    }

    #[test]
    fn inv_sqrt_examples() {
        let i3 = HermitianOperator::identity(3);
        assert!(inv_sqrt_psd(&i3, 1e-9).unwrap().sub(&i3).frobenius_norm() < 1e-14);
        let r = inv_sqrt_psd(&HermitianOperator::from_diag(&[4.0, 0.0]), 1e-9).unwrap();
        assert!(r.sub(&HermitianOperator::from_diag(&[0.5, 0.0])).frobenius_norm() < 1e-14);
        let r = inv_sqrt_psd(&HermitianOperator::from_diag(&[2.0, 8.0]), 1e-9).unwrap();
        let want = HermitianOperator::from_diag(&[1.0 / 2f64.sqrt(), 1.0 / (2.0 * 2f64.sqrt())]);
        assert!(r.sub(&want).frobenius_norm() < 1e-14);
        assert!(matches!(inv_sqrt_psd(&HermitianOperator::from_diag(&[1.0, -0.1]), 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn frob_inner_examples() {
        let i2 = HermitianOperator::identity(2);
        assert_eq!(frob_inner(&i2, &i2).unwrap(), 2.0);
        assert_eq!(frob_inner(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_z()).unwrap(), 0.0);
        let a = HermitianOperator::from_diag(&[1.0, 2.0]);
        let b = HermitianOperator::from_diag(&[3.0, 4.0]);
        assert_eq!(frob_inner(&a, &b).unwrap(), 11.0);
        assert!(frob_inner(&a, &HermitianOperator::identity(3)).is_err());
    }

    #[test]
    fn construction_symmetrizes_and_rejects_nan() {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 1)] = C64::new(1.0, 1.0);
        let h = HermitianOperator::new(m).unwrap();
        assert_eq!(h.entry(0, 1), C64::new(0.5, 0.5));
        assert_eq!(h.entry(1, 0), C64::new(0.5, -0.5));
        let mut bad = ComplexMatrix::zeros(2);
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert_eq!(HermitianOperator::new(bad), Err(Error::NonFinite));
    }
}
