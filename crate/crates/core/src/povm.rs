//! Measurements, ensembles and the maps between them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hermlin::{self, ComplexMatrix, HermitianOperator, C64, DEFAULT_DIM_CAP, DEFAULT_PSD_TOL};

/// Frobenius tolerance on `Σ_i M_i = I`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Tolerance on `Σ q_i = 1`.
pub const PROB_SUM_TOL: f64 = 1e-10;
/// Tolerance on unit trace of ensemble states.
pub const STATE_TRACE_TOL: f64 = 1e-8;

/// Positive operator-valued measure: `n ≥ 1` PSD effects on `C^d` summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<HermitianOperator>,
}

/// Tolerances used by [`validate_povm_with`].
#[derive(Debug, Clone, Copy)]
pub struct PovmTolerance {
    pub psd: f64,
    pub completeness: f64,
}

impl Default for PovmTolerance {
    fn default() -> Self {
        Self { psd: DEFAULT_PSD_TOL, completeness: COMPLETENESS_TOL }
    }
}

/// Checks PSD-ness and completeness with the default tolerances.
pub fn validate_povm(effects: Vec<HermitianOperator>) -> Result<Povm> {
    validate_povm_with(effects, PovmTolerance::default())
}

pub fn validate_povm_with(effects: Vec<HermitianOperator>, tol: PovmTolerance) -> Result<Povm> {
    let first = effects.first().ok_or_else(|| Error::InvalidParameter("a POVM needs at least one effect".into()))?;
    let d = first.dim();
    for e in &effects {
        hermlin::dim_check(d, e.dim())?;
    }
    for (i, e) in effects.iter().enumerate() {
        let min = e.min_eigenvalue()?;
        if min < -tol.psd {
            return Err(Error::NotPsd { index: i, min_eig: min });
        }
    }
    let deviation = completeness_deviation(&effects);
    if deviation > tol.completeness {
        return Err(Error::Completeness { deviation });
    }
    Ok(Povm { effects })
}

fn completeness_deviation(effects: &[HermitianOperator]) -> f64 {
    let d = effects[0].dim();
    let mut sum = HermitianOperator::zeros(d);
    for e in effects {
        sum.add_scaled(1.0, e);
    }
    sum.sub(&HermitianOperator::identity(d)).frobenius_norm()
}

impl Povm {
    /// Skips validation; for constructions that are complete by algebra.
    pub(crate) fn from_effects_unchecked(effects: Vec<HermitianOperator>) -> Self {
        debug_assert!(!effects.is_empty());
        Self { effects }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[HermitianOperator] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianOperator {
        &self.effects[i]
    }

    pub fn into_effects(self) -> Vec<HermitianOperator> {
        self.effects
    }

    /// `‖Σ M_i − I‖_F`.
    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.effects)
    }

    /// Smallest eigenvalue over all effects, with its effect index.
    pub fn min_effect_eigenvalue(&self) -> Result<(usize, f64)> {
        let mut worst = (0, f64::INFINITY);
        for (i, e) in self.effects.iter().enumerate() {
            let m = e.min_eigenvalue()?;
            if m < worst.1 {
                worst = (i, m);
            }
        }
        Ok(worst)
    }

    /// Conjugates every effect by `U`: `M_i ↦ U M_i U†`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Self {
        Self::from_effects_unchecked(self.effects.iter().map(|e| e.congruence(u)).collect())
    }
}

/// Item of an [`Ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleItem {
    pub prob: f64,
    pub state: HermitianOperator,
}

/// Probability-weighted list of density operators `{q_i, ρ_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    items: Vec<EnsembleItem>,
}

impl Ensemble {
    /// Validates probabilities (non-negative, summing to one) and states (PSD, unit trace).
    pub fn new(items: Vec<EnsembleItem>) -> Result<Self> {
        let first = items.first().ok_or_else(|| Error::InvalidEnsemble("empty ensemble".into()))?;
        let d = first.state.dim();
        let mut total = 0.0;
        for (i, it) in items.iter().enumerate() {
            hermlin::dim_check(d, it.state.dim())?;
            if it.prob < 0.0 || !it.prob.is_finite() {
                return Err(Error::InvalidEnsemble(format!("probability {i} is {}", it.prob)));
            }
            total += it.prob;
            let tr = it.state.trace();
            if (tr - 1.0).abs() > STATE_TRACE_TOL {
                return Err(Error::InvalidEnsemble(format!("state {i} has trace {tr}")));
            }
            let min = it.state.min_eigenvalue()?;
            if min < -DEFAULT_PSD_TOL {
                return Err(Error::NotPsd { index: i, min_eig: min });
            }
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}")));
        }
        Ok(Self { items })
    }

    /// Uniform ensemble over the given states.
    pub fn uniform(states: Vec<HermitianOperator>) -> Result<Self> {
        let q = 1.0 / states.len() as f64;
        Self::new(states.into_iter().map(|state| EnsembleItem { prob: q, state }).collect())
    }

    /// Uniform ensemble of pure states from (not necessarily normalised) vectors.
    pub fn uniform_pure(vectors: &[Vec<C64>]) -> Result<Self> {
        Self::uniform(vectors.iter().map(|v| pure_state(v)).collect())
    }

    pub(crate) fn from_items_unchecked(items: Vec<EnsembleItem>) -> Self {
        Self { items }
    }

    pub fn items(&self) -> &[EnsembleItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].state.dim()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.prob).collect()
    }

    /// Average state `Σ q_i ρ_i`.
    pub fn average_state(&self) -> HermitianOperator {
        let mut avg = HermitianOperator::zeros(self.dim());
        for it in &self.items {
            avg.add_scaled(it.prob, &it.state);
        }
        avg
    }
}

/// Normalised projector onto `v`.
pub fn pure_state(v: &[C64]) -> HermitianOperator {
    let mut w = v.to_vec();
    hermlin::normalize(&mut w);
    HermitianOperator::projector(&w)
}

/// Column-stochastic matrix `q(a|j)`: rows index outputs, columns index inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// `entries` is row-major `rows × cols`; each column must sum to one within 1e-12.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "stochastic matrix {rows}x{cols} given {} entries",
                entries.len()
            )));
        }
        if entries.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(Error::InvalidParameter("stochastic matrix has a negative entry".into()));
        }
        for j in 0..cols {
            let s: f64 = (0..rows).map(|a| entries[a * cols + j]).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, entries: e }
    }

    /// Deterministic relabelling: input `j` goes to output `map[j]`.
    pub fn deterministic(rows: usize, map: &[usize]) -> Result<Self> {
        let cols = map.len();
        let mut e = vec![0.0; rows * cols];
        for (j, &a) in map.iter().enumerate() {
            if a >= rows {
                return Err(Error::InvalidParameter(format!("output {a} out of range {rows}")));
            }
            e[a * cols + j] = 1.0;
        }
        Self::new(rows, cols, e)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `q(a|j)`.
    pub fn get(&self, a: usize, j: usize) -> f64 {
        self.entries[a * self.cols + j]
    }
}

/// Effect-wise `p M_i + (1−p) N_i`.
pub fn convex_combine(p: f64, m: &Povm, n: &Povm) -> Result<Povm> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("mixing weight {p} outside [0, 1]")));
    }
    hermlin::dim_check(m.dim(), n.dim())?;
    hermlin::dim_check(m.num_outcomes(), n.num_outcomes())?;
    Ok(Povm::from_effects_unchecked(
        m.effects
            .iter()
            .zip(&n.effects)
            .map(|(a, b)| {
                let mut e = a.scale(p);
                e.add_scaled(1.0 - p, b);
                e
            })
            .collect(),
    ))
}

/// Classical post-processing: output effect `a` is `Σ_j q(a|j) M_j`.
pub fn post_process(m: &Povm, q: &StochasticMatrix) -> Result<Povm> {
    hermlin::dim_check(m.num_outcomes(), q.cols())?;
    let d = m.dim();
    Ok(Povm::from_effects_unchecked(
        (0..q.rows())
            .map(|a| {
                let mut e = HermitianOperator::zeros(d);
                for (j, mj) in m.effects.iter().enumerate() {
                    let w = q.get(a, j);
                    if w != 0.0 {
                        e.add_scaled(w, mj);
                    }
                }
                e
            })
            .collect(),
    ))
}

/// Depolarising map on effects: `M_i ↦ t M_i + (1−t) tr(M_i)/d · I`.
pub fn depolarize(m: &Povm, t: f64) -> Result<Povm> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("depolarizing parameter {t} outside [0, 1]")));
    }
    let d = m.dim();
    let id = HermitianOperator::identity(d);
    Ok(Povm::from_effects_unchecked(
        m.effects
            .iter()
            .map(|e| {
                let mut out = e.scale(t);
                out.add_scaled((1.0 - t) * e.trace() / d as f64, &id);
                out
            })
            .collect(),
    ))
}

/// Fourier basis vector `|j̃⟩ = d^{-1/2} Σ_k exp(2πi jk/d) |k⟩`.
pub fn fourier_vector(d: usize, j: usize) -> Vec<C64> {
    let norm = 1.0 / libm::sqrt(d as f64);
    (0..d)
        .map(|k| {
            let phase = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
            C64::new(libm::cos(phase) * norm, libm::sin(phase) * norm)
        })
        .collect()
}

/// Projective measurement onto the Fourier basis of `C^d`.
pub fn fourier_povm(d: usize) -> Result<Povm> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("fourier_povm needs d ≥ 2, got {d}")));
    }
    Ok(Povm::from_effects_unchecked((0..d).map(|j| HermitianOperator::projector(&fourier_vector(d, j))).collect()))
}

/// `n − 1` Fourier projectors plus the completion `I − Σ` as the last effect (`2 ≤ n < d`).
pub fn truncated_fourier_povm(d: usize, n: usize) -> Result<Povm> {
    if n < 2 || n >= d {
        return Err(Error::InvalidParameter(format!("truncated_fourier_povm needs 2 ≤ n < d, got d = {d}, n = {n}")));
    }
    let mut effects: Vec<HermitianOperator> =
        (0..n - 1).map(|j| HermitianOperator::projector(&fourier_vector(d, j))).collect();
    let mut rest = HermitianOperator::identity(d);
    for e in &effects {
        rest.add_scaled(-1.0, e);
    }
    effects.push(rest);
    Ok(Povm::from_effects_unchecked(effects))
}

/// The maximally coherent measurement with `n` outcomes: Fourier for `n ≥ d`
/// (padded with zero effects), truncated Fourier for `n < d`.
pub fn coherent_extremal_povm(d: usize, n: usize) -> Result<Povm> {
    if n >= d {
        let mut effects = fourier_povm(d)?.into_effects();
        effects.resize(n, HermitianOperator::zeros(d));
        Ok(Povm::from_effects_unchecked(effects))
    } else {
        truncated_fourier_povm(d, n)
    }
}

/// Projective measurement in the computational basis.
pub fn computational_basis(d: usize) -> Povm {
    Povm::from_effects_unchecked(
        (0..d)
            .map(|j| {
                let mut diag = vec![0.0; d];
                diag[j] = 1.0;
                HermitianOperator::from_diag(&diag)
            })
            .collect(),
    )
}

/// Trivial measurement with effects `(1/n)·I`.
pub fn uniform_trivial_povm(d: usize, n: usize) -> Povm {
    Povm::from_effects_unchecked(vec![HermitianOperator::identity(d).scale(1.0 / n as f64); n])
}

/// Generalised Bell vector `|Ψ_nm⟩ = d^{-1/2} Σ_j e^{2πi jn/d} |j⟩ ⊗ |j+m mod d⟩` on `C^d ⊗ C^d`.
pub fn bell_vector(d: usize, n: usize, m: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    let norm = 1.0 / libm::sqrt(d as f64);
    for j in 0..d {
        let phase = 2.0 * PI * ((j * n) % d) as f64 / d as f64;
        v[j * d + (j + m) % d] = C64::new(libm::cos(phase) * norm, libm::sin(phase) * norm);
    }
    v
}

/// Uniform ensemble of the `d²` generalised Bell states, ordered `(n, m)` row-major.
pub fn bell_states(d: usize) -> Result<Ensemble> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("bell_states needs d ≥ 2, got {d}")));
    }
    if d * d > DEFAULT_DIM_CAP {
        return Err(Error::Size { dim: d * d, cap: DEFAULT_DIM_CAP });
    }
    let q = 1.0 / (d * d) as f64;
    let mut items = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            items.push(EnsembleItem { prob: q, state: HermitianOperator::projector(&bell_vector(d, n, m)) });
        }
    }
    Ok(Ensemble::from_items_unchecked(items))
}

/// Embeds a vector of `C^D ⊗ C^D` into `C^{dA} ⊗ C^{dB}` with `D ≤ dA, dB`.
pub fn embed_local(v: &[C64], d: usize, dims: (usize, usize)) -> Vec<C64> {
    let (da, db) = dims;
    let mut out = vec![C64::new(0.0, 0.0); da * db];
    for a in 0..d {
        for b in 0..d {
            out[a * db + b] = v[a * d + b];
        }
    }
    out
}

/// Generalised Bell states of `C^D ⊗ C^D` (`D = min(dA, dB)`) embedded in `C^{dA} ⊗ C^{dB}`.
pub fn embedded_bell_states(dims: (usize, usize)) -> Result<Ensemble> {
    let d = dims.0.min(dims.1);
    if d < 2 {
        return Err(Error::InvalidParameter(format!("local dimensions {dims:?} too small")));
    }
    let q = 1.0 / (d * d) as f64;
    let mut items = Vec::with_capacity(d * d);
    for n in 0..d {
        for m in 0..d {
            let v = embed_local(&bell_vector(d, n, m), d, dims);
            items.push(EnsembleItem { prob: q, state: HermitianOperator::projector(&v) });
        }
    }
    Ok(Ensemble::from_items_unchecked(items))
}

/// Projective measurement onto the embedded generalised Bell states; the projector onto
/// the complement of the `D ⊗ D` block is split evenly over the `D²` outcomes.
pub fn bell_measurement(dims: (usize, usize)) -> Result<Povm> {
    let ens = embedded_bell_states(dims)?;
    let dim = dims.0 * dims.1;
    let outcomes = ens.len();
    let mut rest = HermitianOperator::identity(dim);
    for it in ens.items() {
        rest.add_scaled(-1.0, &it.state);
    }
    let share = rest.scale(1.0 / outcomes as f64);
    Ok(Povm::from_effects_unchecked(ens.items().iter().map(|it| it.state.add(&share)).collect()))
}

/// Seeded generator; distinct `stream`s give independent sequences for the same seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian `(x + iy)/√2` via Box–Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen::<f64>();
    let r = libm::sqrt(-libm::log(u1));
    let th = 2.0 * PI * u2;
    C64::new(r * libm::cos(th), r * libm::sin(th))
}

/// Haar-random unit vector in `C^d` (normalised complex Gaussian vector).
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if hermlin::normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

/// `count` iid Haar-random pure states on `num_qubits` qubits, uniform weights.
pub fn haar_ensemble(num_qubits: usize, count: usize, seed: u64) -> Result<Ensemble> {
    haar_ensemble_with(num_qubits, count, &mut rng_for(seed, 0))
}

pub fn haar_ensemble_with<R: Rng + ?Sized>(num_qubits: usize, count: usize, rng: &mut R) -> Result<Ensemble> {
    if num_qubits == 0 || count == 0 {
        return Err(Error::InvalidParameter("haar_ensemble needs N ≥ 1 and M ≥ 1".into()));
    }
    if num_qubits >= usize::BITS as usize || (1usize << num_qubits) > DEFAULT_DIM_CAP {
        return Err(Error::Size {
            dim: 1usize.checked_shl(num_qubits as u32).unwrap_or(usize::MAX),
            cap: DEFAULT_DIM_CAP,
        });
    }
    let d = 1usize << num_qubits;
    let q = 1.0 / count as f64;
    Ok(Ensemble::from_items_unchecked(
        (0..count)
            .map(|_| EnsembleItem { prob: q, state: HermitianOperator::projector(&haar_vector(d, rng)) })
            .collect(),
    ))
}

fn ginibre_psd<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HermitianOperator {
    let g = ComplexMatrix::from_fn(d, |_, _| complex_gaussian(rng));
    HermitianOperator::symmetrized(g.matmul_adjoint(&g))
}

/// Random full-rank POVM: `M_i = S^{-1/2} A_i S^{-1/2}` with Ginibre `A_i` and `S = Σ A_i`.
pub fn random_povm<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Result<Povm> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter("random_povm needs d, n ≥ 1".into()));
    }
    let parts: Vec<HermitianOperator> = (0..n).map(|_| ginibre_psd(d, rng)).collect();
    let mut total = HermitianOperator::zeros(d);
    for p in &parts {
        total.add_scaled(1.0, p);
    }
    let s = hermlin::inv_sqrt_psd(&total, 1e-12)?;
    Ok(Povm::from_effects_unchecked(parts.iter().map(|p| p.congruence(s.as_matrix())).collect()))
}

/// Random column-stochastic matrix with iid exponential weights per column.
pub fn random_stochastic<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> StochasticMatrix {
    let mut e = vec![0.0; rows * cols];
    for j in 0..cols {
        let w: Vec<f64> = (0..rows).map(|_| -libm::log(1.0 - rng.gen::<f64>())).collect();
        let s: f64 = w.iter().sum();
        for a in 0..rows {
            e[a * cols + j] = w[a] / s;
        }
    }
    // Absorb rounding into the last row so columns sum to one to machine precision.
    for j in 0..cols {
        let s: f64 = (0..rows - 1).map(|a| e[a * cols + j]).sum();
        e[(rows - 1) * cols + j] = (1.0 - s).max(0.0);
    }
    StochasticMatrix { rows, cols, entries: e }
}

/// Random incoherent POVM: computational-basis measurement post-processed by a random `q`.
pub fn random_incoherent_povm<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Povm {
    let q = random_stochastic(n, d, rng);
    post_process(&computational_basis(d), &q).expect("shapes agree")
}

/// Random trivial POVM `c_i · I` with `c` drawn from the flat Dirichlet.
pub fn random_trivial_povm<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Povm {
    let q = random_stochastic(n, 1, rng);
    let id = HermitianOperator::identity(d);
    Povm::from_effects_unchecked((0..n).map(|a| id.scale(q.get(a, 0))).collect())
}

/// Random ensemble of `n` Haar pure states with flat-Dirichlet weights.
pub fn random_pure_ensemble<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Ensemble {
    let q = random_stochastic(n, 1, rng);
    Ensemble::from_items_unchecked(
        (0..n)
            .map(|i| EnsembleItem { prob: q.get(i, 0), state: HermitianOperator::projector(&haar_vector(d, rng)) })
            .collect(),
    )
}

/// Random diagonal unitary `diag(e^{iθ_j})`.
pub fn random_diagonal_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(d);
    for j in 0..d {
        let th = 2.0 * PI * rng.gen::<f64>();
        u[(j, j)] = C64::new(libm::cos(th), libm::sin(th));
    }
    u
}

/// Haar-random unitary: Gram–Schmidt on a Ginibre matrix with phase-fixed columns.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        for c in &cols {
            let ip: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= ip * y;
            }
        }
        if hermlin::normalize(&mut v) > 1e-8 {
            cols.push(v);
        }
    }
    ComplexMatrix::from_fn(d, |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proj(d: usize, j: usize) -> HermitianOperator {
        let mut diag = vec![0.0; d];
        diag[j] = 1.0;
        HermitianOperator::from_diag(&diag)
    }

    #[test]
    fn validate_examples() {
        let m = validate_povm(vec![proj(2, 0), proj(2, 1)]).unwrap();
        assert_eq!((m.dim(), m.num_outcomes()), (2, 2));
        let half = HermitianOperator::identity(2).scale(0.5);
        assert!(validate_povm(vec![half.clone(), half]).is_ok());
        assert!(matches!(validate_povm(vec![proj(2, 0), proj(2, 0)]), Err(Error::Completeness { .. })));
        let neg = HermitianOperator::from_diag(&[1.2, 1.0]);
        let other = HermitianOperator::from_diag(&[-0.2, 0.0]);
        assert!(matches!(validate_povm(vec![neg, other]), Err(Error::NotPsd { index: 1, .. })));
    }

    #[test]
    fn convex_combine_examples() {
        let m = computational_basis(2);
        let n = uniform_trivial_povm(2, 2);
        assert_eq!(convex_combine(1.0, &m, &n).unwrap(), m);
        assert_eq!(convex_combine(0.0, &m, &n).unwrap(), n);
        let half = convex_combine(0.5, &m, &n).unwrap();
        assert!(half.effect(0).sub(&HermitianOperator::from_diag(&[0.75, 0.25])).frobenius_norm() < 1e-15);
        assert!(half.effect(1).sub(&HermitianOperator::from_diag(&[0.25, 0.75])).frobenius_norm() < 1e-15);
        assert!(convex_combine(1.5, &m, &n).is_err());
        assert!(convex_combine(0.5, &m, &uniform_trivial_povm(2, 3)).is_err());
    }

    #[test]
    fn post_process_examples() {
        let m = computational_basis(2);
        assert_eq!(post_process(&m, &StochasticMatrix::identity(2)).unwrap(), m);
        let merge = StochasticMatrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        let merged = post_process(&m, &merge).unwrap();
        assert_eq!(merged.num_outcomes(), 1);
        assert_eq!(merged.effect(0), &HermitianOperator::identity(2));
        let q = StochasticMatrix::new(2, 2, vec![1.0, 0.5, 0.0, 0.5]).unwrap();
        let out = post_process(&m, &q).unwrap();
        assert_eq!(out.effect(0), &HermitianOperator::from_diag(&[1.0, 0.5]));
        assert_eq!(out.effect(1), &HermitianOperator::from_diag(&[0.0, 0.5]));
        assert!(post_process(&m, &StochasticMatrix::identity(3)).is_err());
    }

    #[test]
    fn stochastic_rejects_bad_columns() {
        assert!(StochasticMatrix::new(2, 2, vec![1.0, 0.5, 0.1, 0.5]).is_err());
        assert!(StochasticMatrix::new(2, 1, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn depolarize_endpoints() {
        let mut rng = rng_for(1, 0);
        let m = random_povm(3, 4, &mut rng).unwrap();
        let same = depolarize(&m, 1.0).unwrap();
        for (a, b) in same.effects().iter().zip(m.effects()) {
            assert!(a.sub(b).frobenius_norm() < 1e-15);
        }
        let flat = depolarize(&m, 0.0).unwrap();
        for (a, b) in flat.effects().iter().zip(m.effects()) {
            let want = HermitianOperator::identity(3).scale(b.trace() / 3.0);
            assert!(a.sub(&want).frobenius_norm() < 1e-14);
        }
        assert!(depolarize(&m, -0.1).is_err());
    }

    #[test]
    fn fourier_examples() {
        let f = fourier_povm(2).unwrap();
        let plus = HermitianOperator::from_real_rows(&[[0.5, 0.5], [0.5, 0.5]]);
        let minus = HermitianOperator::from_real_rows(&[[0.5, -0.5], [-0.5, 0.5]]);
        assert!(f.effect(0).sub(&plus).frobenius_norm() < 1e-15);
        assert!(f.effect(1).sub(&minus).frobenius_norm() < 1e-15);
        for d in 2..=6 {
            let f = fourier_povm(d).unwrap();
            assert!(f.completeness_deviation() < 1e-13);
            for e in f.effects() {
                assert!(e.diagonal().iter().all(|&x| (x - 1.0 / d as f64).abs() < 1e-14));
            }
        }
        let t = truncated_fourier_povm(4, 2).unwrap();
        assert_eq!(t.num_outcomes(), 2);
        assert!(t.completeness_deviation() < 1e-14);
        assert!(validate_povm(t.into_effects()).is_ok());
        assert!(truncated_fourier_povm(4, 4).is_err());
        assert!(fourier_povm(1).is_err());
    }

    #[test]
    fn bell_state_properties() {
        let e = bell_states(2).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let phi =
            HermitianOperator::projector(&[C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)]);
        assert!(e.items()[0].state.sub(&phi).frobenius_norm() < 1e-15);
        for d in 2..=4 {
            let vs: Vec<Vec<C64>> = (0..d).flat_map(|n| (0..d).map(move |m| bell_vector(d, n, m))).collect();
            for (i, a) in vs.iter().enumerate() {
                for (j, b) in vs.iter().enumerate() {
                    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(want, 0.0)).norm() < 1e-14);
                }
                // Reduced state on A: Σ_b ψ_{ab} ψ*_{a'b}.
                for a1 in 0..d {
                    for a2 in 0..d {
                        let r: C64 = (0..d).map(|b| a[a1 * d + b] * a[a2 * d + b].conj()).sum();
                        let want = if a1 == a2 { 1.0 / d as f64 } else { 0.0 };
                        assert!((r - C64::new(want, 0.0)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn bell_measurement_is_valid() {
        for dims in [(2, 2), (2, 3), (3, 3)] {
            let m = bell_measurement(dims).unwrap();
            assert!(validate_povm(m.into_effects()).is_ok());
        }
    }

    #[test]
    fn haar_determinism_and_norms() {
        let a = haar_ensemble(2, 5, 42).unwrap();
        let b = haar_ensemble(2, 5, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, haar_ensemble(2, 5, 43).unwrap());
        let mut rng = rng_for(7, 0);
        for _ in 0..50 {
            let v = haar_vector(8, &mut rng);
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_first_moment() {
        // |<0|ψ>|² ~ Beta(1, d−1): mean 1/d, variance (d−1)/(d²(d+1)).
        for nq in 1..=3usize {
            let d = 1usize << nq;
            let samples = 10_000;
            let mut rng = rng_for(2024, nq as u64);
            let mean = (0..samples).map(|_| haar_vector(d, &mut rng)[0].norm_sqr()).sum::<f64>() / samples as f64;
            let df = d as f64;
            let se = ((df - 1.0) / (df * df * (df + 1.0)) / samples as f64).sqrt();
            assert!((mean - 1.0 / df).abs() < 3.0 * se, "d={d} mean={mean} se={se}");
        }
    }

    #[test]
    fn random_povms_are_valid() {
        let mut rng = rng_for(3, 0);
        for d in 1..=4 {
            for n in 1..=5 {
                assert!(validate_povm(random_povm(d, n, &mut rng).unwrap().into_effects()).is_ok());
                assert!(validate_povm(random_incoherent_povm(d, n, &mut rng).into_effects()).is_ok());
                assert!(validate_povm(random_trivial_povm(d, n, &mut rng).into_effects()).is_ok());
            }
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_for(9, 0);
        let u = haar_unitary(5, &mut rng);
        let uu = u.matmul_adjoint(&u);
        assert!(uu.sub(&ComplexMatrix::identity(5)).frobenius_norm() < 1e-12);
    }
}
