//! Free sets of measurements: membership tests and their conic encodings.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::hermlin::{self, HermitianOperator};
use crate::povm::Povm;
use crate::sdpcore::{
    self, herm_basis, BlockId, HermExpr, LinearFunctional, Lmi, ScalarExpr, SdpProblem, SolverOptions, Var,
};

/// Convex set of "free" measurements.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeSetSpec {
    /// Effects diagonal in the computational basis.
    Incoherent,
    /// Effects proportional to the identity.
    Trivial,
    /// Effects with positive partial transpose across every listed cut.
    ///
    /// `dims` are the local dimensions (big-endian) and each cut lists the
    /// subsystems on one side of a bipartition.
    PptSeparable { dims: Vec<usize>, cuts: Vec<Vec<usize>> },
    /// Convex hull of the listed POVMs.
    ConvexHull { generators: Vec<Povm> },
}

/// How a computed value relates to the quantity it stands in for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exactness {
    Exact,
    /// Robustness against the PPT relaxation underestimates the separable robustness.
    LowerBound,
    /// Discrimination over PPT measurements overestimates the separable optimum.
    UpperBoundOnSepRestricted,
}

impl Exactness {
    pub fn as_str(self) -> &'static str {
        match self {
            Exactness::Exact => "exact",
            Exactness::LowerBound => "lower-bound",
            Exactness::UpperBoundOnSepRestricted => "upper-bound-on-SEP-restricted-value",
        }
    }
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FreeSetSpec {
    /// PPT set with the default cuts: every single subsystem against the rest.
    pub fn ppt(dims: Vec<usize>) -> Result<Self> {
        let cuts = default_cuts(dims.len());
        Self::ppt_with_cuts(dims, cuts)
    }

    pub fn ppt_with_cuts(dims: Vec<usize>, cuts: Vec<Vec<usize>>) -> Result<Self> {
        let spec = FreeSetSpec::PptSeparable { dims, cuts };
        spec.validate()?;
        Ok(spec)
    }

    pub fn hull(generators: Vec<Povm>) -> Result<Self> {
        let spec = FreeSetSpec::ConvexHull { generators };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FreeSetSpec::Incoherent => "incoherent",
            FreeSetSpec::Trivial => "trivial",
            FreeSetSpec::PptSeparable { .. } => "ppt",
            FreeSetSpec::ConvexHull { .. } => "hull",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FreeSetSpec::Incoherent | FreeSetSpec::Trivial => Ok(()),
            FreeSetSpec::PptSeparable { dims, cuts } => {
                if dims.is_empty() || dims.contains(&0) {
                    return Err(Error::InvalidParameter(format!("invalid local dimensions {dims:?}")));
                }
                if cuts.is_empty() {
                    return Err(Error::InvalidParameter("PPT free set needs at least one cut".into()));
                }
                for cut in cuts {
                    if cut.is_empty() || cut.len() >= dims.len() || cut.iter().any(|&k| k >= dims.len()) {
                        return Err(Error::InvalidParameter(format!(
                            "cut {cut:?} is not a proper bipartition of {} subsystems",
                            dims.len()
                        )));
                    }
                }
                Ok(())
            }
            FreeSetSpec::ConvexHull { generators } => {
                let first = generators
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("convex hull needs a generator".into()))?;
                for g in generators {
                    hermlin::dim_check(first.dim(), g.dim())?;
                    hermlin::dim_check(first.num_outcomes(), g.num_outcomes())?;
                }
                Ok(())
            }
        }
    }

    /// Checks that the set contains `n`-outcome POVMs on `C^d`.
    pub fn check_shape(&self, d: usize, n: usize) -> Result<()> {
        match self {
            FreeSetSpec::PptSeparable { dims, .. } => hermlin::dim_check(dims.iter().product(), d),
            FreeSetSpec::ConvexHull { generators } => {
                hermlin::dim_check(generators[0].dim(), d)?;
                hermlin::dim_check(generators[0].num_outcomes(), n)
            }
            _ => Ok(()),
        }
    }

    /// True when the set is exactly the one it models: always, except for PPT
    /// cuts outside `2 ⊗ 2` and `2 ⊗ 3`, where PPT strictly contains the separable set.
    pub fn is_exact(&self) -> bool {
        match self {
            FreeSetSpec::PptSeparable { dims, cuts } => cuts.iter().all(|cut| {
                let (a, b) = cut_dims(dims, cut);
                matches!((a.min(b), a.max(b)), (2, 2) | (2, 3))
            }),
            _ => true,
        }
    }

    pub fn robustness_exactness(&self) -> Exactness {
        if self.is_exact() {
            Exactness::Exact
        } else {
            Exactness::LowerBound
        }
    }

    pub fn discrimination_exactness(&self) -> Exactness {
        if self.is_exact() {
            Exactness::Exact
        } else {
            Exactness::UpperBoundOnSepRestricted
        }
    }
}

/// Single-subsystem-versus-rest cuts, without the mirror duplicate for two parties.
pub fn default_cuts(parties: usize) -> Vec<Vec<usize>> {
    match parties {
        0 | 1 => Vec::new(),
        2 => vec![vec![0]],
        k => (0..k).map(|i| vec![i]).collect(),
    }
}

fn cut_dims(dims: &[usize], cut: &[usize]) -> (usize, usize) {
    let a: usize = cut.iter().map(|&k| dims[k]).product();
    (a, dims.iter().product::<usize>() / a)
}

fn cut_mask(parties: usize, cut: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; parties];
    for &k in cut {
        mask[k] = true;
    }
    mask
}

/// Why a POVM failed a membership test.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OffDiagonal {
        effect: usize,
        row: usize,
        col: usize,
        modulus: f64,
    },
    NotProportionalToIdentity {
        effect: usize,
        deviation: f64,
    },
    NegativePartialTranspose {
        effect: usize,
        cut: usize,
        min_eigenvalue: f64,
    },
    /// Smallest L1 distance from the hull, summed over effect coordinates.
    OutsideHull {
        distance: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OffDiagonal { effect, row, col, modulus } => {
                write!(f, "effect {effect} has off-diagonal entry ({row},{col}) of modulus {modulus:e}")
            }
            Violation::NotProportionalToIdentity { effect, deviation } => {
                write!(f, "effect {effect} deviates from a multiple of the identity by {deviation:e}")
            }
            Violation::NegativePartialTranspose { effect, cut, min_eigenvalue } => {
                write!(f, "effect {effect} has partial transpose eigenvalue {min_eigenvalue:e} across cut {cut}")
            }
            Violation::OutsideHull { distance } => write!(f, "distance {distance:e} from the convex hull"),
        }
    }
}

/// Result of [`is_member`]; `violation` is the worst offence found, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub violation: Option<Violation>,
}

pub fn is_member(f: &FreeSetSpec, m: &Povm, tol: f64) -> Result<Membership> {
    f.validate()?;
    f.check_shape(m.dim(), m.num_outcomes())?;
    let d = m.dim();
    let mut worst: Option<(f64, Violation)> = None;
    let mut note = |score: f64, v: Violation| {
        if worst.as_ref().is_none_or(|(s, _)| score > *s) {
            worst = Some((score, v));
        }
    };
    match f {
        FreeSetSpec::Incoherent => {
            for (i, e) in m.effects().iter().enumerate() {
                for r in 0..d {
                    for c in r + 1..d {
                        let modulus = e.entry(r, c).norm();
                        if modulus > tol {
                            note(modulus, Violation::OffDiagonal { effect: i, row: r, col: c, modulus });
                        }
                    }
                }
            }
        }
        FreeSetSpec::Trivial => {
            let id = HermitianOperator::identity(d);
            for (i, e) in m.effects().iter().enumerate() {
                let diff = e.sub(&id.scale(e.trace() / d as f64));
                let deviation = diff.as_matrix().as_slice().iter().fold(0.0f64, |a, z| a.max(z.norm()));
                if deviation > tol {
                    note(deviation, Violation::NotProportionalToIdentity { effect: i, deviation });
                }
            }
        }
        FreeSetSpec::PptSeparable { dims, cuts } => {
            for (i, e) in m.effects().iter().enumerate() {
                for (k, cut) in cuts.iter().enumerate() {
                    let pt = hermlin::partial_transpose_factors(e, dims, &cut_mask(dims.len(), cut))?;
                    let min = pt.min_eigenvalue()?;
                    if min < -tol {
                        note(-min, Violation::NegativePartialTranspose { effect: i, cut: k, min_eigenvalue: min });
                    }
                }
            }
        }
        FreeSetSpec::ConvexHull { generators } => {
            let distance = hull_distance(generators, m)?;
            if distance > tol {
                note(distance, Violation::OutsideHull { distance });
            }
        }
    }
    Ok(Membership { member: worst.is_none(), violation: worst.map(|(_, v)| v) })
}

/// `min_μ Σ_i ‖Σ_k μ_k F^k_i − M_i‖₁` over the simplex, with the norm taken on basis coordinates.
fn hull_distance(generators: &[Povm], m: &Povm) -> Result<f64> {
    let d = m.dim();
    let basis = herm_basis(d);
    let mut p = SdpProblem::new();
    let mu: Vec<_> = generators.iter().map(|_| p.add_nonneg()).collect();
    let mut simplex = LinearFunctional::new();
    for &v in &mu {
        simplex = simplex.scalar(v, 1.0);
    }
    p.add_constraint(simplex, 1.0);
    for (i, mi) in m.effects().iter().enumerate() {
        for b in &basis {
            let plus = p.add_nonneg();
            let minus = p.add_nonneg();
            p.objective = core::mem::take(&mut p.objective).scalar(plus, 1.0).scalar(minus, 1.0);
            let mut lhs = LinearFunctional::new().scalar(plus, -1.0).scalar(minus, 1.0);
            for (g, &v) in generators.iter().zip(&mu) {
                let c = hermlin::frob_inner_unchecked(b, g.effect(i));
                if c != 0.0 {
                    lhs = lhs.scalar(v, c);
                }
            }
            p.add_constraint(lhs, hermlin::frob_inner_unchecked(b, mi));
        }
    }
    let sol = sdpcore::solve(&p, &SolverOptions::default())?.require_optimal()?;
    Ok(sol.primal_value.max(0.0))
}

/// Handles created by [`compile_membership_constraints`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MembershipBlocks {
    /// One PSD block per effect (Incoherent and PPT).
    pub effect_blocks: Vec<BlockId>,
    /// `(effect, cut, block)` for every partial-transpose PSD block.
    pub pt_blocks: Vec<(usize, usize, BlockId)>,
    /// Mixing weights of the hull generators.
    pub weights: Vec<Var>,
    pub equalities: usize,
    pub inequalities: usize,
}

/// Constrains the affine `effects` to satisfy `effects / scale ∈ F`, with `Σ effects = scale · I`.
///
/// `scale` is a constant `1` for plain membership and the robustness variable `t`
/// when the effects are unnormalised.
pub fn compile_membership_constraints(
    f: &FreeSetSpec,
    lmi: &mut Lmi,
    effects: &[HermExpr],
    scale: &ScalarExpr,
) -> Result<MembershipBlocks> {
    f.validate()?;
    let first = effects.first().ok_or_else(|| Error::InvalidParameter("no effect variables".into()))?;
    let d = first.dim();
    for e in effects {
        hermlin::dim_check(d, e.dim())?;
    }
    f.check_shape(d, effects.len())?;
    let mut out = MembershipBlocks::default();
    let zero = |lmi: &mut Lmi, e: &ScalarExpr, out: &mut MembershipBlocks| {
        lmi.zero(e);
        out.equalities += 1;
    };
    match f {
        FreeSetSpec::Incoherent => {
            for e in effects {
                for r in 0..d {
                    for c in r + 1..d {
                        let (re, im) = e.off_diagonal(r, c);
                        zero(lmi, &re, &mut out);
                        zero(lmi, &im, &mut out);
                    }
                }
                out.effect_blocks.push(lmi.psd(e));
            }
            for k in 0..d {
                let mut sum = ScalarExpr::constant(0.0).plus(scale, -1.0);
                for e in effects {
                    sum = sum.plus(&e.diagonal(k), 1.0);
                }
                zero(lmi, &sum, &mut out);
            }
        }
        FreeSetSpec::Trivial => {
            let mut sum = ScalarExpr::constant(0.0).plus(scale, -1.0);
            for e in effects {
                for r in 0..d {
                    for c in r + 1..d {
                        let (re, im) = e.off_diagonal(r, c);
                        zero(lmi, &re, &mut out);
                        zero(lmi, &im, &mut out);
                    }
                }
                let e0 = e.diagonal(0);
                for k in 1..d {
                    zero(lmi, &e.diagonal(k).plus(&e0, -1.0), &mut out);
                }
                lmi.nonneg(&e0);
                out.inequalities += 1;
                sum = sum.plus(&e0, 1.0);
            }
            zero(lmi, &sum, &mut out);
        }
        FreeSetSpec::PptSeparable { dims, cuts } => {
            for (i, e) in effects.iter().enumerate() {
                out.effect_blocks.push(lmi.psd(e));
                for (k, cut) in cuts.iter().enumerate() {
                    let mask = cut_mask(dims.len(), cut);
                    let pt = e
                        .clone()
                        .map(|a| hermlin::partial_transpose_factors(a, dims, &mask).expect("dimensions checked"));
                    out.pt_blocks.push((i, k, lmi.psd(&pt)));
                }
            }
            let id = HermitianOperator::identity(d);
            for b in herm_basis(d) {
                let mut sum = ScalarExpr::constant(0.0).plus(scale, -hermlin::frob_inner_unchecked(&b, &id));
                for e in effects {
                    sum = sum.plus(&e.inner(&b), 1.0);
                }
                zero(lmi, &sum, &mut out);
            }
        }
        FreeSetSpec::ConvexHull { generators } => {
            let mut simplex = ScalarExpr::constant(0.0).plus(scale, -1.0);
            for _ in generators {
                let w = lmi.var();
                lmi.nonneg(&ScalarExpr::var(w));
                out.inequalities += 1;
                simplex = simplex.plus_var(w, 1.0);
                out.weights.push(w);
            }
            zero(lmi, &simplex, &mut out);
            let basis = herm_basis(d);
            for (i, e) in effects.iter().enumerate() {
                for b in &basis {
                    let mut diff = e.inner(b);
                    for (g, &w) in generators.iter().zip(&out.weights) {
                        let c = hermlin::frob_inner_unchecked(b, g.effect(i));
                        if c != 0.0 {
                            diff = diff.plus_var(w, -c);
                        }
                    }
                    zero(lmi, &diff, &mut out);
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of [`dual_constraint_form`].
#[derive(Debug, Clone, PartialEq)]
pub enum DualForm {
    /// Constraints were added; `offset` must be added to `Σ tr(Z_i M_i)` to get the
    /// robustness (it is `−1` in every supported case).
    Compiled {
        constraints: usize,
        offset: f64,
    },
    Unsupported(String),
}

/// Adds a finite form of `Σ_i tr(Z_i N_i) ≤ 1 for all N ∈ F` on the PSD blocks `z`
/// of a standard-form problem.
pub fn dual_constraint_form(f: &FreeSetSpec, p: &mut SdpProblem, z: &[BlockId]) -> Result<DualForm> {
    f.validate()?;
    let first = *z.first().ok_or_else(|| Error::InvalidParameter("no witness blocks".into()))?;
    let d = p.block_dims[first.0];
    f.check_shape(d, z.len())?;
    let before = p.num_constraints();
    match f {
        FreeSetSpec::Incoherent => {
            // Equal diagonals across outcomes, unit trace on the last one.
            let last = *z.last().expect("non-empty");
            for &za in &z[..z.len() - 1] {
                for k in 0..d {
                    let mut e = vec![0.0; d];
                    e[k] = 1.0;
                    let proj = HermitianOperator::from_diag(&e);
                    p.add_constraint(
                        LinearFunctional::new().block(za, proj.clone()).block(last, proj.scale(-1.0)),
                        0.0,
                    );
                }
            }
            p.add_constraint(LinearFunctional::new().block(last, HermitianOperator::identity(d)), 1.0);
        }
        FreeSetSpec::Trivial => {
            for &zi in z {
                let s = p.add_nonneg();
                p.add_constraint(LinearFunctional::new().block(zi, HermitianOperator::identity(d)).scalar(s, 1.0), 1.0);
            }
        }
        FreeSetSpec::ConvexHull { generators } => {
            for g in generators {
                let s = p.add_nonneg();
                let mut lhs = LinearFunctional::new().scalar(s, 1.0);
                for (&zi, e) in z.iter().zip(g.effects()) {
                    lhs = lhs.block(zi, e.clone());
                }
                p.add_constraint(lhs, 1.0);
            }
        }
        FreeSetSpec::PptSeparable { .. } => {
            return Ok(DualForm::Unsupported(
                "the PPT free set has no finite dual form here; use the multipliers of the primal problem".into(),
            ))
        }
    }
    Ok(DualForm::Compiled { constraints: p.num_constraints() - before, offset: -1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermlin::{kron, C64};
    use crate::povm::{self, depolarize, post_process, random_povm, rng_for};
    use proptest::prelude::*;

    #[test]
    fn computational_basis_is_incoherent() {
        let m = povm::computational_basis(3);
        assert!(is_member(&FreeSetSpec::Incoherent, &m, 1e-9).unwrap().member);
    }

    #[test]
    fn fourier_is_not_incoherent() {
        let m = povm::fourier_povm(2).unwrap();
        let r = is_member(&FreeSetSpec::Incoherent, &m, 1e-9).unwrap();
        assert!(!r.member);
        match r.violation.unwrap() {
            Violation::OffDiagonal { modulus, .. } => assert!((modulus - 0.5).abs() < 1e-12),
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn bell_measurement_ppt() {
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        let bell = povm::bell_measurement((2, 2)).unwrap();
        assert!(!is_member(&f, &bell, 1e-9).unwrap().member);
        let dep = depolarize(&bell, 1.0 / 3.0).unwrap();
        assert!(is_member(&f, &dep, 1e-9).unwrap().member);
        // Just above 1/3 the Bell effects become entangled again.
        let dep = depolarize(&bell, 0.34).unwrap();
        assert!(!is_member(&f, &dep, 1e-9).unwrap().member);
    }

    #[test]
    fn trivial_membership() {
        let f = FreeSetSpec::Trivial;
        assert!(is_member(&f, &povm::uniform_trivial_povm(3, 4), 1e-9).unwrap().member);
        assert!(!is_member(&f, &povm::computational_basis(2), 1e-9).unwrap().member);
    }

    #[test]
    fn hull_membership() {
        let a = povm::computational_basis(2);
        let b = povm::fourier_povm(2).unwrap();
        let f = FreeSetSpec::hull(vec![a.clone(), b.clone()]).unwrap();
        let mid = povm::convex_combine(0.3, &a, &b).unwrap();
        assert!(is_member(&f, &mid, 1e-7).unwrap().member);
        let y = povm::validate_povm(vec![
            HermitianOperator::projector(&[C64::new(1.0 / 2f64.sqrt(), 0.0), C64::new(0.0, 1.0 / 2f64.sqrt())]),
            HermitianOperator::projector(&[C64::new(1.0 / 2f64.sqrt(), 0.0), C64::new(0.0, -1.0 / 2f64.sqrt())]),
        ])
        .unwrap();
        assert!(!is_member(&f, &y, 1e-7).unwrap().member);
    }

    #[test]
    fn exactness_flags() {
        assert!(FreeSetSpec::ppt(vec![2, 2]).unwrap().is_exact());
        assert!(FreeSetSpec::ppt(vec![2, 3]).unwrap().is_exact());
        assert!(!FreeSetSpec::ppt(vec![3, 3]).unwrap().is_exact());
        let three = FreeSetSpec::ppt(vec![2, 2, 2]).unwrap();
        assert!(!three.is_exact());
        assert_eq!(three.robustness_exactness(), Exactness::LowerBound);
        assert_eq!(three.discrimination_exactness().as_str(), "upper-bound-on-SEP-restricted-value");
        match &three {
            FreeSetSpec::PptSeparable { cuts, .. } => assert_eq!(cuts.len(), 3),
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(FreeSetSpec::ppt_with_cuts(vec![2, 2], vec![]).is_err());
        assert!(FreeSetSpec::ppt_with_cuts(vec![2, 2], vec![vec![0, 1]]).is_err());
        assert!(FreeSetSpec::hull(vec![]).is_err());
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        assert!(is_member(&f, &povm::computational_basis(3), 1e-9).is_err());
    }

    fn effect_vars(lmi: &mut Lmi, d: usize, n: usize) -> Vec<HermExpr> {
        (0..n).map(|_| lmi.herm_var(d).expr()).collect()
    }

    #[test]
    fn incoherent_structure() {
        let mut lmi = Lmi::new();
        let e = effect_vars(&mut lmi, 2, 2);
        let blocks =
            compile_membership_constraints(&FreeSetSpec::Incoherent, &mut lmi, &e, &ScalarExpr::constant(1.0)).unwrap();
        assert_eq!(blocks.effect_blocks.len(), 2);
        // Four off-diagonal equalities plus one completeness equality per diagonal entry.
        assert_eq!(blocks.equalities, 4 + 2);
    }

    #[test]
    fn ppt_structure() {
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        let mut lmi = Lmi::new();
        let e = effect_vars(&mut lmi, 4, 3);
        let blocks = compile_membership_constraints(&f, &mut lmi, &e, &ScalarExpr::constant(1.0)).unwrap();
        assert_eq!(blocks.effect_blocks.len(), 3);
        assert_eq!(blocks.pt_blocks.len(), 3);
        let p = lmi.finish();
        assert!(p.block_dims.iter().all(|&d| d == 4));
    }

    #[test]
    fn hull_with_single_generator_pins_effects() {
        let g = random_povm(2, 3, &mut rng_for(3, 0)).unwrap();
        let f = FreeSetSpec::hull(vec![g.clone()]).unwrap();
        let mut lmi = Lmi::new();
        let vars: Vec<_> = (0..3).map(|_| lmi.herm_var(2)).collect();
        let e: Vec<_> = vars.iter().map(|v| v.expr()).collect();
        compile_membership_constraints(&f, &mut lmi, &e, &ScalarExpr::constant(1.0)).unwrap();
        // Any objective: the only feasible point is the generator itself.
        for v in &vars {
            lmi.maximize(v.coords()[1], 1.0);
        }
        let p = lmi.finish();
        let sol = sdpcore::solve(&p, &SolverOptions::default()).unwrap().require_optimal().unwrap();
        for (v, gi) in vars.iter().zip(g.effects()) {
            assert!(v.value(&sol.y).sub(gi).frobenius_norm() < 1e-6);
        }
    }

    fn trace_identity_oracle(m: &Povm) -> f64 {
        m.effects().iter().map(|e| e.max_eigenvalue().unwrap()).sum::<f64>() - 1.0
    }

    #[test]
    fn trivial_dual_form_matches_top_eigenvalues() {
        let m = random_povm(3, 4, &mut rng_for(11, 0)).unwrap();
        let mut p = SdpProblem::new();
        let z: Vec<_> = (0..4).map(|_| p.add_block(3)).collect();
        for (&zi, mi) in z.iter().zip(m.effects()) {
            p.objective.block_terms.push((zi, mi.scale(-1.0)));
        }
        let DualForm::Compiled { offset, .. } = dual_constraint_form(&FreeSetSpec::Trivial, &mut p, &z).unwrap() else {
            panic!("trivial set has a dual form");
        };
        let sol = sdpcore::solve(&p, &SolverOptions::default()).unwrap().require_optimal().unwrap();
        let value = -sol.primal_value + offset;
        assert!((value - trace_identity_oracle(&m)).abs() < 1e-7);
    }

    #[test]
    fn ppt_dual_form_unsupported() {
        let mut p = SdpProblem::new();
        let z: Vec<_> = (0..2).map(|_| p.add_block(4)).collect();
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        assert!(matches!(dual_constraint_form(&f, &mut p, &z).unwrap(), DualForm::Unsupported(_)));
    }

    #[test]
    fn hull_dual_structure() {
        // All deterministic relabelings of the computational measurement on a qubit.
        let gens: Vec<Povm> = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|map| {
                post_process(&povm::computational_basis(2), &povm::StochasticMatrix::deterministic(2, map).unwrap())
                    .unwrap()
            })
            .collect();
        let f = FreeSetSpec::hull(gens).unwrap();
        let mut p = SdpProblem::new();
        let z: Vec<_> = (0..2).map(|_| p.add_block(2)).collect();
        assert_eq!(dual_constraint_form(&f, &mut p, &z).unwrap(), DualForm::Compiled { constraints: 4, offset: -1.0 });
    }

    /// Concurrence of a two-qubit state (Wootters), independent of partial transposition.
    fn concurrence(rho: &HermitianOperator) -> f64 {
        let yy = kron(&HermitianOperator::pauli_y(), &HermitianOperator::pauli_y()).unwrap();
        let conj =
            HermitianOperator::new(crate::hermlin::ComplexMatrix::from_fn(4, |r, c| rho.entry(r, c).conj())).unwrap();
        let tilde = conj.congruence(yy.as_matrix());
        let sq = hermlin::sqrt_psd(rho, 1e-14).unwrap();
        let r = tilde.congruence(sq.as_matrix());
        let mut l: Vec<f64> = r.eig().unwrap().values.iter().map(|v| v.max(0.0).sqrt()).collect();
        l.sort_by(|a, b| b.partial_cmp(a).unwrap());
        (l[0] - l[1] - l[2] - l[3]).max(0.0)
    }

    #[test]
    fn ppt_matches_concurrence_on_two_qubits() {
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        let bell = HermitianOperator::projector(&povm::bell_vector(2, 0, 0));
        let id = HermitianOperator::identity(4).scale(0.25);
        let mut corpus = Vec::new();
        // Werner-type states rotated by random local unitaries; the threshold sits at p = 1/3.
        for (k, p) in [0.0, 0.1, 0.2, 0.28, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0].iter().enumerate() {
            let mut rng = rng_for(40 + k as u64, 0);
            let u = crate::hermlin::kron_matrix_capped(
                &povm::haar_unitary(2, &mut rng),
                &povm::haar_unitary(2, &mut rng),
                16,
            )
            .unwrap();
            corpus.push(bell.scale(*p).add(&id.scale(1.0 - p)).congruence(&u));
        }
        // Random full-rank states mixed with a random pure state.
        for k in 0..10 {
            let mut rng = rng_for(60 + k, 0);
            let mixed = random_povm(4, 2, &mut rng).unwrap().effect(0).clone();
            let mixed = mixed.scale(1.0 / mixed.trace());
            let pure = HermitianOperator::projector(&povm::haar_vector(4, &mut rng));
            let w = 0.1 * k as f64;
            corpus.push(mixed.scale(1.0 - w).add(&pure.scale(w)));
        }
        assert_eq!(corpus.len(), 20);
        let mut entangled = 0;
        for (k, rho) in corpus.iter().enumerate() {
            let c = concurrence(rho);
            let single = Povm::from_effects_unchecked(vec![rho.clone()]);
            let ppt = is_member(&f, &single, 1e-9).unwrap().member;
            assert_eq!(ppt, c < 1e-9, "operator {k}: concurrence {c}");
            entangled += usize::from(c >= 1e-9);
        }
        assert!((5..=15).contains(&entangled), "corpus should straddle the boundary, got {entangled}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn incoherent_closed_under_free_operations(seed in 0u64..1_000, d in 2usize..5, n in 2usize..5) {
            let mut rng = rng_for(seed, 1);
            let m = povm::random_incoherent_povm(d, n, &mut rng);
            let q = povm::random_stochastic(3, n, &mut rng);
            let f = FreeSetSpec::Incoherent;
            prop_assert!(is_member(&f, &post_process(&m, &q).unwrap(), 1e-12).unwrap().member);
            let u = povm::random_diagonal_unitary(d, &mut rng);
            prop_assert!(is_member(&f, &m.conjugate(&u), 1e-12).unwrap().member);
        }

        #[test]
        fn ppt_closed_under_depolarizing(seed in 0u64..1_000, t in 0.0f64..=1.0) {
            let mut rng = rng_for(seed, 2);
            let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
            let m = depolarize(&random_povm(4, 3, &mut rng).unwrap(), 1.0 / 3.0).unwrap();
            prop_assert!(is_member(&f, &m, 1e-10).unwrap().member);
            prop_assert!(is_member(&f, &depolarize(&m, t).unwrap(), 1e-10).unwrap().member);
        }

        #[test]
        fn trivial_members_are_in_every_other_set(seed in 0u64..1_000, n in 1usize..5) {
            let mut rng = rng_for(seed, 3);
            let m = povm::random_trivial_povm(4, n, &mut rng);
            prop_assert!(is_member(&FreeSetSpec::Trivial, &m, 1e-12).unwrap().member);
            prop_assert!(is_member(&FreeSetSpec::Incoherent, &m, 1e-12).unwrap().member);
            prop_assert!(is_member(&FreeSetSpec::ppt(vec![2, 2]).unwrap(), &m, 1e-12).unwrap().member);
        }
    }
}
