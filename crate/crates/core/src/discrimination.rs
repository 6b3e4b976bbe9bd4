//! Minimal-error state discrimination.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::freesets::{compile_membership_constraints, Exactness, FreeSetSpec};
use crate::hermlin::{self, HermitianOperator};
use crate::povm::{validate_povm_with, Ensemble, Povm, PovmTolerance};
use crate::sdpcore::{
    self, herm_basis, LinearFunctional, Lmi, ScalarExpr, SdpProblem, SolverDiagnostics, SolverOptions,
};

/// Optimum of a discrimination problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationResult {
    pub value: f64,
    pub optimizer: Povm,
    /// `None` means all measurements.
    pub restricted_to: Option<FreeSetSpec>,
    pub exactness: Exactness,
    pub diagnostics: Option<SolverDiagnostics>,
}

/// `Σ_i q_i tr(M_i ρ_i)`.
pub fn psucc(e: &Ensemble, m: &Povm) -> Result<f64> {
    if e.len() != m.num_outcomes() {
        return Err(Error::Dimension { expected: m.num_outcomes(), found: e.len() });
    }
    hermlin::dim_check(m.dim(), e.dim())?;
    Ok(e.items().iter().zip(m.effects()).map(|(it, mi)| it.prob * hermlin::frob_inner_unchecked(&it.state, mi)).sum())
}

/// Effects returned by the solver sit within its tolerance of the POVM set; this
/// makes them complete exactly and checks positivity loosely.
pub(crate) fn polish_effects(effects: Vec<HermitianOperator>) -> Result<Povm> {
    let d = effects[0].dim();
    let mut total = HermitianOperator::zeros(d);
    for e in &effects {
        total.add_scaled(1.0, e);
    }
    let s = hermlin::inv_sqrt_psd(&total, 1e-12)?;
    let effects: Vec<HermitianOperator> = effects.iter().map(|e| e.congruence(s.as_matrix())).collect();
    validate_povm_with(effects, PovmTolerance { psd: 1e-6, completeness: 1e-8 })
}

/// Best success probability over all POVMs with `|E|` outcomes.
pub fn optimal_psucc(e: &Ensemble) -> Result<DiscriminationResult> {
    optimal_psucc_with(e, &SolverOptions::default())
}

pub fn optimal_psucc_with(e: &Ensemble, opts: &SolverOptions) -> Result<DiscriminationResult> {
    let d = e.dim();
    let mut p = SdpProblem::new();
    let blocks: Vec<_> = e.items().iter().map(|_| p.add_block(d)).collect();
    for (b, it) in blocks.iter().zip(e.items()) {
        if it.prob != 0.0 {
            p.objective.block_terms.push((*b, it.state.scale(-it.prob)));
        }
    }
    let id = HermitianOperator::identity(d);
    for basis in herm_basis(d) {
        let mut lhs = LinearFunctional::new();
        for b in &blocks {
            lhs = lhs.block(*b, basis.clone());
        }
        p.add_constraint(lhs, hermlin::frob_inner_unchecked(&basis, &id));
    }
    let sol = sdpcore::solve(&p, opts)?.require_optimal()?;
    let optimizer = polish_effects(sol.blocks.clone())?;
    Ok(DiscriminationResult {
        value: psucc(e, &optimizer)?,
        optimizer,
        restricted_to: None,
        exactness: Exactness::Exact,
        diagnostics: Some(sol.diagnostics),
    })
}

/// Best success probability over the free set `F`.
pub fn max_psucc_over_free(e: &Ensemble, f: &FreeSetSpec) -> Result<DiscriminationResult> {
    max_psucc_over_free_with(e, f, &SolverOptions::default())
}

pub fn max_psucc_over_free_with(e: &Ensemble, f: &FreeSetSpec, opts: &SolverOptions) -> Result<DiscriminationResult> {
    f.validate()?;
    f.check_shape(e.dim(), e.len())?;
    if let FreeSetSpec::ConvexHull { generators } = f {
        // A linear objective over a polytope peaks at a vertex.
        let mut best: Option<(f64, &Povm)> = None;
        for g in generators {
            let v = psucc(e, g)?;
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, g));
            }
        }
        let (value, g) = best.expect("validated non-empty");
        return Ok(DiscriminationResult {
            value,
            optimizer: g.clone(),
            restricted_to: Some(f.clone()),
            exactness: Exactness::Exact,
            diagnostics: None,
        });
    }
    let d = e.dim();
    let mut lmi = Lmi::new();
    let vars: Vec<_> = e.items().iter().map(|_| lmi.herm_var(d)).collect();
    let exprs: Vec<_> = vars.iter().map(|v| v.expr()).collect();
    for (x, it) in exprs.iter().zip(e.items()) {
        if it.prob != 0.0 {
            lmi.maximize_expr(&x.inner(&it.state.scale(it.prob)));
        }
    }
    compile_membership_constraints(f, &mut lmi, &exprs, &ScalarExpr::constant(1.0))?;
    let sol = sdpcore::solve(&lmi.finish(), opts)?.require_optimal()?;
    let optimizer = polish_effects(vars.iter().map(|v| v.value(&sol.y)).collect())?;
    Ok(DiscriminationResult {
        value: psucc(e, &optimizer)?,
        optimizer,
        restricted_to: Some(f.clone()),
        exactness: f.discrimination_exactness(),
        diagnostics: Some(sol.diagnostics),
    })
}

/// `M_i = q_i ρ̄^{-1/2} ρ_i ρ̄^{-1/2}` with the kernel of `ρ̄` added to the last outcome.
pub fn pretty_good_measurement(e: &Ensemble) -> Result<Povm> {
    let avg = e.average_state();
    let s = hermlin::inv_sqrt_psd(&avg, 1e-12)?;
    let mut effects: Vec<HermitianOperator> =
        e.items().iter().map(|it| it.state.scale(it.prob).congruence(s.as_matrix())).collect();
    let support = avg.congruence(s.as_matrix());
    let kernel = HermitianOperator::identity(avg.dim()).sub(&support);
    effects.last_mut().expect("non-empty ensemble").add_scaled(1.0, &kernel);
    validate_povm_with(effects, PovmTolerance { psd: 1e-9, completeness: 1e-8 })
        .map_err(|err| Error::NumericalFailure(format!("pretty-good measurement: {err}")))
}

/// Uniform probabilities and every state with flat diagonal `1/d`.
pub fn classical_indistinguishability_check(e: &Ensemble, tol: f64) -> bool {
    let n = e.len() as f64;
    let d = e.dim() as f64;
    e.items()
        .iter()
        .all(|it| (it.prob - 1.0 / n).abs() <= tol && it.state.diagonal().iter().all(|x| (x - 1.0 / d).abs() <= tol))
}
