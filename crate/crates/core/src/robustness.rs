//! Robustness of measurements against a free set, and the ensembles that certify it.
//!
//! `R_F(M)` is the least `s ≥ 0` such that `(M + sN)/(1+s) ∈ F` for some POVM `N`.
//! The primal problem is solved over `F'_i = M_i + G_i` and `t = 1 + s` with
//! `G_i ⪰ 0` and `F'/t ∈ F`; the multipliers `Z_i` of `G_i ⪰ 0` are feasible for
//! the dual `max Σ tr(Z_i M_i) − 1` and define the discrimination ensemble on
//! which `M` beats every free measurement by the factor `1 + R_F(M)`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::discrimination::{max_psucc_over_free_with, psucc};
use crate::error::{Error, Result};
use crate::freesets::{
    compile_membership_constraints, dual_constraint_form, is_member, DualForm, Exactness, FreeSetSpec,
};
use crate::hermlin::{self, HermitianOperator};
use crate::povm::{self, uniform_trivial_povm, validate_povm_with, Ensemble, EnsembleItem, Povm, PovmTolerance};
use crate::sdpcore::{self, BlockId, Lmi, ScalarExpr, SdpProblem, SolverDiagnostics, SolverOptions, Var};

/// Settings shared by the robustness routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessOptions {
    /// Robustness at or below this is treated as zero, and witness components with
    /// trace at or below it are dropped.
    pub tol: f64,
    pub solver: SolverOptions,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self { tol: 1e-7, solver: SolverOptions::default() }
    }
}

/// Ensemble built from a witness, with the outcomes whose component vanished.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedEnsemble {
    pub ensemble: Ensemble,
    /// Outcome index of each ensemble item.
    pub outcomes: Vec<usize>,
    /// Outcomes whose witness component had (near) zero trace.
    pub dropped: Vec<usize>,
    /// `Σ_i tr(W_i)` before normalisation.
    pub total_trace: f64,
}

impl ExtractedEnsemble {
    /// `n`-item ensemble with zero-probability maximally mixed states at the dropped
    /// outcomes, so it can be paired with an `n`-outcome POVM.
    pub fn padded(&self) -> Ensemble {
        let n = self.outcomes.len() + self.dropped.len();
        let d = self.ensemble.dim();
        let mixed = HermitianOperator::identity(d).scale(1.0 / d as f64);
        let mut items: Vec<EnsembleItem> = (0..n).map(|_| EnsembleItem { prob: 0.0, state: mixed.clone() }).collect();
        for (it, &k) in self.ensemble.items().iter().zip(&self.outcomes) {
            items[k] = it.clone();
        }
        Ensemble::from_items_unchecked(items)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCertificate {
    pub value: f64,
    pub noise_povm: Povm,
    pub free_povm: Povm,
    pub dual_witness: Vec<HermitianOperator>,
    pub extracted_ensemble: ExtractedEnsemble,
    /// Gap between the primal and dual objectives of the solved program.
    pub duality_gap: f64,
    pub exactness: Exactness,
    pub diagnostics: SolverDiagnostics,
    pub iterations: usize,
}

/// Solves for `R_F(M)` and assembles the full certificate.
pub fn robustness_primal(m: &Povm, f: &FreeSetSpec) -> Result<RobustnessCertificate> {
    robustness_primal_with(m, f, &RobustnessOptions::default())
}

/// Standard-form program solved by [`robustness_primal`]; its optimum is `−(1 + R_F(M))`.
pub fn robustness_sdp(m: &Povm, f: &FreeSetSpec) -> Result<SdpProblem> {
    Ok(primal_program(m, f)?.0)
}

fn primal_program(m: &Povm, f: &FreeSetSpec) -> Result<(SdpProblem, Var, Vec<BlockId>)> {
    f.validate()?;
    f.check_shape(m.dim(), m.num_outcomes())?;
    let d = m.dim();
    let mut lmi = Lmi::new();
    let t = lmi.var();
    lmi.maximize(t, -1.0);
    let vars: Vec<_> = m.effects().iter().map(|_| lmi.herm_var(d)).collect();
    let exprs: Vec<_> = vars.iter().map(|v| v.expr()).collect();
    let g_blocks: Vec<_> =
        exprs.iter().zip(m.effects()).map(|(x, mi)| lmi.psd(&x.clone().plus_const(mi, -1.0))).collect();
    compile_membership_constraints(f, &mut lmi, &exprs, &ScalarExpr::var(t))?;
    Ok((lmi.finish(), t, g_blocks))
}

pub fn robustness_primal_with(m: &Povm, f: &FreeSetSpec, opts: &RobustnessOptions) -> Result<RobustnessCertificate> {
    let d = m.dim();
    let (problem, t, g_blocks) = primal_program(m, f)?;
    let sol = sdpcore::solve(&problem, &opts.solver)?;
    let sol = match sol.status {
        sdpcore::SolveStatus::Infeasible | sdpcore::SolveStatus::Unbounded => {
            return Err(Error::NumericalFailure(format!(
                "robustness program reported {}; the free set should always admit a decomposition",
                sol.status
            )))
        }
        _ => sol.require_optimal()?,
    };

    let s = (sol.y[t.0] - 1.0).max(0.0);
    let witness: Vec<HermitianOperator> = g_blocks.iter().map(|b| sol.block(*b).clone()).collect();
    let (noise, free) = if s <= opts.tol {
        (uniform_trivial_povm(d, m.num_outcomes()), m.clone())
    } else {
        // The solver's slack for G_i is strictly PSD; rescaling it to a complete set keeps it so.
        let g: Vec<HermitianOperator> = g_blocks.iter().map(|b| sol.dual_block(*b).clone()).collect();
        let noise = crate::discrimination::polish_effects(g)?;
        let free: Vec<HermitianOperator> = m
            .effects()
            .iter()
            .zip(noise.effects())
            .map(|(mi, ni)| mi.add(&ni.scale(s)).scale(1.0 / (1.0 + s)))
            .collect();
        (noise, validate_povm_with(free, PovmTolerance { psd: 1e-6, completeness: 1e-8 })?)
    };
    let extracted = extract_optimal_ensemble_with(&witness, opts.tol)?;
    Ok(RobustnessCertificate {
        value: s,
        noise_povm: noise,
        free_povm: free,
        dual_witness: witness,
        extracted_ensemble: extracted,
        duality_gap: (sol.primal_value - sol.dual_value).abs(),
        exactness: f.robustness_exactness(),
        diagnostics: sol.diagnostics,
        iterations: sol.iterations,
    })
}

/// Optimum of the dual program.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRobustness {
    pub value: f64,
    pub witness: Vec<HermitianOperator>,
    pub duality_gap: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Maximises `Σ tr(Z_i M_i) − 1` over witnesses obeying the finite dual constraints of `F`.
pub fn robustness_dual(m: &Povm, f: &FreeSetSpec) -> Result<DualRobustness> {
    robustness_dual_with(m, f, &RobustnessOptions::default())
}

pub fn robustness_dual_with(m: &Povm, f: &FreeSetSpec, opts: &RobustnessOptions) -> Result<DualRobustness> {
    f.check_shape(m.dim(), m.num_outcomes())?;
    let d = m.dim();
    let mut p = SdpProblem::new();
    let z: Vec<_> = m.effects().iter().map(|_| p.add_block(d)).collect();
    for (&zi, mi) in z.iter().zip(m.effects()) {
        p.objective.block_terms.push((zi, mi.scale(-1.0)));
    }
    let offset = match dual_constraint_form(f, &mut p, &z)? {
        DualForm::Compiled { offset, .. } => offset,
        DualForm::Unsupported(why) => return Err(Error::Unsupported(why)),
    };
    let sol = sdpcore::solve(&p, &opts.solver)?.require_optimal()?;
    Ok(DualRobustness {
        value: -sol.primal_value + offset,
        witness: sol.blocks.clone(),
        duality_gap: (sol.primal_value - sol.dual_value).abs(),
        diagnostics: sol.diagnostics,
    })
}

/// `E* = {tr(Z_i)/Σ tr(Z_j), Z_i/tr(Z_i)}`.
pub fn extract_optimal_ensemble(z: &[HermitianOperator]) -> Result<ExtractedEnsemble> {
    extract_optimal_ensemble_with(z, RobustnessOptions::default().tol)
}

pub fn extract_optimal_ensemble_with(z: &[HermitianOperator], tol: f64) -> Result<ExtractedEnsemble> {
    let first = z.first().ok_or_else(|| Error::InvalidParameter("empty witness".into()))?;
    for zi in z {
        hermlin::dim_check(first.dim(), zi.dim())?;
    }
    let mut outcomes = Vec::new();
    let mut dropped = Vec::new();
    let mut total = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let tr = zi.trace();
        if tr > tol {
            outcomes.push(i);
            total += tr;
        } else {
            dropped.push(i);
        }
    }
    if outcomes.is_empty() {
        return Err(Error::DegenerateWitness);
    }
    let items = outcomes
        .iter()
        .map(|&i| {
            let tr = z[i].trace();
            EnsembleItem { prob: tr / total, state: z[i].scale(1.0 / tr) }
        })
        .collect();
    Ok(ExtractedEnsemble { ensemble: Ensemble::from_items_unchecked(items), outcomes, dropped, total_trace: total })
}

/// Shifts a witness to PSD by `max(0, −λ_min)` and normalises it into an ensemble.
pub fn witness_to_ensemble(w: &[HermitianOperator]) -> Result<ExtractedEnsemble> {
    witness_to_ensemble_with(w, RobustnessOptions::default().tol)
}

pub fn witness_to_ensemble_with(w: &[HermitianOperator], tol: f64) -> Result<ExtractedEnsemble> {
    let first = w.first().ok_or_else(|| Error::InvalidParameter("empty witness".into()))?;
    let d = first.dim();
    let mut lambda = f64::INFINITY;
    for wi in w {
        hermlin::dim_check(d, wi.dim())?;
        lambda = lambda.min(wi.min_eigenvalue()?);
    }
    let shift = (-lambda).max(0.0);
    let id = HermitianOperator::identity(d);
    let shifted: Vec<HermitianOperator> = w
        .iter()
        .map(|wi| {
            let mut s = wi.clone();
            s.add_scaled(shift, &id);
            s
        })
        .collect();
    extract_optimal_ensemble_with(&shifted, tol)
}

/// Independent re-check of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub free_povm_member: bool,
    /// `max_i ‖M_i + s N_i − (1+s) F_i‖_F`.
    pub decomposition_error: f64,
    /// `|Σ tr(Z_i M_i) − 1 − s|`.
    pub witness_value_error: f64,
    pub psucc_m: f64,
    pub psucc_free: f64,
    /// `psucc_m / psucc_free`.
    pub ratio: f64,
    pub ratio_error: f64,
    /// Largest `psucc(E,M) − (1+s) max_F psucc(E,N)` over the random ensembles.
    pub sandwich_violation: f64,
    pub exactness: Exactness,
    pub passes: bool,
}

/// Tolerances for [`verify_certificate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyTolerance {
    pub membership: f64,
    pub ratio: f64,
    pub sandwich: f64,
    pub random_ensembles: usize,
    pub seed: u64,
}

impl Default for VerifyTolerance {
    fn default() -> Self {
        Self { membership: 1e-6, ratio: 1e-5, sandwich: 1e-8, random_ensembles: 10, seed: 0 }
    }
}

/// Recomputes membership, the decomposition, the ensemble ratio and the sandwich
/// inequality from the certificate data alone.
pub fn verify_certificate(
    m: &Povm,
    f: &FreeSetSpec,
    cert: &RobustnessCertificate,
    tol: &VerifyTolerance,
) -> Result<VerificationReport> {
    let s = cert.value;
    let free_povm_member = is_member(f, &cert.free_povm, tol.membership)?.member;
    let mut decomposition_error = 0.0f64;
    for ((mi, ni), fi) in m.effects().iter().zip(cert.noise_povm.effects()).zip(cert.free_povm.effects()) {
        let lhs = mi.add(&ni.scale(s));
        decomposition_error = decomposition_error.max(lhs.sub(&fi.scale(1.0 + s)).frobenius_norm());
    }
    let witness_value: f64 =
        cert.dual_witness.iter().zip(m.effects()).map(|(z, mi)| hermlin::frob_inner_unchecked(z, mi)).sum::<f64>()
            - 1.0;

    let opts = SolverOptions::default();
    let e = cert.extracted_ensemble.padded();
    let psucc_m = psucc(&e, m)?;
    let psucc_free = max_psucc_over_free_with(&e, f, &opts)?.value;
    let ratio = psucc_m / psucc_free;
    let ratio_error = (ratio - 1.0 - s).abs();

    let mut rng = povm::rng_for(tol.seed, 0x5a4d);
    let mut sandwich_violation = f64::NEG_INFINITY;
    for _ in 0..tol.random_ensembles {
        let e = random_ensemble(m.dim(), m.num_outcomes(), &mut rng);
        let lhs = psucc(&e, m)?;
        let rhs = (1.0 + s) * max_psucc_over_free_with(&e, f, &opts)?.value;
        sandwich_violation = sandwich_violation.max(lhs - rhs);
    }

    let passes = free_povm_member
        && decomposition_error <= 10.0 * tol.membership
        && ratio_error <= tol.ratio
        && sandwich_violation <= tol.sandwich;
    Ok(VerificationReport {
        free_povm_member,
        decomposition_error,
        witness_value_error: (witness_value - s).abs(),
        psucc_m,
        psucc_free,
        ratio,
        ratio_error,
        sandwich_violation,
        exactness: cert.exactness,
        passes,
    })
}

/// Mixed states (rank 1 or 2) with Dirichlet weights, so the sandwich test is not
/// limited to pure ensembles.
fn random_ensemble<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Ensemble {
    let q = povm::random_stochastic(n, 1, rng);
    let items = (0..n)
        .map(|i| {
            let mut rho = HermitianOperator::projector(&povm::haar_vector(d, rng));
            if rng.gen::<bool>() {
                let w = rng.gen::<f64>();
                rho = rho.scale(w).add(&HermitianOperator::projector(&povm::haar_vector(d, rng)).scale(1.0 - w));
            }
            EnsembleItem { prob: q.get(i, 0), state: rho }
        })
        .collect();
    Ensemble::from_items_unchecked(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{computational_basis, fourier_povm, random_povm, rng_for, truncated_fourier_povm};

    fn top_eigen_oracle(m: &Povm) -> f64 {
        m.effects().iter().map(|e| e.max_eigenvalue().unwrap()).sum::<f64>() - 1.0
    }

    #[test]
    fn member_has_zero_robustness() {
        let c = robustness_primal(&computational_basis(3), &FreeSetSpec::Incoherent).unwrap();
        assert!(c.value < 1e-7);
        assert_eq!(c.noise_povm, uniform_trivial_povm(3, 3));
        let dual = robustness_dual(&computational_basis(3), &FreeSetSpec::Incoherent).unwrap();
        assert!(dual.value < 1e-6);
    }

    #[test]
    fn fourier_against_incoherent() {
        for d in 2..=5 {
            let m = fourier_povm(d).unwrap();
            let c = robustness_primal(&m, &FreeSetSpec::Incoherent).unwrap();
            assert!((c.value - (d as f64 - 1.0)).abs() < 1e-6, "d={d}: {}", c.value);
            let r = verify_certificate(&m, &FreeSetSpec::Incoherent, &c, &VerifyTolerance::default()).unwrap();
            assert!(r.passes, "{r:?}");
            assert!((r.ratio - d as f64).abs() < 1e-5);
        }
    }

    #[test]
    fn exported_program_optimum() {
        let p = robustness_sdp(&fourier_povm(3).unwrap(), &FreeSetSpec::Incoherent).unwrap();
        let sol = sdpcore::solve(&p, &SolverOptions::default()).unwrap();
        assert!((sol.primal_value + 3.0).abs() < 1e-6, "{}", sol.primal_value);
        assert!(p.to_text().starts_with("povm-forge-sdp 1\nblocks 6 3 3 3 3 3 3\n"));
    }

    #[test]
    fn fourier_dual_witness() {
        let m = fourier_povm(3).unwrap();
        let dual = robustness_dual(&m, &FreeSetSpec::Incoherent).unwrap();
        assert!((dual.value - 2.0).abs() < 1e-6);
        for (z, mi) in dual.witness.iter().zip(m.effects()) {
            assert!(z.sub(mi).frobenius_norm() < 1e-4, "{z:?}");
        }
        let m = truncated_fourier_povm(4, 2).unwrap();
        assert!((robustness_dual(&m, &FreeSetSpec::Incoherent).unwrap().value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn qubit_fourier_ensemble() {
        let c = robustness_primal(&fourier_povm(2).unwrap(), &FreeSetSpec::Incoherent).unwrap();
        let e = &c.extracted_ensemble.ensemble;
        assert!(c.extracted_ensemble.dropped.is_empty());
        for (it, k) in e.items().iter().zip(0..) {
            assert!((it.prob - 0.5).abs() < 1e-6);
            let target = HermitianOperator::projector(&povm::fourier_vector(2, k));
            assert!(it.state.sub(&target).frobenius_norm() < 1e-5);
        }
    }

    #[test]
    fn trivial_matches_oracle() {
        let mut rng = rng_for(1, 0);
        for _ in 0..5 {
            let m = random_povm(2, 2, &mut rng).unwrap();
            let c = robustness_primal(&m, &FreeSetSpec::Trivial).unwrap();
            assert!((c.value - top_eigen_oracle(&m)).abs() < 1e-6);
            let dual = robustness_dual(&m, &FreeSetSpec::Trivial).unwrap();
            assert!((dual.value - c.value).abs() < 1e-6);
        }
    }

    #[test]
    fn ppt_dual_is_unsupported() {
        let m = povm::bell_measurement((2, 2)).unwrap();
        let f = FreeSetSpec::ppt(vec![2, 2]).unwrap();
        assert!(matches!(robustness_dual(&m, &f), Err(Error::Unsupported(_))));
    }

    #[test]
    fn witness_shift() {
        let z = HermitianOperator::pauli_z();
        let e = witness_to_ensemble(&[z.clone(), z.scale(-1.0)]).unwrap();
        assert_eq!(e.ensemble.probs(), vec![0.5, 0.5]);
        assert!(e.ensemble.items()[0].state.sub(&HermitianOperator::from_diag(&[1.0, 0.0])).frobenius_norm() < 1e-12);
        assert!(e.ensemble.items()[1].state.sub(&HermitianOperator::from_diag(&[0.0, 1.0])).frobenius_norm() < 1e-12);
        // Already PSD: no shift.
        let psd =
            witness_to_ensemble(&[HermitianOperator::from_diag(&[2.0, 0.0]), HermitianOperator::identity(2)]).unwrap();
        assert_eq!(psd.total_trace, 4.0);
    }

    #[test]
    fn extraction_drops_zero_components() {
        let id = HermitianOperator::identity(2).scale(0.5);
        let e = extract_optimal_ensemble(&[id.clone(), HermitianOperator::zeros(2), id.clone()]).unwrap();
        assert_eq!(e.dropped, vec![1]);
        assert_eq!(e.outcomes, vec![0, 2]);
        assert_eq!(e.padded().len(), 3);
        assert_eq!(e.padded().items()[1].prob, 0.0);
        assert!(matches!(extract_optimal_ensemble(&[HermitianOperator::zeros(2)]), Err(Error::DegenerateWitness)));
        let u = extract_optimal_ensemble(&[id.clone(), id]).unwrap();
        assert_eq!(u.ensemble.probs(), vec![0.5, 0.5]);
    }

    #[test]
    fn separating_witness_gives_advantage() {
        let m = fourier_povm(2).unwrap();
        let dual = robustness_dual(&m, &FreeSetSpec::Incoherent).unwrap();
        let w: Vec<_> = dual.witness.iter().map(|z| z.sub(&HermitianOperator::identity(2).scale(0.3))).collect();
        let e = witness_to_ensemble(&w).unwrap().padded();
        let free = max_psucc_over_free_with(&e, &FreeSetSpec::Incoherent, &SolverOptions::default()).unwrap();
        assert!(psucc(&e, &m).unwrap() > free.value + 1e-3);
    }
}
