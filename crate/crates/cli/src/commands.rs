//! Single-input commands: validate, robustness, discriminate.

use log::{info, warn};
use povm_forge_core::discrimination::{
    classical_indistinguishability_check, max_psucc_over_free, optimal_psucc, pretty_good_measurement, psucc,
};
use povm_forge_core::freesets::{Exactness, FreeSetSpec};
use povm_forge_core::hermlin::HermitianOperator;
use povm_forge_core::povm::{Ensemble, Povm, PovmTolerance};
use povm_forge_core::robustness::{
    robustness_dual_with, robustness_primal_with, verify_certificate, RobustnessOptions, VerifyTolerance,
};
use povm_forge_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::formats::{check_matrix, parse_json, CertificateJson, DiscriminationJson, EnsembleJson, PovmJson};

pub const DEFAULT_VALIDATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `"povm"` or `"ensemble"`.
    pub kind: String,
    pub dim: usize,
    pub count: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Parses a POVM or ensemble document and lists every violated invariant.
pub fn validate_text(text: &str, source: &str, tol: f64) -> CliResult<ValidationReport> {
    let value: serde_json::Value = parse_json(text, source)?;
    let obj = value.as_object().ok_or_else(|| CliError::input(format!("{source}: expected a JSON object")))?;
    if obj.contains_key("effects") {
        Ok(validate_povm_json(&parse_json(text, source)?, tol))
    } else if obj.contains_key("items") {
        Ok(validate_ensemble_json(&parse_json(text, source)?, tol))
    } else {
        Err(CliError::input(format!("{source}: neither a POVM (\"effects\") nor an ensemble (\"items\")")))
    }
}

pub fn validate_povm_json(p: &PovmJson, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut parsed = Vec::new();
    if p.dim == 0 {
        violations.push("dim: must be at least 1".to_string());
    }
    if p.effects.is_empty() {
        violations.push("effects: a POVM needs at least one effect".to_string());
    }
    for (i, e) in p.effects.iter().enumerate() {
        match check_matrix(e, p.dim) {
            Ok(h) => match h.min_eigenvalue() {
                Ok(min) if min < -tol => violations.push(format!("effects[{i}]: negative eigenvalue {min:e}")),
                Ok(_) => parsed.push(h),
                Err(err) => violations.push(format!("effects[{i}]: {err}")),
            },
            Err(err) => violations.push(format!("effects[{i}]: {err}")),
        }
    }
    if p.dim > 0 && violations.is_empty() {
        let d = p.dim;
        let mut sum = HermitianOperator::zeros(d);
        for h in &parsed {
            sum.add_scaled(1.0, h);
        }
        let dev = sum.sub(&HermitianOperator::identity(d)).frobenius_norm();
        if dev > tol {
            violations.push(format!("effects: sum deviates from the identity by {dev:e}"));
        }
    }
    ValidationReport { kind: "povm".into(), dim: p.dim, count: p.effects.len(), violations }
}

pub fn validate_ensemble_json(e: &EnsembleJson, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let dim = match e.dim() {
        Ok(d) => d,
        Err(err) => {
            return ValidationReport {
                kind: "ensemble".into(),
                dim: 0,
                count: e.items.len(),
                violations: vec![err.to_string()],
            }
        }
    };
    let mut total = 0.0;
    for (i, it) in e.items.iter().enumerate() {
        if it.prob < 0.0 || !it.prob.is_finite() {
            violations.push(format!("items[{i}].prob: {} is not a probability", it.prob));
        } else {
            total += it.prob;
        }
        match check_matrix(&it.state, dim) {
            Ok(h) => {
                let tr = h.trace();
                if (tr - 1.0).abs() > tol {
                    violations.push(format!("items[{i}].state: trace {tr}"));
                }
                match h.min_eigenvalue() {
                    Ok(min) if min < -tol => violations.push(format!("items[{i}].state: negative eigenvalue {min:e}")),
                    Ok(_) => {}
                    Err(err) => violations.push(format!("items[{i}].state: {err}")),
                }
            }
            Err(err) => violations.push(format!("items[{i}].state: {err}")),
        }
    }
    if (total - 1.0).abs() > tol {
        violations.push(format!("items: probabilities sum to {total}"));
    }
    ValidationReport { kind: "ensemble".into(), dim, count: e.items.len(), violations }
}

pub fn load_povm(text: &str, source: &str) -> CliResult<Povm> {
    parse_json::<PovmJson>(text, source)?.to_povm(PovmTolerance::default()).map_err(|e| with_source(source, e))
}

pub fn load_ensemble(text: &str, source: &str) -> CliResult<Ensemble> {
    parse_json::<EnsembleJson>(text, source)?.to_ensemble().map_err(|e| with_source(source, e))
}

fn with_source(source: &str, e: CliError) -> CliError {
    match e {
        CliError::Input(m) => CliError::Input(format!("{source}: {m}")),
        other => other,
    }
}

/// Primal certificate, its verification report and, where the free set has a
/// compiled dual, the separately solved dual optimum.
pub fn run_robustness(m: &Povm, f: &FreeSetSpec, tol: f64, seed: u64) -> CliResult<CertificateJson> {
    let opts = RobustnessOptions { tol, ..Default::default() };
    let cert = robustness_primal_with(m, f, &opts)?;
    info!("robustness {} over {}: {} ({} iterations)", cert.value, f.name(), cert.exactness, cert.iterations);
    let report = verify_certificate(m, f, &cert, &VerifyTolerance { seed, ..Default::default() })?;
    let dual_value = match robustness_dual_with(m, f, &opts) {
        Ok(d) => Some(d.value),
        Err(CoreError::Unsupported(why)) => {
            info!("no dual form: {why}");
            None
        }
        Err(e) => {
            warn!("dual solve failed: {e}");
            None
        }
    };
    Ok(CertificateJson::new(f, &cert, &report, dual_value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrettyGoodJson {
    pub value: f64,
    pub povm: PovmJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationReport {
    pub dim: usize,
    pub size: usize,
    pub classically_indistinguishable: bool,
    pub optimal: DiscriminationJson,
    pub pretty_good: PrettyGoodJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restricted: Option<DiscriminationJson>,
    /// `optimal / restricted`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantage_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advantage_ratio_exactness: Option<String>,
}

/// Exactness of `optimal / restricted` given the exactness of the restricted value.
pub fn ratio_exactness(restricted: Exactness) -> Exactness {
    match restricted {
        Exactness::UpperBoundOnSepRestricted => Exactness::LowerBound,
        other => other,
    }
}

pub fn run_discriminate(e: &Ensemble, f: Option<&FreeSetSpec>, tol: f64) -> CliResult<DiscriminationReport> {
    let opt = optimal_psucc(e)?;
    let pgm = pretty_good_measurement(e)?;
    let restricted = f.map(|f| max_psucc_over_free(e, f)).transpose()?;
    Ok(DiscriminationReport {
        dim: e.dim(),
        size: e.len(),
        classically_indistinguishable: classical_indistinguishability_check(e, tol),
        pretty_good: PrettyGoodJson { value: psucc(e, &pgm)?, povm: PovmJson::from_povm(&pgm) },
        advantage_ratio: restricted.as_ref().map(|r| opt.value / r.value),
        advantage_ratio_exactness: restricted.as_ref().map(|r| ratio_exactness(r.exactness).as_str().to_string()),
        restricted: restricted.as_ref().map(Into::into),
        optimal: (&opt).into(),
    })
}
