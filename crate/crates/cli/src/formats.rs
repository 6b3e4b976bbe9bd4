//! JSON schemas.
//!
//! A matrix is a row-major list of `[re, im]` pairs. A POVM is
//! `{"dim": d, "effects": [matrix, ...]}`, an ensemble is
//! `{"items": [{"prob": q, "state": matrix}, ...]}` and a free set is
//! `{"variant": "incoherent" | "trivial" | "ppt", "dims": [...], "cuts": [[...], ...]}`
//! or `{"variant": "hull", "generators": [povm, ...]}`.

use std::path::Path;

use povm_forge_core::discrimination::DiscriminationResult;
use povm_forge_core::freesets::{default_cuts, FreeSetSpec};
use povm_forge_core::hermlin::{ComplexMatrix, HermitianOperator, C64};
use povm_forge_core::povm::{validate_povm_with, Ensemble, EnsembleItem, Povm, PovmTolerance};
use povm_forge_core::robustness::{ExtractedEnsemble, RobustnessCertificate, VerificationReport};
use povm_forge_core::sdpcore::SolverDiagnostics;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Largest `|a_rc − conj(a_cr)|` accepted for input matrices.
pub const HERMITIAN_TOL: f64 = 1e-9;

pub type MatrixJson = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub dim: usize,
    pub effects: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemJson {
    pub prob: f64,
    pub state: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleJson {
    pub items: Vec<ItemJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum FreeSetJson {
    Incoherent,
    Trivial,
    Ppt {
        dims: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cuts: Option<Vec<Vec<usize>>>,
    },
    Hull {
        generators: Vec<PovmJson>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub tau: f64,
    pub kappa: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedEnsembleJson {
    pub ensemble: EnsembleJson,
    pub outcomes: Vec<usize>,
    pub dropped: Vec<usize>,
    pub total_trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationJson {
    pub free_povm_member: bool,
    pub decomposition_error: f64,
    pub witness_value_error: f64,
    pub psucc_m: f64,
    pub psucc_free: f64,
    pub ratio: f64,
    pub ratio_error: f64,
    pub sandwich_violation: f64,
    pub exactness: String,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub free_set: FreeSetJson,
    pub value: f64,
    pub exactness: String,
    /// Optimum of the separately solved dual program, when the free set has a compiled dual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_value: Option<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
    pub diagnostics: DiagnosticsJson,
    pub noise_povm: PovmJson,
    pub free_povm: PovmJson,
    pub dual_witness: Vec<MatrixJson>,
    pub extracted_ensemble: ExtractedEnsembleJson,
    pub verification: VerificationJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationJson {
    pub value: f64,
    /// `"all"` or the free-set variant name.
    pub restricted_to: String,
    pub exactness: String,
    pub optimizer: PovmJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsJson>,
}

pub fn matrix_to_json(a: &HermitianOperator) -> MatrixJson {
    a.as_matrix().as_slice().iter().map(|z| [z.re, z.im]).collect()
}

/// Checks shape, finiteness and Hermiticity; the message has no field prefix.
pub fn check_matrix(m: &MatrixJson, dim: usize) -> Result<HermitianOperator, String> {
    if m.len() != dim * dim {
        return Err(format!("expected {} entries for dimension {dim}, found {}", dim * dim, m.len()));
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err("non-finite entry".into());
    }
    let raw = ComplexMatrix::from_row_major(m.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .map_err(|e| e.to_string())?;
    let mut dev = 0.0f64;
    for r in 0..dim {
        for c in r..dim {
            dev = dev.max((raw[(r, c)] - raw[(c, r)].conj()).norm());
        }
    }
    if dev > HERMITIAN_TOL {
        return Err(format!("not Hermitian (deviation {dev:e})"));
    }
    HermitianOperator::new(raw).map_err(|e| e.to_string())
}

pub fn matrix_from_json(m: &MatrixJson, dim: usize, field: &str) -> CliResult<HermitianOperator> {
    check_matrix(m, dim).map_err(|e| CliError::input(format!("{field}: {e}")))
}

impl PovmJson {
    pub fn from_povm(m: &Povm) -> Self {
        Self { dim: m.dim(), effects: m.effects().iter().map(matrix_to_json).collect() }
    }

    pub fn to_povm(&self, tol: PovmTolerance) -> CliResult<Povm> {
        let effects = self
            .effects
            .iter()
            .enumerate()
            .map(|(i, e)| matrix_from_json(e, self.dim, &format!("effects[{i}]")))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(validate_povm_with(effects, tol)?)
    }
}

impl EnsembleJson {
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self {
            items: e.items().iter().map(|it| ItemJson { prob: it.prob, state: matrix_to_json(&it.state) }).collect(),
        }
    }

    /// Dimension inferred from the first state.
    pub fn dim(&self) -> CliResult<usize> {
        let first = self.items.first().ok_or_else(|| CliError::input("items: empty ensemble"))?;
        let d = (first.state.len() as f64).sqrt().round() as usize;
        if d == 0 || d * d != first.state.len() {
            return Err(CliError::input(format!("items[0].state: {} entries is not a square", first.state.len())));
        }
        Ok(d)
    }

    pub fn to_ensemble(&self) -> CliResult<Ensemble> {
        let d = self.dim()?;
        let items = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| {
                Ok(EnsembleItem { prob: it.prob, state: matrix_from_json(&it.state, d, &format!("items[{i}].state"))? })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Ensemble::new(items)?)
    }
}

impl FreeSetJson {
    pub fn from_spec(f: &FreeSetSpec) -> Self {
        match f {
            FreeSetSpec::Incoherent => FreeSetJson::Incoherent,
            FreeSetSpec::Trivial => FreeSetJson::Trivial,
            FreeSetSpec::PptSeparable { dims, cuts } => {
                FreeSetJson::Ppt { dims: dims.clone(), cuts: Some(cuts.clone()) }
            }
            FreeSetSpec::ConvexHull { generators } => {
                FreeSetJson::Hull { generators: generators.iter().map(PovmJson::from_povm).collect() }
            }
        }
    }

    pub fn to_spec(&self) -> CliResult<FreeSetSpec> {
        let spec = match self {
            FreeSetJson::Incoherent => FreeSetSpec::Incoherent,
            FreeSetJson::Trivial => FreeSetSpec::Trivial,
            FreeSetJson::Ppt { dims, cuts } => {
                let cuts = cuts.clone().unwrap_or_else(|| default_cuts(dims.len()));
                FreeSetSpec::ppt_with_cuts(dims.clone(), cuts)?
            }
            FreeSetJson::Hull { generators } => FreeSetSpec::hull(
                generators
                    .iter()
                    .enumerate()
                    .map(|(g, p)| {
                        p.to_povm(PovmTolerance::default()).map_err(|e| prefix(&format!("generators[{g}]"), e))
                    })
                    .collect::<CliResult<Vec<_>>>()?,
            )?,
        };
        Ok(spec)
    }
}

fn prefix(field: &str, e: CliError) -> CliError {
    match e {
        CliError::Input(m) => CliError::Input(format!("{field}.{m}")),
        other => other,
    }
}

/// Parses a `--free-set` argument: `incoherent`, `trivial`, `ppt:2x3` (default cuts)
/// or a path to a free-set JSON file.
pub fn parse_free_set_arg(arg: &str) -> CliResult<FreeSetSpec> {
    match arg {
        "incoherent" => return Ok(FreeSetSpec::Incoherent),
        "trivial" => return Ok(FreeSetSpec::Trivial),
        _ => {}
    }
    if let Some(dims) = arg.strip_prefix("ppt:") {
        let dims = dims
            .split(['x', ','])
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::input(format!("--free-set {arg}: {e}")))?;
        return Ok(FreeSetSpec::ppt(dims)?);
    }
    let text = read_file(Path::new(arg))?;
    parse_json::<FreeSetJson>(&text, arg)?.to_spec()
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Deserialises `text`, reporting the JSON path and line/column of the first error.
pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> CliResult<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::input(format!("{source}: {inner}"))
        } else {
            CliError::input(format!("{source}: field {path}: {inner}"))
        }
    })?;
    de.end().map_err(|e| CliError::input(format!("{source}: {e}")))?;
    Ok(value)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

impl From<&SolverDiagnostics> for DiagnosticsJson {
    fn from(d: &SolverDiagnostics) -> Self {
        Self {
            primal_residual: d.primal_residual,
            dual_residual: d.dual_residual,
            relative_gap: d.relative_gap,
            tau: d.tau,
            kappa: d.kappa,
            mu: d.mu,
        }
    }
}

impl From<&ExtractedEnsemble> for ExtractedEnsembleJson {
    fn from(e: &ExtractedEnsemble) -> Self {
        Self {
            ensemble: EnsembleJson::from_ensemble(&e.ensemble),
            outcomes: e.outcomes.clone(),
            dropped: e.dropped.clone(),
            total_trace: e.total_trace,
        }
    }
}

impl From<&VerificationReport> for VerificationJson {
    fn from(r: &VerificationReport) -> Self {
        Self {
            free_povm_member: r.free_povm_member,
            decomposition_error: r.decomposition_error,
            witness_value_error: r.witness_value_error,
            psucc_m: r.psucc_m,
            psucc_free: r.psucc_free,
            ratio: r.ratio,
            ratio_error: r.ratio_error,
            sandwich_violation: r.sandwich_violation,
            exactness: r.exactness.as_str().to_string(),
            passes: r.passes,
        }
    }
}

impl CertificateJson {
    pub fn new(
        f: &FreeSetSpec,
        cert: &RobustnessCertificate,
        report: &VerificationReport,
        dual_value: Option<f64>,
    ) -> Self {
        Self {
            free_set: FreeSetJson::from_spec(f),
            value: cert.value,
            exactness: cert.exactness.as_str().to_string(),
            dual_value,
            duality_gap: cert.duality_gap,
            iterations: cert.iterations,
            diagnostics: (&cert.diagnostics).into(),
            noise_povm: PovmJson::from_povm(&cert.noise_povm),
            free_povm: PovmJson::from_povm(&cert.free_povm),
            dual_witness: cert.dual_witness.iter().map(matrix_to_json).collect(),
            extracted_ensemble: (&cert.extracted_ensemble).into(),
            verification: report.into(),
        }
    }
}

impl From<&DiscriminationResult> for DiscriminationJson {
    fn from(r: &DiscriminationResult) -> Self {
        Self {
            value: r.value,
            restricted_to: r.restricted_to.as_ref().map_or("all", |f| f.name()).to_string(),
            exactness: r.exactness.as_str().to_string(),
            optimizer: PovmJson::from_povm(&r.optimizer),
            diagnostics: r.diagnostics.as_ref().map(Into::into),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use povm_forge_core::povm::{bell_states, fourier_povm};

    #[test]
    fn povm_round_trip() {
        let m = fourier_povm(3).unwrap();
        let j = PovmJson::from_povm(&m);
        let text = to_json_string(&j);
        let back: PovmJson = parse_json(&text, "mem").unwrap();
        assert_eq!(back, j);
        assert_eq!(back.to_povm(PovmTolerance::default()).unwrap(), m);
    }

    #[test]
    fn ensemble_round_trip() {
        let e = bell_states(2).unwrap();
        let j = EnsembleJson::from_ensemble(&e);
        let back: EnsembleJson = parse_json(&to_json_string(&j), "mem").unwrap();
        assert_eq!(back.to_ensemble().unwrap(), e);
    }

    #[test]
    fn free_set_variants() {
        let f: FreeSetJson = parse_json(r#"{"variant": "ppt", "dims": [2, 3]}"#, "mem").unwrap();
        assert_eq!(f.to_spec().unwrap(), FreeSetSpec::ppt(vec![2, 3]).unwrap());
        let f: FreeSetJson = parse_json(r#"{"variant": "incoherent"}"#, "mem").unwrap();
        assert_eq!(f.to_spec().unwrap(), FreeSetSpec::Incoherent);
        assert_eq!(parse_free_set_arg("ppt:2x2").unwrap(), FreeSetSpec::ppt(vec![2, 2]).unwrap());
        assert_eq!(parse_free_set_arg("trivial").unwrap(), FreeSetSpec::Trivial);
        assert!(parse_free_set_arg("ppt:2xq").is_err());
    }

    #[test]
    fn errors_name_the_field() {
        let err = parse_json::<PovmJson>(r#"{"dim": 2, "effects": [[[1, 0], "x"]]}"#, "f.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("effects[0][1]") && msg.contains("line 1"), "{msg}");
        let err = parse_json::<PovmJson>("{\"dim\": 2,\n \"effects\": [", "f.json").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let p = PovmJson { dim: 2, effects: vec![vec![[1.0, 0.0]; 3]] };
        assert!(p.to_povm(PovmTolerance::default()).unwrap_err().to_string().contains("effects[0]"));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = vec![[1.0, 0.0], [0.5, 0.0], [0.0, 0.0], [0.0, 0.0]];
        assert!(check_matrix(&m, 2).unwrap_err().contains("Hermitian"));
    }
}
