//! Experiment runners. Each returns plain rows or records; writing them is the caller's job.

use log::{info, warn};
use povm_forge_core::discrimination::{max_psucc_over_free, optimal_psucc, pretty_good_measurement, psucc};
use povm_forge_core::freesets::{Exactness, FreeSetSpec};
use povm_forge_core::hermlin::partial_transpose_factors;
use povm_forge_core::povm::{
    bell_measurement, coherent_extremal_povm, depolarize, embedded_bell_states, haar_ensemble_with, random_povm,
    rng_for,
};
use povm_forge_core::robustness::{robustness_primal_with, verify_certificate, RobustnessOptions, VerifyTolerance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::ratio_exactness;
use crate::error::{CliError, CliResult};
use crate::record::{ExperimentRecord, NamedDiagnostics, Parameters};

/// Runs `f` on a pool of `jobs` threads (`0` = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::input(format!("--jobs {jobs}: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    pub n: usize,
    pub measurement: String,
    pub computed: Option<f64>,
    pub predicted: f64,
    pub abs_error: Option<f64>,
    pub exactness: String,
    pub iterations: Option<usize>,
    pub duality_gap: Option<f64>,
    pub primal_residual: Option<f64>,
    pub dual_residual: Option<f64>,
    pub error: String,
}

/// Incoherent robustness of the maximally coherent `n`-outcome measurement for every
/// `2 ≤ d ≤ dmax`, `2 ≤ n ≤ nmax`, in row-major `(d, n)` order.
pub fn incoherent_sweep(dmax: usize, nmax: usize, tol: f64) -> Vec<SweepRow> {
    let cells: Vec<(usize, usize)> = (2..=dmax).flat_map(|d| (2..=nmax).map(move |n| (d, n))).collect();
    cells.into_par_iter().map(|(d, n)| sweep_cell(d, n, tol)).collect()
}

fn sweep_cell(d: usize, n: usize, tol: f64) -> SweepRow {
    let predicted = (d.min(n) - 1) as f64;
    let mut row = SweepRow {
        d,
        n,
        measurement: if n >= d { "fourier" } else { "truncated-fourier" }.into(),
        computed: None,
        predicted,
        abs_error: None,
        exactness: Exactness::Exact.as_str().into(),
        iterations: None,
        duality_gap: None,
        primal_residual: None,
        dual_residual: None,
        error: String::new(),
    };
    let opts = RobustnessOptions { tol, ..Default::default() };
    match coherent_extremal_povm(d, n).and_then(|m| robustness_primal_with(&m, &FreeSetSpec::Incoherent, &opts)) {
        Ok(cert) => {
            info!("sweep d={d} n={n}: {}", cert.value);
            row.computed = Some(cert.value);
            row.abs_error = Some((cert.value - predicted).abs());
            row.exactness = cert.exactness.as_str().into();
            row.iterations = Some(cert.iterations);
            row.duality_gap = Some(cert.duality_gap);
            row.primal_residual = Some(cert.diagnostics.primal_residual);
            row.dual_residual = Some(cert.diagnostics.dual_residual);
        }
        Err(e) => {
            warn!("sweep d={d} n={n} failed: {e}");
            row.error = e.to_string();
        }
    }
    row
}

/// Random POVMs depolarised in the bipartite experiment.
pub const DEPOLARIZED_SAMPLES: usize = 20;
pub const DEPOLARIZED_OUTCOMES: usize = 4;

/// Separable-measurement bounds on `C^{dA} ⊗ C^{dB}`; failed checks leave the record intact.
pub fn bipartite_sep(da: usize, db: usize, seed: u64, tol: f64) -> CliResult<ExperimentRecord> {
    let big_d = da.min(db);
    let f = FreeSetSpec::ppt(vec![da, db])?;
    let mut rec = ExperimentRecord::new(
        "bipartite-sep",
        Parameters {
            d: Some(big_d),
            dims: Some(vec![da, db]),
            seed: Some(seed),
            free_set: Some(f.name().into()),
            ..Default::default()
        },
    );
    let opts = RobustnessOptions { tol, ..Default::default() };

    let bell = bell_measurement((da, db))?;
    match robustness_primal_with(&bell, &f, &opts).and_then(|cert| {
        let report = verify_certificate(&bell, &f, &cert, &VerifyTolerance { seed, ..Default::default() })?;
        Ok((cert, report))
    }) {
        Ok((cert, report)) => {
            let r = cert.value;
            rec.value("bell_robustness", r, cert.exactness.as_str(), Some("bell_robustness"));
            rec.value("bell_certificate_ratio", report.ratio, cert.exactness.as_str(), Some("bell_robustness"));
            rec.diagnostics.push(NamedDiagnostics {
                name: "bell_robustness".into(),
                iterations: Some(cert.iterations),
                diagnostics: (&cert.diagnostics).into(),
            });
            let lo = (big_d - 1) as f64;
            let hi = big_d as f64;
            rec.check(
                "bell_robustness_in_bounds",
                r >= lo - 1e-5 && r <= hi + 1e-5,
                format!("{r} in [{lo}, {hi}] with slack 1e-5"),
            );
            rec.check(
                "bell_certificate_verifies",
                report.passes,
                format!("ratio error {:e}, sandwich violation {:e}", report.ratio_error, report.sandwich_violation),
            );
        }
        Err(e) => rec.errors.push(format!("bell_robustness: {e}")),
    }

    let ens = embedded_bell_states((da, db))?;
    match max_psucc_over_free(&ens, &f) {
        Ok(res) => {
            let v = res.value;
            rec.value(
                "bell_ensemble_restricted_psucc",
                v,
                res.exactness.as_str(),
                Some("bell_ensemble_restricted_psucc"),
            );
            if let Some(diag) = &res.diagnostics {
                rec.diagnostics.push(NamedDiagnostics {
                    name: "bell_ensemble_restricted_psucc".into(),
                    iterations: None,
                    diagnostics: diag.into(),
                });
            }
            let target = 1.0 / big_d as f64;
            rec.check(
                "bell_ensemble_restricted_psucc",
                (v - target).abs() <= 1e-6,
                format!("{v} vs {target} within 1e-6"),
            );
        }
        Err(e) => rec.errors.push(format!("bell_ensemble_restricted_psucc: {e}")),
    }

    let t = 1.0 / (1.0 + big_d as f64);
    let mut worst = f64::INFINITY;
    let mut worst_index = 0;
    for k in 0..DEPOLARIZED_SAMPLES {
        let mut rng = rng_for(seed, k as u64);
        let m = depolarize(&random_povm(da * db, DEPOLARIZED_OUTCOMES, &mut rng)?, t)?;
        for e in m.effects() {
            let pt = partial_transpose_factors(e, &[da, db], &[true, false])?;
            let min = pt.min_eigenvalue()?;
            if min < worst {
                worst = min;
                worst_index = k;
            }
        }
    }
    rec.value("depolarized_min_pt_eigenvalue", worst, Exactness::Exact.as_str(), None);
    rec.check(
        "depolarized_povms_ppt",
        worst >= -1e-8,
        format!("min partial-transpose eigenvalue {worst:e} (sample {worst_index}) at t = {t}"),
    );
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarRow {
    pub trial: usize,
    pub pgm: Option<f64>,
    pub optimal: Option<f64>,
    pub restricted: Option<f64>,
    pub ratio: Option<f64>,
    pub pgm_exactness: String,
    pub optimal_exactness: String,
    pub restricted_exactness: String,
    pub ratio_exactness: String,
    pub optimal_relative_gap: Option<f64>,
    pub restricted_relative_gap: Option<f64>,
    pub error: String,
}

/// Per-trial discrimination of `2^N` Haar-random `N`-qubit states, unrestricted and over
/// PPT-across-every-single-qubit-cut measurements, plus a summary record.
pub fn multiqubit_haar(num_qubits: usize, trials: usize, seed: u64) -> CliResult<(Vec<HaarRow>, ExperimentRecord)> {
    let f = FreeSetSpec::ppt(vec![2; num_qubits])?;
    let rows: Vec<HaarRow> = (0..trials).into_par_iter().map(|t| haar_trial(num_qubits, t, seed, &f)).collect();
    let mut rec = ExperimentRecord::new(
        "multiqubit-haar",
        Parameters {
            num_qubits: Some(num_qubits),
            trials: Some(trials),
            seed: Some(seed),
            free_set: Some(f.name().into()),
            ..Default::default()
        },
    );
    let ok: Vec<&HaarRow> = rows.iter().filter(|r| r.error.is_empty()).collect();
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        rec.errors.push(format!("trial {}: {}", r.trial, r.error));
    }
    let restricted_ex = f.discrimination_exactness();
    let ratio_ex = ratio_exactness(restricted_ex);
    let mean =
        |get: fn(&HaarRow) -> Option<f64>| ok.iter().filter_map(|r| get(r)).sum::<f64>() / ok.len().max(1) as f64;
    let exact = Exactness::Exact.as_str();
    rec.value("trials_completed", ok.len() as f64, exact, None);
    rec.value("mean_pgm", mean(|r| r.pgm), exact, None);
    rec.value("mean_optimal", mean(|r| r.optimal), exact, None);
    rec.value("mean_restricted", mean(|r| r.restricted), restricted_ex.as_str(), None);
    rec.value("mean_ratio", mean(|r| r.ratio), ratio_ex.as_str(), None);
    let min_ratio = ok.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    if min_ratio.is_finite() {
        rec.value("min_ratio", min_ratio, ratio_ex.as_str(), None);
    }
    let bad_ratio: Vec<usize> =
        ok.iter().filter(|r| r.ratio.is_some_and(|x| x < 1.0 - 1e-9)).map(|r| r.trial).collect();
    rec.check("ratio_at_least_one", bad_ratio.is_empty(), format!("trials below 1 − 1e-9: {bad_ratio:?}"));
    let bad_pgm: Vec<usize> = ok
        .iter()
        .filter(|r| matches!((r.pgm, r.optimal), (Some(p), Some(o)) if p > o + 1e-9))
        .map(|r| r.trial)
        .collect();
    rec.check("pgm_below_optimal", bad_pgm.is_empty(), format!("trials with PGM above optimum + 1e-9: {bad_pgm:?}"));
    Ok((rows, rec))
}

fn haar_trial(num_qubits: usize, trial: usize, seed: u64, f: &FreeSetSpec) -> HaarRow {
    let mut row = HaarRow {
        trial,
        pgm: None,
        optimal: None,
        restricted: None,
        ratio: None,
        pgm_exactness: Exactness::Exact.as_str().into(),
        optimal_exactness: Exactness::Exact.as_str().into(),
        restricted_exactness: f.discrimination_exactness().as_str().into(),
        ratio_exactness: ratio_exactness(f.discrimination_exactness()).as_str().into(),
        optimal_relative_gap: None,
        restricted_relative_gap: None,
        error: String::new(),
    };
    if let Err(e) = fill_haar_row(&mut row, num_qubits, seed, f) {
        warn!("trial {trial} failed: {e}");
        row.error = e.to_string();
    }
    row
}

fn fill_haar_row(row: &mut HaarRow, num_qubits: usize, seed: u64, f: &FreeSetSpec) -> povm_forge_core::Result<()> {
    let mut rng = rng_for(seed, row.trial as u64);
    let e = haar_ensemble_with(num_qubits, 1 << num_qubits, &mut rng)?;
    row.pgm = Some(psucc(&e, &pretty_good_measurement(&e)?)?);
    let opt = optimal_psucc(&e)?;
    row.optimal = Some(opt.value);
    row.optimal_relative_gap = opt.diagnostics.map(|d| d.relative_gap);
    let res = max_psucc_over_free(&e, f)?;
    row.restricted = Some(res.value);
    row.restricted_relative_gap = res.diagnostics.map(|d| d.relative_gap);
    row.ratio = Some(opt.value / res.value);
    Ok(())
}

/// Serialises rows as CSV with a header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
