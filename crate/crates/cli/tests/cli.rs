//! End-to-end runs of the binary: exit codes, outputs and reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use povm_forge::formats::{to_json_string, CertificateJson, EnsembleJson, PovmJson};
use povm_forge_core::povm::{bell_states, computational_basis, fourier_povm, random_povm, rng_for, Povm};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povm-forge")).args(args).output().expect("spawn")
}

fn write_povm(dir: &Path, name: &str, m: &Povm) -> String {
    let p = dir.join(name);
    std::fs::write(&p, to_json_string(&PovmJson::from_povm(m))).unwrap();
    p.display().to_string()
}

fn certificate(out: &Output) -> CertificateJson {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn validate_reports() {
    let dir = TempDir::new().unwrap();
    let good = write_povm(dir.path(), "good.json", &fourier_povm(3).unwrap());
    let out = bin(&["validate", &good]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"violations\": []"));

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"dim": 2, "effects": [[[1.2, 0], [0, 0], [0, 0], [1, 0]], [[-0.2, 0], [0, 0], [0, 0], [0, 0]]]}"#,
    )
    .unwrap();
    let out = bin(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("effects[1]: negative eigenvalue"));

    let cut = dir.path().join("cut.json");
    std::fs::write(&cut, "{\"dim\": 2,\n \"effects\": [[[1, 0]").unwrap();
    let out = bin(&["validate", cut.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn robustness_examples() {
    let dir = TempDir::new().unwrap();
    let f4 = write_povm(dir.path(), "f4.json", &fourier_povm(4).unwrap());
    let c = certificate(&bin(&["robustness", &f4, "--free-set", "incoherent"]));
    assert!((c.value - 3.0).abs() < 1e-5, "{}", c.value);
    assert_eq!(c.exactness, "exact");
    assert!(c.verification.passes);
    assert!((c.dual_value.unwrap() - 3.0).abs() < 1e-5);

    let comp = write_povm(dir.path(), "comp.json", &computational_basis(3));
    assert!(certificate(&bin(&["robustness", &comp])).value.abs() < 1e-6);
}

/// Largest eigenvalue of a 2×2 Hermitian matrix in closed form.
fn lambda_max_2x2(m: &[[f64; 2]]) -> f64 {
    let (a, d) = (m[0][0], m[3][0]);
    let b2 = m[1][0] * m[1][0] + m[1][1] * m[1][1];
    0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b2).sqrt()
}

#[test]
fn trivial_robustness_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    for seed in 0..3 {
        let m = random_povm(2, 3, &mut rng_for(seed, 0)).unwrap();
        let j = PovmJson::from_povm(&m);
        let oracle: f64 = j.effects.iter().map(|e| lambda_max_2x2(e)).sum::<f64>() - 1.0;
        let p = write_povm(dir.path(), "r.json", &m);
        let c = certificate(&bin(&["robustness", &p, "--free-set", "trivial", "--seed", "5"]));
        assert!((c.value - oracle).abs() < 1e-6, "{} vs {oracle}", c.value);
    }
}

#[test]
fn input_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let q = write_povm(dir.path(), "q.json", &computational_basis(2));
    assert_eq!(bin(&["robustness", &q, "--free-set", "ppt:2x2"]).status.code(), Some(4));
    assert_eq!(bin(&["robustness", &q, "--free-set", "nonsense.json"]).status.code(), Some(4));
    assert_eq!(bin(&["robustness", "missing.json"]).status.code(), Some(4));
}

#[test]
fn discriminate_bell_states() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bell.json");
    std::fs::write(&p, to_json_string(&EnsembleJson::from_ensemble(&bell_states(2).unwrap()))).unwrap();
    let out = bin(&["discriminate", p.to_str().unwrap(), "--free-set", "ppt:2x2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["optimal"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["restricted"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert!((v["advantage_ratio"].as_f64().unwrap() - 2.0).abs() < 1e-5);
    assert_eq!(v["restricted"]["exactness"], "exact");
    assert_eq!(v["restricted"]["restricted_to"], "ppt");
}

fn run_to_file(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let o = out.display().to_string();
    all.extend(["--out", o.as_str()]);
    let res = bin(&all);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn experiments_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let sweep = ["experiment", "incoherent-sweep", "--dmax", "3", "--nmax", "4"];
    let a = run_to_file(dir.path(), "a.csv", &sweep);
    let b = run_to_file(dir.path(), "b.csv", &[&sweep[..], &["--jobs", "3"]].concat());
    assert_eq!(a, b);

    let s1 = dir.path().join("s1.json").display().to_string();
    let s2 = dir.path().join("s2.json").display().to_string();
    let haar = ["experiment", "multiqubit-haar", "--N", "2", "--trials", "5", "--seed", "9"];
    let a = run_to_file(dir.path(), "h1.csv", &[&haar[..], &["--summary", &s1]].concat());
    let b = run_to_file(dir.path(), "h2.csv", &[&haar[..], &["--summary", &s2, "--jobs", "4"]].concat());
    assert_eq!(a, b);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 6);

    let bip = ["experiment", "bipartite-sep", "--dA", "2", "--dB", "2", "--seed", "3"];
    let a = run_to_file(dir.path(), "b1.json", &bip);
    let b = run_to_file(dir.path(), "b2.json", &bip);
    assert_eq!(a, b);
    let rec = povm_forge::record::ExperimentRecord::from_json(std::str::from_utf8(&a).unwrap()).unwrap();
    assert!(rec.all_passed());
    assert_eq!(rec.to_json().as_bytes(), &a[..]);
}
