use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use log::info;
use povm_forge::commands::{
    load_ensemble, load_povm, run_discriminate, run_robustness, validate_text, DEFAULT_VALIDATE_TOL,
};
use povm_forge::experiments::{bipartite_sep, incoherent_sweep, multiqubit_haar, to_csv, with_jobs};
use povm_forge::formats::{parse_free_set_arg, read_file, to_json_string};
use povm_forge::{CliError, CliResult};
use povm_forge_core::freesets::FreeSetSpec;
use povm_forge_core::robustness::{robustness_sdp, RobustnessOptions};

#[derive(Parser, Debug)]
#[command(author, version, about = "Robustness of quantum measurements and its operational witnesses")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Free set: incoherent, trivial, ppt:DAxDB[x...] or a free-set JSON file.
    #[arg(long, global = true)]
    free_set: Option<String>,

    /// Numerical tolerance (validation slack, or the robustness zero threshold).
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Include wall time in records (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check a POVM or ensemble JSON file and list violated invariants.
    Validate { file: PathBuf },
    /// Robustness certificate of a POVM with respect to a free set.
    Robustness {
        povm: PathBuf,
        /// Also write the standard-form SDP (optimum −(1 + R)) in text form.
        #[arg(long)]
        dump_sdp: Option<PathBuf>,
    },
    /// Optimal, pretty-good and (with --free-set) free-restricted discrimination of an ensemble.
    Discriminate { ensemble: PathBuf },
    /// Seeded experiments writing CSV rows or JSON records.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Incoherent robustness of maximally coherent measurements over a (d, n) grid.
    IncoherentSweep {
        #[arg(long, default_value_t = 5)]
        dmax: usize,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
    /// Separable-measurement bounds for the generalised Bell measurement.
    BipartiteSep {
        #[arg(long = "dA", alias = "da", default_value_t = 2)]
        da: usize,
        #[arg(long = "dB", alias = "db", default_value_t = 2)]
        db: usize,
    },
    /// Discrimination of 2^N Haar-random N-qubit states with and without the PPT restriction.
    MultiqubitHaar {
        #[arg(long = "N", alias = "qubits", default_value_t = 2)]
        num_qubits: usize,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        /// Summary record file; stderr when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POVM_FORGE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Invariant { record: Some(r), .. } = &e {
                eprint!("{r}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn free_set(cli: &Cli, default: Option<FreeSetSpec>) -> CliResult<Option<FreeSetSpec>> {
    cli.free_set.as_deref().map(parse_free_set_arg).transpose().map(|f| f.or(default))
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let start = Instant::now();
    match &cli.cmd {
        Cmd::Validate { file } => {
            let source = file.display().to_string();
            let report = validate_text(&read_file(file)?, &source, cli.tol.unwrap_or(DEFAULT_VALIDATE_TOL))?;
            emit(out, &to_json_string(&report))?;
            if !report.ok() {
                return Err(CliError::invariant(format!("{source}: {}", report.violations.join("; "))));
            }
        }
        Cmd::Robustness { povm, dump_sdp } => {
            let m = load_povm(&read_file(povm)?, &povm.display().to_string())?;
            let f = free_set(&cli, Some(FreeSetSpec::Incoherent))?.expect("defaulted");
            if let Some(p) = dump_sdp {
                std::fs::write(p, robustness_sdp(&m, &f)?.to_text())?;
            }
            let tol = cli.tol.unwrap_or(RobustnessOptions::default().tol);
            let cert = run_robustness(&m, &f, tol, cli.seed)?;
            emit(out, &to_json_string(&cert))?;
            if !cert.verification.passes {
                return Err(CliError::invariant(format!(
                    "certificate failed verification (ratio error {:e}, sandwich violation {:e}, free member {})",
                    cert.verification.ratio_error,
                    cert.verification.sandwich_violation,
                    cert.verification.free_povm_member
                )));
            }
        }
        Cmd::Discriminate { ensemble } => {
            let e = load_ensemble(&read_file(ensemble)?, &ensemble.display().to_string())?;
            let f = free_set(&cli, None)?;
            let report = run_discriminate(&e, f.as_ref(), cli.tol.unwrap_or(1e-9))?;
            emit(out, &to_json_string(&report))?;
        }
        Cmd::Experiment(Experiment::IncoherentSweep { dmax, nmax }) => {
            let tol = cli.tol.unwrap_or(RobustnessOptions::default().tol);
            let rows = with_jobs(cli.jobs, || incoherent_sweep(*dmax, *nmax, tol))?;
            emit(out, &to_csv(&rows)?)?;
            let failed: Vec<String> =
                rows.iter().filter(|r| !r.error.is_empty()).map(|r| format!("({}, {})", r.d, r.n)).collect();
            if !failed.is_empty() {
                return Err(CliError::Solver(format!("cells failed: {}", failed.join(", "))));
            }
        }
        Cmd::Experiment(Experiment::BipartiteSep { da, db }) => {
            let tol = cli.tol.unwrap_or(RobustnessOptions::default().tol);
            let mut rec = bipartite_sep(*da, *db, cli.seed, tol)?;
            if cli.timing {
                rec.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            emit(out, &rec.to_json())?;
            rec.require_passed()?;
        }
        Cmd::Experiment(Experiment::MultiqubitHaar { num_qubits, trials, summary }) => {
            let (rows, mut rec) = with_jobs(cli.jobs, || multiqubit_haar(*num_qubits, *trials, cli.seed))??;
            if cli.timing {
                rec.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            emit(out, &to_csv(&rows)?)?;
            match summary {
                Some(p) => std::fs::write(p, rec.to_json())?,
                None => eprint!("{}", rec.to_json()),
            }
            rec.require_passed()?;
        }
    }
    info!("done in {:.2?}", start.elapsed());
    Ok(())
}
