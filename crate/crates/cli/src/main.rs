//! `coherence`: command-line front end for the robustness-of-coherence toolkit.

mod audit;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coherence_core::games::{
    incoherent_baseline_with, success_probability_with, verify_operational_theorem, Game, TheoremOptions,
};
use coherence_core::json::{parse_hermitian, parse_state};
use coherence_core::oracle::Fixture;
use coherence_core::roc::{evaluate, roc_bounds, roc_exact_with, roc_fast_path};
use coherence_core::sdp::SolverOptions;
use coherence_core::witness::{
    best_witness_from_data_with, min_roc_from_data_with, witness_lower_bound, CoherenceWitness, WitnessDataset,
};
use coherence_core::{l1_coherence, DensityMatrix, Error, C64};
use rayon::prelude::*;
use serde_json::json;

/// Smallest accepted solver tolerance.
const TOL_FLOOR: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "coherence", version, about = "Robustness of coherence: exact values, bounds, witnesses and games")]
struct Cli {
    /// Print JSON with full precision instead of the 6-decimal table.
    #[arg(long, global = true)]
    json: bool,
    /// Solver tolerance (at least 1e-10).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness of coherence of a state.
    Roc {
        state: PathBuf,
        /// Also print the optimal witness and pseudomixture.
        #[arg(long)]
        certificate: bool,
        /// Only use the phase-alignment closed form; no SDP.
        #[arg(long, conflicts_with = "certificate")]
        fast_path_only: bool,
    },
    /// l1 and faithful bounds next to the exact value.
    Bounds { state: PathBuf },
    /// Lower bound -Tr[W rho] from a witness.
    WitnessBound { state: PathBuf, witness: PathBuf },
    /// Best witness built from measured observables.
    WitnessFromData { dataset: PathBuf },
    /// Smallest robustness consistent with measured observables.
    MinRocFromData { dataset: PathBuf },
    /// Success probability, incoherent baseline and advantage ratio.
    Game { game: PathBuf, state: PathBuf },
    /// Check d p_succ = 1 + roc at the canonical game plus sampled-game bounds.
    VerifyTeo {
        state: PathBuf,
        #[arg(long, default_value_t = 20)]
        phase_games: usize,
        #[arg(long, default_value_t = 10)]
        channel_games: usize,
        #[arg(long, env = "ROC_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Qubit roc and l1 over a Bloch-ball grid as CSV.
    SweepQubit {
        /// Grid points per axis on [-1, 1].
        #[arg(long, default_value_t = 11)]
        steps: usize,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invariant checks on random states.
    Audit {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, env = "ROC_SEED", default_value_t = 0)]
        seed: u64,
    },
}

/// Exit codes: 1 input, 2 solver, 3 witness, 4 data, 5 theorem, 6 audit.
#[derive(Debug)]
enum Failure {
    Input(String),
    Solver(String),
    Witness(String),
    Data(String),
    Mismatch(String),
    Audit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Witness(_) => 3,
            Failure::Data(_) => 4,
            Failure::Mismatch(_) => 5,
            Failure::Audit(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m)
            | Failure::Solver(m)
            | Failure::Witness(m)
            | Failure::Data(m)
            | Failure::Mismatch(m)
            | Failure::Audit(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Solver { .. } | Error::CrossCheck(_) | Error::IllPosed(_) | Error::NotFound { .. } => {
                Failure::Solver(msg)
            }
            Error::InvalidWitness(_) => Failure::Witness(msg),
            Error::InfeasibleData(_) => Failure::Data(msg),
            _ => Failure::Input(msg),
        }
    }
}

type Outcome = Result<String, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Parses a file, prefixing errors with the path so JSON line numbers point somewhere.
fn load<T>(path: &Path, parse: impl FnOnce(&str) -> coherence_core::Result<T>) -> Result<T, Failure> {
    let text = read(path)?;
    parse(&text).map_err(|e| {
        let f = Failure::from(e);
        let msg = format!("{}: {}", path.display(), f.message());
        match f {
            Failure::Witness(_) => Failure::Witness(msg),
            Failure::Data(_) => Failure::Data(msg),
            _ => Failure::Input(msg),
        }
    })
}

/// A bare matrix, or an oracle fixture whose `input` is the state.
fn parse_state_or_fixture(text: &str) -> coherence_core::Result<DensityMatrix> {
    parse_state(text).or_else(|err| match serde_json::from_str::<Fixture>(text) {
        Ok(f) => f.state(),
        Err(_) => Err(err),
    })
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize")
}

fn run(cli: &Cli) -> Outcome {
    if !(cli.tol.is_finite() && cli.tol >= TOL_FLOOR) {
        return Err(Failure::Input(format!("--tol must be at least {TOL_FLOOR:e}, got {}", cli.tol)));
    }
    let opts = SolverOptions { tol: cli.tol, ..SolverOptions::default() };
    match &cli.command {
        Command::Roc { state, certificate, fast_path_only } => {
            let rho = load(state, parse_state_or_fixture)?;
            if *fast_path_only {
                let value = roc_fast_path(&rho);
                return Ok(match (cli.json, value) {
                    (true, v) => pretty(&json!({ "value": v, "method": v.map(|_| "FAST_PATH") })),
                    (false, Some(v)) => format!("{v:.6}"),
                    (false, None) => "fast path not applicable".to_string(),
                });
            }
            let eval = evaluate(&rho, *certificate, &opts)?;
            let cert = eval.certificate.as_ref().map(|c| c.to_json());
            if cli.json {
                let mut out = json!({ "value": eval.value, "method": eval.method });
                if let Some(c) = cert {
                    out["certificate"] = serde_json::to_value(c).expect("certificate serializes");
                }
                Ok(pretty(&out))
            } else {
                let mut out = format!("{:.6}", eval.value);
                if let Some(c) = cert {
                    write!(out, "\n{}", serde_json::to_string_pretty(&c).expect("certificate serializes")).unwrap();
                }
                Ok(out)
            }
        }
        Command::Bounds { state } => {
            let rho = load(state, parse_state_or_fixture)?;
            let exact = roc_exact_with(&rho, &opts)?.value;
            let report = roc_bounds(&rho)?.with_exact(exact);
            if cli.json {
                return Ok(pretty(&serde_json::to_value(&report).expect("report serializes")));
            }
            let mut out = String::new();
            for (name, v) in [
                ("l1_upper", report.l1_upper),
                ("exact", exact),
                ("l1_lower", report.l1_lower),
                ("faithful_1", report.faithful_1),
                ("faithful_2", report.faithful_2),
                ("faithful_3", report.faithful_3),
            ] {
                writeln!(out, "{name:<11} {v:.6}").unwrap();
            }
            if report.violations.is_empty() {
                out.push_str("chain holds");
            } else {
                write!(out, "violations: {}", report.violations.join("; ")).unwrap();
            }
            Ok(out)
        }
        Command::WitnessBound { state, witness } => {
            let rho = load(state, parse_state_or_fixture)?;
            let w = load(witness, |t| parse_hermitian(t).and_then(CoherenceWitness::new))?;
            let bound = witness_lower_bound(&rho, &w)?;
            Ok(if cli.json { pretty(&json!({ "bound": bound })) } else { format!("{bound:.6}") })
        }
        Command::WitnessFromData { dataset } => {
            let data = load(dataset, WitnessDataset::from_json)?;
            let fit = best_witness_from_data_with(&data, &opts)?;
            if cli.json {
                return Ok(pretty(&serde_json::to_value(fit.to_json()).expect("fit serializes")));
            }
            let coeffs: Vec<String> = fit.coefficients.iter().map(|c| format!("{c:.6}")).collect();
            let mut out = format!("bound {:.6}\noffset {:.6}\ncoefficients {}", fit.bound, fit.offset, coeffs.join(" "));
            if fit.box_active {
                out.push_str("\nwarning: coefficient box active");
            }
            Ok(out)
        }
        Command::MinRocFromData { dataset } => {
            let data = load(dataset, WitnessDataset::from_json)?;
            let fit = min_roc_from_data_with(&data, &opts)?;
            Ok(if cli.json {
                pretty(&serde_json::to_value(fit.to_json()).expect("fit serializes"))
            } else {
                format!("{:.6}", fit.min_roc)
            })
        }
        Command::Game { game, state } => {
            let g = load(game, Game::from_json)?;
            let rho = load(state, parse_state_or_fixture)?;
            if rho.dim() != g.dim() {
                return Err(Failure::Input(format!("game has dimension {}, state has {}", g.dim(), rho.dim())));
            }
            let p = success_probability_with(&g, &rho, &opts)?.probability;
            let baseline = incoherent_baseline_with(&g, &opts)?;
            let ratio = p / baseline;
            Ok(if cli.json {
                pretty(&json!({ "p_succ": p, "baseline": baseline, "ratio": ratio }))
            } else {
                format!("p_succ   {p:.6}\nbaseline {baseline:.6}\nratio    {ratio:.6}")
            })
        }
        Command::VerifyTeo { state, phase_games, channel_games, seed } => {
            let rho = load(state, parse_state_or_fixture)?;
            let topts = TheoremOptions {
                phase_games: *phase_games,
                channel_games: *channel_games,
                seed: *seed,
                solver: opts,
                ..TheoremOptions::default()
            };
            let r = verify_operational_theorem(&rho, &topts)?;
            let out = if cli.json {
                pretty(&serde_json::to_value(&r).expect("report serializes"))
            } else {
                let mut s = String::new();
                writeln!(s, "roc                {:.6}", r.roc).unwrap();
                writeln!(s, "canonical p_succ   {:.6}", r.canonical_success).unwrap();
                writeln!(s, "ratio              {:.6}", r.canonical_ratio).unwrap();
                writeln!(s, "equality error     {:.6}", r.equality_error).unwrap();
                if r.phase_games > 0 {
                    writeln!(s, "max phase excess   {:.6}", r.max_phase_excess).unwrap();
                }
                if r.channel_games > 0 {
                    writeln!(s, "max channel excess {:.6}", r.max_channel_excess).unwrap();
                }
                write!(s, "{}", if r.passed { "passed" } else { "FAILED" }).unwrap();
                s
            };
            if r.passed {
                Ok(out)
            } else {
                println!("{out}");
                Err(Failure::Mismatch(format!(
                    "operational theorem check failed (equality error {:e}, phase excess {:e}, channel excess {:e})",
                    r.equality_error, r.max_phase_excess, r.max_channel_excess
                )))
            }
        }
        Command::SweepQubit { steps, out } => sweep_qubit(*steps, out.as_deref(), &opts, cli.json),
        Command::Audit { dim, samples, seed } => {
            let summary = audit::run(*dim, *samples, *seed, &opts)?;
            let text = if cli.json { pretty(&serde_json::to_value(&summary).expect("summary serializes")) } else { summary.table() };
            if summary.passed {
                Ok(text)
            } else {
                println!("{text}");
                Err(Failure::Audit(format!("{} invariant checks failed", summary.failures())))
            }
        }
    }
}

/// `rho = (1 + r . sigma) / 2`
fn bloch_state(r: [f64; 3]) -> Result<DensityMatrix, Error> {
    let m = coherence_core::ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => C64::new((1.0 + r[2]) / 2.0, 0.0),
        (1, 1) => C64::new((1.0 - r[2]) / 2.0, 0.0),
        (0, 1) => C64::new(r[0] / 2.0, -r[1] / 2.0),
        _ => C64::new(r[0] / 2.0, r[1] / 2.0),
    });
    DensityMatrix::from_matrix(m)
}

/// Bloch vector, roc, l1.
type SweepRow = ([f64; 3], f64, f64);

fn sweep_qubit(steps: usize, out: Option<&Path>, opts: &SolverOptions, json: bool) -> Outcome {
    if steps < 2 {
        return Err(Failure::Input("--steps must be at least 2".into()));
    }
    let axis: Vec<f64> = (0..steps).map(|i| -1.0 + 2.0 * i as f64 / (steps - 1) as f64).collect();
    let mut points = Vec::new();
    for &r1 in &axis {
        for &r2 in &axis {
            for &r3 in &axis {
                if r1 * r1 + r2 * r2 + r3 * r3 <= 1.0 + 1e-12 {
                    points.push([r1, r2, r3]);
                }
            }
        }
    }
    // collect() keeps index order, so the CSV is identical across thread counts
    let rows: Vec<Result<SweepRow, Failure>> = points
        .par_iter()
        .map(|r| {
            let rho = bloch_state(*r)?;
            let roc = roc_exact_with(&rho, opts)?.value;
            Ok((*r, roc, l1_coherence(&rho)))
        })
        .collect();
    let mut csv = String::from("r1,r2,r3,roc,l1\n");
    let mut worst = 0.0f64;
    for row in rows {
        let (r, roc, l1) = row?;
        worst = worst.max((roc - (r[0] * r[0] + r[1] * r[1]).sqrt()).abs());
        writeln!(csv, "{:.6},{:.6},{:.6},{roc:.6},{l1:.6}", r[0], r[1], r[2]).unwrap();
    }
    let n = points.len();
    match out {
        None => Ok(csv.trim_end().to_string()),
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Ok(if json {
                pretty(&json!({ "rows": n, "out": path.display().to_string(), "max_deviation": worst }))
            } else {
                format!("{n} rows written to {}\nmax |roc - sqrt(r1^2 + r2^2)| {worst:.6}", path.display())
            })
        }
    }
}

fn main() -> ExitCode {
    // clap uses 2 for usage errors; here 2 means solver failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bloch_states() {
        let rho = bloch_state([0.6, 0.0, 0.2]).unwrap();
        assert!((rho[(0, 1)].re - 0.3).abs() < 1e-15);
        assert!((rho[(0, 0)].re - 0.6).abs() < 1e-15);
        assert!(bloch_state([1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::InvalidWitness("x".into())).code(), 3);
        assert_eq!(Failure::from(Error::InfeasibleData("x".into())).code(), 4);
        assert_eq!(Failure::from(Error::CrossCheck("x".into())).code(), 2);
        assert_eq!(Failure::from(Error::DimensionMismatch { expected: 2, got: 3 }).code(), 1);
    }

    #[test]
    fn fixture_input_is_accepted() {
        let f = Fixture::new(0, DensityMatrix::maximally_coherent(2).matrix(), 1.0, 1e-6, "closed_form");
        let rho = parse_state_or_fixture(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(rho.dim(), 2);
        let err = parse_state_or_fixture("{\"dim\": 2}").unwrap_err();
        assert!(err.to_string().contains("missing field"));
    }
}
