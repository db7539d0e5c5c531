//! Invariant suite over random states for `coherence audit`.

use std::fmt::Write as _;

use coherence_core::games::{
    phase_channel, random_incoherent_instrument_with, success_probability_with, Game, PhaseGame,
};
use coherence_core::roc::{roc_bounds, roc_exact_with, roc_fast_path};
use coherence_core::sdp::SolverOptions;
use coherence_core::witness::validate_witness;
use coherence_core::{random, DensityMatrix, Error};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tol: f64,
    pub passed: usize,
    pub failed: usize,
    /// Largest violation measure seen; at most `tol` when nothing failed.
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Summary {
    pub fn failures(&self) -> usize {
        self.checks.iter().map(|c| c.failed).sum()
    }

    pub fn table(&self) -> String {
        let mut s = format!("audit d={} samples={} seed={}\n", self.dim, self.samples, self.seed);
        for c in &self.checks {
            writeln!(
                s,
                "{:<22} {:>4} passed {:>4} failed  worst {:.6e} (tol {:e})",
                c.name, c.passed, c.failed, c.worst, c.tol
            )
            .unwrap();
        }
        s.push_str(if self.passed { "passed" } else { "FAILED" });
        s
    }
}

const CHECKS: [(&str, f64); 9] = [
    ("primal-dual gap", 1e-7),
    ("witness validity", 1e-8),
    ("witness value", 1e-6),
    ("reconstruction", 1e-7),
    ("bound chain", 1e-7),
    ("fast path", 1e-6),
    ("phase covariance", 1e-7),
    ("convexity", 1e-7),
    ("selective monotonicity", 1e-6),
];
const CANONICAL_GAME: (&str, f64) = ("canonical game", 1e-5);
const MAXIMUM: (&str, f64) = ("maximum d-1", 1e-7);

/// Violation measures for one sample, in the order of `CHECKS` followed by
/// the canonical game and the maximum; `None` when a check does not apply.
fn sample(dim: usize, seed: u64, opts: &SolverOptions) -> Result<Vec<Option<f64>>, Error> {
    let mut rng = random::rng(seed);
    let rank = rng.random_range(1..=dim);
    let rho = random::random_state_with(dim, rank, &mut rng)?;
    let c = roc_exact_with(&rho, opts)?;
    let check = validate_witness(&c.witness);
    let validity = check.min_diagonal.abs().max(check.max_eigenvalue - 1.0).max(0.0);
    let bounds = roc_bounds(&rho)?;
    let chain = [
        bounds.l1_lower - c.value,
        c.value - bounds.l1_upper,
        bounds.faithful_1 - c.value,
        bounds.faithful_2 - bounds.faithful_1,
        bounds.faithful_3 - bounds.faithful_2,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let fast = roc_fast_path(&rho).map(|v| (v - c.value).abs());

    let u = phase_channel(dim, rng.random::<f64>() * std::f64::consts::TAU);
    let moved = roc_exact_with(&rho.evolve(&u)?, opts)?.value;

    let other = random::random_state_with(dim, rng.random_range(1..=dim), &mut rng)?;
    let p: f64 = rng.random();
    let mix = DensityMatrix::mixture(&[(p, &rho), (1.0 - p, &other)])?;
    let convex = roc_exact_with(&mix, opts)?.value - p * c.value - (1.0 - p) * roc_exact_with(&other, opts)?.value;

    let inst = random_incoherent_instrument_with(dim, rng.random_range(1..=4), &mut rng)?;
    let mut after = 0.0;
    for (w, s) in inst.apply(&rho)? {
        after += w * roc_exact_with(&s, opts)?.value;
    }

    let game: Game = PhaseGame::canonical(dim)?.into();
    let ps = success_probability_with(&game, &rho, opts)?.probability;

    Ok(vec![
        Some((c.pseudomixture_value - c.witness_value).abs()),
        Some(validity),
        Some((-c.witness.inner(&rho) - c.value).abs()),
        Some((c.reconstruct().matrix() - rho.matrix()).max_abs()),
        Some(chain.max(0.0)),
        fast,
        Some((moved - c.value).abs()),
        Some(convex.max(0.0)),
        Some((after - c.value).max(0.0)),
        Some((dim as f64 * ps - (1.0 + c.value)).abs()),
        Some((c.value - (dim - 1) as f64).max(0.0)),
    ])
}

pub fn run(dim: usize, samples: usize, seed: u64, opts: &SolverOptions) -> Result<Summary, Error> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("audit needs --dim >= 2, got {dim}")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("audit needs --samples >= 1".into()));
    }
    let rows: Vec<Result<Vec<Option<f64>>, Error>> =
        (0..samples as u64).into_par_iter().map(|i| sample(dim, seed.wrapping_add(i), opts)).collect();
    let specs: Vec<(&'static str, f64)> = CHECKS.iter().copied().chain([CANONICAL_GAME, MAXIMUM]).collect();
    let mut checks: Vec<Check> =
        specs.iter().map(|(name, tol)| Check { name, tol: *tol, passed: 0, failed: 0, worst: 0.0 }).collect();
    for row in rows {
        for (check, v) in checks.iter_mut().zip(row?) {
            let Some(v) = v else { continue };
            check.worst = check.worst.max(v);
            if v <= check.tol {
                check.passed += 1;
            } else {
                check.failed += 1;
            }
        }
    }
    let passed = checks.iter().all(|c| c.failed == 0);
    Ok(Summary { dim, samples, seed, checks, passed })
}
