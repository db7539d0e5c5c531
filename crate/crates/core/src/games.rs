//! Phase- and channel-discrimination games.
//!
//! A referee applies channel `k` with prior `p_k` to a probe state; the
//! player measures and guesses `k`. The optimal success probability is the
//! minimum-error discrimination value of the ensemble `{p_k, Lambda_k(rho)}`.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::matrix::{hermitian_basis, ComplexMatrix, HermitianMatrix, C64};
use crate::random::{self, SeededRng};
use crate::roc::roc_exact_with;
use crate::sdp::{BlockKind, BlockValue, ConicProblem, Constraint, SolverOptions};
use crate::state::DensityMatrix;

pub const PRIOR_TOL: f64 = 1e-12;
pub const PHASE_TOL: f64 = 1e-12;
pub const TRACE_PRESERVING_TOL: f64 = 1e-10;
pub const POVM_TOL: f64 = 1e-9;
/// Allowed disagreement between the measurement program and the
/// minimum-trace program.
pub const CROSS_CHECK_TOL: f64 = 1e-7;
/// Instrument branches below this weight are dropped.
pub const BRANCH_CUTOFF: f64 = 1e-12;
/// Ensemble states closer than this (max entry) are treated as one state.
const IDENTICAL_STATES: f64 = 1e-14;
/// Entries at or below this modulus count as structural zeros of a Kraus operator.
const KRAUS_ZERO: f64 = 1e-12;

/// `exp(i N phi)` with `N = sum_j j |j><j|`.
pub fn phase_channel(d: usize, phi: f64) -> ComplexMatrix {
    let diag: Vec<C64> = (0..d).map(|j| C64::from_polar(1.0, j as f64 * phi)).collect();
    ComplexMatrix::from_diagonal(&diag)
}

/// `Z^k` with `Z|j> = exp(2 pi i j / d)|j>`. Exponents are reduced mod `d`
/// first, so `Z^d` is exactly the identity.
pub fn generalized_phase(d: usize, k: i64) -> ComplexMatrix {
    let dd = d as i64;
    let diag: Vec<C64> = (0..dd)
        .map(|j| {
            let e = (j * k).rem_euclid(dd);
            if e == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::from_polar(1.0, TAU * e as f64 / d as f64)
            }
        })
        .collect();
    ComplexMatrix::from_diagonal(&diag)
}

fn check_priors(priors: &[f64]) -> Result<()> {
    if priors.is_empty() {
        return Err(Error::InvalidGame("a game needs at least one outcome".into()));
    }
    if let Some(p) = priors.iter().find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p))) {
        return Err(Error::InvalidGame(format!("prior {p} is outside [0, 1]")));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > PRIOR_TOL {
        return Err(Error::InvalidGame(format!("priors sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGame {
    dim: usize,
    priors: Vec<f64>,
    phases: Vec<f64>,
}

impl PhaseGame {
    /// Entries are `(prior, phase)` with phases in `[0, 2 pi)`.
    pub fn new(dim: usize, entries: &[(f64, f64)]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGame("dimension must be positive".into()));
        }
        let priors: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let phases: Vec<f64> = entries.iter().map(|e| e.1).collect();
        check_priors(&priors)?;
        if let Some(phi) = phases.iter().find(|p| !(p.is_finite() && (0.0..TAU).contains(*p))) {
            return Err(Error::InvalidGame(format!("phase {phi} is outside [0, 2pi)")));
        }
        for a in 0..phases.len() {
            for b in a + 1..phases.len() {
                let gap = (phases[a] - phases[b]).abs();
                if gap.min(TAU - gap) <= PHASE_TOL {
                    return Err(Error::InvalidGame(format!("outcomes {a} and {b} share the phase {}", phases[a])));
                }
            }
        }
        Ok(Self { dim, priors, phases })
    }

    /// Uniform priors on the phases `2 pi k / d`, `k = 0..d`.
    pub fn canonical(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidGame("the canonical game needs d >= 2".into()));
        }
        let entries: Vec<(f64, f64)> = (0..d).map(|k| (1.0 / d as f64, TAU * k as f64 / d as f64)).collect();
        Self::new(d, &entries)
    }

    pub fn random_with(d: usize, m: usize, rng: &mut SeededRng) -> Result<Self> {
        let priors = random::random_probabilities(m, rng);
        let phases: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * TAU).collect();
        let entries: Vec<(f64, f64)> = priors.into_iter().zip(phases).collect();
        Self::new(d, &entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn unitaries(&self) -> Vec<ComplexMatrix> {
        self.phases.iter().map(|phi| phase_channel(self.dim, *phi)).collect()
    }

    /// Same game with a zero-prior outcome appended.
    pub fn with_extra_outcome(&self, phase: f64) -> Result<Self> {
        let mut entries: Vec<(f64, f64)> = self.priors.iter().copied().zip(self.phases.iter().copied()).collect();
        entries.push((0.0, phase));
        Self::new(self.dim, &entries)
    }
}

#[derive(Debug, Clone)]
pub struct ChannelGame {
    dim: usize,
    priors: Vec<f64>,
    channels: Vec<Vec<ComplexMatrix>>,
}

fn trace_preservation_error(kraus: &[ComplexMatrix], d: usize) -> f64 {
    let mut sum = ComplexMatrix::zeros(d, d);
    for k in kraus {
        sum = &sum + &k.dagger().matmul(k);
    }
    (&sum - &ComplexMatrix::identity(d)).max_abs()
}

impl ChannelGame {
    pub fn new(dim: usize, priors: Vec<f64>, channels: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        check_priors(&priors)?;
        if priors.len() != channels.len() {
            return Err(Error::InvalidGame(format!("{} priors for {} channels", priors.len(), channels.len())));
        }
        for (k, kraus) in channels.iter().enumerate() {
            if kraus.is_empty() {
                return Err(Error::InvalidGame(format!("channel {k} has no Kraus operators")));
            }
            if let Some(bad) = kraus.iter().find(|m| m.rows() != dim || m.cols() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: bad.rows().max(bad.cols()) });
            }
            let err = trace_preservation_error(kraus, dim);
            if err > TRACE_PRESERVING_TOL {
                return Err(Error::InvalidGame(format!("channel {k} is not trace preserving (deviation {err:e})")));
            }
        }
        Ok(Self { dim, priors, channels })
    }

    pub fn from_phase_game(game: &PhaseGame) -> Self {
        Self {
            dim: game.dim,
            priors: game.priors.clone(),
            channels: game.unitaries().into_iter().map(|u| vec![u]).collect(),
        }
    }

    /// Channels with one to three Kraus operators cut from Haar isometries.
    pub fn random_with(d: usize, m: usize, rng: &mut SeededRng) -> Result<Self> {
        let priors = random::random_probabilities(m, rng);
        let channels = (0..m)
            .map(|_| {
                let r = rng.random_range(1..=3usize);
                let v = random::random_isometry_with(d * r, d, rng);
                (0..r).map(|a| ComplexMatrix::from_fn(d, d, |i, j| v[(a * d + i, j)])).collect()
            })
            .collect();
        Self::new(d, priors, channels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn channels(&self) -> &[Vec<ComplexMatrix>] {
        &self.channels
    }
}

fn apply_kraus(kraus: &[ComplexMatrix], rho: &HermitianMatrix) -> HermitianMatrix {
    let d = kraus[0].rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for k in kraus {
        out = &out + &k.conjugate(rho.matrix());
    }
    HermitianMatrix::hermitian_part(&out)
}

#[derive(Debug, Clone)]
pub enum Game {
    Phase(PhaseGame),
    Channel(ChannelGame),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Phase,
    Channel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameEntryJson {
    pub prior: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<MatrixJson>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameJson {
    pub dim: usize,
    #[serde(rename = "type")]
    pub kind: GameKind,
    pub entries: Vec<GameEntryJson>,
}

impl Game {
    pub fn dim(&self) -> usize {
        match self {
            Game::Phase(g) => g.dim,
            Game::Channel(g) => g.dim,
        }
    }

    pub fn priors(&self) -> &[f64] {
        match self {
            Game::Phase(g) => &g.priors,
            Game::Channel(g) => &g.priors,
        }
    }

    /// `{(p_k, Lambda_k(rho))}`
    pub fn ensemble(&self, rho: &HermitianMatrix) -> Result<Vec<(f64, HermitianMatrix)>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        Ok(match self {
            Game::Phase(g) => g.priors.iter().zip(g.unitaries()).map(|(p, u)| (*p, rho.conjugate_by(&u))).collect(),
            Game::Channel(g) => g.priors.iter().zip(&g.channels).map(|(p, k)| (*p, apply_kraus(k, rho))).collect(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GameJson = serde_json::from_str(text)?;
        match raw.kind {
            GameKind::Phase => {
                let entries = raw
                    .entries
                    .iter()
                    .enumerate()
                    .map(|(k, e)| {
                        e.phase
                            .map(|phi| (e.prior, phi))
                            .ok_or_else(|| Error::InvalidGame(format!("entry {k} of a phase game has no phase")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Game::Phase(PhaseGame::new(raw.dim, &entries)?))
            }
            GameKind::Channel => {
                let mut priors = Vec::new();
                let mut channels = Vec::new();
                for (k, e) in raw.entries.iter().enumerate() {
                    let kraus = e
                        .kraus
                        .as_ref()
                        .ok_or_else(|| Error::InvalidGame(format!("entry {k} of a channel game has no Kraus operators")))?;
                    priors.push(e.prior);
                    channels.push(kraus.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>()?);
                }
                Ok(Game::Channel(ChannelGame::new(raw.dim, priors, channels)?))
            }
        }
    }

    pub fn to_json(&self) -> GameJson {
        match self {
            Game::Phase(g) => GameJson {
                dim: g.dim,
                kind: GameKind::Phase,
                entries: g
                    .priors
                    .iter()
                    .zip(&g.phases)
                    .map(|(p, phi)| GameEntryJson { prior: *p, phase: Some(*phi), kraus: None })
                    .collect(),
            },
            Game::Channel(g) => GameJson {
                dim: g.dim,
                kind: GameKind::Channel,
                entries: g
                    .priors
                    .iter()
                    .zip(&g.channels)
                    .map(|(p, ks)| GameEntryJson {
                        prior: *p,
                        phase: None,
                        kraus: Some(ks.iter().map(MatrixJson::from_matrix).collect()),
                    })
                    .collect(),
            },
        }
    }
}

impl From<PhaseGame> for Game {
    fn from(g: PhaseGame) -> Self {
        Game::Phase(g)
    }
}

impl From<ChannelGame> for Game {
    fn from(g: ChannelGame) -> Self {
        Game::Channel(g)
    }
}

#[derive(Debug, Clone)]
pub struct Povm(Vec<HermitianMatrix>);

impl Povm {
    pub fn new(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("a POVM needs at least one element".into()));
        };
        let d = first.dim();
        let mut sum = HermitianMatrix::zeros(d);
        for (k, m) in elements.iter().enumerate() {
            if m.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
            }
            let low = m.min_eigenvalue();
            if low < -POVM_TOL {
                return Err(Error::InvalidArgument(format!("POVM element {k} has eigenvalue {low:e}")));
            }
            sum = &sum + m;
        }
        let dev = (sum.matrix() - &ComplexMatrix::identity(d)).max_abs();
        if dev > POVM_TOL {
            return Err(Error::InvalidArgument(format!("POVM elements sum to identity only within {dev:e}")));
        }
        Ok(Self(elements))
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.0
    }

    /// Clamps negative parts and renormalizes with `S^{-1/2} M_k S^{-1/2}`,
    /// `S = sum M_k`.
    fn from_near_feasible(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let d = elements[0].dim();
        let clamped: Vec<HermitianMatrix> = elements.iter().map(|m| m.map_spectrum(|x| x.max(0.0))).collect();
        let mut sum = HermitianMatrix::zeros(d);
        for m in &clamped {
            sum = &sum + m;
        }
        let inv_sqrt = sum.map_spectrum(|x| 1.0 / x.sqrt());
        Self::new(clamped.iter().map(|m| m.conjugate_by(inv_sqrt.matrix())).collect())
    }
}

#[derive(Debug, Clone)]
pub struct Success {
    /// From the measurement program.
    pub probability: f64,
    /// From the minimum-trace program.
    pub min_trace_value: f64,
    pub povm: Povm,
}

/// `max sum p_k Tr[rho_k M_k]` over POVMs, as `min sum <-p_k rho_k, M_k>`
/// with `sum_k M_k = 1` imposed on a Hermitian basis.
fn measurement_program(ensemble: &[(f64, HermitianMatrix)]) -> Result<ConicProblem> {
    let d = ensemble[0].1.dim();
    let m = ensemble.len();
    let blocks = vec![BlockKind::Psd(d); m];
    let cost = ensemble.iter().map(|(p, r)| BlockValue::Hermitian(r.scale(-p))).collect();
    let constraints = hermitian_basis(d)
        .into_iter()
        .map(|b| {
            let rhs = b.trace();
            Constraint::new((0..m).map(|k| (k, BlockValue::Hermitian(b.clone()))).collect(), rhs)
        })
        .collect();
    ConicProblem::new(blocks, cost, constraints)
}

/// `min Tr Q` subject to `Q >= p_k rho_k`, with `T_k = Q - p_k rho_k >= 0` as
/// the variables: `T_k - T_0 = p_0 rho_0 - p_k rho_k` and objective
/// `Tr T_0 + p_0`.
fn min_trace_program(ensemble: &[(f64, HermitianMatrix)]) -> Result<ConicProblem> {
    let d = ensemble[0].1.dim();
    let m = ensemble.len();
    let mut cost = vec![BlockValue::Hermitian(HermitianMatrix::identity(d))];
    cost.extend((1..m).map(|_| BlockValue::Hermitian(HermitianMatrix::zeros(d))));
    let basis = hermitian_basis(d);
    let first = ensemble[0].1.scale(ensemble[0].0);
    let mut constraints = Vec::with_capacity((m - 1) * d * d);
    for (k, (p, r)) in ensemble.iter().enumerate().skip(1) {
        let rhs_op = &first - &r.scale(*p);
        for b in &basis {
            constraints.push(Constraint::new(
                vec![(k, BlockValue::Hermitian(b.clone())), (0, BlockValue::Hermitian(b.scale(-1.0)))],
                b.inner(&rhs_op),
            ));
        }
    }
    ConicProblem::new(vec![BlockKind::Psd(d); m], cost, constraints)
}

/// Optimal success probability for an arbitrary ensemble, computed by both
/// programs and cross-checked.
pub fn ensemble_success(ensemble: &[(f64, HermitianMatrix)], options: &SolverOptions) -> Result<Success> {
    if ensemble.is_empty() {
        return Err(Error::InvalidGame("empty ensemble".into()));
    }
    let d = ensemble[0].1.dim();
    if let Some((_, r)) = ensemble.iter().find(|(_, r)| r.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: r.dim() });
    }
    // Outcomes with zero prior never contribute, so they get the zero
    // element and stay out of the programs.
    let active: Vec<usize> = (0..ensemble.len()).filter(|&k| ensemble[k].0 > 0.0).collect();
    let reduced: Vec<(f64, HermitianMatrix)> = active.iter().map(|&k| ensemble[k].clone()).collect();
    if reduced.is_empty() {
        return Err(Error::InvalidGame("every prior is zero".into()));
    }
    // Identical states carry no information: guess the likeliest outcome.
    let same = reduced.iter().all(|(_, r)| (r.matrix() - reduced[0].1.matrix()).max_abs() <= IDENTICAL_STATES);
    if same {
        let (best, _) = reduced
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, (p, _))| if *p > acc.1 { (k, *p) } else { acc });
        let probability = reduced[best].0 * reduced[best].1.trace();
        let mut elements = vec![HermitianMatrix::zeros(d); ensemble.len()];
        elements[active[best]] = HermitianMatrix::identity(d);
        return Ok(Success { probability, min_trace_value: probability, povm: Povm(elements) });
    }
    let primal = measurement_program(&reduced)?.solve(options).require_optimal()?;
    let probability = -primal.primal_value;
    let min_trace_value = if reduced.len() == 1 {
        reduced[0].0 * reduced[0].1.trace()
    } else {
        let sol = min_trace_program(&reduced)?.solve(options).require_optimal()?;
        sol.primal_value + reduced[0].0 * reduced[0].1.trace()
    };
    if (probability - min_trace_value).abs() > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck(format!(
            "measurement program gives {probability}, minimum-trace program gives {min_trace_value}"
        )));
    }
    let solved = Povm::from_near_feasible(
        primal.primal.iter().map(|b| b.as_hermitian().expect("PSD block").clone()).collect(),
    )?;
    let mut elements = vec![HermitianMatrix::zeros(d); ensemble.len()];
    for (slot, m) in active.iter().zip(solved.0) {
        elements[*slot] = m;
    }
    Ok(Success { probability, min_trace_value, povm: Povm(elements) })
}

pub fn success_probability(game: &Game, rho: &DensityMatrix) -> Result<Success> {
    success_probability_with(game, rho, &SolverOptions::default())
}

pub fn success_probability_with(game: &Game, rho: &DensityMatrix, options: &SolverOptions) -> Result<Success> {
    ensemble_success(&game.ensemble(rho)?, options)
}

pub fn canonical_game(d: usize) -> Result<PhaseGame> {
    PhaseGame::canonical(d)
}

/// Best success probability with an incoherent probe. Phase channels fix
/// diagonal states, so a phase game reduces to guessing the likeliest
/// outcome. For channel games the value is convex in the probe, so its
/// maximum over incoherent states sits at a basis projector.
pub fn incoherent_baseline(game: &Game) -> Result<f64> {
    incoherent_baseline_with(game, &SolverOptions::default())
}

pub fn incoherent_baseline_with(game: &Game, options: &SolverOptions) -> Result<f64> {
    match game {
        Game::Phase(g) => Ok(g.priors.iter().copied().fold(0.0, f64::max)),
        Game::Channel(g) => {
            let mut best = 0.0f64;
            for j in 0..g.dim {
                let p = success_probability_with(game, &DensityMatrix::basis(g.dim, j), options)?.probability;
                best = best.max(p);
            }
            Ok(best)
        }
    }
}

pub fn advantage_ratio(rho: &DensityMatrix, game: &Game) -> Result<f64> {
    let p = success_probability(game, rho)?.probability;
    Ok(p / incoherent_baseline(game)?)
}

#[derive(Debug, Clone, Copy)]
pub struct TheoremOptions {
    pub phase_games: usize,
    pub channel_games: usize,
    /// Largest number of outcomes in sampled games (at least 2).
    pub max_outcomes: usize,
    pub seed: u64,
    pub equality_tol: f64,
    pub inequality_tol: f64,
    pub solver: SolverOptions,
}

impl Default for TheoremOptions {
    fn default() -> Self {
        Self {
            phase_games: 20,
            channel_games: 10,
            max_outcomes: 4,
            seed: 0,
            equality_tol: 1e-5,
            inequality_tol: 1e-6,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub dim: usize,
    pub roc: f64,
    pub canonical_success: f64,
    /// `d * p_succ` at the canonical game
    pub canonical_ratio: f64,
    /// `|canonical_ratio - (1 + roc)|`
    pub equality_error: f64,
    pub equality_holds: bool,
    pub phase_games: usize,
    /// `max (ratio - (1 + roc))` over sampled phase games
    pub max_phase_excess: f64,
    pub channel_games: usize,
    /// `max (p_succ - (1 + roc) * baseline)` over sampled channel games
    pub max_channel_excess: f64,
    /// `max (p_succ / baseline - (1 + roc))` over sampled channel games
    pub max_channel_ratio_excess: f64,
    pub inequalities_hold: bool,
    pub passed: bool,
}

/// Checks the equality `d p_succ = 1 + C_R` at the canonical game, and the
/// bound `p_succ <= (1 + C_R) * baseline` on randomly sampled phase and
/// channel games.
pub fn verify_operational_theorem(rho: &DensityMatrix, opts: &TheoremOptions) -> Result<TheoremReport> {
    let sopts = opts.solver;
    let d = rho.dim();
    if d < 2 {
        return Err(Error::InvalidArgument("the operational check needs d >= 2".into()));
    }
    let roc = roc_exact_with(rho, &sopts)?.value;
    let canonical: Game = PhaseGame::canonical(d)?.into();
    let canonical_success = success_probability_with(&canonical, rho, &sopts)?.probability;
    let canonical_ratio = d as f64 * canonical_success;
    let equality_error = (canonical_ratio - (1.0 + roc)).abs();

    let mut rng = random::rng(opts.seed);
    let max_m = opts.max_outcomes.max(2);
    let mut max_phase_excess = f64::NEG_INFINITY;
    for _ in 0..opts.phase_games {
        let m = rng.random_range(2..=max_m);
        let game: Game = PhaseGame::random_with(d, m, &mut rng)?.into();
        let p = success_probability_with(&game, rho, &sopts)?.probability;
        let ratio = p / incoherent_baseline_with(&game, &sopts)?;
        max_phase_excess = max_phase_excess.max(ratio - (1.0 + roc));
    }
    let mut max_channel_excess = f64::NEG_INFINITY;
    let mut max_channel_ratio_excess = f64::NEG_INFINITY;
    for _ in 0..opts.channel_games {
        let m = rng.random_range(2..=max_m);
        let game: Game = ChannelGame::random_with(d, m, &mut rng)?.into();
        let p = success_probability_with(&game, rho, &sopts)?.probability;
        let baseline = incoherent_baseline_with(&game, &sopts)?;
        max_channel_excess = max_channel_excess.max(p - (1.0 + roc) * baseline);
        max_channel_ratio_excess = max_channel_ratio_excess.max(p / baseline - (1.0 + roc));
    }
    let equality_holds = equality_error <= opts.equality_tol;
    let inequalities_hold = max_phase_excess <= opts.inequality_tol && max_channel_excess <= opts.inequality_tol;
    Ok(TheoremReport {
        dim: d,
        roc,
        canonical_success,
        canonical_ratio,
        equality_error,
        equality_holds,
        phase_games: opts.phase_games,
        max_phase_excess,
        channel_games: opts.channel_games,
        max_channel_excess,
        max_channel_ratio_excess,
        inequalities_hold,
        passed: equality_holds && inequalities_hold,
    })
}

/// Kraus operators with at most one nonzero entry per column, summing to a
/// trace-preserving map. Each maps basis states to basis states.
#[derive(Debug, Clone)]
pub struct IncoherentInstrument(Vec<ComplexMatrix>);

impl IncoherentInstrument {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::InvalidArgument("an instrument needs at least one Kraus operator".into()));
        };
        let d = first.rows();
        for (l, k) in kraus.iter().enumerate() {
            if k.rows() != d || k.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: k.rows().max(k.cols()) });
            }
            for c in 0..d {
                let nonzero = (0..d).filter(|&r| k[(r, c)].norm() > KRAUS_ZERO).count();
                if nonzero > 1 {
                    return Err(Error::InvalidArgument(format!(
                        "Kraus operator {l} has {nonzero} nonzero entries in column {c}"
                    )));
                }
            }
        }
        let err = trace_preservation_error(&kraus, d);
        if err > TRACE_PRESERVING_TOL {
            return Err(Error::InvalidArgument(format!("instrument is not trace preserving (deviation {err:e})")));
        }
        Ok(Self(kraus))
    }

    /// `{|j><j|}`: complete dephasing with the outcome recorded.
    pub fn dephasing(d: usize) -> Self {
        Self((0..d).map(|j| HermitianMatrix::basis_projector(d, j).into_matrix()).collect())
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0[0].rows()
    }

    /// Branches `(Tr[K rho K^H], K rho K^H / Tr)` with weight at least
    /// `BRANCH_CUTOFF`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<Vec<(f64, DensityMatrix)>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: rho.dim() });
        }
        let mut out = Vec::new();
        for k in &self.0 {
            let branch = HermitianMatrix::hermitian_part(&k.conjugate(rho.matrix()));
            let w = branch.trace();
            if w >= BRANCH_CUTOFF {
                out.push((w, DensityMatrix::from_psd_clamped(&branch)?));
            }
        }
        Ok(out)
    }
}

/// Random instrument with `m` Kraus operators. Operator `l` sends column `j`
/// to row `sigma_l(j)` for a random permutation `sigma_l`, with a complex
/// Gaussian amplitude. For `m > 1` amplitudes are zeroed at random (each
/// column keeps at least one), then every column is normalized over `l`.
/// Injective row maps make `K_l^H K_l` diagonal, so the normalization gives
/// exact trace preservation.
pub fn random_incoherent_instrument(d: usize, m: usize, seed: u64) -> Result<IncoherentInstrument> {
    random_incoherent_instrument_with(d, m, &mut random::rng(seed))
}

pub fn random_incoherent_instrument_with(d: usize, m: usize, rng: &mut SeededRng) -> Result<IncoherentInstrument> {
    if m == 0 || d == 0 {
        return Err(Error::InvalidArgument("instrument needs d >= 1 and m >= 1".into()));
    }
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        rows.push(perm);
    }
    let mut amp: Vec<Vec<C64>> = (0..m).map(|_| (0..d).map(|_| random::gaussian_complex(rng)).collect()).collect();
    if m > 1 {
        for j in 0..d {
            for a in amp.iter_mut() {
                if rng.random::<f64>() < 1.0 / 3.0 {
                    a[j] = C64::new(0.0, 0.0);
                }
            }
            if amp.iter().all(|a| a[j].norm() == 0.0) {
                let l = rng.random_range(0..m);
                amp[l][j] = random::gaussian_complex(rng);
            }
        }
    }
    for j in 0..d {
        let n = amp.iter().map(|a| a[j].norm_sqr()).sum::<f64>().sqrt();
        for a in amp.iter_mut() {
            a[j] /= n;
        }
    }
    let kraus = (0..m)
        .map(|l| {
            let mut k = ComplexMatrix::zeros(d, d);
            for j in 0..d {
                k[(rows[l][j], j)] = amp[l][j];
            }
            k
        })
        .collect();
    IncoherentInstrument::new(kraus)
}

pub fn apply_instrument(instrument: &IncoherentInstrument, rho: &DensityMatrix) -> Result<Vec<(f64, DensityMatrix)>> {
    instrument.apply(rho)
}
