//! Robustness of coherence: exact evaluation with certificates, the
//! phase-alignment closed form, and the bound chain.
//!
//! The exact value comes from the pair of programs
//!
//! ```text
//! maximize Tr[Y rho] - 1   s.t.  Y >= 0, diag(Y) = 1          (witness side, W = 1 - Y)
//! minimize Tr[D] - 1       s.t.  D diagonal, D - rho >= 0     (pseudomixture side)
//! ```
//!
//! which are dual to each other; `D = (1+s) delta` and `D - rho = s tau`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::matrix::{dephase, HermitianMatrix, C64};
use crate::random;
use crate::sdp::{BlockKind, BlockValue, ConicProblem, Constraint, SolverOptions};
use crate::state::{l1_coherence, DensityMatrix};

/// Below this value the state is treated as incoherent and no noise part is reported.
pub const ZERO_ROC: f64 = 1e-9;
/// Off-diagonal moduli below `FAST_PATH_ZERO * max|rho_kl|` are treated as absent edges.
pub const FAST_PATH_ZERO: f64 = 1e-10;
pub const FAST_PATH_PHASE_TOL: f64 = 1e-8;
/// Minimal `C_l1 - C_R` accepted as a strict gap.
pub const STRICT_GAP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Sdp,
    FastPath,
}

/// Optimal witness and pseudomixture for one state.
#[derive(Debug, Clone)]
pub struct RocCertificate {
    pub value: f64,
    /// `W* = 1 - Y*`, with zero diagonal and `W* <= 1`.
    pub witness: HermitianMatrix,
    /// `delta*`, diagonal.
    pub incoherent_part: DensityMatrix,
    /// `tau*`; `None` when `value` is zero.
    pub noise_part: Option<DensityMatrix>,
    /// `Tr[Y* rho] - 1`, the witness-side optimum.
    pub witness_value: f64,
    /// `Tr[D*] - 1`, the pseudomixture-side optimum.
    pub pseudomixture_value: f64,
    pub gap: f64,
    pub method: Method,
    pub iterations: usize,
}

impl RocCertificate {
    /// `(1+s) delta* - s tau*`
    pub fn reconstruct(&self) -> HermitianMatrix {
        let s = self.value;
        let mut m = self.incoherent_part.hermitian().scale(1.0 + s);
        if let Some(tau) = &self.noise_part {
            m = &m - &tau.hermitian().scale(s);
        }
        m
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            value: self.value,
            gap: self.gap,
            method: self.method,
            witness: MatrixJson::from(&self.witness),
            delta_star: MatrixJson::from(&self.incoherent_part),
            tau_star: self.noise_part.as_ref().map(MatrixJson::from),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub value: f64,
    pub gap: f64,
    pub method: Method,
    pub witness: MatrixJson,
    pub delta_star: MatrixJson,
    pub tau_star: Option<MatrixJson>,
}

/// The witness-side program in solver standard form: `min -Tr[rho Y]` with
/// `Tr[E_jj Y] = 1`. Its dual variables are `-diag(D)`.
pub fn roc_program(rho: &DensityMatrix) -> Result<ConicProblem> {
    let d = rho.dim();
    let constraints = (0..d)
        .map(|j| Constraint::new(vec![(0, BlockValue::Hermitian(HermitianMatrix::basis_projector(d, j)))], 1.0))
        .collect();
    ConicProblem::new(vec![BlockKind::Psd(d)], vec![BlockValue::Hermitian(-rho.hermitian())], constraints)
}

pub fn roc_exact(rho: &DensityMatrix) -> Result<RocCertificate> {
    roc_exact_with(rho, &SolverOptions::default())
}

pub fn roc_exact_with(rho: &DensityMatrix, options: &SolverOptions) -> Result<RocCertificate> {
    let d = rho.dim();
    let sol = roc_program(rho)?.solve(options).require_optimal()?;
    let y_star = sol.primal[0].as_hermitian().expect("PSD block");
    let diag_d: Vec<f64> = sol.dual.iter().map(|v| -v).collect();
    let trace_d: f64 = diag_d.iter().sum();
    let witness_value = y_star.inner(rho) - 1.0;
    let pseudomixture_value = trace_d - 1.0;

    let mut w = &HermitianMatrix::identity(d) - y_star;
    // diag(Y*) = 1 holds to the primal residual; pin it exactly
    w = &w - &dephase(&w);

    let d_mat = HermitianMatrix::from_real_diagonal(&diag_d);
    let incoherent_part = DensityMatrix::from_psd_clamped(&d_mat)?;
    let (value, noise_part) = if pseudomixture_value <= ZERO_ROC {
        (0.0, None)
    } else {
        let tau = DensityMatrix::from_psd_clamped(&(&d_mat - rho.hermitian()))?;
        (pseudomixture_value, Some(tau))
    };
    Ok(RocCertificate {
        value,
        witness: w,
        incoherent_part,
        noise_part,
        witness_value,
        pseudomixture_value,
        gap: sol.gap,
        method: Method::Sdp,
        iterations: sol.iterations,
    })
}

/// Diagonal phases `phi_j` with `(U rho U^H)_kl = |rho_kl|` for
/// `U = sum_j exp(i phi_j) |j><j|`, if they exist.
pub fn aligning_phases(rho: &DensityMatrix) -> Option<Vec<f64>> {
    let d = rho.dim();
    let max_entry = rho.matrix().max_abs();
    let cut = FAST_PATH_ZERO * max_entry;
    let edge = |k: usize, l: usize| rho[(k, l)].norm() > cut;

    let mut phase: Vec<Option<f64>> = vec![None; d];
    for root in 0..d {
        if phase[root].is_some() {
            continue;
        }
        phase[root] = Some(0.0);
        let mut stack = vec![root];
        while let Some(k) = stack.pop() {
            let pk = phase[k].expect("visited");
            for l in 0..d {
                if l == k || !edge(k, l) {
                    continue;
                }
                // e^{i phi_k} rho_kl e^{-i phi_l} real positive  <=>  phi_l = phi_k + arg rho_kl
                let want = pk + rho[(k, l)].arg();
                match phase[l] {
                    None => {
                        phase[l] = Some(want);
                        stack.push(l);
                    }
                    Some(pl) => {
                        if wrapped(want - pl).abs() > FAST_PATH_PHASE_TOL {
                            return None;
                        }
                    }
                }
            }
        }
    }
    Some(phase.into_iter().map(|p| p.expect("all nodes visited")).collect())
}

fn wrapped(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = x.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

/// `C_l1(rho)` when `rho` can be made entrywise nonnegative by a diagonal unitary.
pub fn roc_fast_path(rho: &DensityMatrix) -> Option<f64> {
    aligning_phases(rho).map(|_| l1_coherence(rho))
}

/// The diagonal unitary found by [`aligning_phases`].
pub fn aligning_unitary(rho: &DensityMatrix) -> Option<crate::matrix::ComplexMatrix> {
    aligning_phases(rho).map(|ph| {
        crate::matrix::ComplexMatrix::from_diagonal(&ph.iter().map(|p| C64::from_polar(1.0, *p)).collect::<Vec<_>>())
    })
}

/// Value with or without a certificate, choosing the closed form when possible.
#[derive(Debug, Clone)]
pub struct RocEvaluation {
    pub value: f64,
    pub method: Method,
    pub certificate: Option<RocCertificate>,
}

pub fn evaluate(rho: &DensityMatrix, with_certificate: bool, options: &SolverOptions) -> Result<RocEvaluation> {
    let fast = roc_fast_path(rho);
    match (fast, with_certificate) {
        (Some(value), false) => Ok(RocEvaluation { value, method: Method::FastPath, certificate: None }),
        (fast, _) => {
            let cert = roc_exact_with(rho, options)?;
            let method = if fast.is_some() { Method::FastPath } else { Method::Sdp };
            let value = fast.unwrap_or(cert.value);
            Ok(RocEvaluation { value, method, certificate: Some(cert) })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub dim: usize,
    pub l1_upper: f64,
    pub l1_lower: f64,
    /// `||rho - Delta(rho)||_2^2 / ||Delta(rho)||_inf`
    pub faithful_1: f64,
    /// `||rho - Delta(rho)||_2^2 / ||Delta(rho)||_2`
    pub faithful_2: f64,
    /// `||rho - Delta(rho)||_2^2`
    pub faithful_3: f64,
    pub exact: Option<f64>,
    pub violations: Vec<String>,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    /// Attaches the exact value and checks the full chain.
    pub fn with_exact(mut self, exact: f64) -> Self {
        self.exact = Some(exact);
        self.violations = chain_violations(&self, exact);
        self
    }
}

const CHAIN_TOL: f64 = 1e-7;
const FAITHFUL_TOL: f64 = 1e-9;

fn chain_violations(r: &BoundReport, exact: f64) -> Vec<String> {
    let mut v = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            v.push(what.to_string());
        }
    };
    check(r.l1_lower - CHAIN_TOL <= exact, "C_l1/(d-1) <= C_R");
    check(exact <= r.l1_upper + CHAIN_TOL, "C_R <= C_l1");
    check(r.faithful_1 - CHAIN_TOL <= exact, "faithful_1 <= C_R");
    check(r.faithful_2 <= r.faithful_1 + FAITHFUL_TOL, "faithful_2 <= faithful_1");
    check(r.faithful_3 <= r.faithful_2 + FAITHFUL_TOL, "faithful_3 <= faithful_2");
    v
}

pub fn roc_bounds(rho: &DensityMatrix) -> Result<BoundReport> {
    let d = rho.dim();
    if d < 2 {
        return Err(Error::InvalidArgument("bounds need dimension at least 2".into()));
    }
    let l1 = l1_coherence(rho);
    let diag = rho.diagonal();
    let mut off_sq = 0.0;
    for k in 0..d {
        for l in 0..d {
            if k != l {
                off_sq += rho[(k, l)].norm_sqr();
            }
        }
    }
    let diag_inf = diag.iter().copied().fold(0.0, f64::max);
    let diag_two = diag.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(BoundReport {
        dim: d,
        l1_upper: l1,
        l1_lower: l1 / (d as f64 - 1.0),
        faithful_1: off_sq / diag_inf,
        faithful_2: off_sq / diag_two,
        faithful_3: off_sq,
        exact: None,
        violations: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct GapWitness {
    pub state: DensityMatrix,
    pub roc: f64,
    pub l1: f64,
    pub trial: usize,
    pub seed: u64,
}

/// Random search over full-rank qutrits for `C_l1 - C_R > STRICT_GAP`.
pub fn find_l1_gap_witness(d: usize, seed: u64, trials: usize) -> Result<GapWitness> {
    if d != 3 {
        return Err(Error::InvalidArgument(format!("gap search is defined for d = 3, got {d}")));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = random::rng(seed);
    for trial in 0..trials {
        let rho = random::random_state_with(d, d, &mut rng)?;
        // phase-alignable states (including all pure states) have C_R = C_l1
        if roc_fast_path(&rho).is_some() {
            continue;
        }
        let roc = roc_exact(&rho)?.value;
        let l1 = l1_coherence(&rho);
        if l1 - roc > STRICT_GAP {
            return Ok(GapWitness { state: rho, roc, l1, trial, seed });
        }
    }
    Err(Error::NotFound { trials })
}
