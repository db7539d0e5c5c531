//! Coherence witnesses: validation, lower bounds, and the two programs that
//! turn measured expectation values into statements about coherence.
//!
//! A witness is a Hermitian `W` with `Delta(W) >= 0` and `W <= 1`. For every
//! state, `C_R(rho) >= max(0, -Tr[W rho])`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::matrix::{dephase, hermitian_basis, HermitianMatrix};
use crate::sdp::{BlockKind, BlockValue, ConicProblem, Constraint, SolverOptions};
use crate::state::DensityMatrix;

pub const WITNESS_TOL: f64 = 1e-10;
/// Bound on `|c_i|` in [`best_witness_from_data`].
pub const COEFFICIENT_BOX: f64 = 1e6;
/// Relative Hilbert-Schmidt residual below which an observable counts as
/// a combination of the identity and earlier observables.
const DEPENDENCE_TOL: f64 = 1e-9;
const CONSISTENCY_TOL: f64 = 1e-7;
const INFEASIBLE_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub valid: bool,
    pub min_diagonal: f64,
    pub max_eigenvalue: f64,
    pub violations: Vec<String>,
}

pub fn validate_witness(w: &HermitianMatrix) -> WitnessCheck {
    let min_diagonal = w.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    let max_eigenvalue = w.max_eigenvalue();
    let mut violations = Vec::new();
    if min_diagonal < -WITNESS_TOL {
        violations.push(format!("diagonal entry {min_diagonal:e} is negative"));
    }
    if max_eigenvalue > 1.0 + WITNESS_TOL {
        violations.push(format!("largest eigenvalue {max_eigenvalue} exceeds 1"));
    }
    WitnessCheck { valid: violations.is_empty(), min_diagonal, max_eigenvalue, violations }
}

/// A validated witness.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceWitness(HermitianMatrix);

impl CoherenceWitness {
    pub fn new(w: HermitianMatrix) -> Result<Self> {
        let check = validate_witness(&w);
        if check.valid {
            Ok(Self(w))
        } else {
            Err(Error::InvalidWitness(check.violations.join("; ")))
        }
    }

    /// `(Delta(rho) - rho) / ||Delta(rho)||_inf`. The diagonal of a state is
    /// never zero, so the normalization is always defined.
    pub fn faithful(rho: &DensityMatrix) -> Self {
        let diag_max = rho.diagonal().into_iter().fold(0.0, f64::max);
        let w = (&dephase(rho.hermitian()) - rho.hermitian()).scale(1.0 / diag_max);
        Self(w)
    }

    pub fn operator(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_inner(self) -> HermitianMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// `max(0, -Tr[W rho])`
pub fn witness_lower_bound(rho: &DensityMatrix, w: &CoherenceWitness) -> Result<f64> {
    if rho.dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: w.dim() });
    }
    Ok((-w.operator().inner(rho)).max(0.0))
}

/// Observables with measured expectation values, each optionally relaxed to
/// the interval `o_i +- slack_i`.
#[derive(Debug, Clone)]
pub struct WitnessDataset {
    dim: usize,
    observables: Vec<HermitianMatrix>,
    expectations: Vec<f64>,
    slack: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetJson {
    pub dim: usize,
    pub observables: Vec<MatrixJson>,
    pub expectations: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<Vec<f64>>,
}

impl WitnessDataset {
    pub fn new(observables: Vec<HermitianMatrix>, expectations: Vec<f64>) -> Result<Self> {
        let k = observables.len();
        Self::with_slack(observables, expectations, vec![0.0; k])
    }

    pub fn with_slack(observables: Vec<HermitianMatrix>, expectations: Vec<f64>, slack: Vec<f64>) -> Result<Self> {
        let Some(first) = observables.first() else {
            return Err(Error::InvalidArgument("dataset has no observables".into()));
        };
        let dim = first.dim();
        if expectations.len() != observables.len() {
            return Err(Error::DimensionMismatch { expected: observables.len(), got: expectations.len() });
        }
        if slack.len() != observables.len() {
            return Err(Error::DimensionMismatch { expected: observables.len(), got: slack.len() });
        }
        if let Some(o) = observables.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: o.dim() });
        }
        if expectations.iter().chain(&slack).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("expectations and slack must be finite".into()));
        }
        if slack.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidArgument("slack must be nonnegative".into()));
        }
        Ok(Self { dim, observables, expectations, slack })
    }

    /// Exact expectation values of `observables` in `rho`.
    pub fn from_state(rho: &DensityMatrix, observables: Vec<HermitianMatrix>) -> Result<Self> {
        let expectations = observables.iter().map(|o| o.inner(rho)).collect();
        let data = Self::new(observables, expectations)?;
        if data.dim != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), got: data.dim });
        }
        Ok(data)
    }

    /// The `d^2` Hermitian basis elements, which determine the state.
    pub fn informationally_complete(rho: &DensityMatrix) -> Self {
        Self::from_state(rho, hermitian_basis(rho.dim())).expect("basis matches the state dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn observables(&self) -> &[HermitianMatrix] {
        &self.observables
    }

    pub fn expectations(&self) -> &[f64] {
        &self.expectations
    }

    pub fn slack(&self) -> &[f64] {
        &self.slack
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DatasetJson = serde_json::from_str(text)?;
        let observables = raw.observables.iter().map(MatrixJson::to_hermitian).collect::<Result<Vec<_>>>()?;
        if let Some(o) = observables.iter().find(|o| o.dim() != raw.dim) {
            return Err(Error::DimensionMismatch { expected: raw.dim, got: o.dim() });
        }
        let k = observables.len();
        Self::with_slack(observables, raw.expectations, raw.slack.unwrap_or_else(|| vec![0.0; k]))
    }

    pub fn to_json(&self) -> DatasetJson {
        DatasetJson {
            dim: self.dim,
            observables: self.observables.iter().map(MatrixJson::from).collect(),
            expectations: self.expectations.clone(),
            slack: self.slack.iter().any(|v| *v > 0.0).then(|| self.slack.clone()),
        }
    }

    /// Rejects expectations outside the spectrum range of their observable.
    fn check_ranges(&self) -> Result<()> {
        for (i, (o, v)) in self.observables.iter().zip(&self.expectations).enumerate() {
            let ev = o.eigenvalues();
            let (lo, hi) = (ev[0], ev[ev.len() - 1]);
            let tol = self.slack[i] + CONSISTENCY_TOL * (1.0 + lo.abs().max(hi.abs()));
            if *v < lo - tol || *v > hi + tol {
                return Err(Error::InfeasibleData(format!(
                    "expectation {v} of observable {i} lies outside its spectrum [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Indices of the observables that enter the programs. Relaxed
    /// observables are always kept. Exact ones that are combinations of the
    /// identity and earlier exact ones are dropped after checking that their
    /// expectation agrees with the combination.
    fn independent(&self) -> Result<Vec<usize>> {
        let d = self.dim;
        // orthonormal directions with their implied expectation values
        let mut basis: Vec<(HermitianMatrix, f64)> =
            vec![(HermitianMatrix::identity(d).scale(1.0 / (d as f64).sqrt()), 1.0 / (d as f64).sqrt())];
        let mut kept = Vec::new();
        for (i, o) in self.observables.iter().enumerate() {
            if self.slack[i] > 0.0 {
                kept.push(i);
                continue;
            }
            let norm = o.inner(o).sqrt();
            let mut residual = o.clone();
            let mut predicted = 0.0;
            for (q, e) in &basis {
                let coeff = o.inner(q);
                residual = &residual - &q.scale(coeff);
                predicted += coeff * e;
            }
            let rnorm = residual.inner(&residual).sqrt();
            if rnorm <= DEPENDENCE_TOL * norm.max(f64::MIN_POSITIVE) {
                let o_i = self.expectations[i];
                if (o_i - predicted).abs() > CONSISTENCY_TOL * (1.0 + norm) {
                    return Err(Error::InfeasibleData(format!(
                        "observable {i} is a combination of the identity and other observables; \
                         its expectation {o_i} disagrees with the implied value {predicted}"
                    )));
                }
                continue;
            }
            basis.push((residual.scale(1.0 / rnorm), (self.expectations[i] - predicted) / rnorm));
            kept.push(i);
        }
        Ok(kept)
    }
}

/// Optimal witness in the span of the measured observables and the identity.
#[derive(Debug, Clone)]
pub struct WitnessFit {
    /// `max(0, value)`
    pub bound: f64,
    /// `-(sum c_i o_i + m) - sum slack_i |c_i|`
    pub value: f64,
    /// One coefficient per observable of the dataset, zero for dropped ones.
    pub coefficients: Vec<f64>,
    pub offset: f64,
    pub witness: CoherenceWitness,
    /// Some `|c_i|` reached the numerical box.
    pub box_active: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessFitJson {
    pub bound: f64,
    pub coefficients: Vec<f64>,
    pub offset: f64,
    pub box_active: bool,
}

impl WitnessFit {
    pub fn to_json(&self) -> WitnessFitJson {
        WitnessFitJson {
            bound: self.bound,
            coefficients: self.coefficients.clone(),
            offset: self.offset,
            box_active: self.box_active,
        }
    }
}

fn diag_vector(h: &HermitianMatrix, scale: f64) -> BlockValue {
    BlockValue::Vector(h.diagonal().into_iter().map(|v| v * scale).collect())
}

fn unit(n: usize, at: &[(usize, f64)]) -> BlockValue {
    let mut v = vec![0.0; n];
    for (i, x) in at {
        v[*i] = *x;
    }
    BlockValue::Vector(v)
}

pub fn best_witness_from_data(data: &WitnessDataset) -> Result<WitnessFit> {
    best_witness_from_data_with(data, &SolverOptions::default())
}

/// Maximizes `-(sum c_i o_i + m)` over `W = sum c_i O_i + m 1` subject to
/// `Delta(W) >= 0`, `W <= 1` and `|c_i| <= COEFFICIENT_BOX`.
///
/// Written as the dual of a standard-form program: the free variables
/// `y = (c, m, a)` carry one equality constraint each, and the slack blocks
/// are `1 - W`, `diag(W)`, the box and, for relaxed observables, `a_i -+ c_i`.
pub fn best_witness_from_data_with(data: &WitnessDataset, options: &SolverOptions) -> Result<WitnessFit> {
    data.check_ranges()?;
    let kept = data.independent()?;
    let d = data.dim;
    let k = kept.len();
    let relaxed: Vec<usize> = (0..k).filter(|&j| data.slack[kept[j]] > 0.0).collect();
    let r = relaxed.len();

    let mut blocks = vec![BlockKind::Psd(d), BlockKind::Nonneg(d)];
    let mut cost = vec![BlockValue::Hermitian(HermitianMatrix::identity(d)), BlockValue::Vector(vec![0.0; d])];
    if k > 0 {
        blocks.push(BlockKind::Nonneg(2 * k));
        cost.push(BlockValue::Vector(vec![1.0; 2 * k]));
    }
    let abs_block = blocks.len();
    if r > 0 {
        blocks.push(BlockKind::Nonneg(2 * r));
        cost.push(BlockValue::Vector(vec![0.0; 2 * r]));
    }
    let inv_box = 1.0 / COEFFICIENT_BOX;

    let mut constraints = Vec::with_capacity(k + 1 + r);
    for (j, &i) in kept.iter().enumerate() {
        let o = &data.observables[i];
        let mut terms = vec![(0, BlockValue::Hermitian(o.clone())), (1, diag_vector(o, -1.0))];
        terms.push((2, unit(2 * k, &[(2 * j, inv_box), (2 * j + 1, -inv_box)])));
        if let Some(pos) = relaxed.iter().position(|&x| x == j) {
            terms.push((abs_block, unit(2 * r, &[(2 * pos, 1.0), (2 * pos + 1, -1.0)])));
        }
        constraints.push(Constraint::new(terms, -data.expectations[i]));
    }
    constraints.push(Constraint::new(
        vec![(0, BlockValue::Hermitian(HermitianMatrix::identity(d))), (1, BlockValue::Vector(vec![-1.0; d]))],
        -1.0,
    ));
    for (pos, &j) in relaxed.iter().enumerate() {
        let i = kept[j];
        constraints.push(Constraint::new(
            vec![(abs_block, unit(2 * r, &[(2 * pos, -1.0), (2 * pos + 1, -1.0)]))],
            -data.slack[i],
        ));
    }

    let sol = ConicProblem::new(blocks, cost, constraints)?.solve(options).require_optimal()?;
    let mut coefficients = vec![0.0; data.len()];
    for (j, &i) in kept.iter().enumerate() {
        coefficients[i] = sol.dual[j];
    }
    let mut offset = sol.dual[k];
    let (coefficients, offset, w) = repair_witness(data, coefficients, &mut offset);
    let value = -(coefficients.iter().zip(&data.expectations).map(|(c, o)| c * o).sum::<f64>() + offset)
        - coefficients.iter().zip(&data.slack).map(|(c, e)| c.abs() * e).sum::<f64>();
    let box_active = coefficients.iter().any(|c| c.abs() >= COEFFICIENT_BOX * (1.0 - 1e-6));
    Ok(WitnessFit { bound: value.max(0.0), value, coefficients, offset, witness: w, box_active })
}

fn combine(data: &WitnessDataset, c: &[f64], m: f64) -> HermitianMatrix {
    let mut w = HermitianMatrix::identity(data.dim).scale(m);
    for (ci, o) in c.iter().zip(&data.observables) {
        if *ci != 0.0 {
            w = &w + &o.scale(*ci);
        }
    }
    w
}

/// Moves the solver's near-feasible witness into the witness set exactly:
/// shift the offset to clear negative diagonal entries, then scale down if
/// the largest eigenvalue exceeds one. Scaling by a positive factor keeps
/// the diagonal nonnegative.
fn repair_witness(data: &WitnessDataset, mut c: Vec<f64>, m: &mut f64) -> (Vec<f64>, f64, CoherenceWitness) {
    let mut w = combine(data, &c, *m);
    let min_diag = w.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    if min_diag < 0.0 {
        *m -= min_diag;
        w = combine(data, &c, *m);
    }
    let top = w.max_eigenvalue();
    if top > 1.0 {
        c.iter_mut().for_each(|v| *v /= top);
        *m /= top;
        w = combine(data, &c, *m);
    }
    let w = CoherenceWitness::new(w).expect("repaired witness satisfies both conditions");
    (c, *m, w)
}

#[derive(Debug, Clone)]
pub struct MinRocFit {
    pub min_roc: f64,
    /// A state matching the data with robustness `min_roc`.
    pub state: DensityMatrix,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinRocJson {
    pub min_roc: f64,
}

impl MinRocFit {
    pub fn to_json(&self) -> MinRocJson {
        MinRocJson { min_roc: self.min_roc }
    }
}

pub fn min_roc_from_data(data: &WitnessDataset) -> Result<MinRocFit> {
    min_roc_from_data_with(data, &SolverOptions::default())
}

/// Minimizes `Tr T` over PSD `rho'` and `T` with `T + rho'` diagonal,
/// `Tr rho' = 1` and the measured expectations. `T + rho'` is the diagonal
/// operator `D` of a pseudomixture, so the optimum is the smallest
/// robustness of any state matching the data.
pub fn min_roc_from_data_with(data: &WitnessDataset, options: &SolverOptions) -> Result<MinRocFit> {
    data.check_ranges()?;
    let kept = data.independent()?;
    let d = data.dim;
    let relaxed: Vec<usize> = kept.iter().copied().filter(|&i| data.slack[i] > 0.0).collect();
    let r = relaxed.len();

    let mut blocks = vec![BlockKind::Psd(d), BlockKind::Psd(d)];
    let mut cost = vec![BlockValue::Hermitian(HermitianMatrix::zeros(d)), BlockValue::Hermitian(HermitianMatrix::identity(d))];
    if r > 0 {
        blocks.push(BlockKind::Nonneg(2 * r));
        cost.push(BlockValue::Vector(vec![0.0; 2 * r]));
    }
    let mut constraints = vec![Constraint::new(vec![(0, BlockValue::Hermitian(HermitianMatrix::identity(d)))], 1.0)];
    for &i in &kept {
        let o = BlockValue::Hermitian(data.observables[i].clone());
        match relaxed.iter().position(|&x| x == i) {
            None => constraints.push(Constraint::new(vec![(0, o)], data.expectations[i])),
            Some(pos) => {
                let eps = data.slack[i];
                // Tr[O rho'] - p = o - eps,  p + q = 2 eps
                constraints.push(Constraint::new(
                    vec![(0, o), (2, unit(2 * r, &[(2 * pos, -1.0)]))],
                    data.expectations[i] - eps,
                ));
                constraints.push(Constraint::new(vec![(2, unit(2 * r, &[(2 * pos, 1.0), (2 * pos + 1, 1.0)]))], 2.0 * eps));
            }
        }
    }
    for h in hermitian_basis(d).into_iter().skip(d) {
        constraints.push(Constraint::new(
            vec![(0, BlockValue::Hermitian(h.clone())), (1, BlockValue::Hermitian(h))],
            0.0,
        ));
    }

    let sol = ConicProblem::new(blocks, cost, constraints)?.solve(options);
    if !sol.is_optimal() {
        if sol.primal_infeasibility > INFEASIBLE_RESIDUAL {
            return Err(Error::InfeasibleData(format!(
                "no state reproduces the expectations (residual {:e} after {} iterations)",
                sol.primal_infeasibility, sol.iterations
            )));
        }
        return Err(Error::Solver { status: sol.status, iterations: sol.iterations });
    }
    let rho = sol.primal[0].as_hermitian().expect("PSD block");
    let state = DensityMatrix::from_psd_clamped(rho)?;
    Ok(MinRocFit { min_roc: sol.primal_value.max(0.0), state, iterations: sol.iterations })
}
