//! Block-structured semidefinite programs over Hermitian and nonnegative cones.
//!
//! Standard form (minimization):
//!
//! ```text
//! minimize    sum_b <C_b, X_b>
//! subject to  sum_b <A_ib, X_b> = b_i,   i = 1..m
//!             X_b >= 0  (Hermitian PSD or entrywise nonnegative)
//! ```
//!
//! with dual `maximize b^T y` subject to `S_b = C_b - sum_i y_i A_ib >= 0`.
//! `<A, X>` is `Re Tr[A X]` for Hermitian blocks. Hermitian blocks of size `d`
//! are embedded as real symmetric blocks of size `2d` and solved by a
//! primal-dual path-following method (see [`solver`]).

pub mod dense;
mod solver;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
pub use dense::RealMatrix;
use solver::RealProblem;

/// Relative pivot threshold for detecting dependent constraints.
pub const GRAM_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    /// Hermitian positive semidefinite block of the given dimension.
    Psd(usize),
    /// Nonnegative orthant of the given length.
    Nonneg(usize),
}

impl BlockKind {
    pub fn size(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) => n,
        }
    }
}

/// Data or variable attached to one block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Hermitian(HermitianMatrix),
    Vector(Vec<f64>),
}

impl BlockValue {
    pub fn zero(kind: BlockKind) -> Self {
        match kind {
            BlockKind::Psd(n) => BlockValue::Hermitian(HermitianMatrix::zeros(n)),
            BlockKind::Nonneg(n) => BlockValue::Vector(vec![0.0; n]),
        }
    }

    pub fn as_hermitian(&self) -> Option<&HermitianMatrix> {
        match self {
            BlockValue::Hermitian(h) => Some(h),
            BlockValue::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            BlockValue::Vector(v) => Some(v),
            BlockValue::Hermitian(_) => None,
        }
    }

    pub fn inner(&self, other: &BlockValue) -> f64 {
        match (self, other) {
            (BlockValue::Hermitian(a), BlockValue::Hermitian(b)) => a.inner(b),
            (BlockValue::Vector(a), BlockValue::Vector(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            _ => panic!("block kind mismatch"),
        }
    }

    /// Smallest eigenvalue (PSD) or smallest entry (nonnegative).
    pub fn min_cone_value(&self) -> f64 {
        match self {
            BlockValue::Hermitian(h) => h.min_eigenvalue(),
            BlockValue::Vector(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn matches(&self, kind: BlockKind) -> bool {
        match (self, kind) {
            (BlockValue::Hermitian(h), BlockKind::Psd(n)) => h.dim() == n,
            (BlockValue::Vector(v), BlockKind::Nonneg(n)) => v.len() == n,
            _ => false,
        }
    }
}

/// `sum_b <A_b, X_b> = rhs`, listing only the blocks with nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, BlockValue)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, BlockValue)>, rhs: f64) -> Self {
        Self { terms, rhs }
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    blocks: Vec<BlockKind>,
    cost: Vec<BlockValue>,
    constraints: Vec<Constraint>,
    real: RealProblem,
}

impl ConicProblem {
    /// Validates shapes and rejects linearly dependent constraint operators.
    pub fn new(blocks: Vec<BlockKind>, cost: Vec<BlockValue>, constraints: Vec<Constraint>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::IllPosed("no blocks".into()));
        }
        if constraints.is_empty() {
            return Err(Error::IllPosed("at least one constraint is required".into()));
        }
        if cost.len() != blocks.len() {
            return Err(Error::IllPosed(format!("{} cost blocks for {} blocks", cost.len(), blocks.len())));
        }
        for (b, (c, kind)) in cost.iter().zip(&blocks).enumerate() {
            if kind.size() == 0 {
                return Err(Error::IllPosed(format!("block {b} has size 0")));
            }
            if !c.matches(*kind) {
                return Err(Error::IllPosed(format!("cost of block {b} does not match {kind:?}")));
            }
        }
        for (i, con) in constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(Error::IllPosed(format!("constraint {i} has non-finite right-hand side")));
            }
            for (b, v) in &con.terms {
                let kind = blocks
                    .get(*b)
                    .ok_or_else(|| Error::IllPosed(format!("constraint {i} references block {b}")))?;
                if !v.matches(*kind) {
                    return Err(Error::IllPosed(format!("constraint {i} block {b} does not match {kind:?}")));
                }
            }
        }
        let real = RealProblem::build(&blocks, &cost, &constraints);
        let rank = real.gram_rank(GRAM_RANK_TOL);
        if rank < constraints.len() {
            return Err(Error::IllPosed(format!(
                "constraint operators are linearly dependent (rank {rank} < {})",
                constraints.len()
            )));
        }
        Ok(Self { blocks, cost, constraints, real })
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn cost(&self) -> &[BlockValue] {
        &self.cost
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn solve(&self, options: &SolverOptions) -> ConicSolution {
        self.real.solve(options)
    }

    /// `(primal residual, dual residual)` of a candidate point, both absolute 2-norms.
    pub fn residuals(&self, x: &[BlockValue], y: &[f64], s: &[BlockValue]) -> (f64, f64) {
        let mut rp = 0.0;
        for con in &self.constraints {
            let lhs: f64 = con.terms.iter().map(|(b, a)| a.inner(&x[*b])).sum();
            rp += (lhs - con.rhs).powi(2);
        }
        let mut rd = 0.0;
        for (b, kind) in self.blocks.iter().enumerate() {
            match kind {
                BlockKind::Psd(n) => {
                    let mut acc = self.cost[b].as_hermitian().unwrap().clone();
                    for (con, yi) in self.constraints.iter().zip(y) {
                        for (bb, a) in &con.terms {
                            if *bb == b {
                                acc = &acc - &a.as_hermitian().unwrap().scale(*yi);
                            }
                        }
                    }
                    let diff = &acc - s[b].as_hermitian().unwrap();
                    debug_assert_eq!(diff.dim(), *n);
                    rd += diff.matrix().frobenius_norm().powi(2);
                }
                BlockKind::Nonneg(n) => {
                    let mut acc = self.cost[b].as_vector().unwrap().to_vec();
                    for (con, yi) in self.constraints.iter().zip(y) {
                        for (bb, a) in &con.terms {
                            if *bb == b {
                                for (k, v) in a.as_vector().unwrap().iter().enumerate() {
                                    acc[k] -= yi * v;
                                }
                            }
                        }
                    }
                    let sv = s[b].as_vector().unwrap();
                    rd += (0..*n).map(|k| (acc[k] - sv[k]).powi(2)).sum::<f64>();
                }
            }
        }
        (rp.sqrt(), rd.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on primal/dual residuals and the duality gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary step factor.
    pub step_fraction: f64,
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, step_fraction: 0.98, record_history: false }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
}

/// One line of the optional iterate log.
#[derive(Debug, Clone, Serialize)]
pub struct IterateRecord {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub primal: Vec<BlockValue>,
    pub dual: Vec<f64>,
    pub slack: Vec<BlockValue>,
    pub primal_value: f64,
    pub dual_value: f64,
    /// `|primal - dual| / (1 + |primal|)`
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub history: Vec<IterateRecord>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver { status: self.status, iterations: self.iterations })
        }
    }

    /// Iterate history as JSON lines.
    pub fn history_jsonl(&self) -> String {
        self.history
            .iter()
            .map(|r| serde_json::to_string(r).expect("serializable"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// `A + iB  ->  [[A, -B], [B, A]]`
pub fn realify(h: &HermitianMatrix) -> RealMatrix {
    let d = h.dim();
    RealMatrix::from_fn(2 * d, |r, c| {
        let z = h[(r % d, c % d)];
        match (r < d, c < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`realify`] on the structured subspace, averaging the two copies.
pub fn complexify(m: &RealMatrix) -> HermitianMatrix {
    let d = m.dim() / 2;
    let c = ComplexMatrix::from_fn(d, d, |r, c| {
        C64::new(
            0.5 * (m[(r, c)] + m[(r + d, c + d)]),
            0.5 * (m[(r + d, c)] - m[(r, c + d)]),
        )
    });
    HermitianMatrix::hermitian_part(&c)
}
