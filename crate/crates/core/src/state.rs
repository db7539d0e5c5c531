//! Quantum states and the basic coherence quantities defined on them.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::matrix::{dephase, ComplexMatrix, HermitianMatrix, C64};

pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const PURE_NORM_TOL: f64 = 1e-12;
/// Largest `d^2` accepted by [`swap_purity_check`].
pub const SWAP_DIM_LIMIT: usize = 4096;

/// Unit-trace positive semidefinite operator.
///
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero and the trace is
/// renormalized; anything more negative is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let trace = h.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Trace { trace });
        }
        let eig = h.eigh();
        let min = eig.values[0];
        if min < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        if min < 0.0 {
            let clamped = eig.reconstruct_with(|x| x.max(0.0));
            let t = clamped.trace();
            return Ok(Self(clamped.scale(1.0 / t)));
        }
        Ok(Self(h))
    }

    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Normalizes a PSD operator by its trace before validating it.
    pub fn from_unnormalized(h: &HermitianMatrix) -> Result<Self> {
        let t = h.trace();
        if !(t > 0.0) {
            return Err(Error::Trace { trace: t });
        }
        Self::new(h.scale(1.0 / t))
    }

    /// Clamps negative eigenvalues of a numerically PSD operator and
    /// normalizes. Used for certificate parts assembled from solver output.
    pub fn from_psd_clamped(h: &HermitianMatrix) -> Result<Self> {
        let eig = h.eigh();
        let clamped = if eig.values[0] < 0.0 { eig.reconstruct_with(|x| x.max(0.0)) } else { h.clone() };
        Self::from_unnormalized(&clamped)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(HermitianMatrix::identity(d).scale(1.0 / d as f64))
    }

    /// `|j><j|`
    pub fn basis(d: usize, j: usize) -> Self {
        Self(HermitianMatrix::basis_projector(d, j))
    }

    pub fn diagonal_state(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(p))
    }

    /// `|psi+><psi+|` with `psi+ = sum_j |j> / sqrt(d)`.
    pub fn maximally_coherent(d: usize) -> Self {
        PureState::maximally_coherent(d).density()
    }

    /// `(1+p) 1/d - p |psi+><psi+|`, a valid state for `0 <= p <= 1/(d-1)`.
    pub fn lower_bound_family(d: usize, p: f64) -> Result<Self> {
        let id = HermitianMatrix::identity(d).scale((1.0 + p) / d as f64);
        let plus = Self::maximally_coherent(d);
        Self::new(&id - &plus.0.scale(p))
    }

    /// `sum_k w_k rho_k`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let d = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?
            .1
            .dim();
        let mut acc = HermitianMatrix::zeros(d);
        for (w, rho) in parts {
            if rho.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: rho.dim() });
            }
            acc = &acc + &rho.0.scale(*w);
        }
        Self::new(acc)
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dephased(&self) -> DensityMatrix {
        Self(dephase(&self.0))
    }

    pub fn purity(&self) -> f64 {
        self.0.inner(&self.0)
    }

    pub fn is_incoherent(&self, tol: f64) -> bool {
        self.0.matrix().is_diagonal(tol)
    }

    /// `U rho U^H` for a unitary `U`.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.dim() || u.cols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.rows() });
        }
        Self::new(self.0.conjugate_by(u))
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.0
    }
}

/// Normalized state vector in the reference basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(Vec<C64>);

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("empty state vector".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self(amplitudes))
    }

    pub fn maximally_coherent(d: usize) -> Self {
        Self(vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn density(&self) -> DensityMatrix {
        let p = HermitianMatrix::projector(&self.0);
        let t = p.trace();
        DensityMatrix(p.scale(1.0 / t))
    }

    /// `(sum_j |psi_j|)^2 - 1`
    pub fn l1_closed_form(&self) -> f64 {
        let s: f64 = self.0.iter().map(|z| z.norm()).sum();
        s * s - 1.0
    }
}

/// `sum_{k != l} |rho_kl|`
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut s = 0.0;
    for k in 0..d {
        for l in k + 1..d {
            s += rho[(k, l)].norm();
        }
    }
    2.0 * s
}

/// Von Neumann entropy in bits, `0 log 0 = 0`.
pub fn von_neumann_entropy(h: &HermitianMatrix) -> f64 {
    h.eigenvalues().into_iter().map(entropy_term).sum()
}

fn entropy_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// `S(Delta(rho)) - S(rho)`
pub fn relative_entropy_coherence(rho: &DensityMatrix) -> f64 {
    let s_diag: f64 = rho.diagonal().into_iter().map(entropy_term).sum();
    (s_diag - von_neumann_entropy(rho)).max(0.0)
}

/// Outcome of the two-copy purity identities.
#[derive(Debug, Clone, Copy)]
pub struct SwapPurity {
    /// `Tr[rho (x) rho V]`
    pub swap: f64,
    /// `Tr[rho^2]`
    pub purity: f64,
    /// `Tr[rho (x) rho (Delta (x) Delta)(V)]`
    pub dephased_swap: f64,
    /// `Tr[Delta(rho)^2]`
    pub dephased_purity: f64,
}

impl SwapPurity {
    pub fn max_discrepancy(&self) -> f64 {
        (self.swap - self.purity).abs().max((self.dephased_swap - self.dephased_purity).abs())
    }
}

/// Sparse operator on `C^d (x) C^d` as `(row, col, value)` with composite index `a*d + b`.
type SparseOp = Vec<(usize, usize, f64)>;

/// The swap operator `V |a>|b> = |b>|a>`.
pub fn swap_operator(d: usize) -> SparseOp {
    let mut v = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            v.push((b * d + a, a * d + b, 1.0));
        }
    }
    v
}

/// `(Delta (x) Delta)(X)`: keeps entries `X_{(a,b),(c,e)}` with `a = c` and `b = e`.
pub fn dephase_both(op: &SparseOp, d: usize) -> SparseOp {
    op.iter()
        .copied()
        .filter(|&(r, c, _)| r / d == c / d && r % d == c % d)
        .collect()
}

/// Evaluates `Tr[rho (x) rho X]` for a sparse `X`, reading the tensor product
/// entrywise so that `d^2 x d^2` is never materialized.
fn two_copy_expectation(rho: &DensityMatrix, op: &SparseOp) -> f64 {
    let d = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for &(r, c, x) in op {
        // (rho (x) rho X)_{..} trace picks (rho(x)rho)_{c, r} X_{r, c}
        let (a, b) = (c / d, c % d);
        let (a2, b2) = (r / d, r % d);
        acc += rho[(a, a2)] * rho[(b, b2)] * x;
    }
    acc.re
}

pub fn swap_purity_check(rho: &DensityMatrix) -> Result<SwapPurity> {
    let d = rho.dim();
    if d * d > SWAP_DIM_LIMIT {
        return Err(Error::DimensionGuard { dim: d * d, limit: SWAP_DIM_LIMIT });
    }
    let v = swap_operator(d);
    let dv = dephase_both(&v, d);
    let delta = rho.dephased();
    Ok(SwapPurity {
        swap: two_copy_expectation(rho, &v),
        purity: rho.purity(),
        dephased_swap: two_copy_expectation(rho, &dv),
        dephased_purity: delta.purity(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn density_validation() {
        assert!(matches!(
            DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[0.5, 0.6])),
            Err(Error::Trace { .. })
        ));
        assert!(matches!(
            DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[1.5, -0.5])),
            Err(Error::NotPositive { .. })
        ));
        let clamped = DensityMatrix::new(HermitianMatrix::from_real_diagonal(&[1.0 + 5e-11, -5e-11]))
            .unwrap();
        assert!(clamped.min_eigenvalue() >= 0.0);
        assert!((clamped.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l1_examples() {
        let diag = DensityMatrix::diagonal_state(&[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(l1_coherence(&diag), 0.0);
        let plus = DensityMatrix::maximally_coherent(3);
        assert!((l1_coherence(&plus) - 2.0).abs() < 1e-14);
        let rho = DensityMatrix::lower_bound_family(4, 0.2).unwrap();
        assert!((l1_coherence(&rho) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn relative_entropy_examples() {
        let diag = DensityMatrix::diagonal_state(&[0.2, 0.3, 0.5]).unwrap();
        assert!(relative_entropy_coherence(&diag).abs() < 1e-14);
        let plus = DensityMatrix::maximally_coherent(2);
        assert!((relative_entropy_coherence(&plus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_matches_direct_spectra() {
        let rho = random::random_state(3, 3, 11).unwrap();
        // independent route: diagonalize Delta(rho) as a matrix too
        let s = |h: &HermitianMatrix| -> f64 {
            h.eigh().values.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
        };
        let expected = s(rho.dephased().hermitian()) - s(rho.hermitian());
        assert!((relative_entropy_coherence(&rho) - expected).abs() < 1e-12);
        assert!(expected > 0.0);
    }

    #[test]
    fn swap_identity_examples() {
        let pure = random::random_pure(3, 5).density();
        let sp = swap_purity_check(&pure).unwrap();
        assert!((sp.swap - 1.0).abs() < 1e-12 && (sp.purity - 1.0).abs() < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(3);
        let sp = swap_purity_check(&mixed).unwrap();
        for x in [sp.swap, sp.purity, sp.dephased_swap, sp.dephased_purity] {
            assert!((x - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn swap_identity_against_dense_products() {
        let rho = random::random_state(4, 4, 21).unwrap();
        let d = 4;
        let rr = rho.matrix().kron(rho.matrix());
        let dense = |op: &SparseOp| {
            let mut m = ComplexMatrix::zeros(d * d, d * d);
            for &(r, c, x) in op {
                m[(r, c)] = C64::new(x, 0.0);
            }
            m
        };
        let v = swap_operator(d);
        let lhs = rr.matmul(&dense(&v)).trace().re;
        let lhs_d = rr.matmul(&dense(&dephase_both(&v, d))).trace().re;
        let sp = swap_purity_check(&rho).unwrap();
        assert!((lhs - sp.swap).abs() < 1e-12);
        assert!((lhs_d - sp.dephased_swap).abs() < 1e-12);
        assert!(sp.max_discrepancy() < 1e-10);
    }

    #[test]
    fn swap_guard() {
        let rho = DensityMatrix::maximally_mixed(65);
        assert!(matches!(swap_purity_check(&rho), Err(Error::DimensionGuard { .. })));
    }

    #[test]
    fn pure_state_normalization() {
        assert!(PureState::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        let s = PureState::maximally_coherent(4);
        assert!((s.l1_closed_form() - 3.0).abs() < 1e-14);
    }
}
