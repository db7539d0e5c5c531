//! Dense complex matrices and Hermitian operators.
//!
//! Storage is row-major. `HermitianMatrix` is exactly conjugate-symmetric after
//! construction, so downstream code may read either triangle.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::eigen::{self, Eigen};
use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape { rows, cols, got: data.len() });
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, z) in diag.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    /// `|v><w|`
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |r, c| v[r] * w[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Tr[A B]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self[(r / r2, c / c2)] * other[(r % r2, c % c2)]
        })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `K M K^H`
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(m).matmul(&self.dagger())
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c && self[(r, c)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// A square, exactly conjugate-symmetric complex matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

impl HermitianMatrix {
    /// Checks conjugate symmetry within [`HERMITIAN_TOL`], then symmetrizes.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.rows, got: m.cols });
        }
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(M + M^H) / 2` with no tolerance check. Use for matrices that are
    /// Hermitian in exact arithmetic, e.g. `K rho K^H`.
    pub fn hermitian_part(m: &ComplexMatrix) -> Self {
        assert!(m.is_square());
        let n = m.rows;
        let mut out = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            out[(r, r)] = C64::new(m[(r, r)].re, 0.0);
            for c in r + 1..n {
                let z = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
                out[(r, c)] = z;
                out[(c, r)] = z.conj();
            }
        }
        Self(out)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_diagonal(
            &diag.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>(),
        ))
    }

    pub fn identity(d: usize) -> Self {
        Self(ComplexMatrix::identity(d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(ComplexMatrix::zeros(d, d))
    }

    /// `|psi><psi|`
    pub fn projector(psi: &[C64]) -> Self {
        Self::hermitian_part(&ComplexMatrix::outer(psi, psi))
    }

    /// `E_jj`
    pub fn basis_projector(d: usize, j: usize) -> Self {
        let mut diag = vec![0.0; d];
        diag[j] = 1.0;
        Self::from_real_diagonal(&diag)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// `Re Tr[A B]`, the real inner product on Hermitian operators.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .as_slice()
            .iter()
            .zip(other.0.as_slice())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale_re(s))
    }

    pub fn eigh(&self) -> Eigen {
        eigen::hermitian_jacobi(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let e = self.eigh();
        e.reconstruct_with(f)
    }

    pub fn conjugate_by(&self, k: &ComplexMatrix) -> HermitianMatrix {
        HermitianMatrix::hermitian_part(&k.conjugate(&self.0))
    }

    pub fn norms(&self) -> Norms {
        norms(self)
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}

/// Frobenius norm, operator norm and largest entry modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub two_norm: f64,
    pub op_norm: f64,
    pub max_abs: f64,
}

pub fn norms(m: &HermitianMatrix) -> Norms {
    let op_norm = m.eigenvalues().into_iter().map(f64::abs).fold(0.0, f64::max);
    Norms { two_norm: m.0.frobenius_norm(), op_norm, max_abs: m.0.max_abs() }
}

/// Full dephasing: keeps the diagonal, zeroes everything else.
pub fn dephase(m: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::from_real_diagonal(&m.diagonal())
}

/// Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices: the
/// diagonal units, then `(E_kl + E_lk)/sqrt2` and `i(E_lk - E_kl)/sqrt2` for `k < l`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<HermitianMatrix> = (0..d).map(|j| HermitianMatrix::basis_projector(d, j)).collect();
    for k in 0..d {
        for l in k + 1..d {
            let mut re = ComplexMatrix::zeros(d, d);
            re[(k, l)] = C64::new(h, 0.0);
            re[(l, k)] = C64::new(h, 0.0);
            let mut im = ComplexMatrix::zeros(d, d);
            im[(k, l)] = C64::new(0.0, -h);
            im[(l, k)] = C64::new(0.0, h);
            out.push(HermitianMatrix(re));
            out.push(HermitianMatrix(im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        let d = 3;
        let b = hermitian_basis(d);
        assert_eq!(b.len(), d * d);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((x.inner(y) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)])
            .unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(1.0, 1e-14), c(0.5, 0.25), c(0.5 + 1e-13, -0.25), c(2.0, 0.0)],
        )
        .unwrap();
        let h = HermitianMatrix::new(m).unwrap();
        assert_eq!(h[(0, 1)], h[(1, 0)].conj());
        assert_eq!(h[(0, 0)].im, 0.0);
    }

    #[test]
    fn rejects_bad_shape_and_nan() {
        assert!(ComplexMatrix::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![c(0.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn dephase_examples() {
        let d = HermitianMatrix::from_real_diagonal(&[0.3, 0.7]);
        assert_eq!(dephase(&d), d);
        let plus = HermitianMatrix::projector(&[c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)]);
        let dp = dephase(&plus);
        assert!((dp[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((dp[(1, 1)].re - 0.5).abs() < 1e-15);
        assert_eq!(dp[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn norm_examples() {
        let n = norms(&HermitianMatrix::identity(4));
        assert!((n.two_norm - 2.0).abs() < 1e-14);
        assert!((n.op_norm - 1.0).abs() < 1e-14);
        assert!((n.max_abs - 1.0).abs() < 1e-14);

        let n = norms(&HermitianMatrix::from_real_diagonal(&[3.0, -5.0]));
        assert!((n.two_norm - 34f64.sqrt()).abs() < 1e-14);
        assert!((n.op_norm - 5.0).abs() < 1e-14);
        assert!((n.max_abs - 5.0).abs() < 1e-14);
    }

    #[test]
    fn kron_and_trace_product() {
        let a = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)])
            .unwrap();
        let i2 = ComplexMatrix::identity(2);
        let k = a.kron(&i2);
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
        assert_eq!(k[(0, 1)], c(0.0, 0.0));
        assert_eq!(a.trace_product(&a), a.matmul(&a).trace());
    }
}
