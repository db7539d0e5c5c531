//! Small dense real matrices used inside the interior-point iteration.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    n: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = *x;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |r, c| self[(c, r)])
    }

    pub fn symmetrize(&mut self) {
        for r in 0..self.n {
            for c in r + 1..self.n {
                let v = 0.5 * (self[(r, c)] + self[(c, r)]);
                self[(r, c)] = v;
                self[(c, r)] = v;
            }
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * n..(k + 1) * n];
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A B A^T`
    pub fn congruence(&self, b: &Self) -> Self {
        let mut m = self.matmul(b).matmul(&self.transpose());
        m.symmetrize();
        m
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Lower Cholesky factor, or `None` when a pivot is not positive.
    pub fn cholesky(&self) -> Option<Self> {
        cholesky_flat(&self.data, self.n).map(|data| Self { n: self.n, data })
    }

    /// Inverse of a lower-triangular matrix.
    pub fn lower_inverse(&self) -> Self {
        let n = self.n;
        let mut inv = Self::zeros(n);
        for j in 0..n {
            inv[(j, j)] = 1.0 / self[(j, j)];
            for i in j + 1..n {
                let mut s = 0.0;
                for k in j..i {
                    s += self[(i, k)] * inv[(k, j)];
                }
                inv[(i, j)] = -s / self[(i, i)];
            }
        }
        inv
    }

    pub fn eigh(&self) -> (Vec<f64>, RealMatrix) {
        symmetric_jacobi(self)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().0[0]
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.n + c]
    }
}

pub fn cholesky_flat(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` in place.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Numerical rank of a PSD matrix by diagonally pivoted Cholesky; pivots
/// below `rel_tol * max_diag` count as zero.
pub fn psd_rank(a: &[f64], n: usize, rel_tol: f64) -> usize {
    let mut m = a.to_vec();
    let max_diag = (0..n).map(|i| m[i * n + i]).fold(0.0, f64::max);
    if max_diag <= 0.0 {
        return 0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // choose the largest remaining diagonal
        let (p, &piv) = perm[k..]
            .iter()
            .map(|&i| m[i * n + i])
            .collect::<Vec<_>>()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        if piv <= rel_tol * max_diag {
            return k;
        }
        perm.swap(k, k + p);
        let pk = perm[k];
        let root = piv.sqrt();
        // Schur update of the remaining block
        let col: Vec<f64> = perm[k + 1..].iter().map(|&i| m[i * n + pk] / root).collect();
        for (a, &i) in perm[k + 1..].iter().enumerate() {
            for (b, &j) in perm[k + 1..].iter().enumerate() {
                m[i * n + j] -= col[a] * col[b];
            }
        }
    }
    n
}

/// Cyclic Jacobi for real symmetric matrices; eigenvalues ascending.
pub fn symmetric_jacobi(m: &RealMatrix) -> (Vec<f64>, RealMatrix) {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = RealMatrix::identity(n);
    let scale = a.frobenius_sq().sqrt();
    if scale > 0.0 && n > 1 {
        let eps = 1e-15 * scale;
        for _ in 0..100 {
            let mut off = 0.0;
            for r in 0..n {
                for c in r + 1..n {
                    off += a[(r, c)] * a[(r, c)];
                }
            }
            if (2.0 * off).sqrt() <= eps {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-18 * scale {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = RealMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> RealMatrix {
        let b = RealMatrix::from_fn(n, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0 + if r == c { 0.5 } else { 0.0 });
        let mut m = b.matmul(&b.transpose());
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        m
    }

    #[test]
    fn jacobi_reconstructs() {
        let m = spd(7);
        let (vals, v) = m.eigh();
        let back = v.congruence(&RealMatrix::from_diagonal(&vals));
        let mut diff = back.clone();
        diff.add_scaled(-1.0, &m);
        assert!(diff.max_abs() < 1e-11 * m.max_abs());
    }

    #[test]
    fn cholesky_and_inverse() {
        let m = spd(6);
        let l = m.cholesky().unwrap();
        let mut diff = l.matmul(&l.transpose());
        diff.add_scaled(-1.0, &m);
        assert!(diff.max_abs() < 1e-12 * m.max_abs());
        let li = l.lower_inverse();
        let mut e = li.matmul(&l);
        e.add_scaled(-1.0, &RealMatrix::identity(6));
        assert!(e.max_abs() < 1e-12);

        let mut b = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let orig = b.clone();
        cholesky_solve(l.as_slice(), 6, &mut b);
        for i in 0..6 {
            let row: f64 = (0..6).map(|k| m[(i, k)] * b[k]).sum();
            assert!((row - orig[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_cholesky_fails() {
        let m = RealMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(m.cholesky().is_none());
    }

    #[test]
    fn rank_detection() {
        // Gram of vectors (1,0), (0,1), (1,1)
        let g = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        assert_eq!(psd_rank(&g, 3, 1e-8), 2);
        assert_eq!(psd_rank(&[2.0, 0.0, 0.0, 3.0], 2, 1e-8), 2);
    }
}
