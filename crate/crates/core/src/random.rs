//! Seeded generation of random states, unitaries and Hermitian matrices.
//!
//! Every public function taking a `seed` is deterministic; the `*_with`
//! variants draw from a caller-owned generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::state::{DensityMatrix, PureState};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

pub fn random_hermitian(d: usize, seed: u64) -> HermitianMatrix {
    let g = gaussian_matrix(d, d, &mut rng(seed));
    HermitianMatrix::hermitian_part(&g)
}

pub fn random_state_with<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::InvalidRank { rank, dim: d });
    }
    let g = gaussian_matrix(d, rank, rng);
    let gg = HermitianMatrix::hermitian_part(&g.matmul(&g.dagger()));
    DensityMatrix::from_unnormalized(&gg)
}

/// `G G^H / Tr` with a `d x rank` complex Gaussian `G`.
pub fn random_state(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    random_state_with(d, rank, &mut rng(seed))
}

pub fn random_pure_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let v: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    PureState::new(v.into_iter().map(|z| z / n).collect()).expect("normalized by construction")
}

pub fn random_pure(d: usize, seed: u64) -> PureState {
    random_pure_with(d, &mut rng(seed))
}

/// Orthonormalizes the columns of a complex Gaussian matrix (modified
/// Gram-Schmidt). The resulting `R` factor has positive diagonal, which makes
/// the distribution Haar.
pub fn random_isometry_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(cols <= rows);
    let mut q = gaussian_matrix(rows, cols, rng);
    for j in 0..cols {
        for k in 0..j {
            let proj: C64 = (0..rows).map(|r| q[(r, k)].conj() * q[(r, j)]).sum();
            for r in 0..rows {
                let qk = q[(r, k)];
                q[(r, j)] -= proj * qk;
            }
        }
        let n = (0..rows).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..rows {
            q[(r, j)] /= n;
        }
    }
    q
}

pub fn random_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry_with(d, d, rng)
}

pub fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(d, &mut rng(seed))
}

/// Random point of the probability simplex (flat Dirichlet).
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
