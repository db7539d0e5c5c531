//! Brute-force reference values that share no code with the conic solver.
//!
//! `roc_descent_oracle` minimizes `sum_j D_jj` over positive diagonal `D`
//! with a quadratic penalty on the negative part of `D - rho`, then shifts
//! `D` until it is feasible, so it always returns an upper bound.
//! The Helstrom formula gives the exact two-outcome discrimination value.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::MatrixJson;
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::random;
use crate::state::DensityMatrix;

const MU_START: f64 = 1e2;
const MU_END: f64 = 1e10;
const MAX_BFGS: usize = 400;
/// Lower clamp on `g_j`, so `exp(g_j)` stays representable for rank-deficient diagonals.
const G_FLOOR: f64 = -60.0;
/// Required smallest eigenvalue of `D - rho` on return.
pub const FEASIBILITY: f64 = -1e-10;

/// `sum_j e^{g_j} + mu * ||(D - rho)_-||_F^2` and its gradient in `g`.
fn penalized(rho: &HermitianMatrix, g: &[f64], mu: f64) -> (f64, Vec<f64>) {
    let d = g.len();
    let e: Vec<f64> = g.iter().map(|x| x.exp()).collect();
    let diff = &HermitianMatrix::from_real_diagonal(&e) - rho;
    let eig = diff.eigh();
    let neg = eig.reconstruct_with(|x| x.min(0.0));
    let penalty: f64 = eig.values.iter().map(|x| x.min(0.0).powi(2)).sum();
    let value = e.iter().sum::<f64>() + mu * penalty;
    let grad = (0..d).map(|j| e[j] * (1.0 + 2.0 * mu * neg[(j, j)].re)).collect();
    (value, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton descent with an Armijo backtracking line search.
fn bfgs(rho: &HermitianMatrix, mut g: Vec<f64>, mu: f64) -> Vec<f64> {
    let d = g.len();
    let mut h = vec![vec![0.0; d]; d];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let (mut f, mut grad) = penalized(rho, &g, mu);
    for _ in 0..MAX_BFGS {
        let dir: Vec<f64> = (0..d).map(|i| -dot(&h[i], &grad)).collect();
        let mut slope = dot(&dir, &grad);
        let dir = if slope >= 0.0 {
            // lost descent: restart from steepest descent
            for (i, row) in h.iter_mut().enumerate() {
                row.iter_mut().for_each(|x| *x = 0.0);
                row[i] = 1.0;
            }
            slope = -dot(&grad, &grad);
            grad.iter().map(|x| -x).collect()
        } else {
            dir
        };
        if slope.abs() < 1e-30 {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = g.iter().zip(&dir).map(|(x, p)| (x + t * p).max(G_FLOOR)).collect();
            let (ft, gt) = penalized(rho, &trial, mu);
            if ft <= f + 1e-4 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((next, fnext, gnext)) = accepted else { break };
        let s: Vec<f64> = next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnext.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let improvement = f - fnext;
        g = next;
        f = fnext;
        grad = gnext;
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..d).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    h[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        if improvement <= 1e-16 * f.abs().max(1.0) {
            break;
        }
    }
    g
}

/// Upper bound on the robustness of coherence by penalized descent over
/// `D = diag(e^g)`. The penalty weight climbs by 10x per round from 1e2 to
/// 1e10. Each restart starts from a randomly scaled Gershgorin point. The
/// best end point is shifted by its most negative eigenvalue, if any, so
/// `D - rho` is PSD to rounding.
pub fn roc_descent_oracle(rho: &DensityMatrix, restarts: usize, seed: u64) -> f64 {
    let d = rho.dim();
    let h = rho.hermitian();
    let mut rng = random::rng(seed);
    let gershgorin: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|k| h[(j, k)].norm()).sum::<f64>().max(1e-300))
        .collect();
    let mut best = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let mut g: Vec<f64> = gershgorin
            .iter()
            .map(|x| {
                let jitter = if r == 0 { 1.0 } else { 0.5 + 1.5 * rng.random::<f64>() };
                (x * jitter).ln().max(G_FLOOR)
            })
            .collect();
        let mut mu = MU_START;
        while mu <= MU_END * 1.000001 {
            g = bfgs(h, g, mu);
            mu *= 10.0;
        }
        let e: Vec<f64> = g.iter().map(|x| x.exp()).collect();
        let low = (&HermitianMatrix::from_real_diagonal(&e) - h).min_eigenvalue();
        let shift = (-low).max(0.0);
        let shifted: Vec<f64> = e.iter().map(|x| x + shift).collect();
        debug_assert!((&HermitianMatrix::from_real_diagonal(&shifted) - h).min_eigenvalue() >= FEASIBILITY);
        best = best.min(shifted.iter().sum::<f64>() - 1.0);
    }
    best.max(0.0)
}

/// `(1/2)(p_0 + p_1 + ||p_0 rho_0 - p_1 rho_1||_1)` for two weighted states.
pub fn helstrom_value(ensemble: &[(f64, HermitianMatrix)]) -> Result<f64> {
    let [(p0, r0), (p1, r1)] = ensemble else {
        return Err(Error::InvalidArgument(format!("Helstrom needs two outcomes, got {}", ensemble.len())));
    };
    if r0.dim() != r1.dim() {
        return Err(Error::DimensionMismatch { expected: r0.dim(), got: r1.dim() });
    }
    let gamma = &r0.scale(*p0) - &r1.scale(*p1);
    let trace_norm: f64 = gamma.eigenvalues().iter().map(|x| x.abs()).sum();
    Ok(0.5 * (p0 * r0.trace() + p1 * r1.trace() + trace_norm))
}

/// Lower bound on the two-outcome qubit success probability from projective
/// measurements along Bloch directions on a `resolution x 2 resolution`
/// polar grid, plus the two trivial guesses.
pub fn discrimination_grid_oracle(ensemble: &[(f64, HermitianMatrix)], resolution: usize) -> Result<f64> {
    let [(p0, r0), (p1, r1)] = ensemble else {
        return Err(Error::InvalidArgument(format!("the grid oracle needs two outcomes, got {}", ensemble.len())));
    };
    if r0.dim() != 2 || r1.dim() != 2 {
        return Err(Error::InvalidArgument("the grid oracle only handles qubits".into()));
    }
    let a = r0.scale(*p0);
    let b = r1.scale(*p1);
    let mut best = a.trace().max(b.trace());
    let n = resolution.max(1);
    for i in 0..=n {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        for j in 0..2 * n {
            let phi = std::f64::consts::PI * j as f64 / n as f64;
            let v = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
            let proj = HermitianMatrix::projector(&v);
            let rest = &HermitianMatrix::identity(2) - &proj;
            best = best.max(a.inner(&proj) + b.inner(&rest));
        }
    }
    Ok(best)
}

/// Frozen oracle output kept under `tests/fixtures`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub seed: u64,
    pub input: MatrixJson,
    pub value: f64,
    pub tol: f64,
    pub oracle: String,
}

impl Fixture {
    pub fn new(seed: u64, input: &ComplexMatrix, value: f64, tol: f64, oracle: &str) -> Self {
        Self { seed, input: MatrixJson::from_matrix(input), value, tol, oracle: oracle.to_string() }
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.input.to_matrix()?)
    }
}
