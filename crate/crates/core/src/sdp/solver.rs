//! Infeasible primal-dual path-following with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector, on real symmetric / nonnegative blocks.
//!
//! For each PSD block the NT scaling `W` (with `W S W = X`) is factored as
//! `W = G G^T` where `G^T S G = G^{-1} X G^{-T} = D` is diagonal. Search
//! directions solve
//!
//! ```text
//! A(dX) = r_p,   A^T(dy) + dS = R_d,   dX + W dS W = G T G^T
//! ```
//!
//! where `T` solves the scaled Lyapunov equation `D T + T D = R_c`. The Schur
//! complement `M_ij = <A_i, W A_j W>` is factored once per iteration and reused
//! by the corrector.

use super::dense::{cholesky_flat, cholesky_solve, psd_rank, RealMatrix};
use super::{complexify, BlockKind, BlockValue, ConicSolution, Constraint, IterateRecord, SolveStatus, SolverOptions};

/// Sparse symmetric coefficients `(row, col, value)`, both triangles stored.
/// Nonnegative blocks only use the diagonal.
type Sparse = Vec<(usize, usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cone {
    /// Real symmetric block that embeds a complex Hermitian block of half the size.
    Psd(usize),
    Lin(usize),
}

#[derive(Debug, Clone)]
enum Var {
    Psd(RealMatrix),
    Lin(Vec<f64>),
}

impl Var {
    fn zero(cone: Cone) -> Self {
        match cone {
            Cone::Psd(n) => Var::Psd(RealMatrix::zeros(n)),
            Cone::Lin(n) => Var::Lin(vec![0.0; n]),
        }
    }

    fn identity(cone: Cone) -> Self {
        match cone {
            Cone::Psd(n) => Var::Psd(RealMatrix::identity(n)),
            Cone::Lin(n) => Var::Lin(vec![1.0; n]),
        }
    }

    /// Average with `J X J^T`, the projection onto `[[A, -B], [B, A]]`.
    fn project_complex(&mut self) {
        if let Var::Psd(m) = self {
            let n = m.dim() / 2;
            for r in 0..n {
                for c in 0..n {
                    let a = 0.5 * (m[(r, c)] + m[(r + n, c + n)]);
                    let b = 0.5 * (m[(r + n, c)] - m[(r, c + n)]);
                    m[(r, c)] = a;
                    m[(r + n, c + n)] = a;
                    m[(r + n, c)] = b;
                    m[(r, c + n)] = -b;
                }
            }
        }
    }

    fn zero_like(v: &Var) -> Self {
        match v {
            Var::Psd(m) => Var::Psd(RealMatrix::zeros(m.dim())),
            Var::Lin(x) => Var::Lin(vec![0.0; x.len()]),
        }
    }

    fn inner(&self, other: &Var) -> f64 {
        match (self, other) {
            (Var::Psd(a), Var::Psd(b)) => a.inner(b),
            (Var::Lin(a), Var::Lin(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            _ => unreachable!(),
        }
    }

    fn add_scaled(&mut self, s: f64, other: &Var) {
        match (self, other) {
            (Var::Psd(a), Var::Psd(b)) => a.add_scaled(s, b),
            (Var::Lin(a), Var::Lin(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += s * y),
            _ => unreachable!(),
        }
    }

    fn dot_sparse(&self, sp: &Sparse) -> f64 {
        match self {
            Var::Psd(m) => sp.iter().map(|&(r, c, v)| v * m[(r, c)]).sum(),
            Var::Lin(x) => sp.iter().map(|&(r, _, v)| v * x[r]).sum(),
        }
    }

    fn add_sparse(&mut self, s: f64, sp: &Sparse) {
        match self {
            Var::Psd(m) => sp.iter().for_each(|&(r, c, v)| m[(r, c)] += s * v),
            Var::Lin(x) => sp.iter().for_each(|&(r, _, v)| x[r] += s * v),
        }
    }

    fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
}

/// Per-block NT scaling.
enum Scaling {
    Psd {
        g: RealMatrix,
        w: RealMatrix,
        d: Vec<f64>,
        x_chol_inv: RealMatrix,
        s_chol_inv: RealMatrix,
    },
    Lin {
        /// `sqrt(x/s)`; multiplies `T` in `G T G^T`
        w: Vec<f64>,
        /// `x/s`; the scalar form of `W . W`
        w2: Vec<f64>,
        d: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct RealProblem {
    cones: Vec<Cone>,
    cost: Vec<Var>,
    /// Per constraint: `(block, coefficients)`
    rows: Vec<Vec<(usize, Sparse)>>,
    b: Vec<f64>,
    /// Per block: `(constraint, index into rows[constraint])`
    by_block: Vec<Vec<(usize, usize)>>,
}

fn realify_sparse(h: &crate::matrix::HermitianMatrix) -> Sparse {
    // R(H)/2 so that <R(A)/2, R(X)> = Re Tr[A X]
    let d = h.dim();
    let mut out = Vec::new();
    for r in 0..d {
        for c in 0..d {
            let z = h[(r, c)];
            if z.re != 0.0 {
                out.push((r, c, 0.5 * z.re));
                out.push((r + d, c + d, 0.5 * z.re));
            }
            if z.im != 0.0 {
                out.push((r, c + d, -0.5 * z.im));
                out.push((r + d, c, 0.5 * z.im));
            }
        }
    }
    out
}

fn to_sparse(v: &BlockValue) -> Sparse {
    match v {
        BlockValue::Hermitian(h) => realify_sparse(h),
        BlockValue::Vector(x) => x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, k, *v)).collect(),
    }
}

fn to_var(v: &BlockValue) -> Var {
    match v {
        BlockValue::Hermitian(h) => Var::Psd(super::realify(h).scaled(0.5)),
        BlockValue::Vector(x) => Var::Lin(x.clone()),
    }
}

impl RealProblem {
    pub(crate) fn build(blocks: &[BlockKind], cost: &[BlockValue], constraints: &[Constraint]) -> Self {
        let cones: Vec<Cone> = blocks
            .iter()
            .map(|k| match *k {
                BlockKind::Psd(n) => Cone::Psd(2 * n),
                BlockKind::Nonneg(n) => Cone::Lin(n),
            })
            .collect();
        let cost = cost.iter().map(to_var).collect();
        let mut rows = Vec::with_capacity(constraints.len());
        let mut by_block = vec![Vec::new(); blocks.len()];
        for (i, con) in constraints.iter().enumerate() {
            let mut row: Vec<(usize, Sparse)> = Vec::new();
            for (b, v) in &con.terms {
                let sp = to_sparse(v);
                // merge repeated references to the same block
                if let Some(existing) = row.iter_mut().find(|(bb, _)| bb == b) {
                    existing.1.extend(sp);
                } else {
                    row.push((*b, sp));
                }
            }
            for (t, (b, _)) in row.iter().enumerate() {
                by_block[*b].push((i, t));
            }
            rows.push(row);
        }
        let b = constraints.iter().map(|c| c.rhs).collect();
        Self { cones, cost, rows, b, by_block }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    fn apply_a(&self, x: &[Var]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|(b, sp)| x[*b].dot_sparse(sp)).sum()).collect()
    }

    fn apply_at(&self, y: &[f64]) -> Vec<Var> {
        let mut out: Vec<Var> = self.cones.iter().map(|c| Var::zero(*c)).collect();
        for (row, yi) in self.rows.iter().zip(y) {
            for (b, sp) in row {
                out[*b].add_sparse(*yi, sp);
            }
        }
        out
    }

    /// `M_ij = sum_b <A_ib, W_b A_jb W_b>`; `None` for `w` means identity
    /// (the Gram matrix of the constraint operators).
    fn schur(&self, scalings: Option<&[Scaling]>) -> Vec<f64> {
        let m = self.m();
        let mut mat = vec![0.0; m * m];
        for (blk, members) in self.by_block.iter().enumerate() {
            match self.cones[blk] {
                Cone::Psd(n) => {
                    let w = scalings.map(|s| match &s[blk] {
                        Scaling::Psd { w, .. } => w,
                        Scaling::Lin { .. } => unreachable!(),
                    });
                    let dense_cut = 2 * n;
                    let mut projected: Vec<Option<RealMatrix>> = Vec::with_capacity(members.len());
                    for &(j, t) in members {
                        let sp = &self.rows[j][t].1;
                        if sp.len() > dense_cut || w.is_none() {
                            let mut a = RealMatrix::zeros(n);
                            for &(r, c, v) in sp {
                                a[(r, c)] += v;
                            }
                            projected.push(Some(match w {
                                Some(w) => w.matmul(&a).matmul(w),
                                None => a,
                            }));
                        } else {
                            projected.push(None);
                        }
                    }
                    for (p, &(i, ti)) in members.iter().enumerate() {
                        let ai = &self.rows[i][ti].1;
                        for (q, &(j, tj)) in members.iter().enumerate().skip(p) {
                            let aj = &self.rows[j][tj].1;
                            let v = if let Some(pj) = &projected[q] {
                                ai.iter().map(|&(r, c, v)| v * pj[(c, r)]).sum()
                            } else if let Some(pi) = &projected[p] {
                                aj.iter().map(|&(r, c, v)| v * pi[(c, r)]).sum()
                            } else {
                                let w = w.expect("sparse path requires a scaling");
                                let mut acc = 0.0;
                                for &(a, bb, va) in ai {
                                    for &(c, e, vb) in aj {
                                        acc += va * vb * w[(bb, c)] * w[(e, a)];
                                    }
                                }
                                acc
                            };
                            mat[i * m + j] += v;
                            if i != j {
                                mat[j * m + i] += v;
                            }
                        }
                    }
                }
                Cone::Lin(n) => {
                    let w2: Option<&Vec<f64>> = scalings.map(|s| match &s[blk] {
                        Scaling::Lin { w2, .. } => w2,
                        Scaling::Psd { .. } => unreachable!(),
                    });
                    for (p, &(i, ti)) in members.iter().enumerate() {
                        let mut dense = vec![0.0; n];
                        for &(k, _, v) in &self.rows[i][ti].1 {
                            dense[k] += v * w2.map_or(1.0, |w| w[k]);
                        }
                        for &(j, tj) in members.iter().skip(p) {
                            let v: f64 = self.rows[j][tj].1.iter().map(|&(k, _, v)| v * dense[k]).sum();
                            mat[i * m + j] += v;
                            if i != j {
                                mat[j * m + i] += v;
                            }
                        }
                    }
                }
            }
        }
        mat
    }

    pub(crate) fn gram_rank(&self, rel_tol: f64) -> usize {
        psd_rank(&self.schur(None), self.m(), rel_tol)
    }

    fn scaling(&self, x: &[Var], s: &[Var]) -> Option<Vec<Scaling>> {
        x.iter()
            .zip(s)
            .map(|(xb, sb)| match (xb, sb) {
                (Var::Psd(xm), Var::Psd(sm)) => {
                    let l = xm.cholesky()?;
                    let ls = sm.cholesky()?;
                    let mut lsl = l.transpose().matmul(sm).matmul(&l);
                    lsl.symmetrize();
                    let (ev, u) = lsl.eigh();
                    if ev[0] <= 0.0 {
                        return None;
                    }
                    let d: Vec<f64> = ev.iter().map(|v| v.sqrt()).collect();
                    let inv_sqrt_d: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
                    let lu = l.matmul(&u);
                    let g = RealMatrix::from_fn(lu.dim(), |r, c| lu[(r, c)] * inv_sqrt_d[c]);
                    let mut w = g.matmul(&g.transpose());
                    w.symmetrize();
                    Some(Scaling::Psd { g, w, d, x_chol_inv: l.lower_inverse(), s_chol_inv: ls.lower_inverse() })
                }
                (Var::Lin(xv), Var::Lin(sv)) => {
                    if xv.iter().chain(sv).any(|v| !(*v > 0.0)) {
                        return None;
                    }
                    let w2: Vec<f64> = xv.iter().zip(sv).map(|(a, b)| a / b).collect();
                    Some(Scaling::Lin {
                        w: w2.iter().map(|v| v.sqrt()).collect(),
                        d: xv.iter().zip(sv).map(|(a, b)| (a * b).sqrt()).collect(),
                        w2,
                    })
                }
                _ => unreachable!(),
            })
            .collect()
    }

    /// Solves for `(dX, dy, dS)` given the scaled right-hand side `T`.
    fn direction(
        &self,
        scalings: &[Scaling],
        schur_chol: &[f64],
        r_p: &[f64],
        r_d: &[Var],
        t: &[Var],
    ) -> (Vec<Var>, Vec<f64>, Vec<Var>) {
        let gtg: Vec<Var> = scalings
            .iter()
            .zip(t)
            .map(|(sc, tb)| match (sc, tb) {
                (Scaling::Psd { g, .. }, Var::Psd(tm)) => Var::Psd(g.congruence(tm)),
                (Scaling::Lin { w, .. }, Var::Lin(tv)) => Var::Lin(w.iter().zip(tv).map(|(a, b)| a * b).collect()),
                _ => unreachable!(),
            })
            .collect();
        let wrw: Vec<Var> = scalings.iter().zip(r_d).map(|(sc, rb)| w_sandwich(sc, rb)).collect();
        let a_gtg = self.apply_a(&gtg);
        let a_wrw = self.apply_a(&wrw);
        let mut dy: Vec<f64> = (0..self.m()).map(|i| r_p[i] - a_gtg[i] + a_wrw[i]).collect();
        cholesky_solve(schur_chol, self.m(), &mut dy);
        let at_dy = self.apply_at(&dy);
        let ds: Vec<Var> = r_d
            .iter()
            .zip(&at_dy)
            .map(|(rd, ad)| {
                let mut v = rd.clone();
                v.add_scaled(-1.0, ad);
                v
            })
            .collect();
        let dx: Vec<Var> = scalings
            .iter()
            .zip(&ds)
            .zip(gtg)
            .map(|((sc, dsb), mut g)| {
                g.add_scaled(-1.0, &w_sandwich(sc, dsb));
                if let Var::Psd(m) = &mut g {
                    m.symmetrize();
                }
                g
            })
            .collect();
        (dx, dy, ds)
    }

    pub(crate) fn solve(&self, opts: &SolverOptions) -> ConicSolution {
        let m = self.m();
        let nu: f64 = self
            .cones
            .iter()
            .map(|c| match c {
                Cone::Psd(n) | Cone::Lin(n) => *n as f64,
            })
            .sum();
        let b_norm = self.b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c_norm = self.cost.iter().map(Var::norm_sq).sum::<f64>().sqrt();
        // Iterate on the cost scaled to unit norm so that the path does not
        // depend on the cost magnitude; y and S are scaled back on output.
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let cost: Vec<Var> = self
            .cost
            .iter()
            .map(|c| {
                let mut v = Var::zero_like(c);
                v.add_scaled(1.0 / c_scale, c);
                v
            })
            .collect();

        let mut x: Vec<Var> = self.cones.iter().map(|c| Var::identity(*c)).collect();
        let mut s: Vec<Var> = self.cones.iter().map(|c| Var::identity(*c)).collect();
        let mut y = vec![0.0; m];
        let mut history = Vec::new();
        let mut status = SolveStatus::MaxIter;
        let mut iterations = 0;
        let mut polish_steps = 0;
        let mut last_converged: Option<Iterate> = None;

        let mut stats;
        loop {
            // residuals
            let ax = self.apply_a(&x);
            let r_p: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let aty = self.apply_at(&y);
            let r_d: Vec<Var> = cost
                .iter()
                .zip(&s)
                .zip(&aty)
                .map(|((c, sb), ab)| {
                    let mut v = c.clone();
                    v.add_scaled(-1.0, sb);
                    v.add_scaled(-1.0, ab);
                    v
                })
                .collect();
            let pobj_n: f64 = cost.iter().zip(&x).map(|(c, xb)| c.inner(xb)).sum();
            let dobj_n: f64 = self.b.iter().zip(&y).map(|(b, yi)| b * yi).sum();
            let rd_n = r_d.iter().map(Var::norm_sq).sum::<f64>().sqrt();
            let xs: f64 = x.iter().zip(&s).map(|(a, b)| a.inner(b)).sum();
            let mu = xs / nu;
            let (pobj, dobj) = (c_scale * pobj_n, c_scale * dobj_n);
            stats = Stats {
                pobj,
                dobj,
                gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
                pinf: r_p.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm),
                dinf: c_scale * rd_n / (1.0 + c_norm),
            };
            let gap_n = (pobj_n - dobj_n).abs() / (1.0 + pobj_n.abs());
            let dinf_n = rd_n / 2.0;
            if opts.record_history {
                history.push(IterateRecord {
                    iteration: iterations,
                    primal: pobj,
                    dual: dobj,
                    gap: stats.gap,
                    primal_infeasibility: stats.pinf,
                    dual_infeasibility: stats.dinf,
                    mu: c_scale * mu,
                });
            }
            if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
                status = SolveStatus::NumericalFailure;
                break;
            }
            let converged =
                stats.pinf <= opts.tol && stats.dinf.max(dinf_n) <= opts.tol && stats.gap.max(gap_n) <= opts.tol;
            if !converged {
                // a centering step from a converged point lost accuracy
                // (ill-conditioned Newton system at tiny mu): keep the point
                if let Some((xk, yk, sk, st)) = last_converged.take() {
                    (x, y, s, stats) = (xk, yk, sk, st);
                    if opts.record_history {
                        history.pop();
                    }
                    iterations -= 1;
                    status = SolveStatus::Optimal;
                    break;
                }
            }
            let Some(scalings) = self.scaling(&x, &s) else {
                if converged {
                    status = SolveStatus::Optimal;
                } else {
                    status = SolveStatus::NumericalFailure;
                }
                break;
            };
            if converged {
                // Wide-neighbourhood iterates can be off the central path by
                // O(sqrt(mu)) along directions where the objective is flat;
                // a few centering steps reduce the argmin error to O(mu).
                if polish_steps >= MAX_POLISH || centrality(&scalings, mu) <= POLISH_CENTRALITY {
                    status = SolveStatus::Optimal;
                    break;
                }
            } else {
                polish_steps = 0;
            }
            if iterations >= opts.max_iter {
                if converged {
                    status = SolveStatus::Optimal;
                }
                break;
            }
            iterations += 1;

            let schur = self.schur(Some(&scalings));
            let Some(chol) = factor_with_ridge(&schur, m) else {
                status = if converged { SolveStatus::Optimal } else { SolveStatus::NumericalFailure };
                break;
            };

            if converged {
                polish_steps += 1;
                last_converged = Some((x.clone(), y.clone(), s.clone(), stats.clone()));
                let t_center: Vec<Var> = scalings
                    .iter()
                    .zip(&x)
                    .map(|(sc, xb)| corrector_rhs(sc, &Var::zero_like(xb), mu))
                    .collect();
                let (dx, dy, ds) = self.direction(&scalings, &chol, &r_p, &r_d, &t_center);
                let ap = (opts.step_fraction * max_step(&scalings, &x, &dx, true)).min(1.0);
                let ad = (opts.step_fraction * max_step(&scalings, &s, &ds, false)).min(1.0);
                for b in 0..x.len() {
                    x[b].add_scaled(ap, &dx[b]);
                    s[b].add_scaled(ad, &ds[b]);
                    x[b].project_complex();
                    s[b].project_complex();
                }
                for (yi, dyi) in y.iter_mut().zip(&dy) {
                    *yi += ad * dyi;
                }
                continue;
            }

            // predictor: T = -D, i.e. G T G^T = -X
            let t_aff: Vec<Var> = scalings
                .iter()
                .map(|sc| match sc {
                    Scaling::Psd { d, .. } => Var::Psd(RealMatrix::from_diagonal(&d.iter().map(|v| -v).collect::<Vec<_>>())),
                    Scaling::Lin { d, .. } => Var::Lin(d.iter().map(|v| -v).collect()),
                })
                .collect();
            let (dx_a, _, ds_a) = self.direction(&scalings, &chol, &r_p, &r_d, &t_aff);
            let ap = max_step(&scalings, &x, &dx_a, true).min(1.0);
            let ad = max_step(&scalings, &s, &ds_a, false).min(1.0);
            let mut mu_aff = 0.0;
            for b in 0..x.len() {
                let mut xa = x[b].clone();
                xa.add_scaled(ap, &dx_a[b]);
                let mut sa = s[b].clone();
                sa.add_scaled(ad, &ds_a[b]);
                mu_aff += xa.inner(&sa);
            }
            mu_aff /= nu;
            let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
            let sigma = (mu_aff.max(0.0) / mu).powf(expon).clamp(0.0, 1.0);

            // corrector
            let t_cor: Vec<Var> = scalings
                .iter()
                .zip(&ds_a)
                .map(|(sc, dsb)| corrector_rhs(sc, dsb, sigma * mu))
                .collect();
            let (dx, dy, ds) = self.direction(&scalings, &chol, &r_p, &r_d, &t_cor);
            let ap = (opts.step_fraction * max_step(&scalings, &x, &dx, true)).min(1.0);
            let ad = (opts.step_fraction * max_step(&scalings, &s, &ds, false)).min(1.0);
            if ap < 1e-14 && ad < 1e-14 {
                status = SolveStatus::NumericalFailure;
                break;
            }
            for b in 0..x.len() {
                x[b].add_scaled(ap, &dx[b]);
                s[b].add_scaled(ad, &ds[b]);
                // the real embedding admits optimal points off the complex
                // subspace; rounding drift along them grows, so project back
                x[b].project_complex();
                s[b].project_complex();
            }
            for (yi, dyi) in y.iter_mut().zip(&dy) {
                *yi += ad * dyi;
            }
        }

        let extract = |v: &Var, factor: f64| match v {
            Var::Psd(mat) => BlockValue::Hermitian(complexify(mat).scale(factor)),
            Var::Lin(x) => BlockValue::Vector(x.iter().map(|v| v * factor).collect()),
        };
        let s_out = s
            .iter()
            .map(|v| match v {
                // S is stored as R(S)/2
                Var::Psd(_) => extract(v, 2.0 * c_scale),
                Var::Lin(_) => extract(v, c_scale),
            })
            .collect();
        let y: Vec<f64> = y.iter().map(|v| v * c_scale).collect();
        ConicSolution {
            primal: x.iter().map(|v| extract(v, 1.0)).collect(),
            dual: y,
            slack: s_out,
            primal_value: stats.pobj,
            dual_value: stats.dobj,
            gap: stats.gap,
            primal_infeasibility: stats.pinf,
            dual_infeasibility: stats.dinf,
            status,
            iterations,
            history,
        }
    }
}

const MAX_POLISH: usize = 6;
const POLISH_CENTRALITY: f64 = 1e-4;

/// `max |d_i^2 / mu - 1|` over all blocks, where `d_i^2` are the eigenvalues
/// of `X^{1/2} S X^{1/2}`.
fn centrality(scalings: &[Scaling], mu: f64) -> f64 {
    scalings
        .iter()
        .flat_map(|sc| match sc {
            Scaling::Psd { d, .. } | Scaling::Lin { d, .. } => d.iter(),
        })
        .map(|v| (v * v / mu - 1.0).abs())
        .fold(0.0, f64::max)
}

/// `(X, y, S)` with its statistics.
type Iterate = (Vec<Var>, Vec<f64>, Vec<Var>, Stats);

#[derive(Clone)]
struct Stats {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
}

fn w_sandwich(sc: &Scaling, v: &Var) -> Var {
    match (sc, v) {
        (Scaling::Psd { w, .. }, Var::Psd(m)) => Var::Psd(w.congruence(m)),
        (Scaling::Lin { w2, .. }, Var::Lin(x)) => Var::Lin(w2.iter().zip(x).map(|(a, b)| a * b).collect()),
        _ => unreachable!(),
    }
}

/// Scaled right-hand side `T` of the corrector, from the affine `dS`.
fn corrector_rhs(sc: &Scaling, ds_aff: &Var, target: f64) -> Var {
    match (sc, ds_aff) {
        (Scaling::Psd { g, d, .. }, Var::Psd(dsm)) => {
            let n = d.len();
            // dS^ = G^T dS G,  dX^ = -D - dS^
            let ds_hat = g.transpose().congruence(dsm);
            let mut dx_hat = ds_hat.scaled(-1.0);
            for i in 0..n {
                dx_hat[(i, i)] -= d[i];
            }
            let cross = dx_hat.matmul(&ds_hat);
            RealMatrix::from_fn(n, |r, c| {
                let mut rc = -(cross[(r, c)] + cross[(c, r)]);
                if r == c {
                    rc += 2.0 * target - 2.0 * d[r] * d[r];
                }
                rc / (d[r] + d[c])
            })
            .into()
        }
        (Scaling::Lin { w, d, .. }, Var::Lin(dsv)) => Var::Lin(
            (0..d.len())
                .map(|k| {
                    let ds_hat = w[k] * dsv[k];
                    let dx_hat = -d[k] - ds_hat;
                    (target - d[k] * d[k] - dx_hat * ds_hat) / d[k]
                })
                .collect(),
        ),
        _ => unreachable!(),
    }
}

impl From<RealMatrix> for Var {
    fn from(m: RealMatrix) -> Self {
        Var::Psd(m)
    }
}

/// Largest `alpha` keeping `v + alpha dv` in the cone.
fn max_step(scalings: &[Scaling], v: &[Var], dv: &[Var], primal: bool) -> f64 {
    let mut alpha = f64::INFINITY;
    for ((sc, vb), dvb) in scalings.iter().zip(v).zip(dv) {
        match (sc, vb, dvb) {
            (Scaling::Psd { x_chol_inv, s_chol_inv, .. }, Var::Psd(_), Var::Psd(dm)) => {
                let linv = if primal { x_chol_inv } else { s_chol_inv };
                let z = linv.congruence(dm);
                let lmin = z.min_eigenvalue();
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            (Scaling::Lin { .. }, Var::Lin(x), Var::Lin(dx)) => {
                for (a, da) in x.iter().zip(dx) {
                    if *da < 0.0 {
                        alpha = alpha.min(-a / da);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    alpha
}

fn factor_with_ridge(mat: &[f64], m: usize) -> Option<Vec<f64>> {
    if let Some(l) = cholesky_flat(mat, m) {
        return Some(l);
    }
    let max_diag = (0..m).map(|i| mat[i * m + i].abs()).fold(0.0, f64::max);
    let mut ridged = mat.to_vec();
    for i in 0..m {
        ridged[i * m + i] += 1e-12 * (1.0 + max_diag);
    }
    cholesky_flat(&ridged, m)
}
