use coherence_core::random;
use coherence_core::roc::roc_program;
use coherence_core::sdp::{BlockKind, BlockValue, ConicProblem, Constraint, SolverOptions};
use coherence_core::{DensityMatrix, HermitianMatrix};
use proptest::prelude::*;

fn scaled_cost(p: &ConicProblem, c: f64) -> ConicProblem {
    let cost = p
        .cost()
        .iter()
        .map(|b| match b {
            BlockValue::Hermitian(h) => BlockValue::Hermitian(h.scale(c)),
            BlockValue::Vector(v) => BlockValue::Vector(v.iter().map(|x| x * c).collect()),
        })
        .collect();
    ConicProblem::new(p.blocks().to_vec(), cost, p.constraints().to_vec()).unwrap()
}

#[test]
fn maximally_coherent_qutrit_program() {
    let rho = DensityMatrix::maximally_coherent(3);
    let sol = roc_program(&rho).unwrap().solve(&SolverOptions::default());
    assert!(sol.is_optimal());
    // max Tr[Y rho] = 3
    assert!((sol.primal_value + 3.0).abs() < 1e-7, "{}", sol.primal_value);
    assert!((sol.dual_value + 3.0).abs() < 1e-7);
}

#[test]
fn qubit_program_value() {
    for seed in 0..20 {
        let rho = random::random_state(2, 2, seed).unwrap();
        let sol = roc_program(&rho).unwrap().solve(&SolverOptions::default());
        assert!(sol.is_optimal());
        let expect = 1.0 + 2.0 * rho[(0, 1)].norm();
        assert!((-sol.primal_value - expect).abs() < 1e-7);
    }
}

#[test]
fn mixed_cone_program() {
    // min x00 + x11 + 2 t  s.t.  x01 + x10 = 1 (real part 1/2 off-diagonal), x00 - t = 0.2
    let offdiag = HermitianMatrix::new(
        coherence_core::ComplexMatrix::from_fn(2, 2, |r, c| if r != c { coherence_core::C64::new(0.5, 0.0) } else { coherence_core::C64::new(0.0, 0.0) }),
    )
    .unwrap();
    let p = ConicProblem::new(
        vec![BlockKind::Psd(2), BlockKind::Nonneg(1)],
        vec![BlockValue::Hermitian(HermitianMatrix::identity(2)), BlockValue::Vector(vec![2.0])],
        vec![
            Constraint::new(vec![(0, BlockValue::Hermitian(offdiag))], 1.0),
            Constraint::new(
                vec![
                    (0, BlockValue::Hermitian(HermitianMatrix::basis_projector(2, 0))),
                    (1, BlockValue::Vector(vec![-1.0])),
                ],
                0.2,
            ),
        ],
    )
    .unwrap();
    let sol = p.solve(&SolverOptions::default());
    assert!(sol.is_optimal());
    // x01 = 1, x11 = 1/x00, t = x00 - 0.2: minimize 3 x00 + 1/x00 - 0.4
    let expect = 2.0 * 3f64.sqrt() - 0.4;
    assert!((sol.primal_value - expect).abs() < 1e-7, "{}", sol.primal_value);
}

#[test]
fn history_is_recorded() {
    let rho = random::random_state(3, 3, 4).unwrap();
    let opts = SolverOptions { record_history: true, ..SolverOptions::default() };
    let sol = roc_program(&rho).unwrap().solve(&opts);
    // starting point plus one record per iteration
    assert_eq!(sol.history.len(), sol.iterations + 1);
    assert_eq!(sol.history_jsonl().lines().count(), sol.iterations + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duality_and_slackness(seed in 0u64..10_000, d in 2usize..6, rank in 1usize..6) {
        let rank = rank.min(d);
        let rho = random::random_state(d, rank, seed).unwrap();
        let p = roc_program(&rho).unwrap();
        let opts = SolverOptions { record_history: true, ..SolverOptions::default() };
        let sol = p.solve(&opts);
        prop_assert!(sol.is_optimal());
        // weak duality holds wherever both sides are feasible; the start is dual infeasible
        for rec in sol.history.iter().filter(|r| r.primal_infeasibility < 1e-12 && r.dual_infeasibility < 1e-12) {
            prop_assert!(rec.primal >= rec.dual - 1e-12, "iterate {}: {} < {}", rec.iteration, rec.primal, rec.dual);
        }
        prop_assert!(sol.primal_value >= sol.dual_value - 1e-12);
        for (x, s) in sol.primal.iter().zip(&sol.slack) {
            let comp = x.inner(s);
            prop_assert!(comp <= 1e-7, "Tr XS = {}", comp);
        }
        let (rp, rd) = p.residuals(&sol.primal, &sol.dual, &sol.slack);
        prop_assert!(rp <= 1e-7 && rd <= 1e-7);
        for (x, s) in sol.primal.iter().zip(&sol.slack) {
            prop_assert!(x.min_cone_value() >= -1e-9);
            prop_assert!(s.min_cone_value() >= -1e-9);
        }
    }

    #[test]
    fn cost_scaling(seed in 0u64..10_000, c in 0.01f64..100.0) {
        let rho = random::random_state(3, 3, seed).unwrap();
        let p = roc_program(&rho).unwrap();
        let base = p.solve(&SolverOptions::default());
        let scaled = scaled_cost(&p, c).solve(&SolverOptions::default());
        prop_assert!((scaled.primal_value - c * base.primal_value).abs() <= 1e-7 * c * (1.0 + base.primal_value.abs()));
        let x0 = base.primal[0].as_hermitian().unwrap();
        let x1 = scaled.primal[0].as_hermitian().unwrap();
        prop_assert!((x0.matrix() - x1.matrix()).max_abs() <= 1e-6);
    }

    #[test]
    fn constraint_order_is_irrelevant(seed in 0u64..10_000, d in 2usize..6) {
        let rho = random::random_state(d, d, seed).unwrap();
        let p = roc_program(&rho).unwrap();
        let mut cons = p.constraints().to_vec();
        cons.reverse();
        cons.rotate_left(seed as usize % d);
        let q = ConicProblem::new(p.blocks().to_vec(), p.cost().to_vec(), cons).unwrap();
        let a = p.solve(&SolverOptions::default()).primal_value;
        let b = q.solve(&SolverOptions::default()).primal_value;
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }
}
