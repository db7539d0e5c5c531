use coherence_core::games::{phase_channel, random_incoherent_instrument};
use coherence_core::random;
use coherence_core::roc::{roc_bounds, roc_exact, roc_fast_path, Method};
use coherence_core::witness::validate_witness;
use coherence_core::{l1_coherence, ComplexMatrix, DensityMatrix, PureState, C64};
use proptest::prelude::*;

fn state_from_phases(moduli: [f64; 3], phases: [f64; 3]) -> DensityMatrix {
    // off-diagonals (0,1), (1,2), (0,2)
    let mut m = ComplexMatrix::from_diagonal(&[C64::new(1.0 / 3.0, 0.0); 3]);
    for (&(r, c), (&a, &p)) in [(0, 1), (1, 2), (0, 2)].iter().zip(moduli.iter().zip(&phases)) {
        m[(r, c)] = C64::from_polar(a, p);
        m[(c, r)] = C64::from_polar(a, -p);
    }
    DensityMatrix::from_matrix(m).unwrap()
}

#[test]
fn maximally_coherent_up_to_eight() {
    for d in 2..=8 {
        let c = roc_exact(&DensityMatrix::maximally_coherent(d)).unwrap();
        assert!((c.value - (d - 1) as f64).abs() < 1e-7);
    }
}

#[test]
fn lower_bound_family_value() {
    let rho = DensityMatrix::lower_bound_family(4, 1.0 / 3.0).unwrap();
    assert!((roc_exact(&rho).unwrap().value - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn diagonal_state_has_zero_certificate() {
    let c = roc_exact(&DensityMatrix::diagonal_state(&[0.1, 0.2, 0.7]).unwrap()).unwrap();
    assert_eq!(c.value, 0.0);
    assert!(c.noise_part.is_none());
    assert!(validate_witness(&c.witness).valid);
}

#[test]
fn fast_path_closed_forms() {
    let psi = random::random_pure(5, 3);
    let l1 = psi.amplitudes().iter().map(|a| a.norm()).sum::<f64>().powi(2) - 1.0;
    assert!((roc_fast_path(&psi.density()).unwrap() - l1).abs() < 1e-12);
    let q = random::random_state(2, 2, 7).unwrap();
    assert!((roc_fast_path(&q).unwrap() - 2.0 * q[(0, 1)].norm()).abs() < 1e-14);
    let twisted = state_from_phases([0.1, 0.1, 0.1], [0.0, 0.0, std::f64::consts::FRAC_PI_2]);
    assert!(roc_fast_path(&twisted).is_none());
    let aligned = state_from_phases([0.1, 0.1, 0.1], [0.3, 0.4, 0.7]);
    assert!(roc_fast_path(&aligned).is_some());
}

#[test]
fn bound_examples() {
    let psi = random::random_pure(4, 1).density();
    let r = roc_bounds(&psi).unwrap().with_exact(roc_exact(&psi).unwrap().value);
    assert!(r.holds());
    assert!((r.l1_upper - r.exact.unwrap()).abs() < 1e-6);
    let fam = DensityMatrix::lower_bound_family(5, 0.1).unwrap();
    let r = roc_bounds(&fam).unwrap().with_exact(roc_exact(&fam).unwrap().value);
    assert!(r.holds() && (r.l1_lower - r.exact.unwrap()).abs() < 1e-6);
    let r = roc_bounds(&DensityMatrix::maximally_mixed(3)).unwrap();
    assert_eq!([r.l1_upper, r.l1_lower, r.faithful_1, r.faithful_2, r.faithful_3], [0.0; 5]);
}

#[test]
fn near_maximal_states_stay_near_maximal() {
    let eps = 1e-3;
    for d in 2..=5 {
        // mix towards the maximally mixed state until the l1 coherence is d - 1 - eps
        let p = 1.0 - eps / (d - 1) as f64;
        let rho = DensityMatrix::mixture(&[
            (p, &DensityMatrix::maximally_coherent(d)),
            (1.0 - p, &DensityMatrix::maximally_mixed(d)),
        ])
        .unwrap();
        assert!(l1_coherence(&rho) >= (d - 1) as f64 - eps - 1e-12);
        assert!(roc_exact(&rho).unwrap().value >= (d - 1) as f64 - 10.0 * eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certificates_are_consistent(seed in 0u64..10_000, d in 2usize..9, rank in 1usize..9) {
        let rho = random::random_state(d, rank.min(d), seed).unwrap();
        let c = roc_exact(&rho).unwrap();
        prop_assert!((c.pseudomixture_value - c.witness_value).abs() <= 1e-7);
        prop_assert!((-c.witness.inner(&rho) - c.value).abs() <= 1e-6);
        prop_assert!((c.reconstruct().matrix() - rho.matrix()).max_abs() <= 1e-7);
        let check = validate_witness(&c.witness);
        prop_assert!(check.min_diagonal.abs() <= 1e-8 && check.max_eigenvalue <= 1.0 + 1e-8);
        prop_assert_eq!(c.method, Method::Sdp);
    }

    #[test]
    fn faithfulness(seed in 0u64..10_000, d in 2usize..6, eps in 1e-6f64..1e-2) {
        let p = random::random_probabilities(d, &mut random::rng(seed));
        let delta = DensityMatrix::diagonal_state(&p).unwrap();
        prop_assert!(roc_exact(&delta).unwrap().value <= 1e-7);
        let rho = DensityMatrix::mixture(&[(1.0 - eps, &delta), (eps, &random::random_pure(d, seed).density())]).unwrap();
        if (rho.matrix() - rho.dephased().matrix()).max_abs() > 1e-9 {
            prop_assert!(roc_exact(&rho).unwrap().value > 1e-7);
        }
    }

    #[test]
    fn convexity(seed in 0u64..10_000, d in 2usize..6, p in 0.0f64..1.0) {
        let a = random::random_state(d, d, seed).unwrap();
        let b = random::random_state(d, 1 + seed as usize % d, seed + 1).unwrap();
        let mix = DensityMatrix::mixture(&[(p, &a), (1.0 - p, &b)]).unwrap();
        let lhs = roc_exact(&mix).unwrap().value;
        let rhs = p * roc_exact(&a).unwrap().value + (1.0 - p) * roc_exact(&b).unwrap().value;
        prop_assert!(lhs <= rhs + 1e-7);
    }

    #[test]
    fn selective_monotonicity(seed in 0u64..10_000, d in 2usize..5, m in 1usize..5) {
        let rho = random::random_state(d, d, seed).unwrap();
        let inst = random_incoherent_instrument(d, m, seed).unwrap();
        let after: f64 = inst.apply(&rho).unwrap().iter().map(|(w, s)| w * roc_exact(s).unwrap().value).sum();
        prop_assert!(after <= roc_exact(&rho).unwrap().value + 1e-6);
    }

    #[test]
    fn diagonal_unitary_covariance(seed in 0u64..10_000, d in 2usize..6, phi in 0.0f64..std::f64::consts::TAU) {
        let rho = random::random_state(d, d, seed).unwrap();
        let u = phase_channel(d, phi);
        let moved = rho.evolve(&u).unwrap();
        prop_assert!((roc_exact(&moved).unwrap().value - roc_exact(&rho).unwrap().value).abs() <= 1e-7);
    }

    #[test]
    fn fast_path_agrees_with_sdp(seed in 0u64..10_000, d in 2usize..7) {
        let pure: PureState = random::random_pure(d, seed);
        let x_shaped = {
            let base = random::random_state(d, d, seed).unwrap();
            let m = ComplexMatrix::from_fn(d, d, |r, c| if r == c || r + c == d - 1 { base[(r, c)] } else { C64::new(0.0, 0.0) });
            DensityMatrix::from_matrix(m).ok()
        };
        let mut states = vec![pure.density(), random::random_state(d, d, seed).unwrap()];
        states.extend(x_shaped);
        for rho in states {
            if let Some(v) = roc_fast_path(&rho) {
                prop_assert!((v - roc_exact(&rho).unwrap().value).abs() <= 1e-6);
            }
        }
        prop_assert!(roc_fast_path(&pure.density()).is_some());
    }

    #[test]
    fn bound_chain(seed in 0u64..10_000, d in 2usize..7) {
        let rho = random::random_state(d, 1 + seed as usize % d, seed).unwrap();
        let r = roc_bounds(&rho).unwrap().with_exact(roc_exact(&rho).unwrap().value);
        prop_assert!(r.holds(), "{:?}", r.violations);
    }
}
