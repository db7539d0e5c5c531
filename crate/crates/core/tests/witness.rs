use coherence_core::oracle::Fixture;
use coherence_core::random;
use coherence_core::roc::roc_exact;
use coherence_core::witness::{
    best_witness_from_data, min_roc_from_data, validate_witness, witness_lower_bound, CoherenceWitness, WitnessDataset,
};
use coherence_core::{Error, HermitianMatrix};
use proptest::prelude::*;

fn random_observables(d: usize, k: usize, seed: u64) -> Vec<HermitianMatrix> {
    (0..k as u64).map(|i| random::random_hermitian(d, seed * 31 + i)).collect()
}

#[test]
fn x_pauli_matches_grid_fixture() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/x_pauli_witness_grid.json");
    let f: Fixture = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let plus = f.state().unwrap();
    let x = HermitianMatrix::new(coherence_core::ComplexMatrix::from_fn(2, 2, |r, c| {
        coherence_core::C64::new(if r != c { 1.0 } else { 0.0 }, 0.0)
    }))
    .unwrap();
    let data = WitnessDataset::from_state(&plus, vec![x]).unwrap();
    let fit = best_witness_from_data(&data).unwrap();
    assert!((fit.bound - f.value).abs() <= f.tol);
}

#[test]
fn dataset_json_file_shape() {
    let text = r#"{"dim": 2, "observables": [{"dim": 2, "re": [[0, 1], [1, 0]], "im": [[0, 0], [0, 0]]}], "expectations": [2.0]}"#;
    let data = WitnessDataset::from_json(text).unwrap();
    assert!(matches!(min_roc_from_data(&data), Err(Error::InfeasibleData(_))));
}

#[test]
fn roc_witness_saturates_its_bound() {
    for seed in 0..6 {
        let rho = random::random_state(4, 4, seed).unwrap();
        let c = roc_exact(&rho).unwrap();
        assert!(validate_witness(&c.witness).valid);
        let w = CoherenceWitness::new(c.witness.clone()).unwrap();
        assert!((witness_lower_bound(&rho, &w).unwrap() - c.value).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn any_witness_bound_is_below_roc(seed in 0u64..10_000, d in 2usize..5) {
        let rho = random::random_state(d, d, seed).unwrap();
        let other = random::random_state(d, 1, seed + 7).unwrap();
        let w = CoherenceWitness::faithful(&other);
        prop_assert!(witness_lower_bound(&rho, &w).unwrap() <= roc_exact(&rho).unwrap().value + 1e-6);
    }

    #[test]
    fn data_bound_chain(seed in 0u64..10_000, d in 2usize..4, k in 1usize..5) {
        let rho = random::random_state(d, d, seed).unwrap();
        let data = WitnessDataset::from_state(&rho, random_observables(d, k, seed)).unwrap();
        let best = best_witness_from_data(&data).unwrap();
        let min = min_roc_from_data(&data).unwrap().min_roc;
        prop_assert!(validate_witness(best.witness.operator()).valid);
        prop_assert!(best.bound <= min + 1e-7, "{} > {}", best.bound, min);
        prop_assert!(min <= roc_exact(&rho).unwrap().value + 1e-6);
    }

    #[test]
    fn faithful_ordering(seed in 0u64..10_000, d in 2usize..6) {
        let rho = random::random_state(d, 1 + seed as usize % d, seed).unwrap();
        let r = coherence_core::roc::roc_bounds(&rho).unwrap();
        prop_assert!(r.faithful_1 >= r.faithful_2 - 1e-12 && r.faithful_2 >= r.faithful_3 - 1e-12);
    }
}

#[test]
fn informationally_complete_equals_roc() {
    for seed in 20..26 {
        let rho = random::random_state(2, 2, seed).unwrap();
        let data = WitnessDataset::informationally_complete(&rho);
        let min = min_roc_from_data(&data).unwrap().min_roc;
        assert!((min - roc_exact(&rho).unwrap().value).abs() < 1e-6);
    }
}
