//! Oracle gating and frozen fixtures.
//!
//! Regenerate fixtures with `cargo test -p coherence-core --test oracle -- --ignored`.

use std::path::PathBuf;

use coherence_core::games::{success_probability, Game, PhaseGame};
use coherence_core::oracle::{discrimination_grid_oracle, helstrom_value, roc_descent_oracle, Fixture};
use coherence_core::random;
use coherence_core::roc::{find_l1_gap_witness, roc_exact};
use coherence_core::{l1_coherence, DensityMatrix};
use proptest::prelude::*;

const QUTRIT_SEEDS: [u64; 3] = [11, 12, 13];
const GAP_SEED: u64 = 0;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

fn load(name: &str) -> Fixture {
    let text = std::fs::read_to_string(fixture_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

fn save(name: &str, f: &Fixture) {
    std::fs::create_dir_all(fixture_dir()).unwrap();
    std::fs::write(fixture_dir().join(name), serde_json::to_string_pretty(f).unwrap() + "\n").unwrap();
}

#[test]
#[ignore = "writes tests/fixtures"]
fn generate_fixtures() {
    for seed in QUTRIT_SEEDS {
        let rho = random::random_state(3, 3, seed).unwrap();
        let v = roc_descent_oracle(&rho, 8, seed);
        save(&format!("roc_qutrit_seed{seed}.json"), &Fixture::new(seed, rho.matrix(), v, 1e-6, "roc_descent_oracle"));
    }
    let gap = find_l1_gap_witness(3, GAP_SEED, 10_000).unwrap();
    let v = roc_descent_oracle(&gap.state, 8, GAP_SEED);
    save("gap_witness_d3.json", &Fixture::new(GAP_SEED, gap.state.matrix(), v, 1e-4, "roc_descent_oracle"));
    let plus = DensityMatrix::maximally_coherent(2);
    // witness grid over (c, m) for the single observable X
    let mut best = f64::NEG_INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            let c = -2.0 + 4.0 * i as f64 / 400.0;
            let m = -2.0 + 4.0 * j as f64 / 400.0;
            // W = c X + m 1 is a witness iff m = 0 and |c| <= 1
            if m.abs() < 1e-12 && c.abs() <= 1.0 + 1e-12 {
                best = best.max(-(c + m));
            }
        }
    }
    save("x_pauli_witness_grid.json", &Fixture::new(0, plus.matrix(), best, 1e-7, "witness_grid_scan"));
    let max4 = DensityMatrix::maximally_coherent(4);
    save("maximally_coherent_d4.json", &Fixture::new(0, max4.matrix(), 3.0, 1e-6, "closed_form"));
}

#[test]
fn qutrit_fixtures_match_roc_exact() {
    for seed in QUTRIT_SEEDS {
        let f = load(&format!("roc_qutrit_seed{seed}.json"));
        assert_eq!(f.seed, seed);
        let rho = f.state().unwrap();
        assert!((rho.matrix() - random::random_state(3, 3, seed).unwrap().matrix()).max_abs() < 1e-15);
        let exact = roc_exact(&rho).unwrap().value;
        assert!((exact - f.value).abs() <= f.tol, "seed {seed}: {exact} vs {}", f.value);
    }
}

#[test]
fn gap_fixture_is_strict() {
    let f = load("gap_witness_d3.json");
    let rho = f.state().unwrap();
    let exact = roc_exact(&rho).unwrap().value;
    assert!((exact - f.value).abs() <= f.tol * f.value.max(1e-3));
    let l1 = l1_coherence(&rho);
    assert!(l1 - exact > 1e-4);
    assert!(exact > l1 / 2.0 + 1e-4);
}

#[test]
fn maximally_coherent_fixture() {
    let f = load("maximally_coherent_d4.json");
    assert!((roc_exact(&f.state().unwrap()).unwrap().value - f.value).abs() <= f.tol);
}

#[test]
fn oracle_gates_roc_exact() {
    for seed in 0..10u64 {
        let d = 2 + seed as usize % 2;
        let rho = random::random_state(d, 1 + seed as usize % d, seed).unwrap();
        let exact = roc_exact(&rho).unwrap().value;
        let oracle = roc_descent_oracle(&rho, 4, seed);
        assert!(oracle >= exact - 1e-7);
        assert!((oracle - exact).abs() <= 1e-4 * exact.max(1e-3), "seed {seed}: {oracle} vs {exact}");
    }
}

#[test]
fn helstrom_gates_success_probability() {
    let game: Game = PhaseGame::canonical(2).unwrap().into();
    let plus = DensityMatrix::maximally_coherent(2);
    let ens = game.ensemble(&plus).unwrap();
    assert!((helstrom_value(&ens).unwrap() - 1.0).abs() < 1e-12);
    assert!((success_probability(&game, &plus).unwrap().probability - 1.0).abs() < 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracles_never_undercut_the_solver(seed in 0u64..10_000, m in 2usize..3) {
        let mut rng = random::rng(seed);
        let game: Game = PhaseGame::random_with(2, m, &mut rng).unwrap().into();
        let rho = random::random_state(2, 2, seed).unwrap();
        let ens = game.ensemble(&rho).unwrap();
        let p = success_probability(&game, &rho).unwrap().probability;
        prop_assert!((helstrom_value(&ens).unwrap() - p).abs() <= 1e-7);
        prop_assert!(discrimination_grid_oracle(&ens, 40).unwrap() <= p + 1e-7);
        let exact = roc_exact(&rho).unwrap().value;
        prop_assert!(roc_descent_oracle(&rho, 1, seed) >= exact - 1e-7);
    }
}
