mod common;

use coinflip_lab::adversary::{
    alice_purification_strategy, bob_helstrom_strategy, exact_attack_success,
};
use coinflip_lab::family::{
    analyze_family, family_to_json, parse_family_json, random_family, FamilyBranch, FamilySpec,
};
use coinflip_lab::protocol::{
    exact_outcome_distribution, parse_protocol_json, protocol_to_json, section3_spec, Outcome,
};
use coinflip_lab::trajectory::fidelity_trajectory;
use proptest::prelude::*;

fn family_from(seed: u64, dim: usize, n0: usize, n1: usize) -> FamilySpec {
    let mut rng = common::rng(seed);
    let mut branch = |n: usize| FamilyBranch {
        prior: vec![1.0 / n as f64; n],
        states: (0..n).map(|_| common::random_pure(&mut rng, dim)).collect(),
    };
    let b0 = branch(n0);
    let b1 = branch(n1);
    FamilySpec::new(dim, [b0, b1]).unwrap()
}

#[test]
fn section3_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s3.json");
    std::fs::write(&path, protocol_to_json(&section3_spec()).to_string()).unwrap();
    let back = parse_protocol_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let d = exact_outcome_distribution(&back);
    assert!((d.zero - 0.5).abs() < 1e-12);
    let (a, b) = (fidelity_trajectory(&back).unwrap(), fidelity_trajectory(&section3_spec()).unwrap());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert!((x.f_a - y.f_a).abs() < 1e-12 && (x.f_b - y.f_b).abs() < 1e-12);
    }
}

#[test]
fn family_json_round_trip() {
    let fam = random_family(5);
    let back = parse_family_json(&family_to_json(&fam).to_string()).unwrap();
    let (r1, r2) = (analyze_family(&fam).unwrap(), analyze_family(&back).unwrap());
    assert!((r1.fidelity - r2.fidelity).abs() < 1e-9);
    assert!((r1.trace_distance - r2.trace_distance).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Exported protocols are fair, and the executed attacks reproduce the
    /// closed-form family biases.
    #[test]
    fn family_protocols_realize_their_biases(seed in any::<u64>(), dim in 2usize..5, n0 in 1usize..4, n1 in 1usize..4) {
        let fam = family_from(seed, dim, n0, n1);
        let report = analyze_family(&fam).unwrap();
        let spec = fam.to_protocol("random").unwrap();
        let d = exact_outcome_distribution(&spec);
        prop_assert!((d.zero - 0.5).abs() < 1e-9 && d.abort.abs() < 1e-9);
        for target in [Outcome::Zero, Outcome::One] {
            let bob = bob_helstrom_strategy(&spec, target).unwrap();
            let (bob_exact, _) = exact_attack_success(&spec, &bob.strategy).unwrap();
            prop_assert!((bob_exact - report.bob_success).abs() < 1e-9, "bob {} vs {}", bob_exact, report.bob_success);
            let alice = alice_purification_strategy(&spec, target).unwrap();
            let (alice_exact, _) = exact_attack_success(&spec, &alice.strategy).unwrap();
            prop_assert!(alice_exact >= report.alice_success - 1e-9, "alice {} vs {}", alice_exact, report.alice_success);
        }
        prop_assert!(report.max_bias >= 0.25 - 1e-9);
    }
}
