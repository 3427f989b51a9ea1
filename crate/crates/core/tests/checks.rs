use curlab::latent_model::LabelPolicy;
use curlab::losses::{ExactLosses, LossKind};
use curlab::verifier::{
    bundled_model, check_block_chain, check_multiway_tasks, check_subgaussian_binary,
    check_subgaussian_multiway, random_pair, run_random_suite, CheckId, CheckOptions,
};
use curlab::Repr;

#[test]
fn block_chain_slacks_move_monotonically_in_b() {
    let model = bundled_model("two-point").unwrap();
    let f = Repr::identity(2, 1.0).unwrap();
    let chains: Vec<_> = [1, 2, 4]
        .into_iter()
        .map(|b| check_block_chain(&f, &model, b, LossKind::hinge()).unwrap())
        .collect();
    for w in chains.windows(2) {
        assert!(w[1][0].slack <= w[0][0].slack + 1e-12);
        assert!(w[1][1].slack >= w[0][1].slack - 1e-12);
    }
    assert!(chains.iter().flatten().all(|c| c.pass));
    assert_eq!(chains[0][1].slack, 0.0);
}

#[test]
fn zero_map_multiway_constants() {
    let model = bundled_model("two-point").unwrap();
    let z = Repr::zero(4, 2, 1.0).unwrap();
    let split = ExactLosses::new(&z, &model, LossKind::hinge()).unwrap().collision_split(2).unwrap();
    assert_eq!(split.baseline_term, 1.0);
    assert_eq!(split.collision_term, 1.0);
    let checks = check_multiway_tasks(&z, &model, 2, LossKind::hinge(), LabelPolicy::Uniform).unwrap();
    assert!(checks.iter().all(|c| c.pass && c.slack >= 0.0), "{checks:?}");
}

#[test]
fn k1_multiway_matches_binary_bound() {
    for i in 0..20 {
        let (model, f) = random_pair(3, i).unwrap();
        let checks = check_multiway_tasks(&f, &model, 1, LossKind::hinge(), LabelPolicy::Uniform).unwrap();
        for id in ["multiway-tasks/k1-lhs", "multiway-tasks/k1-rhs"] {
            let c = checks.iter().find(|c| c.id == id).unwrap();
            assert!(c.lhs <= 1e-9, "{id}: {}", c.lhs);
        }
    }
}

#[test]
fn subgaussian_checks_hold_for_small_epsilon() {
    for i in 0..20 {
        let (model, f) = random_pair(11, i).unwrap();
        for eps in [1e-3, 0.1, 0.5] {
            assert!(check_subgaussian_binary(&f, &model, eps).unwrap().pass);
            for k in 1..=3 {
                let c = check_subgaussian_multiway(&f, &model, k, eps, LabelPolicy::Uniform).unwrap();
                assert!(c.pass, "pair {i} eps {eps} k {k}: {}", c.slack);
            }
        }
    }
}

#[test]
fn suite_logs_pair_and_seed() {
    let checks = run_random_suite(&[CheckId::MeanSupJensen], 3, 42, &CheckOptions::default()).unwrap();
    assert_eq!(checks.len(), 3 * 2);
    assert!(checks.iter().all(|c| c.details["suite_seed"] == 42));
    let again = run_random_suite(&[CheckId::MeanSupJensen], 3, 42, &CheckOptions::default()).unwrap();
    assert_eq!(checks, again);
}
