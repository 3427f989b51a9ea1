use curlab::verifier::{
    closed_form_unsup, run_counterexample, scenario_class, sweep_negative_samples, Counterexample,
    ScenarioParams,
};
use curlab::losses::{ExactLosses, LossKind};
use curlab::training::FunctionClass;

fn members(which: Counterexample, p: &ScenarioParams) -> Vec<curlab::Repr> {
    match scenario_class(which, p).unwrap().1 {
        FunctionClass::Finite(m) => m,
        _ => unreachable!(),
    }
}

#[test]
fn class_collision_values() {
    let rep = run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(8, 10.0, 1)).unwrap();
    assert_eq!(rep.chosen, "f0");
    assert_eq!(rep.members[0].l_un, 1.0);
    assert!((rep.members[1].l_un - 103.0 / 32.0).abs() < 1e-9);
    assert_eq!(rep.members[0].l_sup_mean, 1.0);
    assert_eq!(rep.members[1].l_sup_mean, 0.0);
    assert_eq!(rep.members[1].l_sup, Some(0.0));
    let small = run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(8, 2.0, 1)).unwrap();
    assert_eq!(small.chosen, "f1");
    assert!(small.matches_prediction);
}

#[test]
fn cluster_collision_flips_with_k() {
    let pick = |k| {
        run_counterexample(Counterexample::ClusterCollision, &ScenarioParams::new(8, 2.0, k))
            .unwrap()
            .chosen
    };
    assert_eq!(pick(4), "f1");
    assert_eq!(pick(5), "f1");
    assert_eq!(pick(6), "f0");
    assert_eq!(pick(64), "f0");
}

#[test]
fn cluster_sweep_hurts_at_large_k() {
    let p = ScenarioParams::new(8, 2.0, 1);
    let (model, class) = scenario_class(Counterexample::ClusterCollision, &p).unwrap();
    let s = sweep_negative_samples(&model, &class, LossKind::hinge(), &[4, 64], 4000, &[0, 1]).unwrap();
    let at = |k| s.aggregates.iter().find(|a| a.0 == k).unwrap().1;
    assert!(at(64) > at(4), "{} vs {}", at(64), at(4));
    assert!(s.hurts);
}

#[test]
fn exact_loss_matches_closed_forms() {
    for which in Counterexample::ALL {
        for r in [0.5, 1.0, 2.0, 4.0] {
            let ks: &[usize] = match which {
                Counterexample::ClassCollision | Counterexample::ClusterCollision => &[1, 3, 7],
                _ => &[1],
            };
            for &k in ks {
                let p = ScenarioParams::new(4, r, k);
                let (model, _) = scenario_class(which, &p).unwrap();
                let f1 = &members(which, &p)[1];
                let got = ExactLosses::new(f1, &model, LossKind::hinge()).unwrap().unsup(k).unwrap();
                let want = closed_form_unsup(which, &p).unwrap();
                assert!((got - want).abs() < 1e-9, "{which} r={r} k={k}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn two_class_scenarios_grow_quadratically() {
    for which in [Counterexample::MeanIsBad, Counterexample::IntraclassVariance] {
        let mut ratios = Vec::new();
        for r in [4.0, 8.0, 16.0] {
            let rep = run_counterexample(which, &ScenarioParams::new(8, r, 1)).unwrap();
            assert_eq!(rep.members[0].l_un, 1.0, "{which}");
            assert_eq!(rep.members[0].l_sup_mean, 1.0, "{which}");
            let best = rep.members[1].l_sup.unwrap();
            assert!(best < 1e-6, "{which}: best classifier loss {best}");
            ratios.push(rep.members[1].l_un / (r * r));
        }
        let least = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(least >= 0.25, "{which}: {ratios:?}");
    }
}

#[test]
fn rejects_bad_params() {
    assert!(run_counterexample(Counterexample::MeanIsBad, &ScenarioParams::new(8, 1.0, 2)).is_err());
    assert!(run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(1, 1.0, 1)).is_err());
    assert!(run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(8, 0.0, 1)).is_err());
    assert!("no-such".parse::<Counterexample>().is_err());
}
