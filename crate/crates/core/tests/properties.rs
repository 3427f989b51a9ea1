use approx::assert_relative_eq;
use proptest::prelude::*;

use curlab::deviation::sigma_bound;
use curlab::latent_model::{sample_batch, sample_block_batch};
use curlab::linalg::spectral_norm_psd;
use curlab::losses::{ExactLosses, LossKind};
use curlab::representation::class_moments;
use curlab::verifier::{check_mean_sup_jensen, random_pair};
use curlab::Loss;

fn kinds() -> [Loss; 3] {
    [
        LossKind::hinge(),
        LossKind::logistic(),
        LossKind::hinge_with_margin(0.5).unwrap(),
    ]
}

fn vec_pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..=max_len).prop_flat_map(|t| {
        (
            prop::collection::vec(-5.0f64..5.0, t),
            prop::collection::vec(-5.0f64..5.0, t),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_is_convex((a, b) in vec_pair(5), lambda in 0.0f64..=1.0) {
        for kind in kinds() {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
            let lhs = kind.eval(&mix);
            let rhs = lambda * kind.eval(&a) + (1.0 - lambda) * kind.eval(&b);
            prop_assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn loss_is_monotone_decreasing(v in prop::collection::vec(-5.0f64..5.0, 1..5), i in 0usize..5, bump in 0.0f64..3.0) {
        let i = i % v.len();
        let mut w = v.clone();
        w[i] += bump;
        for kind in kinds() {
            prop_assert!(kind.eval(&w) <= kind.eval(&v) + 1e-12);
        }
    }

    #[test]
    fn decomposition_identity_holds(seed in 0u64..1000, index in 0u64..50) {
        let (model, f) = random_pair(seed, index).unwrap();
        for kind in kinds() {
            let exact = ExactLosses::new(&f, &model, kind).unwrap();
            let d = exact.decompose().unwrap();
            let l = exact.unsup(1).unwrap();
            assert_relative_eq!(l, d.tau * d.l_eq + (1.0 - d.tau) * d.l_neq, epsilon = 1e-10);
        }
    }

    #[test]
    fn mean_classifier_jensen_bound(seed in 0u64..1000, index in 0u64..50) {
        let (model, f) = random_pair(seed, index).unwrap();
        for kind in [LossKind::hinge(), LossKind::logistic()] {
            let c = check_mean_sup_jensen(&f, &model, kind).unwrap();
            prop_assert!(c.pass, "slack {}", c.slack);
        }
    }

    #[test]
    fn block_loss_at_most_pair_loss(seed in 0u64..1000, index in 0u64..50, b in 1usize..=3) {
        let (model, f) = random_pair(seed, index).unwrap();
        for kind in [LossKind::hinge(), LossKind::logistic()] {
            let exact = ExactLosses::new(&f, &model, kind).unwrap();
            prop_assert!(exact.block(b).unwrap() <= exact.unsup(1).unwrap() + 1e-12);
        }
    }

    #[test]
    fn block_of_one_is_pair_loss(seed in 0u64..1000, index in 0u64..50) {
        let (model, f) = random_pair(seed, index).unwrap();
        for kind in kinds() {
            let exact = ExactLosses::new(&f, &model, kind).unwrap();
            assert_relative_eq!(exact.block(1).unwrap(), exact.unsup(1).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn unsup_loss_grows_with_k(seed in 0u64..1000, index in 0u64..50) {
        let (model, f) = random_pair(seed, index).unwrap();
        for kind in kinds() {
            let exact = ExactLosses::new(&f, &model, kind).unwrap();
            let l: Vec<f64> = (1..=3).map(|k| exact.unsup(k).unwrap()).collect();
            prop_assert!(l[0] <= l[1] + 1e-12 && l[1] <= l[2] + 1e-12, "{l:?}");
        }
    }

    #[test]
    fn rayleigh_quotient_below_spectral_norm(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 1..6),
        u in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let d = 4;
        let a: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| rows.iter().map(|r| r[i] * r[j]).sum()).collect())
            .collect();
        let uu: f64 = u.iter().map(|x| x * x).sum();
        prop_assume!(uu > 1e-6);
        let quad: f64 = (0..d).map(|i| (0..d).map(|j| u[i] * a[i][j] * u[j]).sum::<f64>()).sum();
        let norm = spectral_norm_psd(&a);
        prop_assert!(quad / uu <= norm * (1.0 + 1e-10) + 1e-12, "{} > {norm}", quad / uu);
    }

    #[test]
    fn mgf_bounded_by_sigma(seed in 0u64..1000, index in 0u64..50, lambda in -4.0f64..4.0, angle in 0.0f64..6.3) {
        let (model, f) = random_pair(seed, index).unwrap();
        let sigma = sigma_bound(&f, &model, 8, seed).unwrap();
        let emb = f.embed(&model).unwrap();
        let d = f.output_dim();
        // a unit direction in the first two output coordinates
        let mut u = vec![0.0; d];
        u[0] = angle.cos();
        if d > 1 {
            u[1] = angle.sin();
        } else {
            u[0] = 1.0;
        }
        for c in 0..model.num_classes() {
            let m = class_moments(&f, &model, c).unwrap();
            let mgf: f64 = model
                .class(c)
                .positive()
                .map(|(x, p)| {
                    let proj: f64 = u.iter().zip(&emb[x]).zip(&m.mean).map(|((ui, v), mu)| ui * (v - mu)).sum();
                    p * (lambda * proj).exp()
                })
                .sum();
            let bound = (lambda * lambda * sigma * sigma / 2.0).exp();
            prop_assert!(mgf <= bound * (1.0 + 1e-12), "class {c}: {mgf} > {bound}");
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), index in 0u64..20, k in 1usize..4, m in 1usize..64) {
        let (model, _) = random_pair(7, index).unwrap();
        let a = sample_batch(&model, k, m, seed).unwrap();
        let b = sample_batch(&model, k, m, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let p = sample_batch(&model, 1, m, seed).unwrap();
        let q = sample_block_batch(&model, 1, m, seed).unwrap();
        for ((t, lt), (u, lu)) in p.tuples.iter().zip(&p.hidden_labels).zip(q.tuples.iter().zip(&q.hidden_labels)) {
            prop_assert_eq!(t.anchor, u.anchor);
            prop_assert_eq!(&vec![t.positive], &u.positives);
            prop_assert_eq!(&t.negatives, &u.negatives);
            prop_assert_eq!(lt.positive_class, lu.positive_class);
            prop_assert_eq!(lt.negative_classes[0], lu.negative_class);
        }
    }
}
