use rayon::prelude::*;

use super::LatentClassModel;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scalar::Real;

/// One contrastive tuple of point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastTuple {
    pub anchor: usize,
    pub positive: usize,
    pub negatives: Vec<usize>,
}

/// Classes drawn for a tuple; kept for diagnostics only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleLabels {
    pub positive_class: usize,
    pub negative_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    pub k: usize,
    pub tuples: Vec<ContrastTuple>,
    pub hidden_labels: Vec<TupleLabels>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Fraction of tuples whose positive class reappears among the negatives.
    pub fn collision_frequency(&self) -> f64 {
        let hits = self
            .hidden_labels
            .iter()
            .filter(|l| l.negative_classes.contains(&l.positive_class))
            .count();
        hits as f64 / self.hidden_labels.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTuple {
    pub anchor: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLabels {
    pub positive_class: usize,
    pub negative_class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockBatch {
    pub b: usize,
    pub tuples: Vec<BlockTuple>,
    pub hidden_labels: Vec<BlockLabels>,
}

impl BlockBatch {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Draws `m` tuples: c⁺ ~ ρ, x, x⁺ iid ~ D_{c⁺}, then k pairs (c⁻ ~ ρ,
/// x⁻ ~ D_{c⁻}). Tuple `j` uses stream `j` of `seed`.
pub fn sample_batch<T: Real>(
    model: &LatentClassModel<T>,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if k == 0 || m == 0 {
        return Err(Error::InvalidArgument("k and M must be at least 1".into()));
    }
    let (tuples, hidden_labels) = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, j as u64);
            let cp = model.rho().sample(&mut rng);
            let anchor = model.class(cp).sample(&mut rng);
            let positive = model.class(cp).sample(&mut rng);
            let mut negatives = Vec::with_capacity(k);
            let mut negative_classes = Vec::with_capacity(k);
            for _ in 0..k {
                let cn = model.rho().sample(&mut rng);
                negative_classes.push(cn);
                negatives.push(model.class(cn).sample(&mut rng));
            }
            (
                ContrastTuple {
                    anchor,
                    positive,
                    negatives,
                },
                TupleLabels {
                    positive_class: cp,
                    negative_classes,
                },
            )
        })
        .unzip();
    Ok(SampleBatch {
        k,
        tuples,
        hidden_labels,
    })
}

/// Draws `m` block tuples: c⁺ ~ ρ, x and b positives iid ~ D_{c⁺}; c⁻ ~ ρ
/// and b negatives iid ~ D_{c⁻}. With b = 1 the draws match
/// [`sample_batch`] with k = 1 under the same seed.
pub fn sample_block_batch<T: Real>(
    model: &LatentClassModel<T>,
    b: usize,
    m: usize,
    seed: u64,
) -> Result<BlockBatch> {
    if b == 0 || m == 0 {
        return Err(Error::InvalidArgument("b and M must be at least 1".into()));
    }
    let (tuples, hidden_labels) = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, j as u64);
            let cp = model.rho().sample(&mut rng);
            let anchor = model.class(cp).sample(&mut rng);
            let positives = (0..b).map(|_| model.class(cp).sample(&mut rng)).collect();
            let cn = model.rho().sample(&mut rng);
            let negatives = (0..b).map(|_| model.class(cn).sample(&mut rng)).collect();
            (
                BlockTuple {
                    anchor,
                    positives,
                    negatives,
                },
                BlockLabels {
                    positive_class: cp,
                    negative_class: cn,
                },
            )
        })
        .unzip();
    Ok(BlockBatch {
        b,
        tuples,
        hidden_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::FiniteDistribution;

    fn two_point() -> LatentClassModel<f64> {
        LatentClassModel::new(
            2,
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec!["p".into(), "n".into()],
            vec![
                FiniteDistribution::uniform(&[0, 1]).unwrap(),
                FiniteDistribution::uniform(&[2, 3]).unwrap(),
            ],
            FiniteDistribution::uniform(&[0, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_and_well_formed() {
        let m = two_point();
        let a = sample_batch(&m, 3, 50, 11).unwrap();
        let b = sample_batch(&m, 3, 50, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_batch(&m, 3, 50, 12).unwrap());
        for (t, l) in a.tuples.iter().zip(&a.hidden_labels) {
            assert_eq!(t.negatives.len(), 3);
            assert!(m.class(l.positive_class).prob(t.anchor) > 0.0);
            assert!(m.class(l.positive_class).prob(t.positive) > 0.0);
            for (x, c) in t.negatives.iter().zip(&l.negative_classes) {
                assert!(m.class(*c).prob(*x) > 0.0);
            }
        }
    }

    #[test]
    fn unit_blocks_match_pairs() {
        let m = two_point();
        let pairs = sample_batch(&m, 1, 40, 5).unwrap();
        let blocks = sample_block_batch(&m, 1, 40, 5).unwrap();
        for (p, q) in pairs.tuples.iter().zip(&blocks.tuples) {
            assert_eq!(p.anchor, q.anchor);
            assert_eq!(vec![p.positive], q.positives);
            assert_eq!(p.negatives, q.negatives);
        }
    }

    #[test]
    fn collision_rate_near_tau() {
        let m = two_point();
        let batch = sample_batch(&m, 1, 10_000, 99).unwrap();
        let se = (0.25_f64 / 10_000.0).sqrt();
        assert!((batch.collision_frequency() - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn rejects_zero_sizes() {
        let m = two_point();
        assert!(sample_batch(&m, 0, 5, 0).is_err());
        assert!(sample_block_batch(&m, 1, 0, 0).is_err());
    }
}
