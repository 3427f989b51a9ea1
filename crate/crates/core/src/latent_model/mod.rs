//! Latent-class generative model over a finite point set.
//!
//! Points and classes carry string ids in files; internally both are dense
//! indices in file order.

mod distribution;
mod io;
mod sampling;
mod tasks;

pub use distribution::FiniteDistribution;
pub use io::ModelFile;
pub use sampling::{
    sample_batch, sample_block_batch, BlockBatch, BlockLabels, BlockTuple, ContrastTuple,
    SampleBatch, TupleLabels,
};
pub(crate) use tasks::require_cap;
pub use tasks::{task_distribution, LabelPolicy, Task, TaskEntry, TaskWeights, DEFAULT_ENUMERATION_CAP};

use crate::error::{Error, Result};
use crate::scalar::{ksum, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct LatentClassModel<T> {
    ambient_dim: usize,
    point_ids: Vec<String>,
    points: Vec<Vec<T>>,
    class_ids: Vec<String>,
    classes: Vec<FiniteDistribution<T>>,
    rho: FiniteDistribution<T>,
}

impl<T: Real> LatentClassModel<T> {
    /// Builds a model from indexed parts. `classes[c]` is over point indices,
    /// `rho` over class indices.
    pub fn new(
        ambient_dim: usize,
        point_ids: Vec<String>,
        points: Vec<Vec<T>>,
        class_ids: Vec<String>,
        classes: Vec<FiniteDistribution<T>>,
        rho: FiniteDistribution<T>,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidModel("ambient_dim must be positive".into()));
        }
        if point_ids.len() != points.len() {
            return Err(Error::InvalidModel("point ids and vectors differ in count".into()));
        }
        if class_ids.len() != classes.len() {
            return Err(Error::InvalidModel("class ids and distributions differ in count".into()));
        }
        if classes.is_empty() {
            return Err(Error::InvalidModel("no classes".into()));
        }
        for (id, p) in point_ids.iter().zip(&points) {
            if p.len() != ambient_dim {
                return Err(Error::InvalidModel(format!(
                    "point `{id}` has length {}, expected {ambient_dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("point `{id}` is not finite")));
            }
        }
        check_unique(&point_ids, "point")?;
        check_unique(&class_ids, "class")?;
        for (cid, dist) in class_ids.iter().zip(&classes) {
            if dist.positive().next().is_none() {
                return Err(Error::InvalidModel(format!("class `{cid}` has empty support")));
            }
            if let Some(bad) = dist.ids().find(|&i| i >= points.len()) {
                return Err(Error::InvalidModel(format!(
                    "class `{cid}` references missing point index {bad}"
                )));
            }
        }
        let mut covered = vec![false; classes.len()];
        for &(c, p) in rho.entries() {
            if c >= classes.len() {
                return Err(Error::InvalidModel(format!("rho references missing class index {c}")));
            }
            if p <= T::zero() {
                return Err(Error::InvalidModel(format!(
                    "rho gives class `{}` no mass",
                    class_ids[c]
                )));
            }
            covered[c] = true;
        }
        if let Some(c) = covered.iter().position(|&x| !x) {
            return Err(Error::InvalidModel(format!(
                "rho does not cover class `{}`",
                class_ids[c]
            )));
        }
        Ok(Self {
            ambient_dim,
            point_ids,
            points,
            class_ids,
            classes,
            rho,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn point_ids(&self) -> &[String] {
        &self.point_ids
    }

    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn class(&self, c: usize) -> &FiniteDistribution<T> {
        &self.classes[c]
    }

    pub fn classes(&self) -> &[FiniteDistribution<T>] {
        &self.classes
    }

    pub fn rho(&self) -> &FiniteDistribution<T> {
        &self.rho
    }

    /// ρ as a dense vector indexed by class.
    pub fn rho_dense(&self) -> Vec<T> {
        let mut r = vec![T::zero(); self.classes.len()];
        for &(c, p) in self.rho.entries() {
            r[c] = p;
        }
        r
    }

    pub fn point_index(&self, id: &str) -> Result<usize> {
        self.point_ids
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| Error::UnknownPoint(id.to_string()))
    }

    pub fn class_index(&self, id: &str) -> Result<usize> {
        self.class_ids
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::UnknownClass(id.to_string()))
    }

    /// Marginal over points of `E_{c~w} D_c` for class weights `w` (dense,
    /// not necessarily normalized; zero-weight classes skipped).
    pub fn mixture(&self, weights: &[T]) -> Result<FiniteDistribution<T>> {
        let mut mass = vec![T::zero(); self.points.len()];
        let mut used = vec![false; self.points.len()];
        for (c, &w) in weights.iter().enumerate() {
            if w <= T::zero() {
                continue;
            }
            for &(x, p) in self.classes[c].entries() {
                mass[x] += w * p;
                used[x] = true;
            }
        }
        let ids: Vec<usize> = (0..mass.len()).filter(|&i| used[i]).collect();
        let w: Vec<T> = ids.iter().map(|&i| mass[i]).collect();
        FiniteDistribution::from_weights(&ids, &w)
    }

    /// D_neg, the point marginal under ρ.
    pub fn negative_marginal(&self) -> FiniteDistribution<T> {
        self.mixture(&self.rho_dense()).expect("rho has positive mass")
    }

    /// D_neg conditioned on the negative's class differing from `c`.
    pub fn negative_marginal_excluding(&self, c: usize) -> Result<FiniteDistribution<T>> {
        let mut w = self.rho_dense();
        w[c] = T::zero();
        self.mixture(&w)
            .map_err(|_| Error::Degenerate(format!("no class other than `{}`", self.class_ids[c])))
    }

    pub fn collision_stats(&self, k: usize) -> Result<CollisionStats<T>> {
        CollisionStats::new(&self.rho_dense(), k)
    }

    /// ν(c) ∝ ρ(c)².
    pub fn nu_distribution(&self) -> FiniteDistribution<T> {
        let r = self.rho_dense();
        let ids: Vec<usize> = (0..r.len()).collect();
        let w: Vec<T> = r.iter().map(|&p| p * p).collect();
        FiniteDistribution::from_weights(&ids, &w).expect("rho has positive mass")
    }

    /// u(c) ∝ ρ(c)(1 − (1 − ρ(c))^k).
    pub fn u_distribution(&self, k: usize) -> Result<FiniteDistribution<T>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let r = self.rho_dense();
        let ids: Vec<usize> = (0..r.len()).collect();
        let w: Vec<T> = r
            .iter()
            .map(|&p| p * (T::one() - (T::one() - p).powi(k as i32)))
            .collect();
        FiniteDistribution::from_weights(&ids, &w)
    }

    /// Largest support size over classes.
    pub fn max_support(&self) -> usize {
        self.classes.iter().map(|d| d.len()).max().unwrap_or(0)
    }

    /// Converts scalars, e.g. `f64` to `f32`.
    pub fn cast<U: Real>(&self) -> LatentClassModel<U> {
        let cd = |d: &FiniteDistribution<T>| {
            FiniteDistribution::new(
                d.entries().iter().map(|&(i, p)| (i, U::lit(p.as_f64()))).collect(),
            )
            .expect("valid after cast")
        };
        LatentClassModel {
            ambient_dim: self.ambient_dim,
            point_ids: self.point_ids.clone(),
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|v| U::lit(v.as_f64())).collect())
                .collect(),
            class_ids: self.class_ids.clone(),
            classes: self.classes.iter().map(cd).collect(),
            rho: cd(&self.rho),
        }
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::InvalidModel(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

/// Collision probabilities of one positive class against k negatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionStats<T> {
    /// Σ ρ², the k = 1 collision probability.
    pub tau: T,
    /// P[c⁺ appears among k negatives] = 1 − Σ ρ(1−ρ)^k.
    pub tau_k: T,
    /// P[all k negatives equal c⁺] = Σ ρ^{k+1}.
    pub tau_prime: T,
    pub k: usize,
}

impl<T: Real> CollisionStats<T> {
    pub fn new(rho: &[T], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let tau = ksum(rho.iter().map(|&p| p * p));
        let miss = ksum(rho.iter().map(|&p| p * (T::one() - p).powi(k as i32)));
        let tau_prime = ksum(rho.iter().map(|&p| p.powi(k as i32 + 1)));
        let tau_k = if k == 1 { tau } else { T::one() - miss };
        Ok(Self {
            tau,
            tau_k,
            tau_prime,
            k,
        })
    }

    /// 1 − τ, failing when every pair collides.
    pub fn one_minus_tau(&self) -> Result<T> {
        nondegenerate(T::one() - self.tau, "1 - tau")
    }

    /// 1 − τ_k, failing when a collision is certain.
    pub fn one_minus_tau_k(&self) -> Result<T> {
        nondegenerate(T::one() - self.tau_k, "1 - tau_k")
    }
}

fn nondegenerate<T: Real>(v: T, what: &str) -> Result<T> {
    if v <= T::lit(1e-12) {
        Err(Error::Degenerate(format!("{what} = {v}")))
    } else {
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform_model(n: usize) -> LatentClassModel<f64> {
        let point_ids = (0..n).map(|i| format!("p{i}")).collect();
        let points = (0..n).map(|i| vec![i as f64]).collect();
        let class_ids = (0..n).map(|i| format!("c{i}")).collect();
        let classes = (0..n).map(FiniteDistribution::point_mass).collect();
        let ids: Vec<usize> = (0..n).collect();
        LatentClassModel::new(
            1,
            point_ids,
            points,
            class_ids,
            classes,
            FiniteDistribution::uniform(&ids).unwrap(),
        )
        .unwrap()
    }

    fn skewed() -> LatentClassModel<f64> {
        LatentClassModel::new(
            1,
            vec!["a".into(), "b".into()],
            vec![vec![0.0], vec![1.0]],
            vec!["x".into(), "y".into()],
            vec![FiniteDistribution::point_mass(0), FiniteDistribution::point_mass(1)],
            FiniteDistribution::new(vec![(0, 0.9), (1, 0.1)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn collision_stats_examples() {
        assert!((uniform_model(4).collision_stats(1).unwrap().tau - 0.25).abs() < 1e-15);
        let s = uniform_model(2).collision_stats(2).unwrap();
        assert!((s.tau_k - 0.75).abs() < 1e-15);
        assert!((s.tau_prime - 0.25).abs() < 1e-15);
        assert!((skewed().collision_stats(1).unwrap().tau - 0.82).abs() < 1e-15);
    }

    #[test]
    fn nu_and_u() {
        let m = skewed();
        let nu = m.nu_distribution();
        assert!((nu.prob(0) - 81.0 / 82.0).abs() < 1e-15);
        let u1 = m.u_distribution(1).unwrap();
        assert!((u1.prob(1) - nu.prob(1)).abs() < 1e-15);
        let u2 = m.u_distribution(2).unwrap();
        let (a, b) = (0.9 * 0.99, 0.1 * 0.19);
        assert!((u2.prob(0) - a / (a + b)).abs() < 1e-15);
        for k in 1..5 {
            let u = uniform_model(3).u_distribution(k).unwrap();
            assert!((u.prob(2) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let m = uniform_model(1);
        let s = m.collision_stats(1).unwrap();
        assert_eq!(s.tau, 1.0);
        assert!(matches!(s.one_minus_tau(), Err(Error::Degenerate(_))));
        assert_eq!(m.nu_distribution().entries(), &[(0, 1.0)]);
    }

    #[test]
    fn rejects_invalid_models() {
        let r = LatentClassModel::<f64>::new(
            1,
            vec!["a".into()],
            vec![vec![0.0]],
            vec!["x".into()],
            vec![FiniteDistribution::point_mass(3)],
            FiniteDistribution::point_mass(0),
        );
        assert!(r.is_err());
        let r = LatentClassModel::<f64>::new(
            1,
            vec!["a".into()],
            vec![vec![0.0]],
            vec!["x".into(), "y".into()],
            vec![FiniteDistribution::point_mass(0), FiniteDistribution::point_mass(0)],
            FiniteDistribution::point_mass(0),
        );
        assert!(r.is_err());
    }
}
