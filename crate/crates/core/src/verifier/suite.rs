//! Running check families on one (model, f) pair or on a seeded random
//! population of pairs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_block_chain, check_decomposition, check_erm_generalization, check_mean_sup_deviation,
    check_mean_sup_jensen, check_multiway_tasks, check_same_class_deviation,
    check_subgaussian_binary, check_subgaussian_competitive, check_subgaussian_multiway,
    BoundCheck, CheckId,
};
use crate::error::Result;
use crate::latent_model::{FiniteDistribution, LabelPolicy};
use crate::losses::{LossFamily, LossKind};
use crate::rng::stream;
use crate::training::{erm_finite_exact, FunctionClass};
use crate::{Model, Repr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckOptions {
    /// Loss families for the family-generic checks; the margin-based checks
    /// always use the hinge.
    pub losses: Vec<LossFamily>,
    pub k_values: Vec<usize>,
    pub b_values: Vec<usize>,
    pub epsilon: f64,
    pub label_policy: LabelPolicy,
    pub m_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub delta: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            losses: vec![LossFamily::Hinge, LossFamily::Logistic],
            k_values: vec![1, 2, 3],
            b_values: vec![2],
            epsilon: 0.1,
            label_policy: LabelPolicy::Uniform,
            m_list: vec![256],
            seeds: vec![0],
            delta: 0.05,
        }
    }
}

/// Comparison class used by the statistical and competitive checks:
/// {0, f/2, f}.
fn comparison_class(f: &Repr, model: &Model) -> Result<FunctionClass<f64>> {
    let zero = match f.kind() {
        crate::representation::RepKind::Table(_) => {
            Repr::zero(model.num_points(), f.output_dim(), f.norm_bound())?
        }
        crate::representation::RepKind::Linear(m) => {
            Repr::linear(vec![vec![0.0; model.ambient_dim()]; m.len()], f.norm_bound())?
        }
    };
    Ok(FunctionClass::Finite(vec![zero, f.scaled(0.5).with_norm_bound(f.norm_bound()), f.clone()]))
}

fn run_one(id: CheckId, f: &Repr, model: &Model, opts: &CheckOptions) -> Result<Vec<BoundCheck>> {
    let kinds: Vec<_> = opts.losses.iter().map(|&l| LossKind::of(l)).collect();
    let hinge = LossKind::hinge();
    let mut out = Vec::new();
    match id {
        CheckId::Decomposition => {
            for &kind in &kinds {
                out.push(check_decomposition(f, model, kind)?);
            }
        }
        CheckId::MeanSupJensen => {
            for &kind in &kinds {
                out.push(check_mean_sup_jensen(f, model, kind)?);
            }
        }
        CheckId::SameClassDeviation => {
            for &kind in &kinds {
                for &t in &opts.k_values {
                    out.push(check_same_class_deviation(f, model, kind, t)?);
                }
            }
        }
        CheckId::MeanSupDeviation => {
            for &kind in &kinds {
                out.push(check_mean_sup_deviation(f, model, kind)?);
            }
        }
        CheckId::BlockChain => {
            for &kind in &kinds {
                for &b in &opts.b_values {
                    out.extend(check_block_chain(f, model, b, kind)?);
                }
            }
        }
        CheckId::MultiwayTasks => {
            for &kind in &kinds {
                for &k in &opts.k_values {
                    out.extend(check_multiway_tasks(f, model, k, kind, opts.label_policy)?);
                }
            }
        }
        CheckId::SubgaussianBinary => out.push(check_subgaussian_binary(f, model, opts.epsilon)?),
        CheckId::SubgaussianCompetitive => {
            let class = comparison_class(f, model)?;
            let f_hat = erm_finite_exact(&class, model, 1, hinge)?.f_hat;
            out.push(check_subgaussian_competitive(&f_hat, f, model, opts.epsilon, 0.0)?);
        }
        CheckId::SubgaussianMultiway => {
            for &k in &opts.k_values {
                out.push(check_subgaussian_multiway(f, model, k, opts.epsilon, opts.label_policy)?);
            }
        }
        CheckId::ErmGeneralization => {
            let class = comparison_class(f, model)?;
            for &kind in &kinds {
                out.extend(
                    check_erm_generalization(model, &class, kind, &opts.m_list, &opts.seeds, opts.delta)?
                        .into_iter()
                        .map(|r| r.check),
                );
            }
        }
    }
    Ok(out)
}

/// Runs `ids` on one pair. Output order: ids as given, then loss family,
/// then k or b.
pub fn run_checks(
    f: &Repr,
    model: &Model,
    ids: &[CheckId],
    opts: &CheckOptions,
) -> Result<Vec<BoundCheck>> {
    let parts: Vec<Vec<BoundCheck>> = ids
        .par_iter()
        .map(|&id| run_one(id, f, model, opts))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Pair `index` of the random population under `seed`: 2–4 classes with
/// 1–3 private points each in R², random ρ and class weights, and a table f
/// into R^d (d ∈ 1..=3) with ‖f‖ ≤ R, R ∈ [0.5, 3]. Every tenth pair uses the
/// zero map.
pub fn random_pair(seed: u64, index: u64) -> Result<(Model, Repr)> {
    let mut rng = stream(seed, index);
    let classes = rng.random_range(2..=4usize);
    let mut point_ids = Vec::new();
    let mut points = Vec::new();
    let mut dists = Vec::new();
    for c in 0..classes {
        let count = rng.random_range(1..=3usize);
        let w = random_simplex(&mut rng, count);
        let mut entries = Vec::with_capacity(count);
        for (j, wj) in w.into_iter().enumerate() {
            entries.push((points.len(), wj));
            point_ids.push(format!("p{c}_{j}"));
            points.push(vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        }
        dists.push(FiniteDistribution::new(entries)?);
    }
    let rho = random_simplex(&mut rng, classes);
    let model = Model::new(
        2,
        point_ids,
        points,
        (0..classes).map(|c| format!("c{c}")).collect(),
        dists,
        FiniteDistribution::new(rho.into_iter().enumerate().collect())?,
    )?;
    let d = rng.random_range(1..=3usize);
    let r: f64 = rng.random_range(0.5..=3.0);
    if index % 10 == 9 {
        return Ok((model.clone(), Repr::zero(model.num_points(), d, r)?));
    }
    let rows = (0..model.num_points())
        .map(|_| {
            let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let radius = r * rng.random_range(0.0..=1.0);
            g.into_iter().map(|v| v / n * radius).collect()
        })
        .collect();
    Ok((model, Repr::table(rows, r)?))
}

/// All requested checks on `pairs` random pairs; every line carries its
/// pair index and seed.
pub fn run_random_suite(
    ids: &[CheckId],
    pairs: usize,
    seed: u64,
    opts: &CheckOptions,
) -> Result<Vec<BoundCheck>> {
    let parts: Vec<Vec<BoundCheck>> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let (model, f) = random_pair(seed, i)?;
            Ok(run_checks(&f, &model, ids, opts)?
                .into_iter()
                .map(|c| c.with("pair", i).with("suite_seed", seed))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}
