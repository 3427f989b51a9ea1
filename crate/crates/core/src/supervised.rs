//! Supervised evaluation of a representation: mean classifier, best linear
//! classifier, and task-averaged losses.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::latent_model::{
    task_distribution, LabelPolicy, LatentClassModel, Task, DEFAULT_ENUMERATION_CAP,
};
use crate::losses::LossKind;
use crate::representation::{moments_from_embedding, Representation};
use crate::scalar::{dot, KahanSum, Real};

/// W^μ: one row per task class, the class mean of f.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanClassifier<T> {
    pub task: Task<T>,
    pub rows: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupEvalResult<T> {
    pub task: Task<T>,
    /// L^μ_sup(T, f).
    pub loss_mean: T,
    /// Achieved value of the best-W objective; an upper bound on L_sup(T, f).
    pub loss_best: T,
    pub optimizer_iterations: usize,
    pub weights: Vec<Vec<T>>,
}

/// Optimizer settings for the best linear classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub budget: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub grad_tol: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            budget: 2000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightedVariant {
    /// E_{T~D}[(ρ⁺_min/p_max)·L^μ_sup(T,f)].
    MinOverMax,
    /// E_{T~D′}[(ρ′⁺_max/p_min)·L^μ_sup(T,f)] under the supplied (margin) loss.
    MaxOverMin,
}

fn check_task<T: Real>(model: &LatentClassModel<T>, task: &Task<T>) -> Result<()> {
    match task.classes().iter().find(|&&c| c >= model.num_classes()) {
        Some(c) => Err(Error::UnknownClass(format!("#{c}"))),
        None => Ok(()),
    }
}

fn mean_rows<T: Real>(emb: &[Vec<T>], model: &LatentClassModel<T>, task: &Task<T>) -> Vec<Vec<T>> {
    task.classes()
        .iter()
        .map(|&c| moments_from_embedding(emb, model, c).mean)
        .collect()
}

pub fn mean_classifier<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    task: &Task<T>,
) -> Result<MeanClassifier<T>> {
    check_task(model, task)?;
    let emb = f.embed(model)?;
    Ok(MeanClassifier {
        task: task.clone(),
        rows: mean_rows(&emb, model, task),
    })
}

/// Supervised loss of the linear classifier `w` (rows in task order), with
/// its subgradient accumulated into `grad` when given.
fn objective<T: Real>(
    w: &[Vec<T>],
    emb: &[Vec<T>],
    model: &LatentClassModel<T>,
    task: &Task<T>,
    kind: LossKind<T>,
    mut grad: Option<&mut [Vec<T>]>,
) -> T {
    let n = task.len();
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().flatten().for_each(|v| *v = T::zero());
    }
    let mut total = KahanSum::new();
    let mut v = vec![T::zero(); n - 1];
    let mut dv = vec![T::zero(); n - 1];
    let mut scores = vec![T::zero(); n];
    for (slot, &c) in task.classes().iter().enumerate() {
        let pc = task.label_dist().prob(c);
        if pc == T::zero() {
            continue;
        }
        for (x, px) in model.class(c).positive() {
            let fx = &emb[x];
            for (s, row) in scores.iter_mut().zip(w) {
                *s = dot(row, fx);
            }
            let mut i = 0;
            for j in 0..n {
                if j != slot {
                    v[i] = scores[slot] - scores[j];
                    i += 1;
                }
            }
            let weight = pc * px;
            total.add(weight * kind.eval(&v));
            if let Some(g) = grad.as_deref_mut() {
                kind.subgradient(&v, &mut dv);
                let mut i = 0;
                for j in 0..n {
                    if j == slot {
                        continue;
                    }
                    let coef = weight * dv[i];
                    i += 1;
                    if coef == T::zero() {
                        continue;
                    }
                    for (t, &fv) in fx.iter().enumerate() {
                        g[slot][t] += coef * fv;
                        g[j][t] -= coef * fv;
                    }
                }
            }
        }
    }
    total.value()
}

/// L^μ_sup(T, f): exact expectation over (c ~ D_T, x ~ D_c).
pub fn sup_loss_mean<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    task: &Task<T>,
    kind: LossKind<T>,
) -> Result<T> {
    check_task(model, task)?;
    let emb = f.embed(model)?;
    Ok(sup_loss_mean_emb(&emb, model, task, kind))
}

pub(crate) fn sup_loss_mean_emb<T: Real>(
    emb: &[Vec<T>],
    model: &LatentClassModel<T>,
    task: &Task<T>,
    kind: LossKind<T>,
) -> T {
    let w = mean_rows(emb, model, task);
    objective(&w, emb, model, task, kind, None)
}

/// Best linear classifier by full-gradient descent with Armijo backtracking,
/// warm-started at W^μ. Only decreasing steps are accepted.
pub fn sup_loss_best<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    task: &Task<T>,
    kind: LossKind<T>,
    search: LineSearch,
) -> Result<SupEvalResult<T>> {
    check_task(model, task)?;
    if search.budget == 0 {
        return Err(Error::InvalidArgument("optimizer budget must be at least 1".into()));
    }
    let emb = f.embed(model)?;
    Ok(sup_eval_emb(&emb, model, task, kind, search))
}

fn sup_eval_emb<T: Real>(
    emb: &[Vec<T>],
    model: &LatentClassModel<T>,
    task: &Task<T>,
    kind: LossKind<T>,
    search: LineSearch,
) -> SupEvalResult<T> {
    let mut w = mean_rows(emb, model, task);
    let mut grad = w.clone();
    let loss_mean = objective(&w, emb, model, task, kind, Some(&mut grad));
    let mut current = loss_mean;
    let mut iterations = 0;
    let armijo = T::lit(search.armijo);
    let shrink = T::lit(search.shrink);
    let min_step = T::lit(1e-20);
    while iterations < search.budget {
        let g2: T = grad.iter().flatten().map(|&g| g * g).sum();
        if g2.sqrt() <= T::lit(search.grad_tol) || current == T::zero() {
            break;
        }
        iterations += 1;
        let mut step = T::lit(search.initial_step);
        let mut accepted = None;
        while step > min_step {
            let trial: Vec<Vec<T>> = w
                .iter()
                .zip(&grad)
                .map(|(r, g)| r.iter().zip(g).map(|(&a, &b)| a - step * b).collect())
                .collect();
            let val = objective(&trial, emb, model, task, kind, None);
            if val < current && val <= current - armijo * step * g2 {
                accepted = Some((trial, val));
                break;
            }
            step *= shrink;
        }
        match accepted {
            Some((trial, val)) => {
                w = trial;
                current = objective(&w, emb, model, task, kind, Some(&mut grad));
                debug_assert!(current == val);
            }
            None => break,
        }
    }
    SupEvalResult {
        task: task.clone(),
        loss_mean,
        loss_best: current.min(loss_mean),
        optimizer_iterations: iterations,
        weights: w,
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    if r > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - r + i {
                cur[i] += 1;
                for j in i + 1..r {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Average supervised loss over `ways`-class tasks drawn from ρ^{ways}
/// conditioned on all classes being distinct (renormalized). Each task uses
/// uniform D_T; `use_mean` selects W^μ, otherwise the best-W optimizer.
pub fn avg_sup_loss<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    ways: usize,
    kind: LossKind<T>,
    use_mean: bool,
    search: LineSearch,
) -> Result<T> {
    let n = model.num_classes();
    if ways < 2 || ways > n {
        return Err(Error::InvalidArgument(format!(
            "need 2 ≤ ways ≤ {n} classes, got {ways}"
        )));
    }
    let count = crate::losses::binom_u128(n, ways);
    crate::latent_model::require_cap(count, DEFAULT_ENUMERATION_CAP)?;
    let emb = f.embed(model)?;
    let rho = model.rho_dense();
    let combos = combinations(n, ways);
    let parts: Vec<(T, T)> = combos
        .into_par_iter()
        .map(|cls| {
            let w = cls.iter().fold(T::one(), |a, &c| a * rho[c]);
            let task = Task::uniform(cls).expect("distinct classes");
            let loss = if use_mean {
                sup_loss_mean_emb(&emb, model, &task, kind)
            } else {
                sup_eval_emb(&emb, model, &task, kind, search).loss_best
            };
            (w, loss)
        })
        .collect();
    let mass: T = crate::scalar::ksum(parts.iter().map(|p| p.0));
    Ok(crate::scalar::ksum(parts.iter().map(|&(w, l)| w * l)) / mass)
}

/// Task-weighted mean-classifier loss over D (or D′) from exact tuple
/// enumeration.
pub fn weighted_avg_sup_loss<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    k: usize,
    kind: LossKind<T>,
    variant: WeightedVariant,
    policy: LabelPolicy,
) -> Result<T> {
    let tasks = task_distribution(model, k, policy, DEFAULT_ENUMERATION_CAP)?;
    let emb = f.embed(model)?;
    let mut total = KahanSum::new();
    for e in &tasks {
        let (prob, weight) = match variant {
            WeightedVariant::MinOverMax => (e.prob_d, e.weights.rho_plus_min / e.weights.p_max),
            WeightedVariant::MaxOverMin => (
                e.prob_d_prime,
                e.weights.rho_plus_max_prime / e.weights.p_min,
            ),
        };
        if prob == T::zero() {
            continue;
        }
        total.add(prob * weight * sup_loss_mean_emb(&emb, model, &e.task, kind));
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::FiniteDistribution;

    fn signed_singletons() -> LatentClassModel<f64> {
        LatentClassModel::new(
            1,
            vec!["plus".into(), "minus".into()],
            vec![vec![1.0], vec![-1.0]],
            vec!["a".into(), "b".into()],
            vec![FiniteDistribution::point_mass(0), FiniteDistribution::point_mass(1)],
            FiniteDistribution::uniform(&[0, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn singleton_examples() {
        let m = signed_singletons();
        let id = Representation::identity(1, 1.0).unwrap();
        let task = Task::uniform(vec![0, 1]).unwrap();
        let mc = mean_classifier(&id, &m, &task).unwrap();
        assert_eq!(mc.rows, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(sup_loss_mean(&id, &m, &task, LossKind::hinge()).unwrap(), 0.0);
        let z = Representation::zero(2, 1, 1.0).unwrap();
        assert_eq!(sup_loss_mean(&z, &m, &task, LossKind::hinge()).unwrap(), 1.0);
        let best = sup_loss_best(&z, &m, &task, LossKind::hinge(), LineSearch::default()).unwrap();
        assert_eq!(best.loss_best, 1.0);
    }

    #[test]
    fn subgradient_matches_finite_difference() {
        let m = signed_singletons();
        let f = Representation::table(vec![vec![0.4, 0.1], vec![-0.2, 0.3]], 1.0).unwrap();
        let emb = f.embed(&m).unwrap();
        let task = Task::uniform(vec![0, 1]).unwrap();
        let kind = LossKind::logistic();
        let w = vec![vec![0.3, -0.2], vec![0.1, 0.5]];
        let mut g = w.clone();
        let base = objective(&w, &emb, &m, &task, kind, Some(&mut g));
        for i in 0..2 {
            for j in 0..2 {
                let mut w2 = w.clone();
                w2[i][j] += 1e-7;
                let fd = (objective(&w2, &emb, &m, &task, kind, None) - base) / 1e-7;
                assert!((fd - g[i][j]).abs() < 1e-6);
            }
        }
    }
}
