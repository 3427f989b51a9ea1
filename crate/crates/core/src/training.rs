//! Empirical risk minimization of the contrastive loss over a function class.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::latent_model::{BlockBatch, LatentClassModel, SampleBatch};
use crate::losses::{unsup_loss_empirical, ExactLosses, LossKind};
use crate::representation::{RepKind, Representation};
use crate::rng::stream;
use crate::scalar::{dot, norm, KahanSum, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionClass<T> {
    Finite(Vec<Representation<T>>),
    /// Free table over the model's points, outputs in R^d.
    Table { d: usize, norm_bound: T },
    /// Linear maps R^ambient → R^d.
    Linear { d: usize, norm_bound: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub step: usize,
    pub loss: T,
    pub best_so_far: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult<T> {
    pub f_hat: Representation<T>,
    pub empirical_loss: T,
    pub trace: Vec<TracePoint<T>>,
    pub selected_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions<T> {
    pub steps: usize,
    /// η of the η/√t schedule.
    pub step_size: T,
    pub seed: u64,
    /// Starting point; a seeded random member of the class when absent.
    pub init: Option<Representation<T>>,
}

impl<T: Real> Default for DescentOptions<T> {
    fn default() -> Self {
        Self {
            steps: 500,
            step_size: T::lit(0.1),
            seed: 0,
            init: None,
        }
    }
}

fn finite_members<T>(class: &FunctionClass<T>) -> Result<&[Representation<T>]> {
    match class {
        FunctionClass::Finite(m) if !m.is_empty() => Ok(m),
        FunctionClass::Finite(_) => Err(Error::InvalidArgument("empty function class".into())),
        _ => Err(Error::InvalidArgument("expected a finite function class".into())),
    }
}

/// Argmin of `score` over a finite class; ties go to the lowest index.
pub fn erm_finite_by<T: Real>(
    class: &FunctionClass<T>,
    mut score: impl FnMut(&Representation<T>) -> Result<T>,
) -> Result<TrainResult<T>> {
    let members = finite_members(class)?;
    let mut best: Option<(usize, T)> = None;
    let mut trace = Vec::with_capacity(members.len());
    for (i, f) in members.iter().enumerate() {
        let l = score(f)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss { step: i });
        }
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((i, l));
        }
        trace.push(TracePoint {
            step: i,
            loss: l,
            best_so_far: best.expect("set above").1,
        });
    }
    let (i, l) = best.expect("nonempty class");
    Ok(TrainResult {
        f_hat: members[i].clone(),
        empirical_loss: l,
        trace,
        selected_index: Some(i),
    })
}

/// Minimizer of the empirical loss on `batch` over a finite class.
pub fn erm_finite<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    kind: LossKind<T>,
) -> Result<TrainResult<T>> {
    erm_finite_by(class, |f| unsup_loss_empirical(f, model, batch, kind))
}

/// Minimizer of the exact population loss with k negatives (the M → ∞
/// limit of [`erm_finite`]).
pub fn erm_finite_exact<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    k: usize,
    kind: LossKind<T>,
) -> Result<TrainResult<T>> {
    erm_finite_by(class, |f| ExactLosses::new(f, model, kind)?.unsup(k))
}

/// Pair tuples and block tuples share one form: the anchor is scored against
/// the mean of the positives minus the mean of each negative group.
struct Tuple {
    anchor: usize,
    positives: Vec<usize>,
    groups: Vec<Vec<usize>>,
}

fn pair_tuples(batch: &SampleBatch) -> Vec<Tuple> {
    batch
        .tuples
        .iter()
        .map(|t| Tuple {
            anchor: t.anchor,
            positives: vec![t.positive],
            groups: t.negatives.iter().map(|&n| vec![n]).collect(),
        })
        .collect()
}

fn block_tuples(batch: &BlockBatch) -> Vec<Tuple> {
    batch
        .tuples
        .iter()
        .map(|t| Tuple {
            anchor: t.anchor,
            positives: t.positives.clone(),
            groups: vec![t.negatives.clone()],
        })
        .collect()
}

fn mean_of<T: Real>(emb: &[Vec<T>], ids: &[usize]) -> Vec<T> {
    let d = emb[0].len();
    let mut m = vec![T::zero(); d];
    for &i in ids {
        for (a, &v) in m.iter_mut().zip(&emb[i]) {
            *a += v;
        }
    }
    let n = T::from_usize_lossy(ids.len());
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Mean loss and its subgradient with respect to every embedded point.
fn loss_and_grad<T: Real>(
    emb: &[Vec<T>],
    tuples: &[Tuple],
    kind: LossKind<T>,
) -> (T, Vec<Vec<T>>) {
    let d = emb[0].len();
    let mut grad = vec![vec![T::zero(); d]; emb.len()];
    let mut total = KahanSum::new();
    let w = T::one() / T::from_usize_lossy(tuples.len());
    for t in tuples {
        let fx = &emb[t.anchor];
        let p = mean_of(emb, &t.positives);
        let negs: Vec<Vec<T>> = t.groups.iter().map(|g| mean_of(emb, g)).collect();
        let v: Vec<T> = negs
            .iter()
            .map(|n| dot(fx, &p) - dot(fx, n))
            .collect();
        total.add(kind.eval(&v));
        let mut g = vec![T::zero(); v.len()];
        kind.subgradient(&v, &mut g);
        let gsum: T = g.iter().copied().sum();
        for (i, &gi) in g.iter().enumerate() {
            if gi == T::zero() {
                continue;
            }
            let gi = gi * w;
            for c in 0..d {
                grad[t.anchor][c] += gi * (p[c] - negs[i][c]);
            }
            let share = gi / T::from_usize_lossy(t.groups[i].len());
            for &n in &t.groups[i] {
                for c in 0..d {
                    grad[n][c] -= share * fx[c];
                }
            }
        }
        if gsum != T::zero() {
            let share = gsum * w / T::from_usize_lossy(t.positives.len());
            for &q in &t.positives {
                for c in 0..d {
                    grad[q][c] += share * fx[c];
                }
            }
        }
    }
    (total.value() * w, grad)
}

/// Seeded starting point inside the norm ball.
pub fn random_member<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    seed: u64,
) -> Result<Representation<T>> {
    let mut rng = stream(seed, u64::MAX);
    match *class {
        FunctionClass::Table { d, norm_bound } => {
            let half = norm_bound / T::from_usize_lossy(d).sqrt();
            let rows = (0..model.num_points())
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            let u: f64 = rng.random_range(-1.0..=1.0);
                            T::lit(u) * half
                        })
                        .collect()
                })
                .collect();
            Representation::table(rows, norm_bound)
        }
        FunctionClass::Linear { d, norm_bound } => {
            let a = model.ambient_dim();
            let mut m: Vec<Vec<T>> = (0..d)
                .map(|_| {
                    (0..a)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            T::lit(z)
                        })
                        .collect()
                })
                .collect();
            orthonormalize(&mut m);
            let diameter = model.points().iter().map(|p| norm(p)).fold(T::zero(), T::max);
            let s = if diameter > T::zero() {
                norm_bound / diameter
            } else {
                norm_bound
            };
            m.iter_mut().flatten().for_each(|v| *v *= s);
            Representation::linear(m, norm_bound)?.project_norm_ball(norm_bound, Some(model))
        }
        FunctionClass::Finite(_) => Err(Error::InvalidArgument(
            "finite classes are searched exhaustively".into(),
        )),
    }
}

/// Gram–Schmidt on rows (d ≤ ambient) or on columns otherwise, so that the
/// spectral norm is 1.
fn orthonormalize<T: Real>(m: &mut [Vec<T>]) {
    let (d, a) = (m.len(), m[0].len());
    if d <= a {
        for i in 0..d {
            for j in 0..i {
                let p = dot(&m[i], &m[j]);
                let mj = m[j].clone();
                m[i].iter_mut().zip(&mj).for_each(|(x, y)| *x -= p * *y);
            }
            let n = norm(&m[i]);
            if n > T::zero() {
                m[i].iter_mut().for_each(|x| *x /= n);
            }
        }
    } else {
        for j in 0..a {
            for l in 0..j {
                let p: T = (0..d).map(|i| m[i][j] * m[i][l]).sum();
                for i in 0..d {
                    let v = m[i][l];
                    m[i][j] -= p * v;
                }
            }
            let n: T = (0..d).map(|i| m[i][j] * m[i][j]).sum::<T>().sqrt();
            if n > T::zero() {
                for row in m.iter_mut() {
                    row[j] /= n;
                }
            }
        }
    }
}

fn descend<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    tuples: &[Tuple],
    kind: LossKind<T>,
    opts: &DescentOptions<T>,
) -> Result<TrainResult<T>> {
    if opts.steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    if tuples.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let norm_bound = match *class {
        FunctionClass::Table { norm_bound, .. } | FunctionClass::Linear { norm_bound, .. } => {
            norm_bound
        }
        FunctionClass::Finite(_) => {
            return Err(Error::InvalidArgument(
                "descent needs a table or linear class".into(),
            ))
        }
    };
    let mut f = match &opts.init {
        Some(f) => f.project_norm_ball(norm_bound, Some(model))?,
        None => random_member(class, model, opts.seed)?,
    };
    let mut best = (f.clone(), T::infinity());
    let mut trace = Vec::with_capacity(opts.steps + 1);
    for step in 0..=opts.steps {
        let emb = f.embed(model)?;
        let (loss, g) = loss_and_grad(&emb, tuples, kind);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        if loss < best.1 {
            best = (f.clone(), loss);
        }
        trace.push(TracePoint {
            step,
            loss,
            best_so_far: best.1,
        });
        if step == opts.steps || g.iter().flatten().all(|v| *v == T::zero()) {
            break;
        }
        let eta = opts.step_size / T::from_usize_lossy(step + 1).sqrt();
        match f.kind() {
            RepKind::Table(_) => {
                for (row, gr) in f.params_mut().iter_mut().zip(&g) {
                    row.iter_mut().zip(gr).for_each(|(w, gv)| *w -= eta * *gv);
                }
            }
            RepKind::Linear(_) => {
                // ∂/∂W = Σ_y grad(y) yᵀ
                let points = model.points();
                let params = f.params_mut();
                for (y, gy) in g.iter().enumerate() {
                    for (r, &gr) in gy.iter().enumerate() {
                        if gr == T::zero() {
                            continue;
                        }
                        for (w, &p) in params[r].iter_mut().zip(&points[y]) {
                            *w -= eta * gr * p;
                        }
                    }
                }
            }
        }
        f = f.project_norm_ball(norm_bound, Some(model))?;
    }
    Ok(TrainResult {
        f_hat: best.0,
        empirical_loss: best.1,
        trace,
        selected_index: None,
    })
}

/// Projected subgradient descent on the empirical loss with step η/√t;
/// returns the best iterate.
pub fn erm_descent<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    kind: LossKind<T>,
    opts: &DescentOptions<T>,
) -> Result<TrainResult<T>> {
    descend(class, model, &pair_tuples(batch), kind, opts)
}

/// [`erm_descent`] on the empirical block loss.
pub fn erm_block<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    batch: &BlockBatch,
    kind: LossKind<T>,
    opts: &DescentOptions<T>,
) -> Result<TrainResult<T>> {
    descend(class, model, &block_tuples(batch), kind, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::{sample_batch, FiniteDistribution};

    fn model() -> LatentClassModel<f64> {
        LatentClassModel::new(
            3,
            ["a", "b", "c"].map(String::from).to_vec(),
            vec![vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 0.5], vec![0.3, 0.3, 0.3]],
            vec!["x".into(), "y".into()],
            vec![
                FiniteDistribution::uniform(&[0, 1]).unwrap(),
                FiniteDistribution::uniform(&[1, 2]).unwrap(),
            ],
            FiniteDistribution::uniform(&[0, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let m = model();
        let batch = sample_batch(&m, 2, 20, 4).unwrap();
        let tuples = pair_tuples(&batch);
        let emb: Vec<Vec<f64>> = vec![vec![0.2, -0.1], vec![0.5, 0.4], vec![-0.3, 0.7]];
        let kind = LossKind::logistic();
        let (base, g) = loss_and_grad(&emb, &tuples, kind);
        for i in 0..3 {
            for c in 0..2 {
                let mut e2 = emb.clone();
                e2[i][c] += 1e-7;
                let fd = (loss_and_grad(&e2, &tuples, kind).0 - base) / 1e-7;
                assert!((fd - g[i][c]).abs() < 1e-6, "{i},{c}: {fd} vs {}", g[i][c]);
            }
        }
    }

    #[test]
    fn random_members_respect_the_ball() {
        let m = model();
        for (i, class) in [
            FunctionClass::Table { d: 4, norm_bound: 0.7 },
            FunctionClass::Linear { d: 2, norm_bound: 1.5 },
            FunctionClass::Linear { d: 5, norm_bound: 1.5 },
        ]
        .iter()
        .enumerate()
        {
            let f = random_member(class, &m, i as u64).unwrap();
            f.check_bound(&m).unwrap();
        }
    }
}
