use std::collections::BTreeMap;

use super::{FiniteDistribution, LatentClassModel};
use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};

/// Default bound on enumerated ordered tuples.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A supervised task: distinct classes plus a label distribution D_T.
#[derive(Debug, Clone, PartialEq)]
pub struct Task<T> {
    classes: Vec<usize>,
    label_dist: FiniteDistribution<T>,
}

impl<T: Real> Task<T> {
    pub fn new(classes: Vec<usize>, label_dist: FiniteDistribution<T>) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::InvalidArgument("a task needs at least two classes".into()));
        }
        let mut sorted = classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != classes.len() {
            return Err(Error::InvalidArgument("task classes must be distinct".into()));
        }
        let mut support: Vec<usize> = label_dist.ids().collect();
        support.sort_unstable();
        if support != sorted {
            return Err(Error::InvalidArgument(
                "label distribution support must equal the task classes".into(),
            ));
        }
        Ok(Self {
            classes,
            label_dist,
        })
    }

    /// Task with uniform D_T.
    pub fn uniform(classes: Vec<usize>) -> Result<Self> {
        let d = FiniteDistribution::uniform(&classes)?;
        Self::new(classes, d)
    }

    pub fn with_policy(classes: Vec<usize>, policy: LabelPolicy, rho: &[T]) -> Result<Self> {
        match policy {
            LabelPolicy::Uniform => Self::uniform(classes),
            LabelPolicy::ProportionalToRho => {
                let w: Vec<T> = classes.iter().map(|&c| rho[c]).collect();
                let d = FiniteDistribution::from_weights(&classes, &w)?;
                Self::new(classes, d)
            }
        }
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn label_dist(&self) -> &FiniteDistribution<T> {
        &self.label_dist
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn p_max(&self) -> T {
        self.label_dist.max_prob()
    }

    pub fn p_min(&self) -> T {
        self.label_dist.min_prob()
    }
}

/// How D_T is chosen for tasks produced by [`task_distribution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelPolicy {
    #[default]
    Uniform,
    ProportionalToRho,
}

/// Conditional statistics of c⁺ given Q = T.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskWeights<T> {
    /// Distribution of c⁺ given Q = T and no collision, in task order.
    pub rho_plus: Vec<T>,
    /// Distribution of c⁺ given Q = T and fewer than k collisions.
    pub rho_plus_prime: Vec<T>,
    pub rho_plus_min: T,
    pub rho_plus_max_prime: T,
    pub p_max: T,
    pub p_min: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskEntry<T> {
    pub task: Task<T>,
    /// Probability under D (c⁺ absent from the negatives).
    pub prob_d: T,
    /// Probability under D′ (not every negative equals c⁺).
    pub prob_d_prime: T,
    pub weights: TaskWeights<T>,
}

#[derive(Default)]
struct Acc<T> {
    d: KahanSum<T>,
    dp: KahanSum<T>,
    plus_d: Vec<KahanSum<T>>,
    plus_dp: Vec<KahanSum<T>>,
}

/// `n^e` or `None` on overflow.
pub(crate) fn checked_pow(n: usize, e: usize) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(n as u128)?;
    }
    Some(acc)
}

pub(crate) fn require_cap(required: Option<u128>, cap: u128) -> Result<()> {
    match required {
        Some(r) if r <= cap => Ok(()),
        Some(r) => Err(Error::EnumerationCap { required: r, cap }),
        None => Err(Error::EnumerationCap {
            required: u128::MAX,
            cap,
        }),
    }
}

/// Exact distributions D and D′ over tasks, by enumerating every ordered
/// class tuple (c⁺, c₁⁻, …, c_k⁻) ~ ρ^{k+1} and grouping by its distinct set.
pub fn task_distribution<T: Real>(
    model: &LatentClassModel<T>,
    k: usize,
    policy: LabelPolicy,
    cap: u128,
) -> Result<Vec<TaskEntry<T>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = model.num_classes();
    if n < 2 {
        return Err(Error::InvalidArgument("tasks need at least two classes".into()));
    }
    require_cap(checked_pow(n, k + 1), cap)?;
    let rho = model.rho_dense();

    let mut groups: BTreeMap<Vec<usize>, Acc<T>> = BTreeMap::new();
    let mut tuple = vec![0usize; k + 1];
    let mut q = Vec::with_capacity(k + 1);
    loop {
        let p = tuple.iter().fold(T::one(), |a, &c| a * rho[c]);
        let cp = tuple[0];
        let hits = tuple[1..].iter().filter(|&&c| c == cp).count();
        if hits < k {
            q.clear();
            q.extend_from_slice(&tuple);
            q.sort_unstable();
            q.dedup();
            let slot = q.binary_search(&cp).expect("c+ in Q");
            let acc = groups.entry(q.clone()).or_insert_with(|| Acc {
                d: KahanSum::new(),
                dp: KahanSum::new(),
                plus_d: vec![KahanSum::new(); q.len()],
                plus_dp: vec![KahanSum::new(); q.len()],
            });
            acc.dp.add(p);
            acc.plus_dp[slot].add(p);
            if hits == 0 {
                acc.d.add(p);
                acc.plus_d[slot].add(p);
            }
        }
        // odometer
        let mut i = k + 1;
        loop {
            if i == 0 {
                return finish(groups, model, k, policy);
            }
            i -= 1;
            tuple[i] += 1;
            if tuple[i] < n {
                break;
            }
            tuple[i] = 0;
        }
    }
}

fn finish<T: Real>(
    groups: BTreeMap<Vec<usize>, Acc<T>>,
    model: &LatentClassModel<T>,
    k: usize,
    policy: LabelPolicy,
) -> Result<Vec<TaskEntry<T>>> {
    let stats = model.collision_stats(k)?;
    let d_total = stats.one_minus_tau_k()?;
    let dp_total = T::one() - stats.tau_prime;
    let rho = model.rho_dense();
    let mut out = Vec::with_capacity(groups.len());
    for (classes, acc) in groups {
        let d = acc.d.value();
        let dp = acc.dp.value();
        let cond = |parts: &[KahanSum<T>], total: T| -> Vec<T> {
            if total > T::zero() {
                parts.iter().map(|s| s.value() / total).collect()
            } else {
                vec![T::zero(); parts.len()]
            }
        };
        let rho_plus = cond(&acc.plus_d, d);
        let rho_plus_prime = cond(&acc.plus_dp, dp);
        let task = Task::with_policy(classes, policy, &rho)?;
        let weights = TaskWeights {
            rho_plus_min: rho_plus.iter().copied().fold(T::infinity(), T::min),
            rho_plus_max_prime: rho_plus_prime.iter().copied().fold(T::zero(), T::max),
            p_max: task.p_max(),
            p_min: task.p_min(),
            rho_plus,
            rho_plus_prime,
        };
        out.push(TaskEntry {
            task,
            prob_d: d / d_total,
            prob_d_prime: dp / dp_total,
            weights,
        });
    }
    Ok(out)
}
