//! Exact population losses by enumeration over finite supports.
//!
//! For a fixed anchor x the negatives enter a k-way loss only through their
//! scores f(x)ᵀf(x⁻). Hinge depends on the maximum score, whose law under t
//! iid draws is F(s)^t; logistic depends on Σ exp(score), whose law is a
//! multinomial over the distinct score values. Both avoid enumerating the
//! |support|^t point tuples.

use super::{softplus, LossFamily, LossKind};
use crate::error::{Error, Result};
use crate::latent_model::{FiniteDistribution, LatentClassModel, DEFAULT_ENUMERATION_CAP};
use crate::representation::Representation;
use crate::scalar::{dot, KahanSum, Real};

/// L_un = τ·L⁼ + (1−τ)·L≠ components for one negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsupDecomposition<T> {
    pub l_un: T,
    pub l_eq: T,
    pub l_neq: T,
    pub tau: T,
}

/// Split of the k-negative loss by the set I⁺ of negatives that share the
/// positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionSplit<T> {
    pub k: usize,
    /// Loss over negatives outside I⁺, given |I⁺| < k.
    pub l_neq_k: T,
    /// Loss over negatives inside I⁺, given I⁺ ≠ ∅.
    pub collision_term: T,
    /// ℓ_{|I⁺|}(0⃗), given I⁺ ≠ ∅.
    pub baseline_term: T,
    pub delta: T,
}

/// Exact evaluator for one representation on one model.
#[derive(Debug, Clone)]
pub struct ExactLosses<'a, T> {
    model: &'a LatentClassModel<T>,
    emb: Vec<Vec<T>>,
    kind: LossKind<T>,
    cap: u128,
}

pub(crate) fn binom_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn binom_u128(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of size-t multisets over m values.
fn multiset_count(m: usize, t: usize) -> Option<u128> {
    binom_u128(m + t - 1, t)
}

/// Distinct values with merged probabilities, ascending.
fn distinct<T: Real>(mut pairs: Vec<(T, T)>) -> Vec<(T, T)> {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    let mut out: Vec<(T, T)> = Vec::with_capacity(pairs.len());
    for (s, p) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => out.push((s, p)),
        }
    }
    out
}

/// Visits every size-t multiset over `vals` with its multinomial probability.
pub(crate) fn for_each_multiset<T: Real>(
    vals: &[(T, T)],
    t: usize,
    visit: &mut impl FnMut(&[usize], T),
) {
    fn rec<T: Real>(
        vals: &[(T, T)],
        j: usize,
        r: usize,
        prob: T,
        counts: &mut [usize],
        visit: &mut impl FnMut(&[usize], T),
    ) {
        if j + 1 == vals.len() {
            counts[j] = r;
            visit(counts, prob * vals[j].1.powi(r as i32));
            return;
        }
        for n in 0..=r {
            counts[j] = n;
            let w = T::lit(binom_f64(r, n)) * vals[j].1.powi(n as i32);
            rec(vals, j + 1, r - n, prob * w, counts, visit);
        }
        counts[j] = 0;
    }
    let mut counts = vec![0; vals.len()];
    rec(vals, 0, t, T::one(), &mut counts, visit);
}

fn binomial_pmf<T: Real>(k: usize, j: usize, p: T) -> T {
    T::lit(binom_f64(k, j)) * p.powi(j as i32) * (T::one() - p).powi((k - j) as i32)
}

impl<'a, T: Real> ExactLosses<'a, T> {
    pub fn new(
        f: &Representation<T>,
        model: &'a LatentClassModel<T>,
        kind: LossKind<T>,
    ) -> Result<Self> {
        Ok(Self {
            model,
            emb: f.embed(model)?,
            kind,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Overrides the work cap (default 10⁷ elementary terms per class).
    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    pub fn kind(&self) -> LossKind<T> {
        self.kind
    }

    pub fn embedding(&self) -> &[Vec<T>] {
        &self.emb
    }

    fn check_work(&self, work: Option<u128>) -> Result<()> {
        crate::latent_model::require_cap(work, self.cap)
    }

    /// E_{x,x⁺ ~ D_c} E_{x₁⁻…x_t⁻ iid ~ neg} ℓ({f(x)ᵀ(f(x⁺) − f(x_i⁻))}).
    pub fn expected_loss(&self, c: usize, neg: &FiniteDistribution<T>, t: usize) -> Result<T> {
        if t == 0 {
            return Err(Error::InvalidArgument("at least one negative is needed".into()));
        }
        let anchor = self.model.class(c);
        let a = anchor.len() as u128;
        let m = neg.len();
        let work = match self.kind.family() {
            LossFamily::Hinge => Some(a * (m as u128 + a * m as u128)),
            LossFamily::Logistic => multiset_count(m, t)
                .and_then(|n| n.checked_mul(m as u128 + a))
                .and_then(|n| n.checked_mul(a)),
        };
        self.check_work(work)?;

        let mut total = KahanSum::new();
        for (x, px) in anchor.positive() {
            let fx = &self.emb[x];
            let scores = distinct(
                neg.positive()
                    .map(|(y, q)| (dot(fx, &self.emb[y]), q))
                    .collect(),
            );
            let mut inner = KahanSum::new();
            match self.kind.family() {
                LossFamily::Hinge => {
                    // law of the largest of t iid negative scores
                    let mut cdf = T::zero();
                    let mut prev = T::zero();
                    let maxima: Vec<(T, T)> = scores
                        .iter()
                        .map(|&(s, q)| {
                            cdf += q;
                            let now = cdf.min(T::one()).powi(t as i32);
                            let p = now - prev;
                            prev = now;
                            (s, p)
                        })
                        .collect();
                    for (xp, pp) in anchor.positive() {
                        let a = dot(fx, &self.emb[xp]);
                        for &(s, p) in &maxima {
                            inner.add(pp * p * self.kind.hinge_of_worst(s - a));
                        }
                    }
                }
                LossFamily::Logistic => {
                    // law of log Σ_i exp(score_i)
                    let mut sums: Vec<(T, T)> = Vec::new();
                    for_each_multiset(&scores, t, &mut |counts, p| {
                        let mx = counts
                            .iter()
                            .zip(&scores)
                            .filter(|(&n, _)| n > 0)
                            .fold(T::neg_infinity(), |m, (_, &(s, _))| m.max(s));
                        let acc: T = counts
                            .iter()
                            .zip(&scores)
                            .filter(|(&n, _)| n > 0)
                            .map(|(&n, &(s, _))| T::from_usize_lossy(n) * (s - mx).exp())
                            .sum();
                        sums.push((mx + acc.ln(), p));
                    });
                    for (xp, pp) in anchor.positive() {
                        let a = dot(fx, &self.emb[xp]);
                        for &(log_s, p) in &sums {
                            inner.add(pp * p * softplus(log_s - a));
                        }
                    }
                }
            }
            let inner = match self.kind.family() {
                LossFamily::Hinge => inner.value(),
                LossFamily::Logistic => inner.value() / T::LN_2(),
            };
            total.add(px * inner);
        }
        Ok(total.value())
    }

    /// L_un with k iid negatives from D_neg.
    pub fn unsup(&self, k: usize) -> Result<T> {
        let neg = self.model.negative_marginal();
        let mut total = KahanSum::new();
        for (c, rc) in self.model.rho().positive() {
            total.add(rc * self.expected_loss(c, &neg, k)?);
        }
        Ok(total.value())
    }

    /// L⁼_{un,c} with t same-class negatives.
    pub fn same_class(&self, c: usize, t: usize) -> Result<T> {
        self.expected_loss(c, self.model.class(c), t)
    }

    pub fn decompose(&self) -> Result<UnsupDecomposition<T>> {
        if self.model.num_classes() < 2 {
            return Err(Error::Degenerate("a single class has no distinct negatives".into()));
        }
        let stats = self.model.collision_stats(1)?;
        let one_minus_tau = stats.one_minus_tau()?;
        let nu = self.model.nu_distribution();
        let mut l_eq = KahanSum::new();
        for (c, w) in nu.positive() {
            l_eq.add(w * self.same_class(c, 1)?);
        }
        let mut l_neq = KahanSum::new();
        for (c, rc) in self.model.rho().positive() {
            let w = rc * (T::one() - rc) / one_minus_tau;
            if w > T::zero() {
                let neg = self.model.negative_marginal_excluding(c)?;
                l_neq.add(w * self.expected_loss(c, &neg, 1)?);
            }
        }
        Ok(UnsupDecomposition {
            l_un: self.unsup(1)?,
            l_eq: l_eq.value(),
            l_neq: l_neq.value(),
            tau: stats.tau,
        })
    }

    pub fn collision_split(&self, k: usize) -> Result<CollisionSplit<T>> {
        let stats = self.model.collision_stats(k)?;
        stats.one_minus_tau_k()?;
        let one_minus_tau_prime = T::one() - stats.tau_prime;
        let mut neq = KahanSum::new();
        let mut coll = KahanSum::new();
        let mut base = KahanSum::new();
        for (c, rc) in self.model.rho().positive() {
            let others = if rc < T::one() {
                Some(self.model.negative_marginal_excluding(c)?)
            } else {
                None
            };
            for j in 0..=k {
                let pj = rc * binomial_pmf(k, j, rc);
                if pj == T::zero() {
                    continue;
                }
                if j < k {
                    let neg = others.as_ref().expect("other classes exist when j < k");
                    neq.add(pj * self.expected_loss(c, neg, k - j)?);
                }
                if j >= 1 {
                    coll.add(pj * self.same_class(c, j)?);
                    base.add(pj * self.kind.at_zero(j));
                }
            }
        }
        let collision_term = coll.value() / stats.tau_k;
        let baseline_term = base.value() / stats.tau_k;
        Ok(CollisionSplit {
            k,
            l_neq_k: neq.value() / one_minus_tau_prime,
            collision_term,
            baseline_term,
            delta: collision_term - baseline_term,
        })
    }

    /// Block loss: ℓ(f(x)ᵀ(mean of b positives − mean of b negatives)),
    /// positives iid from D_{c⁺}, negatives iid from one D_{c⁻}, c⁻ ~ ρ.
    pub fn block(&self, b: usize) -> Result<T> {
        if b == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        let counts: Vec<u128> = self
            .model
            .classes()
            .iter()
            .map(|d| multiset_count(d.len(), b).unwrap_or(u128::MAX))
            .collect();
        let total_neg: u128 = counts.iter().fold(0u128, |a, &n| a.saturating_add(n));
        let work = self
            .model
            .classes()
            .iter()
            .zip(&counts)
            .try_fold(0u128, |acc, (d, &n)| {
                acc.checked_add((d.len() as u128).checked_mul(n.checked_mul(total_neg)?)?)
            });
        self.check_work(work)?;

        let bt = T::from_usize_lossy(b);
        let mean_law = |x: usize, c: usize| -> Vec<(T, T)> {
            let fx = &self.emb[x];
            let scores = distinct(
                self.model
                    .class(c)
                    .positive()
                    .map(|(y, q)| (dot(fx, &self.emb[y]), q))
                    .collect(),
            );
            let mut out = Vec::new();
            for_each_multiset(&scores, b, &mut |n, p| {
                let s: T = n
                    .iter()
                    .zip(&scores)
                    .map(|(&k, &(s, _))| T::from_usize_lossy(k) * s)
                    .sum();
                out.push((s / bt, p));
            });
            out
        };
        let mut total = KahanSum::new();
        for (cp, rp) in self.model.rho().positive() {
            for (x, px) in self.model.class(cp).positive() {
                let pos = mean_law(x, cp);
                for (cn, rn) in self.model.rho().positive() {
                    let neg = mean_law(x, cn);
                    let mut inner = KahanSum::new();
                    for &(a, pa) in &pos {
                        for &(bb, pb) in &neg {
                            inner.add(pa * pb * self.kind.eval(&[a - bb]));
                        }
                    }
                    total.add(rp * px * rn * inner.value());
                }
            }
        }
        Ok(total.value())
    }
}

pub fn unsup_loss_exact<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    k: usize,
    kind: LossKind<T>,
) -> Result<T> {
    ExactLosses::new(f, model, kind)?.unsup(k)
}

pub fn block_loss_exact<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    b: usize,
    kind: LossKind<T>,
) -> Result<T> {
    ExactLosses::new(f, model, kind)?.block(b)
}

pub fn decompose_unsup<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    kind: LossKind<T>,
) -> Result<UnsupDecomposition<T>> {
    ExactLosses::new(f, model, kind)?.decompose()
}

pub fn collision_split<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    k: usize,
    kind: LossKind<T>,
) -> Result<CollisionSplit<T>> {
    ExactLosses::new(f, model, kind)?.collision_split(k)
}
