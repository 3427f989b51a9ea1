//! Empirical Rademacher averages and the explicit-constant generalization
//! bound for the contrastive loss.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::latent_model::{LatentClassModel, SampleBatch};
use crate::losses::{unsup_losses_per_tuple, LossKind};
use crate::representation::Representation;
use crate::rng::stream;
use crate::scalar::{dot, ksum, Real};
use crate::training::FunctionClass;

/// Largest restriction length evaluated by exhaustive sign enumeration.
pub const EXACT_MAX_LEN: usize = 20;
pub const DEFAULT_TRIALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RademacherMethod {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate<T> {
    pub value: T,
    pub method: RademacherMethod,
    pub trials: usize,
    /// Zero for exact enumeration.
    pub standard_error: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenBoundValue<T> {
    pub value: T,
    pub rademacher_term: T,
    /// Uniform-deviation term and the Hoeffding term for the comparator f*.
    pub concentration_terms: (T, T),
    pub constants_provenance: String,
}

/// f restricted to the batch: tuples, then points (x, x⁺, x₁⁻ … x_k⁻), then
/// output coordinates. Length (k+2)·d·M.
pub fn restriction_vector<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
) -> Result<Vec<T>> {
    let emb = f.embed(model)?;
    let mut out = Vec::with_capacity((batch.k + 2) * f.output_dim() * batch.len());
    for t in &batch.tuples {
        for &x in [t.anchor, t.positive].iter().chain(&t.negatives) {
            out.extend_from_slice(&emb[x]);
        }
    }
    Ok(out)
}

/// E_σ max_f ⟨σ, v_f⟩ over the given equal-length vectors. Exhaustive when
/// the length is at most [`EXACT_MAX_LEN`], otherwise `trials` seeded sign
/// draws.
pub fn rademacher_of_vectors<T: Real>(
    vectors: &[Vec<T>],
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate<T>> {
    if common_len(vectors)? <= EXACT_MAX_LEN {
        rademacher_exact(vectors)
    } else {
        rademacher_monte_carlo(vectors, trials, seed)
    }
}

fn common_len<T: Real>(vectors: &[Vec<T>]) -> Result<usize> {
    let n = vectors.first().map(|v| v.len()).ok_or_else(|| {
        Error::InvalidArgument("Rademacher average of an empty class".into())
    })?;
    if vectors.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidArgument("restriction vectors differ in length".into()));
    }
    Ok(n)
}

fn sup_dot<T: Real>(vectors: &[Vec<T>], sigma: &[T]) -> T {
    vectors
        .iter()
        .map(|v| dot(sigma, v))
        .fold(T::neg_infinity(), T::max)
}

/// Average over all 2ⁿ sign vectors; n ≤ [`EXACT_MAX_LEN`].
pub fn rademacher_exact<T: Real>(vectors: &[Vec<T>]) -> Result<RademacherEstimate<T>> {
    let n = common_len(vectors)?;
    if n > EXACT_MAX_LEN {
        return Err(Error::InvalidArgument(format!(
            "exact Rademacher enumeration needs length ≤ {EXACT_MAX_LEN}, got {n}"
        )));
    }
    let count = 1usize << n;
    let vals: Vec<T> = (0..count)
        .into_par_iter()
        .map(|mask| {
            let sigma: Vec<T> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { T::one() } else { -T::one() })
                .collect();
            sup_dot(vectors, &sigma)
        })
        .collect();
    Ok(RademacherEstimate {
        value: ksum(vals) / T::from_usize_lossy(count),
        method: RademacherMethod::ExactEnumeration,
        trials: count,
        standard_error: T::zero(),
    })
}

/// `trials` seeded sign draws, one counter stream per trial, reduced in
/// trial order.
pub fn rademacher_monte_carlo<T: Real>(
    vectors: &[Vec<T>],
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate<T>> {
    let n = common_len(vectors)?;
    if trials < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least two trials".into()));
    }
    let vals: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(seed, j as u64);
            let sigma: Vec<T> = (0..n)
                .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
                .collect();
            sup_dot(vectors, &sigma)
        })
        .collect();
    let t = T::from_usize_lossy(trials);
    let mean = ksum(vals.iter().copied()) / t;
    let var = ksum(vals.iter().map(|&v| (v - mean) * (v - mean))) / (t - T::one());
    Ok(RademacherEstimate {
        value: mean,
        method: RademacherMethod::MonteCarlo,
        trials,
        standard_error: (var / t).sqrt(),
    })
}

/// R_S(F) for a finite class on `batch`.
pub fn rademacher<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate<T>> {
    let members = match class {
        FunctionClass::Finite(m) => m,
        _ => return Err(Error::InvalidArgument("expected a finite function class".into())),
    };
    let vectors = members
        .iter()
        .map(|f| restriction_vector(f, model, batch))
        .collect::<Result<Vec<_>>>()?;
    rademacher_of_vectors(&vectors, trials, seed)
}

/// R_S(G) for the scaled loss class G = {ℓ∘f / B}; a diagnostic only.
pub fn loss_class_rademacher<T: Real>(
    class: &FunctionClass<T>,
    model: &LatentClassModel<T>,
    batch: &SampleBatch,
    kind: LossKind<T>,
    bound: T,
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate<T>> {
    let members = match class {
        FunctionClass::Finite(m) => m,
        _ => return Err(Error::InvalidArgument("expected a finite function class".into())),
    };
    let vectors = members
        .iter()
        .map(|f| {
            unsup_losses_per_tuple(f, model, batch, kind)
                .map(|v| v.into_iter().map(|l| l / bound).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    rademacher_of_vectors(&vectors, trials, seed)
}

/// Range bound B of the loss on the radius-R ball: 1 + 2R² (hinge) or
/// 2R²/ln 2 + log₂(1+k) (logistic).
pub fn loss_bound<T: Real>(kind: LossKind<T>, r: T, k: usize) -> T {
    kind.range_bound(r, k)
}

/// 2√2·√6·ηR√k·rad/M + 3B√(ln(4/δ)/2M) + 3B√(ln(2/δ)/2M).
pub fn gen_bound<T: Real>(
    eta: T,
    r: T,
    k: usize,
    b: T,
    m: usize,
    delta: T,
    rad: T,
) -> Result<GenBoundValue<T>> {
    if !(eta > T::zero() && r > T::zero() && b > T::zero()) || k == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "η, R, B must be positive and k, M at least 1".into(),
        ));
    }
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::InvalidArgument("δ must lie in (0, 1)".into()));
    }
    if rad < T::zero() {
        return Err(Error::InvalidArgument("Rademacher average must be nonnegative".into()));
    }
    let mt = T::from_usize_lossy(m);
    let two = T::lit(2.0);
    let lipschitz = T::lit(6.0).sqrt() * eta * r * T::from_usize_lossy(k).sqrt();
    let rademacher_term = two * T::SQRT_2() * lipschitz * rad / mt;
    let uniform = T::lit(3.0) * b * ((T::lit(4.0) / delta).ln() / (two * mt)).sqrt();
    let hoeffding = T::lit(3.0) * b * ((two / delta).ln() / (two * mt)).sqrt();
    Ok(GenBoundValue {
        value: rademacher_term + uniform + hoeffding,
        rademacher_term,
        concentration_terms: (uniform, hoeffding),
        constants_provenance: "2·R_S(G)/M with R_S(G) ≤ √2·L·R_S(F)/B (vector contraction), \
L = √6·η·R·√k / B (Jacobian of the score map on the R-ball); \
3B√(ln(4/δ)/2M) uniform deviation at confidence δ/2; \
3B√(ln(2/δ)/2M) Hoeffding for the comparator at δ/2"
            .to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_member_instance() {
        let v = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let r = rademacher_of_vectors(&v, 0, 0).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.method, RademacherMethod::ExactEnumeration);
        let z = rademacher_of_vectors(&[vec![0.0; 5]], 0, 0).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn gen_bound_examples() {
        let g = gen_bound(1.0, 1.0, 1, 4.0, 1000, 0.1, 0.0).unwrap();
        let expect = 3.0f64 * 4.0 * ((40.0f64).ln().sqrt() + (20.0f64).ln().sqrt()) / 2000f64.sqrt();
        assert!((g.value - expect).abs() < 1e-12);
        let a = gen_bound(1.0f64, 1.0, 1, 4.0, 1000, 0.1, 10.0).unwrap();
        let b = gen_bound(1.0f64, 1.0, 1, 4.0, 2000, 0.1, 10.0).unwrap();
        assert!((a.rademacher_term - 2.0 * b.rademacher_term).abs() < 1e-12);
        assert!((a.concentration_terms.0 - 2f64.sqrt() * b.concentration_terms.0).abs() < 1e-12);
        assert!(gen_bound(1.0, 1.0, 1, 4.0, 10, 1.0, 0.0).is_err());
    }
}
