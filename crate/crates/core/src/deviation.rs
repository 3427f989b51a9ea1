//! Intraclass deviation s(f), directional sub-Gaussian parameters and the
//! margin constants γ(f) built from them.

use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::latent_model::LatentClassModel;
use crate::representation::{moments_from_embedding, Representation};
use crate::rng::stream;
use crate::scalar::{dot, norm, KahanSum, Real};

/// Random probe directions used by [`deviation`].
pub const DEFAULT_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDeviation<T> {
    pub class: usize,
    /// √‖Σ(f,c)‖₂.
    pub sqrt_spectral: T,
    /// E_{x~D_c}‖f(x)‖.
    pub mean_norm: T,
    /// ν(c) ∝ ρ(c)².
    pub nu_weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSummary<T> {
    pub s_value: T,
    pub per_class: Vec<ClassDeviation<T>>,
    pub sigma_bound: T,
    /// max over model points of ‖f(x)‖.
    pub max_norm: T,
}

/// s(f) = E_{c~ν}[√‖Σ(f,c)‖₂ · E‖f(x)‖] and friends.
pub fn deviation<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
) -> Result<DeviationSummary<T>> {
    let emb = f.embed(model)?;
    let nu = model.nu_distribution();
    let mut s = KahanSum::new();
    let per_class: Vec<ClassDeviation<T>> = (0..model.num_classes())
        .map(|c| {
            let m = moments_from_embedding(&emb, model, c);
            let dev = ClassDeviation {
                class: c,
                sqrt_spectral: m.spectral_norm.max(T::zero()).sqrt(),
                mean_norm: m.mean_norm,
                nu_weight: nu.prob(c),
            };
            s.add(dev.nu_weight * dev.sqrt_spectral * dev.mean_norm);
            dev
        })
        .collect();
    Ok(DeviationSummary {
        s_value: s.value(),
        per_class,
        sigma_bound: sigma_from_embedding(&emb, model, DEFAULT_DIRECTIONS, 0),
        max_norm: emb.iter().map(|v| norm(v)).fold(T::zero(), T::max),
    })
}

/// Largest half-range of uᵀf(x), x ∈ supp D_c, over classes and probe
/// directions u. A variable confined to an interval of length L is
/// (L/2)²-sub-Gaussian, so the result is a valid directional parameter.
///
/// Probes: covariance eigenvectors, `directions` seeded random unit vectors,
/// and the normalized differences of support pairs. The last family attains
/// the half diameter, which bounds the half-range in every direction.
pub fn sigma_bound<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    directions: usize,
    seed: u64,
) -> Result<T> {
    Ok(sigma_from_embedding(&f.embed(model)?, model, directions, seed))
}

pub(crate) fn sigma_from_embedding<T: Real>(
    emb: &[Vec<T>],
    model: &LatentClassModel<T>,
    directions: usize,
    seed: u64,
) -> T {
    let d = emb.first().map(|v| v.len()).unwrap_or(0);
    if d == 0 {
        return T::zero();
    }
    let mut rng = stream(seed, 0);
    let random: Vec<Vec<T>> = (0..directions)
        .filter_map(|_| {
            let g: Vec<T> = (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    T::lit(z)
                })
                .collect();
            let n = norm(&g);
            (n > T::zero()).then(|| g.into_iter().map(|v| v / n).collect())
        })
        .collect();
    let mut best = T::zero();
    for c in 0..model.num_classes() {
        let support: Vec<&Vec<T>> = model.class(c).positive().map(|(x, _)| &emb[x]).collect();
        if support.len() < 2 {
            continue;
        }
        let half_range = |u: &[T]| {
            let (lo, hi) = support.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                let p = dot(u, v);
                (lo.min(p), hi.max(p))
            });
            (hi - lo) / T::lit(2.0)
        };
        let (_, eig) = moments_from_embedding(emb, model, c).eigen();
        for u in eig.iter().chain(&random) {
            best = best.max(half_range(u));
        }
        for i in 0..support.len() {
            for j in i + 1..support.len() {
                let diff: Vec<T> = support[i].iter().zip(support[j]).map(|(a, b)| *a - *b).collect();
                let n = norm(&diff);
                if n > T::zero() {
                    let u: Vec<T> = diff.into_iter().map(|v| v / n).collect();
                    best = best.max(half_range(&u));
                }
            }
        }
    }
    best
}

/// γ = 1 + 2Rσ√(2 ln R + ln(3/ε)) for R ≥ 1, and 1 + 2Rσ√(ln(3/ε)) for
/// R < 1. A negative radicand is clamped to zero.
pub fn gamma_binary<T: Real>(r: T, sigma: T, epsilon: T) -> T {
    let three_over = (T::lit(3.0) / epsilon).ln();
    let radicand = if r >= T::one() {
        T::lit(2.0) * r.ln() + three_over
    } else {
        three_over
    };
    T::one() + T::lit(2.0) * r * sigma * radicand.max(T::zero()).sqrt()
}

/// γ = 1 + 2√2·Rσ(√(ln t) + √(ln(R/ε))) for R ≥ 1, with ln(1/ε) in place of
/// ln(R/ε) for R < 1. Radicands are clamped to zero.
pub fn gamma_multiclass<T: Real>(r: T, sigma: T, t: usize, epsilon: T) -> T {
    let log_t = T::from_usize_lossy(t.max(1)).ln();
    let log_r = if r >= T::one() {
        (r / epsilon).ln()
    } else {
        (T::one() / epsilon).ln()
    };
    let c = T::lit(2.0) * T::SQRT_2();
    T::one() + c * r * sigma * (log_t.max(T::zero()).sqrt() + log_r.max(T::zero()).sqrt())
}

/// γ(f) of the binary sub-Gaussian margin bound, with R = max ‖f(x)‖ and σ
/// from [`sigma_bound`].
pub fn gamma_of<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    epsilon: T,
) -> Result<T> {
    let dev = deviation(f, model)?;
    Ok(gamma_binary(dev.max_norm, dev.sigma_bound, epsilon))
}
