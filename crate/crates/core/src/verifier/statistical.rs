//! Sampled ERM against the explicit-constant generalization bound.

use rayon::prelude::*;

use super::{deviation_constant, family_name, inputs_digest, lipschitz, BoundCheck, CheckId, RECONSTRUCTION};
use crate::complexity::{gen_bound, restriction_vector};
use crate::error::{Error, Result};
use crate::latent_model::{sample_batch, SampleBatch};
use crate::losses::ExactLosses;
use crate::scalar::norm;
use crate::supervised::{avg_sup_loss, LineSearch};
use crate::training::{erm_finite, erm_finite_exact, FunctionClass};
use crate::{Loss, Model, Repr};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationRecord {
    pub m: usize,
    pub seed: u64,
    pub selected: usize,
    /// L_un(f̂) − min_F L_un.
    pub gap: f64,
    pub check: BoundCheck,
}

fn members(class: &FunctionClass<f64>) -> Result<&[Repr]> {
    match class {
        FunctionClass::Finite(m) if !m.is_empty() => Ok(m),
        _ => Err(Error::InvalidArgument("expected a nonempty finite function class".into())),
    }
}

/// Massart's bound max_f ‖f|_S‖·√(2 ln |F|) on the Rademacher average.
pub fn massart_radius(class: &FunctionClass<f64>, model: &Model, batch: &SampleBatch) -> Result<f64> {
    let fs = members(class)?;
    let mut widest = 0.0f64;
    for f in fs {
        widest = widest.max(norm(&restriction_vector(f, model, batch)?));
    }
    Ok(widest * (2.0 * (fs.len() as f64).ln()).sqrt())
}

/// For every (M, seed): f̂ = ERM on a sampled batch of M single-negative
/// tuples, checked as L^μ_sup(f̂) ≤ (L_un(f*) − τ)/(1−τ) + Gen_M/(1−τ), f* the
/// population minimizer over the class.
pub fn check_erm_generalization(
    model: &Model,
    class: &FunctionClass<f64>,
    kind: Loss,
    m_list: &[usize],
    seeds: &[u64],
    delta: f64,
) -> Result<Vec<GeneralizationRecord>> {
    let fs = members(class)?;
    let stats = model.collision_stats(1)?;
    let one_minus = stats.one_minus_tau()?;
    let population: Vec<f64> = fs
        .par_iter()
        .map(|f| ExactLosses::new(f, model, kind)?.unsup(1))
        .collect::<Result<_>>()?;
    let sup: Vec<f64> = fs
        .par_iter()
        .map(|f| avg_sup_loss(f, model, 2, kind, true, LineSearch::default()))
        .collect::<Result<_>>()?;
    let star = erm_finite_exact(class, model, 1, kind)?;
    let l_star = star.empirical_loss;
    let r = fs.iter().map(|f| f.norm_bound()).fold(0.0, f64::max);
    let b = kind.range_bound(r, 1);
    let eta = lipschitz(kind);
    let jobs: Vec<(usize, u64)> = m_list
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(m, seed)| {
            let batch = sample_batch(model, 1, m, seed)?;
            let fit = erm_finite(class, model, &batch, kind)?;
            let i = fit.selected_index.expect("finite class");
            let rad = massart_radius(class, model, &batch)?;
            let gen = gen_bound(eta, r, 1, b, m, delta, rad)?;
            let lhs = sup[i];
            let rhs = (l_star - stats.tau * kind.at_zero(1)) / one_minus + gen.value / one_minus;
            let refs: Vec<&Repr> = fs.iter().collect();
            let digest = inputs_digest(
                model,
                &refs,
                1,
                Some(kind),
                &[
                    ("m", m as f64),
                    ("seed", seed as f64),
                    ("delta", delta),
                    ("c_prime", deviation_constant(kind)),
                ],
            );
            let gap = population[i] - l_star;
            let check = BoundCheck::inequality(CheckId::ErmGeneralization.as_str(), lhs, rhs, digest)
                .labeled(RECONSTRUCTION)
                .with("loss", family_name(kind))
                .with("m", m)
                .with("seed", seed)
                .with("selected", i)
                .with("gap", gap)
                .with("rademacher", rad)
                .with("gen", gen.value);
            Ok(GeneralizationRecord {
                m,
                seed,
                selected: i,
                gap,
                check,
            })
        })
        .collect()
}
