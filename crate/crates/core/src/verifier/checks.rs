//! Population-level checks on exact expectations.

use std::f64::consts::{LN_2, SQRT_2};

use super::{family_name, inputs_digest, BoundCheck, CheckId};
use crate::deviation::{deviation, gamma_binary, gamma_multiclass};
use crate::error::{Error, Result};
use crate::latent_model::LabelPolicy;
use crate::losses::{ExactLosses, LossFamily, LossKind};
use crate::supervised::{avg_sup_loss, weighted_avg_sup_loss, LineSearch, WeightedVariant};
use crate::{Loss, Model, Repr};

/// Lipschitz constant of ℓ in the sup norm of its argument.
pub fn lipschitz(kind: Loss) -> f64 {
    match kind.family() {
        LossFamily::Hinge => 1.0 / kind.margin(),
        LossFamily::Logistic => 1.0 / LN_2,
    }
}

/// c′ with E|f(x)ᵀ(f(x⁺) − f(x⁻))| ≤ √2·√‖Σ‖·E‖f‖ per negative: √2 for the
/// hinge, √2/ln 2 for the logistic loss.
pub fn deviation_constant(kind: Loss) -> f64 {
    SQRT_2 * lipschitz(kind)
}

fn mean_sup(f: &Repr, model: &Model, kind: Loss) -> Result<f64> {
    avg_sup_loss(f, model, 2, kind, true, LineSearch::default())
}

fn tagged(c: BoundCheck, kind: Loss) -> BoundCheck {
    c.with("loss", family_name(kind))
}

pub fn check_decomposition(f: &Repr, model: &Model, kind: Loss) -> Result<BoundCheck> {
    let d = ExactLosses::new(f, model, kind)?.decompose()?;
    let digest = inputs_digest(model, &[f], 1, Some(kind), &[]);
    let split = d.tau * d.l_eq + (1.0 - d.tau) * d.l_neq;
    Ok(tagged(
        BoundCheck::identity(CheckId::Decomposition.as_str(), d.l_un, split, digest)
            .with("tau", d.tau)
            .with("l_eq", d.l_eq)
            .with("l_neq", d.l_neq),
        kind,
    ))
}

pub fn check_mean_sup_jensen(f: &Repr, model: &Model, kind: Loss) -> Result<BoundCheck> {
    let stats = model.collision_stats(1)?;
    let one_minus = stats.one_minus_tau()?;
    let l_un = ExactLosses::new(f, model, kind)?.unsup(1)?;
    let lhs = mean_sup(f, model, kind)?;
    let rhs = (l_un - stats.tau * kind.at_zero(1)) / one_minus;
    let digest = inputs_digest(model, &[f], 1, Some(kind), &[]);
    Ok(tagged(
        BoundCheck::inequality(CheckId::MeanSupJensen.as_str(), lhs, rhs, digest)
            .with("l_un", l_un)
            .with("tau", stats.tau),
        kind,
    ))
}

/// Σ_c ν(c)·(L⁼_c with t same-class negatives − ℓ_t(0)) ≤ c′·t·s(f).
pub fn check_same_class_deviation(
    f: &Repr,
    model: &Model,
    kind: Loss,
    t: usize,
) -> Result<BoundCheck> {
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let exact = ExactLosses::new(f, model, kind)?;
    let nu = model.nu_distribution();
    let mut lhs = 0.0;
    for (c, w) in nu.positive() {
        lhs += w * (exact.same_class(c, t)? - kind.at_zero(t));
    }
    let s = deviation(f, model)?.s_value;
    let c_prime = deviation_constant(kind);
    let rhs = c_prime * t as f64 * s;
    let digest = inputs_digest(model, &[f], t, Some(kind), &[("c_prime", c_prime)]);
    Ok(tagged(
        BoundCheck::inequality(CheckId::SameClassDeviation.as_str(), lhs, rhs, digest)
            .with("t", t)
            .with("s", s)
            .with("c_prime", c_prime),
        kind,
    ))
}

pub fn check_mean_sup_deviation(f: &Repr, model: &Model, kind: Loss) -> Result<BoundCheck> {
    let d = ExactLosses::new(f, model, kind)?.decompose()?;
    let one_minus = model.collision_stats(1)?.one_minus_tau()?;
    let s = deviation(f, model)?.s_value;
    let c_prime = deviation_constant(kind);
    let lhs = mean_sup(f, model, kind)?;
    let rhs = d.l_neq + c_prime * d.tau / one_minus * s;
    let digest = inputs_digest(model, &[f], 1, Some(kind), &[("c_prime", c_prime)]);
    Ok(tagged(
        BoundCheck::inequality(CheckId::MeanSupDeviation.as_str(), lhs, rhs, digest)
            .with("l_neq", d.l_neq)
            .with("s", s)
            .with("tau", d.tau),
        kind,
    ))
}

/// Both links of L^μ_sup ≤ (L^block_b − τ)/(1−τ) ≤ (L_un − τ)/(1−τ).
pub fn check_block_chain(f: &Repr, model: &Model, b: usize, kind: Loss) -> Result<[BoundCheck; 2]> {
    let stats = model.collision_stats(1)?;
    let one_minus = stats.one_minus_tau()?;
    let exact = ExactLosses::new(f, model, kind)?;
    let ell0 = kind.at_zero(1);
    let block = (exact.block(b)? - stats.tau * ell0) / one_minus;
    let pair = (exact.unsup(1)? - stats.tau * ell0) / one_minus;
    let sup = mean_sup(f, model, kind)?;
    let digest = inputs_digest(model, &[f], 1, Some(kind), &[("b", b as f64)]);
    let id = CheckId::BlockChain.as_str();
    Ok([
        tagged(
            BoundCheck::inequality(format!("{id}/lower"), sup, block, digest.clone()).with("b", b),
            kind,
        ),
        tagged(
            BoundCheck::inequality(format!("{id}/upper"), block, pair, digest).with("b", b),
            kind,
        ),
    ])
}

/// The k-negative chain:
/// (a) (1−τ_k)·E_D[(ρ⁺_min/p_max)·L^μ_sup] ≤ L_un − τ_k·E[ℓ_{|I⁺|}(0) | I⁺ ≠ ∅]
/// (b) L_un ≤ (1−τ′)·L≠_k + τ_k·collision
/// (c) τ_k/(1−τ_k)·Δ ≤ c′·k·τ/(1−τ_k)·s(f)
/// and their composition. At k = 1 with uniform task labels the composite
/// must coincide with the binary mean-classifier bound.
pub fn check_multiway_tasks(
    f: &Repr,
    model: &Model,
    k: usize,
    kind: Loss,
    policy: LabelPolicy,
) -> Result<Vec<BoundCheck>> {
    let stats = model.collision_stats(k)?;
    let one_minus_k = stats.one_minus_tau_k()?;
    let exact = ExactLosses::new(f, model, kind)?;
    let l_un = exact.unsup(k)?;
    let split = exact.collision_split(k)?;
    let weighted = weighted_avg_sup_loss(f, model, k, kind, WeightedVariant::MinOverMax, policy)?;
    let s = deviation(f, model)?.s_value;
    let c_prime = deviation_constant(kind);
    let tau1 = model.collision_stats(1)?.tau;
    let kf = k as f64;
    let digest = inputs_digest(model, &[f], k, Some(kind), &[("c_prime", c_prime)]);
    let id = CheckId::MultiwayTasks.as_str();
    let one_minus_prime = 1.0 - stats.tau_prime;

    let composite_rhs =
        one_minus_prime / one_minus_k * split.l_neq_k + c_prime * kf * tau1 / one_minus_k * s;
    let mut out = vec![
        BoundCheck::inequality(
            format!("{id}/task-sum"),
            one_minus_k * weighted,
            l_un - stats.tau_k * split.baseline_term,
            digest.clone(),
        ),
        BoundCheck::inequality(
            format!("{id}/split"),
            l_un,
            one_minus_prime * split.l_neq_k + stats.tau_k * split.collision_term,
            digest.clone(),
        ),
        BoundCheck::inequality(
            format!("{id}/collision"),
            stats.tau_k / one_minus_k * split.delta,
            c_prime * kf * tau1 / one_minus_k * s,
            digest.clone(),
        ),
        BoundCheck::inequality(id, weighted, composite_rhs, digest.clone())
            .with("tau_k", stats.tau_k)
            .with("tau_prime", stats.tau_prime)
            .with("l_neq_k", split.l_neq_k)
            .with("s", s),
    ];
    if k == 1 && policy == LabelPolicy::Uniform {
        let d = exact.decompose()?;
        let binary = mean_sup(f, model, kind)?;
        let binary_rhs = d.l_neq + c_prime * d.tau / (1.0 - d.tau) * s;
        out.push(BoundCheck::identity(format!("{id}/k1-lhs"), weighted, binary, digest.clone()));
        out.push(BoundCheck::identity(format!("{id}/k1-rhs"), composite_rhs, binary_rhs, digest));
    }
    Ok(out
        .into_iter()
        .map(|c| tagged(c, kind).with("k", k))
        .collect())
}

fn margin_loss(gamma: f64) -> Result<Loss> {
    LossKind::hinge_with_margin(gamma)
}

/// L≠ ≤ γ·L^μ_{γ,sup} + ε with γ from the binary sub-Gaussian margin.
pub fn check_subgaussian_binary(f: &Repr, model: &Model, epsilon: f64) -> Result<BoundCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let hinge = LossKind::hinge();
    let dev = deviation(f, model)?;
    let gamma = gamma_binary(dev.max_norm, dev.sigma_bound, epsilon);
    let l_neq = ExactLosses::new(f, model, hinge)?.decompose()?.l_neq;
    let margin_sup = mean_sup(f, model, margin_loss(gamma)?)?;
    let rhs = gamma * margin_sup + epsilon;
    let digest = inputs_digest(
        model,
        &[f],
        1,
        Some(hinge),
        &[("epsilon", epsilon), ("gamma", gamma)],
    );
    Ok(
        BoundCheck::inequality(CheckId::SubgaussianBinary.as_str(), l_neq, rhs, digest)
            .with("gamma", gamma)
            .with("sigma", dev.sigma_bound)
            .with("r", dev.max_norm)
            .with("epsilon", epsilon),
    )
}

/// L^μ_sup(f̂) ≤ γ(f)·L^μ_{γ(f),sup}(f) + β·s(f) + η·gen + ε with
/// β = c′τ/(1−τ), η = 1/(1−τ). Requires L_un(f̂) ≤ L_un(f) + gen, the event
/// on which the generalization bound holds.
pub fn check_subgaussian_competitive(
    f_hat: &Repr,
    f: &Repr,
    model: &Model,
    epsilon: f64,
    gen: f64,
) -> Result<BoundCheck> {
    if !(epsilon > 0.0) || !(gen >= 0.0) {
        return Err(Error::InvalidArgument("need ε > 0 and Gen ≥ 0".into()));
    }
    let hinge = LossKind::hinge();
    let l_hat = ExactLosses::new(f_hat, model, hinge)?.unsup(1)?;
    let l_f = ExactLosses::new(f, model, hinge)?.unsup(1)?;
    if l_hat > l_f + gen + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "L_un(f̂) = {l_hat} exceeds L_un(f) + Gen = {}",
            l_f + gen
        )));
    }
    let stats = model.collision_stats(1)?;
    let one_minus = stats.one_minus_tau()?;
    let dev = deviation(f, model)?;
    let gamma = gamma_binary(dev.max_norm, dev.sigma_bound, epsilon);
    let c_prime = deviation_constant(hinge);
    let beta = c_prime * stats.tau / one_minus;
    let eta = 1.0 / one_minus;
    let lhs = mean_sup(f_hat, model, hinge)?;
    let rhs = gamma * mean_sup(f, model, margin_loss(gamma)?)? + beta * dev.s_value + eta * gen + epsilon;
    let digest = inputs_digest(
        model,
        &[f_hat, f],
        1,
        Some(hinge),
        &[("epsilon", epsilon), ("gen", gen), ("gamma", gamma)],
    );
    Ok(
        BoundCheck::inequality(CheckId::SubgaussianCompetitive.as_str(), lhs, rhs, digest)
            .with("gamma", gamma)
            .with("beta", beta)
            .with("eta", eta)
            .with("gen", gen)
            .with("epsilon", epsilon),
    )
}

/// L≠_k ≤ γ·E_{T~D′}[(ρ′⁺_max/p_min)·L^μ_{γ,sup}(T)] + ε with
/// γ = 1 + 2√2·Rσ(√ln k + √ln(R/ε)).
pub fn check_subgaussian_multiway(
    f: &Repr,
    model: &Model,
    k: usize,
    epsilon: f64,
    policy: LabelPolicy,
) -> Result<BoundCheck> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let hinge = LossKind::hinge();
    let dev = deviation(f, model)?;
    let gamma = gamma_multiclass(dev.max_norm, dev.sigma_bound, k, epsilon);
    let l_neq_k = ExactLosses::new(f, model, hinge)?.collision_split(k)?.l_neq_k;
    let weighted = weighted_avg_sup_loss(
        f,
        model,
        k,
        margin_loss(gamma)?,
        WeightedVariant::MaxOverMin,
        policy,
    )?;
    let rhs = gamma * weighted + epsilon;
    let digest = inputs_digest(
        model,
        &[f],
        k,
        Some(hinge),
        &[("epsilon", epsilon), ("gamma", gamma)],
    );
    Ok(
        BoundCheck::inequality(CheckId::SubgaussianMultiway.as_str(), l_neq_k, rhs, digest)
            .with("k", k)
            .with("gamma", gamma)
            .with("sigma", dev.sigma_bound)
            .with("r", dev.max_norm)
            .with("epsilon", epsilon),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::FiniteDistribution;

    fn two_point() -> Model {
        Model::new(
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

    fn singletons() -> Model {
        Model::new(
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
    fn singleton_equalities() {
        let m = singletons();
        let id = Repr::identity(1, 1.0).unwrap();
        let c = check_mean_sup_jensen(&id, &m, LossKind::hinge()).unwrap();
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        let z = Repr::zero(2, 1, 1.0).unwrap();
        let c = check_mean_sup_jensen(&z, &m, LossKind::hinge()).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15 && (c.rhs - 1.0).abs() < 1e-15);
        let c = check_mean_sup_deviation(&z, &m, LossKind::hinge()).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15 && (c.rhs - 1.0).abs() < 1e-15);
        let c = check_subgaussian_binary(&id, &m, 0.1).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.details["gamma"], 1.0);
    }

    #[test]
    fn two_point_values() {
        let m = two_point();
        let id = Repr::identity(2, 1.0).unwrap();
        let c = check_same_class_deviation(&id, &m, LossKind::hinge(), 1).unwrap();
        assert!(c.lhs.abs() < 1e-12);
        assert!((c.rhs - 1.0).abs() < 1e-12);
        let [lower, upper] = check_block_chain(&id, &m, 2, LossKind::hinge()).unwrap();
        assert!((lower.rhs - 0.1875).abs() < 1e-12);
        assert!((upper.rhs - 0.25).abs() < 1e-12);
        assert!(lower.pass && upper.pass);
        let [_, upper] = check_block_chain(&id, &m, 1, LossKind::hinge()).unwrap();
        assert!(upper.slack.abs() < 1e-12);
    }

    #[test]
    fn multiway_zero_map() {
        let m = two_point();
        let z = Repr::zero(4, 2, 1.0).unwrap();
        let checks = check_multiway_tasks(&z, &m, 2, LossKind::hinge(), LabelPolicy::Uniform).unwrap();
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        let checks = check_multiway_tasks(&z, &m, 1, LossKind::hinge(), LabelPolicy::Uniform).unwrap();
        assert_eq!(checks.len(), 6);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }
}
