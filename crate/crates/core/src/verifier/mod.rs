//! Numerical certification of the bounds, identities and counterexamples on
//! exact population quantities. Everything here runs in f64.

mod checks;
mod report;
mod scenarios;
mod statistical;
mod suite;
mod sweeps;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::latent_model::ModelFile;
use crate::losses::LossFamily;
use crate::representation::RepresentationFile;
use crate::{Loss, Model, Repr};

pub use checks::{
    check_block_chain, check_decomposition, check_mean_sup_deviation, check_mean_sup_jensen,
    check_multiway_tasks, check_same_class_deviation, check_subgaussian_binary,
    check_subgaussian_competitive, check_subgaussian_multiway, deviation_constant, lipschitz,
};
pub use report::{render_report, Summary};
pub use scenarios::{
    bundled_model, closed_form_unsup, run_counterexample, scenario_class, Counterexample,
    MemberRow, ScenarioParams, ScenarioReport, BUNDLED_MODELS,
};
pub use statistical::{check_erm_generalization, massart_radius, GeneralizationRecord};
pub use suite::{random_pair, run_checks, run_random_suite, CheckOptions};
pub use sweeps::{
    sweep_block_size, sweep_negative_samples, sweep_sample_size, NegativeSweep, SweepTable,
};

/// Pass threshold on rhs − lhs.
pub const TOLERANCE: f64 = 1e-9;

/// Label attached to checks whose constants are reconstructed rather than
/// stated explicitly.
pub const RECONSTRUCTION: &str = "explicit-constant reconstruction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub inputs_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub details: IndexMap<String, Value>,
}

impl BoundCheck {
    /// lhs ≤ rhs up to [`TOLERANCE`].
    pub fn inequality(id: impl Into<String>, lhs: f64, rhs: f64, digest: String) -> Self {
        let slack = rhs - lhs;
        Self {
            id: id.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= -TOLERANCE,
            inputs_digest: digest,
            label: None,
            details: IndexMap::new(),
        }
    }

    /// a = b up to [`TOLERANCE`]: reported as |a − b| ≤ 0.
    pub fn identity(id: impl Into<String>, a: f64, b: f64, digest: String) -> Self {
        Self::inequality(id, (a - b).abs(), 0.0, digest)
            .with("a", a)
            .with("b", b)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }
}

/// Check families; each produces one or more [`BoundCheck`] lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CheckId {
    /// L_un = τ·L⁼ + (1−τ)·L≠.
    Decomposition,
    /// L^μ_sup ≤ (L_un − τ)/(1−τ).
    MeanSupJensen,
    /// L⁼ − ℓ(0) ≤ c′·t·s(f).
    SameClassDeviation,
    /// L^μ_sup ≤ L≠ + c′τ/(1−τ)·s(f).
    MeanSupDeviation,
    /// L^μ_sup ≤ (L^block − τ)/(1−τ) ≤ (L_un − τ)/(1−τ).
    BlockChain,
    /// k-negative task-weighted chain through the collision split.
    MultiwayTasks,
    /// L≠ ≤ γ·L^μ_{γ,sup} + ε.
    SubgaussianBinary,
    /// L^μ_sup(f̂) ≤ γ·L^μ_{γ,sup}(f) + β·s(f) + η·Gen + ε.
    SubgaussianCompetitive,
    /// L≠_k ≤ γ·E_{D′}[(ρ′⁺_max/p_min)·L^μ_{γ,sup}] + ε.
    SubgaussianMultiway,
    /// Sampled ERM against the explicit generalization bound.
    ErmGeneralization,
}

impl CheckId {
    pub const ALL: [CheckId; 10] = [
        CheckId::Decomposition,
        CheckId::MeanSupJensen,
        CheckId::SameClassDeviation,
        CheckId::MeanSupDeviation,
        CheckId::BlockChain,
        CheckId::MultiwayTasks,
        CheckId::SubgaussianBinary,
        CheckId::SubgaussianCompetitive,
        CheckId::SubgaussianMultiway,
        CheckId::ErmGeneralization,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckId::Decomposition => "decomposition-identity",
            CheckId::MeanSupJensen => "mean-sup-jensen",
            CheckId::SameClassDeviation => "same-class-deviation",
            CheckId::MeanSupDeviation => "mean-sup-deviation",
            CheckId::BlockChain => "block-chain",
            CheckId::MultiwayTasks => "multiway-tasks",
            CheckId::SubgaussianBinary => "subgaussian-binary",
            CheckId::SubgaussianCompetitive => "subgaussian-competitive",
            CheckId::SubgaussianMultiway => "subgaussian-multiway",
            CheckId::ErmGeneralization => "erm-generalization",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check id `{s}`")))
    }
}

impl From<CheckId> for String {
    fn from(c: CheckId) -> String {
        c.as_str().to_string()
    }
}

impl TryFrom<String> for CheckId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// sha256 over the canonical JSON of (model, f, k, loss, constants).
pub fn inputs_digest(
    model: &Model,
    fs: &[&Repr],
    k: usize,
    kind: Option<Loss>,
    constants: &[(&str, f64)],
) -> String {
    let loss = kind.map(|l| {
        json!({
            "family": l.family().to_string(),
            "margin": l.margin(),
        })
    });
    let constants: IndexMap<&str, f64> = constants.iter().copied().collect();
    let value = json!({
        "model": ModelFile::from_model(model),
        "f": fs
            .iter()
            .map(|f| RepresentationFile::from_representation(*f, model))
            .collect::<Vec<_>>(),
        "k": k,
        "loss": loss,
        "constants": constants,
    });
    digest_value(&value)
}

/// sha256 (hex) of the compact JSON encoding of `value`.
pub fn digest_value(value: &Value) -> String {
    let bytes = serde_json::to_vec(value).expect("JSON values serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub(crate) fn family_name(kind: Loss) -> &'static str {
    match kind.family() {
        LossFamily::Hinge => "hinge",
        LossFamily::Logistic => "logistic",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_threshold() {
        assert!(BoundCheck::inequality("x", 1.0, 1.0 - 5e-10, String::new()).pass);
        assert!(!BoundCheck::inequality("x", 1.0, 1.0 - 2e-9, String::new()).pass);
        assert!(!BoundCheck::inequality("x", f64::NAN, 0.0, String::new()).pass);
        let id = BoundCheck::identity("x", 0.3, 0.1 + 0.2, String::new());
        assert!(id.pass && id.slack <= 0.0);
    }

    #[test]
    fn check_ids_round_trip() {
        for c in CheckId::ALL {
            assert_eq!(c.as_str().parse::<CheckId>().unwrap(), c);
        }
        assert!("nope".parse::<CheckId>().is_err());
    }
}
