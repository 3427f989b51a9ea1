//! Experiment configuration: JSON, validated after parsing.

use std::path::{Path, PathBuf};

use curlab::latent_model::{LabelPolicy, ModelFile};
use curlab::losses::LossFamily;
use curlab::representation::RepresentationFile;
use curlab::training::FunctionClass;
use curlab::verifier::{
    bundled_model, scenario_class, CheckId, CheckOptions, Counterexample, ScenarioParams,
};
use curlab::{Model, Repr};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Bundled(String),
    Path(PathBuf),
    Inline(ModelFile),
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: Counterexample,
    #[serde(default = "default_n")]
    pub n: usize,
    pub r: f64,
    #[serde(default = "default_one")]
    pub k: usize,
    #[serde(default = "default_true")]
    pub best_classifier: bool,
}

impl ScenarioSpec {
    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            n: self.n,
            r: self.r,
            k: self.k,
            best_classifier: self.best_classifier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RepSpec {
    /// x ↦ x on the ambient space.
    Identity { norm_bound: f64 },
    Zero { d: usize, norm_bound: f64 },
    Path(PathBuf),
    Inline(RepresentationFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    Finite(Vec<RepSpec>),
    /// {α·base : α ∈ alphas}, all with the bound of the largest member.
    Scaled { base: RepSpec, alphas: Vec<f64> },
    Table { d: usize, norm_bound: f64 },
    Linear { d: usize, norm_bound: f64 },
    /// The two-member class of a counterexample (also supplies the model).
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub representation: Option<RepSpec>,
    #[serde(default)]
    pub function_class: Option<ClassSpec>,
    #[serde(default = "default_loss")]
    pub loss: LossFamily,
    /// Loss families for the verification checks; defaults to `[loss]`.
    #[serde(default)]
    pub check_losses: Option<Vec<LossFamily>>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_b")]
    pub b: Vec<usize>,
    #[serde(default = "default_m")]
    pub m: Vec<usize>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Train with the block loss of this block size.
    #[serde(default)]
    pub block: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub suite: Option<SuiteSpec>,
    #[serde(default)]
    pub counterexamples: Vec<ScenarioSpec>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub label_policy: LabelPolicy,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_n() -> usize {
    8
}
fn default_one() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_pairs() -> usize {
    100
}
fn default_loss() -> LossFamily {
    LossFamily::Hinge
}
fn default_k() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_b() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_m() -> Vec<usize> {
    vec![256]
}
fn default_steps() -> usize {
    500
}
fn default_step_size() -> f64 {
    0.1
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_checks() -> Vec<CheckId> {
    CheckId::ALL
        .into_iter()
        .filter(|c| *c != CheckId::ErmGeneralization)
        .collect()
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_delta() -> f64 {
    0.05
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "must be nonempty"));
        }
        for (name, list) in [("k", &self.k), ("b", &self.b), ("m", &self.m)] {
            if list.is_empty() {
                return Err(invalid(name, "must be nonempty"));
            }
            if let Some(i) = list.iter().position(|&v| v == 0) {
                return Err(invalid(&format!("{name}[{i}]"), "must be at least 1"));
            }
        }
        if self.block == Some(0) {
            return Err(invalid("block", "must be at least 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if !(self.step_size > 0.0) || self.steps == 0 {
            return Err(invalid("steps", "steps and step_size must be positive"));
        }
        if matches!(self.function_class, Some(ClassSpec::Scenario(_))) && self.model.is_some() {
            return Err(invalid(
                "model",
                "must be absent when function_class is a scenario (the scenario supplies it)",
            ));
        }
        if let Some(ClassSpec::Scaled { alphas, .. }) = &self.function_class {
            if alphas.is_empty() || alphas.iter().any(|a| !(*a >= 0.0)) {
                return Err(invalid("function_class.scaled.alphas", "need nonnegative scales"));
            }
        }
        if let Some(s) = &self.suite {
            if s.pairs == 0 {
                return Err(invalid("suite.pairs", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn check_options(&self) -> CheckOptions {
        CheckOptions {
            losses: self.check_losses.clone().unwrap_or_else(|| vec![self.loss]),
            k_values: self.k.clone(),
            b_values: self.b.clone(),
            epsilon: self.epsilon,
            label_policy: self.label_policy,
            m_list: self.m.clone(),
            seeds: self.seeds.clone(),
            delta: self.delta,
        }
    }

    /// The model, from `model` or from a scenario function class.
    pub fn resolve_model(&self) -> Result<Option<Model>, CliError> {
        if let Some(ClassSpec::Scenario(s)) = &self.function_class {
            return Ok(Some(scenario_class(s.name, &s.params())?.0));
        }
        let model = match &self.model {
            None => return Ok(None),
            Some(ModelSpec::Bundled(name)) => bundled_model(name)
                .map_err(|e| invalid("model.bundled", e))?,
            Some(ModelSpec::Path(p)) => ModelFile::load(p)
                .and_then(|f| f.to_model())
                .map_err(|e| invalid("model.path", e))?,
            Some(ModelSpec::Inline(f)) => f.to_model().map_err(|e| invalid("model.inline", e))?,
            Some(ModelSpec::Scenario(s)) => scenario_class(s.name, &s.params())
                .map_err(|e| invalid("model.scenario", e))?
                .0,
        };
        Ok(Some(model))
    }

    pub fn require_model(&self) -> Result<Model, CliError> {
        self.resolve_model()?
            .ok_or_else(|| invalid("model", "this command needs a model"))
    }

    pub fn resolve_representation(&self, model: &Model) -> Result<Option<Repr>, CliError> {
        self.representation
            .as_ref()
            .map(|r| rep_from_spec(r, model, "representation"))
            .transpose()
    }

    pub fn resolve_class(&self, model: &Model) -> Result<Option<FunctionClass<f64>>, CliError> {
        let path = "function_class";
        let class = match &self.function_class {
            None => return Ok(None),
            Some(ClassSpec::Finite(reps)) => {
                if reps.is_empty() {
                    return Err(invalid(path, "finite class must be nonempty"));
                }
                FunctionClass::Finite(
                    reps.iter()
                        .enumerate()
                        .map(|(i, r)| rep_from_spec(r, model, &format!("{path}.finite[{i}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            Some(ClassSpec::Scaled { base, alphas }) => {
                let base = rep_from_spec(base, model, &format!("{path}.scaled.base"))?;
                let top = alphas.iter().copied().fold(0.0, f64::max);
                let bound = base.norm_bound() * top.max(f64::MIN_POSITIVE);
                FunctionClass::Finite(
                    alphas
                        .iter()
                        .map(|&a| base.scaled(a).with_norm_bound(bound))
                        .collect(),
                )
            }
            Some(ClassSpec::Table { d, norm_bound }) => FunctionClass::Table {
                d: *d,
                norm_bound: *norm_bound,
            },
            Some(ClassSpec::Linear { d, norm_bound }) => FunctionClass::Linear {
                d: *d,
                norm_bound: *norm_bound,
            },
            Some(ClassSpec::Scenario(s)) => scenario_class(s.name, &s.params())?.1,
        };
        Ok(Some(class))
    }
}

fn rep_from_spec(spec: &RepSpec, model: &Model, path: &str) -> Result<Repr, CliError> {
    let made = match spec {
        RepSpec::Identity { norm_bound } => Repr::identity(model.ambient_dim(), *norm_bound),
        RepSpec::Zero { d, norm_bound } => Repr::zero(model.num_points(), *d, *norm_bound),
        RepSpec::Path(p) => RepresentationFile::load(p).and_then(|f| f.to_representation(model)),
        RepSpec::Inline(f) => f.to_representation(model),
    };
    let f = made.map_err(|e| invalid(path, e))?;
    f.check_bound(model).map_err(|e| invalid(path, e))?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        assert_eq!(c.seeds, vec![0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn error_paths() {
        let e = ExperimentConfig::parse(r#"{"checks": ["decomposition-identity", "nope"]}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("checks[1]"), "{e}");
        let e = ExperimentConfig::parse(r#"{"seeds": []}"#).unwrap_err().to_string();
        assert!(e.contains("seeds"), "{e}");
        let e = ExperimentConfig::parse(r#"{"mdoel": {}}"#).unwrap_err().to_string();
        assert!(e.contains("mdoel"), "{e}");
    }
}
