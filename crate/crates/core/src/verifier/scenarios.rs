//! Counterexample constructions where contrastive ERM picks a worse
//! representation, each with a closed-form prediction independent of the
//! enumeration engine.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_model::FiniteDistribution;
use crate::losses::{ExactLosses, LossKind};
use crate::supervised::{avg_sup_loss, LineSearch};
use crate::training::{erm_finite_exact, FunctionClass};
use crate::{Model, Repr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Counterexample {
    /// Two classes, one point each; f₁ separates along one axis but carries
    /// a large orthogonal component, so the mean classifier fails.
    MeanIsBad,
    /// Two classes, two points each; f₁ has zero mean-classifier loss but
    /// high spread inside each class.
    IntraclassVariance,
    /// n classes on two points each, f₁ puts class i on the ray of e_i.
    ClassCollision,
    /// n clusters of n classes; f₁ only separates clusters.
    ClusterCollision,
}

impl Counterexample {
    pub const ALL: [Counterexample; 4] = [
        Counterexample::MeanIsBad,
        Counterexample::IntraclassVariance,
        Counterexample::ClassCollision,
        Counterexample::ClusterCollision,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Counterexample::MeanIsBad => "mean-is-bad",
            Counterexample::IntraclassVariance => "intraclass-variance",
            Counterexample::ClassCollision => "class-collision",
            Counterexample::ClusterCollision => "cluster-collision",
        }
    }
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Counterexample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Counterexample::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown counterexample `{s}`")))
    }
}

impl From<Counterexample> for String {
    fn from(c: Counterexample) -> String {
        c.as_str().to_string()
    }
}

impl TryFrom<String> for Counterexample {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    /// Classes (or clusters, and classes per cluster). Ignored by the
    /// two-class scenarios.
    #[serde(default = "default_n")]
    pub n: usize,
    pub r: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Also run the best-linear-classifier optimizer.
    #[serde(default = "default_true")]
    pub best_classifier: bool,
}

fn default_n() -> usize {
    8
}
fn default_k() -> usize {
    1
}
fn default_true() -> bool {
    true
}

impl ScenarioParams {
    pub fn new(n: usize, r: f64, k: usize) -> Self {
        Self {
            n,
            r,
            k,
            best_classifier: true,
        }
    }

    fn validate(&self, which: Counterexample) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidArgument(format!("r must be positive, got {}", self.r)));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        match which {
            Counterexample::MeanIsBad | Counterexample::IntraclassVariance if self.k != 1 => Err(
                Error::InvalidArgument(format!("{which} is defined for k = 1 only")),
            ),
            Counterexample::ClassCollision | Counterexample::ClusterCollision if self.n < 2 => Err(
                Error::InvalidArgument(format!("n must be at least 2, got {}", self.n)),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRow {
    pub name: String,
    pub l_un: f64,
    pub l_un_closed_form: f64,
    /// Average binary loss of the best linear classifier (optimizer value).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_sup: Option<f64>,
    pub l_sup_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Counterexample,
    pub params: ScenarioParams,
    pub members: Vec<MemberRow>,
    pub chosen: String,
    pub predicted: String,
    pub matches_prediction: bool,
    pub verdict: String,
}

impl ScenarioReport {
    /// Fixed-width summary table.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{} (n = {}, r = {}, k = {})\n{:<6}{:>16}{:>16}{:>16}{:>16}\n",
            self.scenario, self.params.n, self.params.r, self.params.k, "f", "L_un", "closed form", "L_sup", "L_sup mean"
        );
        for m in &self.members {
            let sup = m.l_sup.map_or("-".to_string(), |v| format!("{v:.6}"));
            out.push_str(&format!(
                "{:<6}{:>16.6}{:>16.6}{:>16}{:>16.6}\n",
                m.name, m.l_un, m.l_un_closed_form, sup, m.l_sup_mean
            ));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn unit(dim: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = scale;
    v
}

/// Model plus f₁ for a scenario; f₀ is the zero map.
fn build(which: Counterexample, p: &ScenarioParams) -> Result<(Model, Repr)> {
    p.validate(which)?;
    let r = p.r;
    match which {
        Counterexample::MeanIsBad => {
            let model = Model::new(
                2,
                vec!["x1".into(), "x2".into()],
                vec![vec![1.0, 1.0], vec![-1.0, 2.0]],
                vec!["c1".into(), "c2".into()],
                vec![FiniteDistribution::point_mass(0), FiniteDistribution::point_mass(1)],
                FiniteDistribution::uniform(&[0, 1])?,
            )?;
            let f1 = Repr::table(vec![vec![1.0, r], vec![-1.0, 2.0 * r]], (1.0 + 4.0 * r * r).sqrt())?;
            Ok((model, f1))
        }
        Counterexample::IntraclassVariance => {
            let pts = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
            let model = Model::new(
                2,
                vec!["x11".into(), "x12".into(), "x21".into(), "x22".into()],
                pts.clone(),
                vec!["c1".into(), "c2".into()],
                vec![FiniteDistribution::uniform(&[0, 1])?, FiniteDistribution::uniform(&[2, 3])?],
                FiniteDistribution::uniform(&[0, 1])?,
            )?;
            let rows = pts.iter().map(|v| vec![v[0], r * v[1]]).collect();
            Ok((model, Repr::table(rows, (1.0 + r * r).sqrt())?))
        }
        Counterexample::ClassCollision | Counterexample::ClusterCollision => {
            let n = p.n;
            let per = if which == Counterexample::ClassCollision { 1 } else { n };
            let classes = n * per;
            let dim = classes;
            let mut point_ids = Vec::with_capacity(2 * classes);
            let mut points = Vec::with_capacity(2 * classes);
            let mut rows = Vec::with_capacity(2 * classes);
            let mut dists = Vec::with_capacity(classes);
            for i in 0..n {
                for j in 0..per {
                    let c = i * per + j;
                    for (h, s) in [(1, 1.5), (2, 0.5)] {
                        point_ids.push(if per == 1 {
                            format!("x{i}_{h}")
                        } else {
                            format!("x{i}_{j}_{h}")
                        });
                        points.push(unit(dim, c, s));
                        rows.push(unit(n, i, s * r));
                    }
                    dists.push(FiniteDistribution::uniform(&[2 * c, 2 * c + 1])?);
                }
            }
            let class_ids = if per == 1 {
                ids("c", n)
            } else {
                (0..n)
                    .flat_map(|i| (0..per).map(move |j| format!("c{i}_{j}")))
                    .collect()
            };
            let all: Vec<usize> = (0..classes).collect();
            let model = Model::new(
                dim,
                point_ids,
                points,
                class_ids,
                dists,
                FiniteDistribution::uniform(&all)?,
            )?;
            Ok((model, Repr::table(rows, 1.5 * r)?))
        }
    }
}

/// The scenario's model and F = {f₀ = 0, f₁}.
pub fn scenario_class(
    which: Counterexample,
    params: &ScenarioParams,
) -> Result<(Model, FunctionClass<f64>)> {
    let (model, f1) = build(which, params)?;
    let f0 = Repr::zero(model.num_points(), f1.output_dim(), f1.norm_bound())?;
    Ok((model, FunctionClass::Finite(vec![f0, f1])))
}

fn hinge(v: f64) -> f64 {
    (1.0 + v).max(0.0)
}

/// Hinge L_un(f₁) by hand: a negative lands in the anchor's cluster with
/// probability q = 1/n and then sits at 3r/2 or r/2 on the same axis; all
/// other negatives are orthogonal to the anchor.
fn collision_closed_form(n: usize, r: f64, k: usize) -> f64 {
    let q = 1.0 / n as f64;
    let at_most_zero = (1.0 - q).powi(k as i32);
    let at_most_low = (1.0 - q / 2.0).powi(k as i32);
    let (hi, lo) = (1.5 * r, 0.5 * r);
    let worst = [(0.0, at_most_zero), (lo, at_most_low - at_most_zero), (hi, 1.0 - at_most_low)];
    let mut total = 0.0;
    for x in [hi, lo] {
        for xp in [hi, lo] {
            for (y, p) in worst {
                total += 0.25 * p * hinge(x * (y - xp));
            }
        }
    }
    total
}

/// Closed-form hinge L_un(f₁) with k negatives (k = 1 for the two-class
/// scenarios). L_un(f₀) = 1 always.
pub fn closed_form_unsup(which: Counterexample, params: &ScenarioParams) -> Result<f64> {
    params.validate(which)?;
    let r2 = params.r * params.r;
    Ok(match which {
        // same class: loss 1; x₁ against x₂: (r² − 1)₊; x₂ against x₁: 0
        Counterexample::MeanIsBad => 0.5 + 0.25 * (r2 - 1.0).max(0.0),
        Counterexample::IntraclassVariance => {
            let same = 0.5 + 0.25 * (1.0 - 2.0 * r2).max(0.0) + 0.25 * (1.0 + 2.0 * r2);
            let other = 0.25 * (2.0 * r2 - 1.0).max(0.0);
            0.5 * same + 0.5 * other
        }
        Counterexample::ClassCollision | Counterexample::ClusterCollision => {
            collision_closed_form(params.n, params.r, params.k)
        }
    })
}

/// Exact ERM over {f₀, f₁} on population hinge losses, with the supervised
/// picture alongside.
pub fn run_counterexample(which: Counterexample, params: &ScenarioParams) -> Result<ScenarioReport> {
    let (model, class) = scenario_class(which, params)?;
    let kind = LossKind::hinge();
    let fit = erm_finite_exact(&class, &model, params.k, kind)?;
    let chosen = fit.selected_index.expect("finite class");
    let fs = match &class {
        FunctionClass::Finite(fs) => fs,
        _ => unreachable!("scenario classes are finite"),
    };
    let closed = [1.0, closed_form_unsup(which, params)?];
    let rows: Vec<MemberRow> = fs
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let l_sup = if params.best_classifier {
                Some(avg_sup_loss(f, &model, 2, kind, false, LineSearch::default())?)
            } else {
                None
            };
            Ok(MemberRow {
                name: format!("f{i}"),
                l_un: ExactLosses::new(f, &model, kind)?.unsup(params.k)?,
                l_un_closed_form: closed[i],
                l_sup,
                l_sup_mean: avg_sup_loss(f, &model, 2, kind, true, LineSearch::default())?,
            })
        })
        .collect::<Result<_>>()?;
    // ties resolve to f₀, as in the ERM
    let predicted = if closed[1] < closed[0] { 1 } else { 0 };
    let matches = chosen == predicted;
    let verdict = if matches {
        format!("picked f{chosen} as predicted")
    } else {
        format!("picked f{chosen}, predicted f{predicted}")
    };
    Ok(ScenarioReport {
        scenario: which,
        params: *params,
        members: rows,
        chosen: format!("f{chosen}"),
        predicted: format!("f{predicted}"),
        matches_prediction: matches,
        verdict,
    })
}

pub const BUNDLED_MODELS: [&str; 6] = [
    "two-point",
    "signed-singletons",
    "class-collision",
    "cluster-collision",
    "mean-is-bad",
    "intraclass-variance",
];

/// Built-in models. The scenario models use n = 8 and unit r (point
/// coordinates do not depend on r).
pub fn bundled_model(name: &str) -> Result<Model> {
    match name {
        "two-point" => Ok(Model::new(
            2,
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec!["c1".into(), "c2".into()],
            vec![FiniteDistribution::uniform(&[0, 1])?, FiniteDistribution::uniform(&[2, 3])?],
            FiniteDistribution::uniform(&[0, 1])?,
        )?),
        "signed-singletons" => Ok(Model::new(
            1,
            vec!["plus".into(), "minus".into()],
            vec![vec![1.0], vec![-1.0]],
            vec!["c1".into(), "c2".into()],
            vec![FiniteDistribution::point_mass(0), FiniteDistribution::point_mass(1)],
            FiniteDistribution::uniform(&[0, 1])?,
        )?),
        other => {
            let which: Counterexample = other
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("unknown bundled model `{other}`")))?;
            Ok(build(which, &ScenarioParams::new(8, 1.0, 1))?.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_closed_form_values() {
        assert!((collision_closed_form(8, 10.0, 1) - 103.0 / 32.0).abs() < 1e-12);
        assert!((collision_closed_form(8, 2.0, 1) - 0.21875).abs() < 1e-12);
    }

    #[test]
    fn class_collision_picks() {
        let rep = run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(8, 10.0, 1)).unwrap();
        assert_eq!(rep.chosen, "f0");
        assert!(rep.matches_prediction);
        assert!((rep.members[1].l_un - 103.0 / 32.0).abs() < 1e-9);
        let rep = run_counterexample(Counterexample::ClassCollision, &ScenarioParams::new(8, 2.0, 1)).unwrap();
        assert_eq!(rep.chosen, "f1");
    }

    #[test]
    fn rejects_bad_params() {
        let bad = ScenarioParams::new(8, 0.0, 1);
        assert!(run_counterexample(Counterexample::MeanIsBad, &bad).is_err());
        let bad = ScenarioParams::new(1, 2.0, 1);
        assert!(run_counterexample(Counterexample::ClassCollision, &bad).is_err());
        assert!("no-such-scenario".parse::<Counterexample>().is_err());
    }
}
