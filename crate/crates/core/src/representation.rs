//! Representation functions f: X → R^d over a model's finite point set.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent_model::LatentClassModel;
use crate::linalg::{jacobi_eigen, spectral_norm_psd, JACOBI_MAX_DIM};
use crate::scalar::{norm, KahanSum, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum RepKind<T> {
    /// One output row per point index.
    Table(Vec<Vec<T>>),
    /// d × ambient_dim matrix.
    Linear(Vec<Vec<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representation<T> {
    d: usize,
    norm_bound: T,
    kind: RepKind<T>,
}

impl<T: Real> Representation<T> {
    pub fn table(rows: Vec<Vec<T>>, norm_bound: T) -> Result<Self> {
        let d = rows.first().map(|r| r.len()).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidRepresentation("table needs rows of positive length".into()));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidRepresentation("ragged table".into()));
        }
        Self::checked(d, norm_bound, RepKind::Table(rows))
    }

    pub fn linear(matrix: Vec<Vec<T>>, norm_bound: T) -> Result<Self> {
        let d = matrix.len();
        let a = matrix.first().map(|r| r.len()).unwrap_or(0);
        if d == 0 || a == 0 || matrix.iter().any(|r| r.len() != a) {
            return Err(Error::InvalidRepresentation("linear map needs a full d × n matrix".into()));
        }
        Self::checked(d, norm_bound, RepKind::Linear(matrix))
    }

    fn checked(d: usize, norm_bound: T, kind: RepKind<T>) -> Result<Self> {
        if !(norm_bound > T::zero()) || !norm_bound.is_finite() {
            return Err(Error::InvalidRepresentation("norm bound must be positive".into()));
        }
        let rows = match &kind {
            RepKind::Table(r) | RepKind::Linear(r) => r,
        };
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRepresentation("non-finite entry".into()));
        }
        Ok(Self {
            d,
            norm_bound,
            kind,
        })
    }

    /// The zero table over `num_points` points.
    pub fn zero(num_points: usize, d: usize, norm_bound: T) -> Result<Self> {
        Self::table(vec![vec![T::zero(); d]; num_points.max(1)], norm_bound)
    }

    pub fn identity(dim: usize, norm_bound: T) -> Result<Self> {
        let m = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self::linear(m, norm_bound)
    }

    pub fn output_dim(&self) -> usize {
        self.d
    }

    pub fn norm_bound(&self) -> T {
        self.norm_bound
    }

    pub fn kind(&self) -> &RepKind<T> {
        &self.kind
    }

    pub fn is_table(&self) -> bool {
        matches!(self.kind, RepKind::Table(_))
    }

    /// Raw parameters: table rows or matrix rows.
    pub fn params(&self) -> &[Vec<T>] {
        match &self.kind {
            RepKind::Table(r) | RepKind::Linear(r) => r,
        }
    }

    pub fn params_mut(&mut self) -> &mut [Vec<T>] {
        match &mut self.kind {
            RepKind::Table(r) | RepKind::Linear(r) => r,
        }
    }

    pub fn with_norm_bound(mut self, r: T) -> Self {
        self.norm_bound = r;
        self
    }

    /// α·f with the norm bound scaled alike.
    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.params_mut()
            .iter_mut()
            .flatten()
            .for_each(|v| *v *= alpha);
        out.norm_bound = self.norm_bound * alpha.abs().max(T::min_positive_value());
        out
    }

    fn check_model(&self, model: &LatentClassModel<T>) -> Result<()> {
        match &self.kind {
            RepKind::Table(rows) if rows.len() < model.num_points() => {
                Err(Error::InvalidRepresentation(format!(
                    "table has {} rows, model has {} points",
                    rows.len(),
                    model.num_points()
                )))
            }
            RepKind::Linear(m) if m[0].len() != model.ambient_dim() => {
                Err(Error::InvalidRepresentation(format!(
                    "matrix has {} columns, ambient dimension is {}",
                    m[0].len(),
                    model.ambient_dim()
                )))
            }
            _ => Ok(()),
        }
    }

    /// f(x) for point index `x`; no clipping.
    pub fn apply(&self, x: usize, model: &LatentClassModel<T>) -> Result<Vec<T>> {
        self.check_model(model)?;
        if x >= model.num_points() {
            return Err(Error::UnknownPoint(format!("#{x}")));
        }
        Ok(self.apply_unchecked(x, model))
    }

    pub fn apply_id(&self, id: &str, model: &LatentClassModel<T>) -> Result<Vec<T>> {
        self.apply(model.point_index(id)?, model)
    }

    fn apply_unchecked(&self, x: usize, model: &LatentClassModel<T>) -> Vec<T> {
        match &self.kind {
            RepKind::Table(rows) => rows[x].clone(),
            RepKind::Linear(m) => {
                let p = model.point(x);
                m.iter().map(|row| crate::scalar::dot(row, p)).collect()
            }
        }
    }

    /// f evaluated on every model point, by point index.
    pub fn embed(&self, model: &LatentClassModel<T>) -> Result<Vec<Vec<T>>> {
        self.check_model(model)?;
        Ok((0..model.num_points())
            .map(|x| self.apply_unchecked(x, model))
            .collect())
    }

    /// max over model points of ‖f(x)‖.
    pub fn max_norm(&self, model: &LatentClassModel<T>) -> Result<T> {
        Ok(self
            .embed(model)?
            .iter()
            .map(|v| norm(v))
            .fold(T::zero(), T::max))
    }

    /// Radial projection onto the ball of radius `r`. Linear maps are scaled
    /// by min(1, r / max point norm) and therefore need the model.
    pub fn project_norm_ball(&self, r: T, model: Option<&LatentClassModel<T>>) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::InvalidArgument("radius must be positive".into()));
        }
        let mut out = self.clone();
        out.norm_bound = r;
        match &mut out.kind {
            RepKind::Table(rows) => {
                for row in rows.iter_mut() {
                    let n = norm(row);
                    if n > r {
                        let s = r / n;
                        row.iter_mut().for_each(|v| *v *= s);
                    }
                }
            }
            RepKind::Linear(_) => {
                let model = model.ok_or_else(|| {
                    Error::InvalidArgument("projecting a linear map needs a model".into())
                })?;
                let mx = self.max_norm(model)?;
                if mx > r {
                    let s = r / mx;
                    out.params_mut()
                        .iter_mut()
                        .flatten()
                        .for_each(|v| *v *= s);
                }
            }
        }
        Ok(out)
    }

    /// Ensures ‖f(x)‖ ≤ R + 1e-9 on every model point.
    pub fn check_bound(&self, model: &LatentClassModel<T>) -> Result<()> {
        let mx = self.max_norm(model)?;
        if mx.as_f64() > self.norm_bound.as_f64() + 1e-9 {
            return Err(Error::InvalidRepresentation(format!(
                "max norm {mx} exceeds bound {}",
                self.norm_bound
            )));
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Representation<U> {
        let c = |r: &Vec<Vec<T>>| -> Vec<Vec<U>> {
            r.iter()
                .map(|row| row.iter().map(|v| U::lit(v.as_f64())).collect())
                .collect()
        };
        Representation {
            d: self.d,
            norm_bound: U::lit(self.norm_bound.as_f64()),
            kind: match &self.kind {
                RepKind::Table(r) => RepKind::Table(c(r)),
                RepKind::Linear(r) => RepKind::Linear(c(r)),
            },
        }
    }
}

/// Mean, covariance and norm statistics of f(x), x ~ D_c.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMoments<T> {
    pub class: usize,
    pub mean: Vec<T>,
    pub covariance: Vec<Vec<T>>,
    pub mean_norm: T,
    pub spectral_norm: T,
}

impl<T: Real> ClassMoments<T> {
    /// Eigenpairs of the covariance (Jacobi; all dimensions).
    pub fn eigen(&self) -> (Vec<T>, Vec<Vec<T>>) {
        jacobi_eigen(&self.covariance)
    }
}

/// Exact moments of class `c` from a precomputed embedding.
pub fn moments_from_embedding<T: Real>(
    emb: &[Vec<T>],
    model: &LatentClassModel<T>,
    c: usize,
) -> ClassMoments<T> {
    let d = emb.first().map(|v| v.len()).unwrap_or(0);
    let dist = model.class(c);
    let mut mean = vec![KahanSum::new(); d];
    let mut mn = KahanSum::new();
    for &(x, p) in dist.entries() {
        for (m, v) in mean.iter_mut().zip(&emb[x]) {
            m.add(p * *v);
        }
        mn.add(p * norm(&emb[x]));
    }
    let mean: Vec<T> = mean.iter().map(|s| s.value()).collect();
    let mut cov = vec![vec![T::zero(); d]; d];
    for i in 0..d {
        for j in i..d {
            let s = crate::scalar::ksum(
                dist.entries()
                    .iter()
                    .map(|&(x, p)| p * (emb[x][i] - mean[i]) * (emb[x][j] - mean[j])),
            );
            cov[i][j] = s;
            cov[j][i] = s;
        }
    }
    let spectral_norm = if d <= JACOBI_MAX_DIM {
        jacobi_eigen(&cov).0.into_iter().fold(T::zero(), T::max)
    } else {
        spectral_norm_psd(&cov)
    };
    ClassMoments {
        class: c,
        mean,
        covariance: cov,
        mean_norm: mn.value(),
        spectral_norm,
    }
}

pub fn class_moments<T: Real>(
    f: &Representation<T>,
    model: &LatentClassModel<T>,
    c: usize,
) -> Result<ClassMoments<T>> {
    if c >= model.num_classes() {
        return Err(Error::UnknownClass(format!("#{c}")));
    }
    Ok(moments_from_embedding(&f.embed(model)?, model, c))
}

/// On-disk representation layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationFile {
    pub kind: String,
    pub d: usize,
    pub norm_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<IndexMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl RepresentationFile {
    pub fn to_representation<T: Real>(
        &self,
        model: &LatentClassModel<T>,
    ) -> Result<Representation<T>> {
        let cv = |v: &Vec<f64>| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let f = match (self.kind.as_str(), &self.table, &self.matrix) {
            ("table", Some(t), None) => {
                let mut rows = vec![None; model.num_points()];
                for (id, v) in t {
                    rows[model.point_index(id)?] = Some(cv(v));
                }
                let rows = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, r)| {
                        r.ok_or_else(|| {
                            Error::InvalidRepresentation(format!(
                                "table misses point `{}`",
                                model.point_ids()[i]
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Representation::table(rows, T::lit(self.norm_bound))?
            }
            ("linear", None, Some(m)) => {
                Representation::linear(m.iter().map(cv).collect(), T::lit(self.norm_bound))?
            }
            _ => {
                return Err(Error::InvalidRepresentation(
                    "kind must be `table` with a table or `linear` with a matrix".into(),
                ))
            }
        };
        if f.output_dim() != self.d {
            return Err(Error::InvalidRepresentation(format!(
                "declared d = {} but rows have length {}",
                self.d,
                f.output_dim()
            )));
        }
        Ok(f)
    }

    pub fn from_representation<T: Real>(
        f: &Representation<T>,
        model: &LatentClassModel<T>,
    ) -> Self {
        let cv = |v: &Vec<T>| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
        match f.kind() {
            RepKind::Table(rows) => Self {
                kind: "table".into(),
                d: f.output_dim(),
                norm_bound: f.norm_bound().as_f64(),
                table: Some(
                    model
                        .point_ids()
                        .iter()
                        .zip(rows)
                        .map(|(id, r)| (id.clone(), cv(r)))
                        .collect(),
                ),
                matrix: None,
            },
            RepKind::Linear(m) => Self {
                kind: "linear".into(),
                d: f.output_dim(),
                norm_bound: f.norm_bound().as_f64(),
                table: None,
                matrix: Some(m.iter().map(cv).collect()),
            },
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("representation serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent_model::FiniteDistribution;

    fn model() -> LatentClassModel<f64> {
        LatentClassModel::new(
            2,
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![1.0, 1.0]],
            vec!["u".into(), "s".into(), "pm".into()],
            vec![
                FiniteDistribution::uniform(&[0, 1]).unwrap(),
                FiniteDistribution::point_mass(3),
                FiniteDistribution::uniform(&[0, 2]).unwrap(),
            ],
            FiniteDistribution::uniform(&[0, 1, 2]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn apply_examples() {
        let m = model();
        let z = Representation::zero(4, 3, 1.0).unwrap();
        assert_eq!(z.apply(3, &m).unwrap(), vec![0.0; 3]);
        let id = Representation::identity(2, 2.0).unwrap();
        assert_eq!(id.apply_id("a", &m).unwrap(), vec![1.0, 0.0]);
        let diag = Representation::linear(vec![vec![2.0, 0.0], vec![0.0, 3.0]], 5.0).unwrap();
        assert_eq!(diag.apply(3, &m).unwrap(), vec![2.0, 3.0]);
        assert!(matches!(id.apply_id("zz", &m), Err(Error::UnknownPoint(_))));
    }

    #[test]
    fn moments_examples() {
        let m = model();
        let id = Representation::identity(2, 2.0).unwrap();
        let mo = class_moments(&id, &m, 0).unwrap();
        assert_eq!(mo.mean, vec![0.5, 0.5]);
        let expect = [[0.25, -0.25], [-0.25, 0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((mo.covariance[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert!((mo.spectral_norm - 0.5).abs() < 1e-12);
        let single = class_moments(&id, &m, 1).unwrap();
        assert_eq!(single.spectral_norm, 0.0);
        assert!((class_moments(&id, &m, 2).unwrap().mean_norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let m = model();
        let t = Representation::<f64>::table(vec![vec![0.3, 0.4], vec![3.0, 4.0], vec![0.0; 2], vec![0.0; 2]], 10.0)
            .unwrap();
        let p = t.project_norm_ball(1.0, None).unwrap();
        assert_eq!(p.params()[0], vec![0.3, 0.4]);
        assert!((p.params()[1][0] - 0.6).abs() < 1e-15 && (p.params()[1][1] - 0.8).abs() < 1e-15);
        assert_eq!(p.params()[2], vec![0.0; 2]);
        p.check_bound(&m).unwrap();

        let lin = Representation::linear(vec![vec![3.0, 0.0], vec![0.0, 3.0]], 10.0).unwrap();
        assert!(lin.project_norm_ball(1.0, None).is_err());
        let q = lin.project_norm_ball(1.0, Some(&m)).unwrap();
        assert!((q.max_norm(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let m = model();
        let t = Representation::table(vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]], 5.0).unwrap();
        let file = RepresentationFile::from_representation(&t, &m);
        let back = serde_json::from_str::<RepresentationFile>(&file.to_json())
            .unwrap()
            .to_representation(&m)
            .unwrap();
        assert_eq!(t, back);
    }
}
