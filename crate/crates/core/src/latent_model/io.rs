use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{FiniteDistribution, LatentClassModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// On-disk model layout. Map order is preserved and defines index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub ambient_dim: usize,
    pub points: IndexMap<String, Vec<f64>>,
    pub classes: IndexMap<String, IndexMap<String, f64>>,
    pub rho: IndexMap<String, f64>,
}

impl ModelFile {
    pub fn to_model<T: Real>(&self) -> Result<LatentClassModel<T>> {
        let point_ids: Vec<String> = self.points.keys().cloned().collect();
        let points = self
            .points
            .values()
            .map(|v| v.iter().map(|&x| T::lit(x)).collect())
            .collect();
        let class_ids: Vec<String> = self.classes.keys().cloned().collect();
        let mut classes = Vec::with_capacity(self.classes.len());
        for (cid, dist) in &self.classes {
            let mut entries = Vec::with_capacity(dist.len());
            for (pid, &p) in dist {
                let i = self
                    .points
                    .get_index_of(pid)
                    .ok_or_else(|| Error::UnknownPoint(pid.clone()))?;
                entries.push((i, T::lit(p)));
            }
            classes.push(FiniteDistribution::new(entries).map_err(|e| {
                Error::InvalidModel(format!("class `{cid}`: {e}"))
            })?);
        }
        let mut rho = Vec::with_capacity(self.rho.len());
        for (cid, &p) in &self.rho {
            let c = self
                .classes
                .get_index_of(cid)
                .ok_or_else(|| Error::UnknownClass(cid.clone()))?;
            rho.push((c, T::lit(p)));
        }
        let rho = FiniteDistribution::new(rho)
            .map_err(|e| Error::InvalidModel(format!("rho: {e}")))?;
        LatentClassModel::new(self.ambient_dim, point_ids, points, class_ids, classes, rho)
    }

    pub fn from_model<T: Real>(m: &LatentClassModel<T>) -> Self {
        let pid = m.point_ids();
        let cid = m.class_ids();
        Self {
            ambient_dim: m.ambient_dim(),
            points: pid
                .iter()
                .zip(m.points())
                .map(|(id, v)| (id.clone(), v.iter().map(|x| x.as_f64()).collect()))
                .collect(),
            classes: cid
                .iter()
                .zip(m.classes())
                .map(|(id, d)| {
                    let inner = d
                        .entries()
                        .iter()
                        .map(|&(x, p)| (pid[x].clone(), p.as_f64()))
                        .collect();
                    (id.clone(), inner)
                })
                .collect(),
            rho: m
                .rho()
                .entries()
                .iter()
                .map(|&(c, p)| (cid[c].clone(), p.as_f64()))
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

impl<T: Real> LatentClassModel<T> {
    pub fn from_json(s: &str) -> Result<Self> {
        ModelFile::from_json(s)?.to_model()
    }

    pub fn to_json(&self) -> String {
        ModelFile::from_model(self).to_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_POINT: &str = r#"{
        "ambient_dim": 2,
        "points": {"a": [1, 0], "b": [0, 1], "c": [-1, 0], "d": [0, -1]},
        "classes": {"pos": {"a": 0.5, "b": 0.5}, "neg": {"c": 0.5, "d": 0.5}},
        "rho": {"pos": 0.5, "neg": 0.5}
    }"#;

    #[test]
    fn round_trips() {
        let m = LatentClassModel::<f64>::from_json(TWO_POINT).unwrap();
        assert_eq!(m.num_points(), 4);
        assert_eq!(m.class_index("neg").unwrap(), 1);
        let back = LatentClassModel::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_bad_files() {
        let bad_mass = TWO_POINT.replace("\"b\": 0.5", "\"b\": 0.6");
        assert!(LatentClassModel::<f64>::from_json(&bad_mass).is_err());
        let missing = TWO_POINT.replace("\"d\": 0.5", "\"e\": 0.5");
        assert!(matches!(
            LatentClassModel::<f64>::from_json(&missing),
            Err(Error::UnknownPoint(_))
        ));
        let partial_rho = TWO_POINT.replace("\"rho\": {\"pos\": 0.5, \"neg\": 0.5}", "\"rho\": {\"pos\": 1.0}");
        assert!(LatentClassModel::<f64>::from_json(&partial_rho).is_err());
    }
}
