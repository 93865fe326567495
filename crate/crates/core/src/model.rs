//! Versioned JSON persistence for trained models.
//!
//! The layout is documented in `docs/model-format.md`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{NbcsError, Result};
use crate::learner::{InputTransform, Model, Strategy};
use crate::system::{NestedSystem, SystemRecord, WeightVector};

pub const FORMAT_NAME: &str = "nbcs-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kind: Strategy,
    pub system: SystemRecord,
    pub weights: Vec<WeightVector>,
    pub transform: InputTransform,
    pub classes: Vec<i64>,
    pub stages: usize,
    pub data_splits: usize,
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Self {
        Self {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            kind: model.strategy,
            system: model.system.to_record(),
            weights: model.heads.clone(),
            transform: model.transform.clone(),
            classes: model.classes.clone(),
            stages: model.stages,
            data_splits: model.data_splits,
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format != FORMAT_NAME {
            return Err(NbcsError::ModelFormat(format!("unknown format `{}`", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(NbcsError::ModelFormat(format!(
                "unsupported version {} (this build reads {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.classes.is_empty() {
            return Err(NbcsError::ModelFormat("empty class table".into()));
        }
        let expected_heads = match self.classes.len() {
            1 => 0,
            2 => 1,
            k => k,
        };
        if self.weights.len() != expected_heads {
            return Err(NbcsError::ModelFormat(format!(
                "{} classes need {expected_heads} weight vectors, found {}",
                self.classes.len(),
                self.weights.len()
            )));
        }
        let system = NestedSystem::from_record(&self.system)?;
        let t = &self.transform;
        let d = system.dim();
        if t.mean.len() != d || t.inv_std.len() != d || t.center.len() != d || t.target.len() != d {
            return Err(NbcsError::ModelFormat(format!("transform does not match dimension {d}")));
        }
        for w in &self.weights {
            if w.len() != system.vertex_count() || w.excluded_flags().len() != w.len() {
                return Err(NbcsError::ModelFormat(format!(
                    "weight vector of length {} for {} vertices",
                    w.len(),
                    system.vertex_count()
                )));
            }
        }
        Ok(Model {
            system,
            heads: self.weights,
            transform: self.transform,
            classes: self.classes,
            strategy: self.kind,
            stages: self.stages,
            data_splits: self.data_splits,
            history: Vec::new(),
        })
    }
}

pub fn save_model<W: Write>(model: &Model, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &ModelFile::from_model(model))
        .map_err(|e| NbcsError::ModelFormat(e.to_string()))
}

pub fn load_model<R: Read>(input: R) -> Result<Model> {
    let file: ModelFile = serde_json::from_reader(input).map_err(|e| NbcsError::ModelFormat(e.to_string()))?;
    file.into_model()
}

pub fn model_to_string(model: &Model) -> String {
    let mut buf = Vec::new();
    save_model(model, &mut buf).expect("serializing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn model_from_str(text: &str) -> Result<Model> {
    load_model(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{fit_adaptive_with, fit_uniform, generate_polytope_dataset, FitParams};

    #[test]
    fn round_trip_preserves_predictions_bitwise() {
        let data = generate_polytope_dataset(400, 2, 5, 0.02, 3).unwrap().data;
        let params = FitParams { q: 3, c: 16.0, ..FitParams::default() };
        for model in [fit_uniform(&data, 2, 8.0).unwrap(), fit_adaptive_with(&data, &params).unwrap()] {
            let back = model_from_str(&model_to_string(&model)).unwrap();
            assert_eq!(back.heads, model.heads);
            for x in &data.points {
                let a = model.decision_values(x);
                let b = back.decision_values(x);
                assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn rejects_wrong_version_and_format() {
        let data = generate_polytope_dataset(100, 2, 3, 0.0, 1).unwrap().data;
        let model = fit_uniform(&data, 1, 1.0).unwrap();
        let mut file = ModelFile::from_model(&model);
        file.version = 2;
        assert!(matches!(file.clone().into_model(), Err(NbcsError::ModelFormat(_))));
        file.version = 1;
        file.format = "other".into();
        assert!(file.into_model().is_err());
        assert!(model_from_str("{\"format\": 1}").is_err());
    }

    #[test]
    fn rejects_inconsistent_weights() {
        let data = generate_polytope_dataset(100, 2, 3, 0.0, 1).unwrap().data;
        let model = fit_uniform(&data, 1, 1.0).unwrap();
        let mut file = ModelFile::from_model(&model);
        file.weights[0].push(1.0);
        assert!(file.into_model().is_err());
    }
}
