//! Trained-model container and its JSON file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{LogitModel, NaiveBayesModel, SvmOvoModel};
use crate::domain::{FeatureSchema, IriBinning};
use crate::error::{Error, Result};
use crate::preprocess::{standardize, Dataset, Standardization, StatsSource};

pub const MODEL_FORMAT: &str = "pave-iri-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learner {
    NaiveBayes(NaiveBayesModel),
    SvmOvo(SvmOvoModel),
    Logit(LogitModel),
}

impl Learner {
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        match self {
            Learner::NaiveBayes(m) => m.predict(x).map(|(k, _)| k),
            Learner::SvmOvo(m) => m.predict(x),
            Learner::Logit(m) => m.predict(x).map(|(k, _)| k),
        }
    }
}

/// A learner together with everything needed to apply it to a new corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    /// Short display name, e.g. `svm_rbf`.
    pub tag: String,
    pub schema_fingerprint: String,
    pub binning: IriBinning,
    /// Training-split statistics; test rows are transformed with these.
    pub standardization: Option<Standardization>,
    pub learner: Learner,
}

impl TrainedModel {
    pub fn new(tag: impl Into<String>, train: &Dataset, learner: Learner) -> Self {
        Self {
            tag: tag.into(),
            schema_fingerprint: train.schema.fingerprint(),
            binning: train.binning,
            standardization: train.standardization.clone(),
            learner,
        }
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        let found = schema.fingerprint();
        if found != self.schema_fingerprint {
            return Err(Error::Schema(format!(
                "model was trained on schema {} but the data has schema {found}",
                self.schema_fingerprint
            )));
        }
        Ok(())
    }

    /// Bring `data` into the model's feature space: same schema, same
    /// standardization. Raw data is transformed; data standardized with
    /// different statistics is rejected.
    pub fn prepare(&self, data: &Dataset) -> Result<Dataset> {
        self.check_schema(&data.schema)?;
        if data.binning != self.binning {
            return Err(Error::Schema(format!(
                "model binning {:?} differs from data binning {:?}",
                self.binning, data.binning
            )));
        }
        match (&data.standardization, &self.standardization) {
            (None, None) => Ok(data.clone()),
            (None, Some(stats)) => standardize(data, StatsSource::Reuse(Some(stats))),
            (Some(a), Some(b)) if a == b => Ok(data.clone()),
            _ => Err(Error::State(
                "data was standardized with statistics other than the model's".into(),
            )),
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        self.learner.predict_class(x)
    }

    /// Representative IRI of the predicted class.
    pub fn predict_iri(&self, x: &[f64]) -> Result<f64> {
        self.binning.representative_of(self.predict_class(x)?)
    }
}

/// What `train` writes: the model plus the held-out rows it must be scored on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub config_digest: String,
    /// Row ids (positions in the encoded prepared corpus) of the test split.
    pub test_row_ids: Vec<usize>,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, test_row_ids: Vec<usize>, config_digest: impl Into<String>) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            config_digest: config_digest.into(),
            test_row_ids,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                file.format
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
