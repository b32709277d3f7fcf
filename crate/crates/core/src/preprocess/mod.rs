//! Corpus → model-ready dataset: aggregation, outlier removal, encoding,
//! standardization and the seeded train/test split.

mod aggregate;
mod split;
mod standardize;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{FeatureSchema, FeatureVector, IriBinning};
use crate::error::{Error, Result};
use crate::ingest::Corpus;

pub use aggregate::aggregate;
pub use split::{shuffled_indices, split, SplitSpec};
pub use standardize::{standardize, Standardization, StatsSource};

/// Default aggregation window, miles.
pub const DEFAULT_SEGMENT_LENGTH: f64 = 0.1;
/// Default outlier threshold, inches/mile.
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 300.0;

/// One pipeline step as recorded in the provenance log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStep {
    pub step: String,
    pub params: Vec<(String, String)>,
    pub records_in: usize,
    pub records_out: usize,
    pub outliers_removed: Option<usize>,
    pub notes: Vec<String>,
}

impl ProvenanceStep {
    pub fn new(step: &str, records_in: usize, records_out: usize) -> Self {
        Self {
            step: step.into(),
            params: Vec::new(),
            records_in,
            records_out,
            outliers_removed: None,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.into(), value.to_string()));
        self
    }
}

impl fmt::Display for ProvenanceStep {
    /// `step: <name>, <param>: <value>, ..., records_in: n, records_out: m[, outliers_removed: k]`
    /// followed by one indented `note:` line per note.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step: {}", self.step)?;
        for (k, v) in &self.params {
            write!(f, ", {k}: {v}")?;
        }
        write!(f, ", records_in: {}, records_out: {}", self.records_in, self.records_out)?;
        if let Some(n) = self.outliers_removed {
            write!(f, ", outliers_removed: {n}")?;
        }
        for note in &self.notes {
            write!(f, "\n  note: {note}")?;
        }
        Ok(())
    }
}

/// Render a provenance log, one step per line.
pub fn provenance_log(steps: &[ProvenanceStep]) -> String {
    let mut out = String::new();
    for s in steps {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

/// Drop every record with IRI strictly above `threshold`.
pub fn remove_outliers(corpus: &Corpus, threshold: f64) -> Result<Corpus> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Domain(format!("outlier threshold must be positive, got {threshold}")));
    }
    let kept: Vec<_> = corpus.records.iter().filter(|r| r.iri <= threshold).cloned().collect();
    let removed = corpus.len() - kept.len();
    let mut out = corpus.with_records(kept);
    let mut step = ProvenanceStep::new("remove_outliers", corpus.len(), out.len()).param("threshold", threshold);
    step.outliers_removed = Some(removed);
    out.provenance.push(step);
    Ok(out)
}

/// Feature matrix with labels, binning and standardization state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub vectors: Vec<FeatureVector>,
    /// Position of each vector's record in the encoded corpus.
    pub row_ids: Vec<usize>,
    pub binning: IriBinning,
    /// Statistics already applied to `vectors`, if any.
    pub standardization: Option<Standardization>,
    pub provenance: Vec<ProvenanceStep>,
}

/// One feature vector per record, in corpus order.
pub fn encode(corpus: &Corpus, schema: &FeatureSchema, binning: IriBinning) -> Result<Dataset> {
    let vectors = corpus
        .records
        .iter()
        .map(|r| {
            if r.iri < binning.origin() {
                return Err(Error::Domain(format!(
                    "record {}@{} has IRI {} below the binning origin {}",
                    r.route_id,
                    r.start_milepost,
                    r.iri,
                    binning.origin()
                )));
            }
            schema.encode_record(r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut provenance = corpus.provenance.clone();
    provenance.push(
        ProvenanceStep::new("encode", corpus.len(), vectors.len())
            .param("dimension", schema.dimension())
            .param("schema", schema.fingerprint()),
    );
    Ok(Dataset {
        schema: schema.clone(),
        row_ids: (0..vectors.len()).collect(),
        vectors,
        binning,
        standardization: None,
        provenance,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.schema.dimension()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    /// Class index of every label under the dataset's binning.
    pub fn classes(&self) -> Result<Vec<usize>> {
        self.vectors.iter().map(|v| self.binning.class_of(v.label_iri)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.vectors.iter().map(|v| v.values.as_slice())
    }

    /// Rows at the given positions (not row ids), in the given order.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            vectors: positions.iter().map(|&i| self.vectors[i].clone()).collect(),
            row_ids: positions.iter().map(|&i| self.row_ids[i]).collect(),
            binning: self.binning,
            standardization: self.standardization.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows whose row id is listed, in the listed order.
    pub fn select_row_ids(&self, ids: &[usize]) -> Result<Dataset> {
        let lookup: std::collections::HashMap<usize, usize> =
            self.row_ids.iter().enumerate().map(|(pos, &id)| (id, pos)).collect();
        let positions = ids
            .iter()
            .map(|id| {
                lookup
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Domain(format!("row id {id} is not in the dataset")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.subset(&positions))
    }

    /// Per-feature sample mean and n−1 standard deviation.
    pub fn column_stats(&self) -> Vec<(f64, f64)> {
        standardize::column_moments(self)
    }
}
