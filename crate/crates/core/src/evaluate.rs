//! Tolerance-banded accuracy, evaluation reports, comparison tables and
//! coefficient-importance rankings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::LogitModel;
use crate::domain::hex_prefix;
use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::preprocess::Dataset;

pub const DEFAULT_TOLERANCES: [f64; 3] = [20.0, 30.0, 50.0];

/// Fraction of pairs with `|pred - act| < tolerance` (strict).
pub fn accuracy_under_tolerance(predicted: &[f64], actual: &[f64], tolerance: f64) -> Result<f64> {
    if predicted.len() != actual.len() || predicted.is_empty() {
        return Err(Error::Domain(format!(
            "need equal, nonzero numbers of predictions and actuals ({} vs {})",
            predicted.len(),
            actual.len()
        )));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
    }
    let hits = predicted
        .iter()
        .zip(actual)
        .filter(|(p, a)| (*p - *a).abs() < tolerance)
        .count();
    Ok(hits as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_tag: String,
    pub config_digest: String,
    /// Identifies the evaluated rows and their labels.
    pub test_digest: String,
    /// Inches/mile.
    pub tolerances: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub n_test: usize,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Digest of a test set: its row ids and the exact bits of its labels.
pub fn test_digest(test: &Dataset) -> String {
    let mut h = Sha256::new();
    for (id, v) in test.row_ids.iter().zip(&test.vectors) {
        h.update((*id as u64).to_le_bytes());
        h.update(v.label_iri.to_bits().to_le_bytes());
    }
    hex_prefix(&h.finalize(), 16)
}

fn check_tolerances(tolerances: &[f64]) -> Result<()> {
    if tolerances.is_empty() {
        return Err(Error::Domain("at least one tolerance is required".into()));
    }
    if let Some(t) = tolerances.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Domain(format!("tolerance must be positive, got {t}")));
    }
    if tolerances.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!("tolerances must be strictly increasing, got {tolerances:?}")));
    }
    Ok(())
}

/// Score `model` on `test`. Raw test data is standardized with the model's
/// training statistics first.
pub fn evaluate_model(
    model: &TrainedModel,
    test: &Dataset,
    tolerances: &[f64],
    config_digest: &str,
) -> Result<EvaluationReport> {
    check_tolerances(tolerances)?;
    let test = model.prepare(test)?;
    if test.is_empty() {
        return Err(Error::Domain("test set is empty".into()));
    }
    let actual_classes = test.classes()?;
    let k = model.binning.n_classes();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut predicted = Vec::with_capacity(test.len());
    for (row, &actual) in test.rows().zip(&actual_classes) {
        let class = model.predict_class(row)?;
        confusion[actual][class] += 1;
        predicted.push(model.binning.representative_of(class)?);
    }
    let actual: Vec<f64> = test.vectors.iter().map(|v| v.label_iri).collect();
    let accuracies = tolerances
        .iter()
        .map(|&t| accuracy_under_tolerance(&predicted, &actual, t))
        .collect::<Result<Vec<_>>>()?;
    assert!(
        accuracies.windows(2).all(|w| w[0] <= w[1]),
        "accuracy decreased with a wider tolerance: {accuracies:?}"
    );
    Ok(EvaluationReport {
        model_tag: model.tag.clone(),
        config_digest: config_digest.into(),
        test_digest: test_digest(&test),
        tolerances: tolerances.to_vec(),
        accuracies,
        n_test: test.len(),
        confusion,
    })
}

fn tolerance_label(t: f64) -> String {
    format!("tol_{t}")
}

/// Header line of the comparison table.
pub fn comparison_header(tolerances: &[f64]) -> String {
    let mut s = String::from("model,n_test");
    for &t in tolerances {
        s.push(',');
        s.push_str(&tolerance_label(t));
    }
    s
}

impl EvaluationReport {
    /// The report's row in the comparison table (no trailing newline).
    pub fn comparison_row(&self) -> String {
        let mut s = format!("{},{}", self.model_tag, self.n_test);
        for a in &self.accuracies {
            let _ = write!(s, ",{a}");
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Comparison table: `model,n_test,tol_<T>...` then one row per report, in
/// input order. Every report must share tolerances and test set.
pub fn compare_models(reports: &[EvaluationReport]) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Domain("nothing to compare".into()))?;
    for r in &reports[1..] {
        if r.tolerances != first.tolerances {
            return Err(Error::Domain(format!(
                "model {} was scored at tolerances {:?}, {} at {:?}",
                r.model_tag, r.tolerances, first.model_tag, first.tolerances
            )));
        }
        if r.test_digest != first.test_digest {
            return Err(Error::Domain(format!(
                "models {} and {} were scored on different test sets",
                first.model_tag, r.model_tag
            )));
        }
    }
    let mut out = comparison_header(&first.tolerances);
    out.push('\n');
    for r in reports {
        out.push_str(&r.comparison_row());
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub feature_id: String,
    /// Log-odds change toward the rough class per unit of the (standardized) feature.
    pub coefficient: f64,
    /// `|coefficient|` times the feature's spread in the dataset.
    pub standardized_magnitude: f64,
    /// +1 pushes toward the rough class, -1 toward the smooth class.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    /// Inches/mile; rough means IRI above this.
    pub threshold: f64,
    pub config_digest: String,
    /// Sorted by `|coefficient|`, largest first; ties keep schema order.
    pub rows: Vec<ImportanceRow>,
}

/// Rank the features of a two-class logit model fitted on `dataset`.
pub fn importance_report(model: &LogitModel, dataset: &Dataset, config_digest: &str) -> Result<ImportanceReport> {
    let coefficients = model.rough_coefficients()?;
    let threshold = model
        .iri_threshold
        .ok_or_else(|| Error::Domain("importance needs a model fitted with an IRI threshold".into()))?;
    if !dataset.is_standardized() {
        return Err(Error::State(
            "importance needs standardized features so coefficients are comparable".into(),
        ));
    }
    if coefficients.len() != dataset.dimension() {
        return Err(Error::Domain(format!(
            "model has {} coefficients, dataset has {} features",
            coefficients.len(),
            dataset.dimension()
        )));
    }
    let stats = dataset.column_stats();
    let mut rows: Vec<ImportanceRow> = dataset
        .schema
        .ids()
        .zip(&coefficients)
        .zip(&stats)
        .map(|((id, &c), &(_, sd))| ImportanceRow {
            feature_id: id.to_string(),
            coefficient: c,
            standardized_magnitude: c.abs() * sd,
            sign: if c > 0.0 {
                1
            } else if c < 0.0 {
                -1
            } else {
                0
            },
        })
        .collect();
    rows.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()));
    Ok(ImportanceReport {
        threshold,
        config_digest: config_digest.into(),
        rows,
    })
}

impl ImportanceReport {
    /// `rank,feature_id,coefficient,standardized_magnitude,sign`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,feature_id,coefficient,standardized_magnitude,sign\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                i + 1,
                r.feature_id,
                r.coefficient,
                r.standardized_magnitude,
                r.sign
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}
