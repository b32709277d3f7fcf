use serde::{Deserialize, Serialize};

use super::{Dataset, ProvenanceStep};
use crate::error::{Error, Result};

/// Standard deviations below this are treated as constant features.
pub const CONSTANT_STD: f64 = 1e-12;

/// Per-feature affine transform `(x - mean) / std`. One-hot and constant
/// features map to themselves (mean 0, std 1) and are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Numeric features left unscaled because their spread was below [`CONSTANT_STD`].
    pub constant: Vec<bool>,
    /// Features transformed by this standardization (numeric, non-constant).
    pub scaled: Vec<bool>,
}

pub enum StatsSource<'a> {
    /// Fit statistics on the dataset being transformed.
    FitHere,
    /// Apply previously fitted statistics (typically training statistics).
    Reuse(Option<&'a Standardization>),
}

/// Sample mean and n−1 standard deviation per column; zero spread for n < 2.
pub(crate) fn column_moments(dataset: &Dataset) -> Vec<(f64, f64)> {
    let n = dataset.len();
    let p = dataset.dimension();
    let mut means = vec![0.0; p];
    for row in dataset.rows() {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    if n > 0 {
        means.iter_mut().for_each(|m| *m /= n as f64);
    }
    let mut ss = vec![0.0; p];
    for row in dataset.rows() {
        for ((s, x), m) in ss.iter_mut().zip(row).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    means
        .into_iter()
        .zip(ss)
        .map(|(m, s)| (m, if n > 1 { (s / (n - 1) as f64).sqrt() } else { 0.0 }))
        .collect()
}

impl Standardization {
    pub fn fit(dataset: &Dataset) -> Self {
        let moments = column_moments(dataset);
        let p = dataset.dimension();
        let mut out = Self {
            means: vec![0.0; p],
            stds: vec![1.0; p],
            constant: vec![false; p],
            scaled: vec![false; p],
        };
        for (j, (m, s)) in moments.into_iter().enumerate() {
            if !dataset.schema.is_numeric(j) {
                continue;
            }
            if s < CONSTANT_STD {
                out.constant[j] = true;
            } else {
                out.means[j] = m;
                out.stds[j] = s;
                out.scaled[j] = true;
            }
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (j, x) in row.iter_mut().enumerate() {
            if self.scaled[j] {
                *x = (*x - self.means[j]) / self.stds[j];
            }
        }
    }

    /// `other` applied after `self`, as a single transform.
    fn then(&self, other: &Standardization) -> Standardization {
        let p = self.dimension();
        let mut out = self.clone();
        for j in 0..p {
            if other.scaled[j] {
                out.means[j] = self.means[j] + self.stds[j] * other.means[j];
                out.stds[j] = self.stds[j] * other.stds[j];
                out.scaled[j] = true;
                out.constant[j] = false;
            }
        }
        out
    }
}

/// Standardize numeric features.
///
/// `FitHere` on an already standardized dataset refits on the current values
/// and records the composed transform, so the stored statistics always map raw
/// features to the current values. `Reuse` requires raw features.
pub fn standardize(dataset: &Dataset, source: StatsSource<'_>) -> Result<Dataset> {
    let (stats, recorded) = match source {
        StatsSource::FitHere => {
            let stats = Standardization::fit(dataset);
            let recorded = match &dataset.standardization {
                Some(prev) => prev.then(&stats),
                None => stats.clone(),
            };
            (stats, recorded)
        }
        StatsSource::Reuse(None) => {
            return Err(Error::State("no standardization statistics to reuse".into()));
        }
        StatsSource::Reuse(Some(stats)) => {
            if dataset.is_standardized() {
                return Err(Error::State("dataset is already standardized".into()));
            }
            if stats.dimension() != dataset.dimension() {
                return Err(Error::Schema(format!(
                    "standardization has {} features, dataset has {}",
                    stats.dimension(),
                    dataset.dimension()
                )));
            }
            (stats.clone(), stats.clone())
        }
    };
    let mut out = dataset.clone();
    for v in &mut out.vectors {
        stats.apply_row(&mut v.values);
    }
    let constant = stats.constant.iter().filter(|&&c| c).count();
    out.provenance.push(
        ProvenanceStep::new("standardize", dataset.len(), out.len())
            .param("scaled_features", stats.scaled.iter().filter(|&&s| s).count())
            .param("constant_features", constant),
    );
    out.standardization = Some(recorded);
    Ok(out)
}
