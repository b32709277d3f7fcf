//! Gaussian naive Bayes with a maximum a-posteriori decision.

use serde::{Deserialize, Serialize};

use super::{present_classes, TieRule};
use crate::error::{Error, Result};
use crate::preprocess::Dataset;

pub const DEFAULT_VARIANCE_FLOOR_SCALE: f64 = 1e-9;

/// Per-class priors and per-feature Gaussian likelihoods. Only classes seen
/// in training are stored; the rest have zero posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub n_classes: usize,
    pub classes: Vec<usize>,
    pub class_priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub variance_floor: f64,
    pub tie_rule: TieRule,
}

/// Fit priors (class frequencies) and per-class feature means and variances.
///
/// Variances are maximum-likelihood (divide by the class count) and floored
/// at `variance_floor_scale` times the largest overall feature variance.
pub fn train_nb(train: &Dataset, variance_floor_scale: f64) -> Result<NaiveBayesModel> {
    if train.is_empty() {
        return Err(Error::DegenerateTraining("naive Bayes needs at least one training row".into()));
    }
    if !(variance_floor_scale.is_finite() && variance_floor_scale > 0.0) {
        return Err(Error::Domain(format!(
            "variance floor scale must be positive, got {variance_floor_scale}"
        )));
    }
    let labels = train.classes()?;
    let classes = present_classes(&labels);
    let p = train.dimension();
    let n = train.len() as f64;

    let overall = population_moments(train.rows(), p);
    let max_var = overall.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let variance_floor = variance_floor_scale * if max_var > 0.0 { max_var } else { 1.0 };

    let mut class_priors = Vec::with_capacity(classes.len());
    let mut means = Vec::with_capacity(classes.len());
    let mut variances = Vec::with_capacity(classes.len());
    for &k in &classes {
        let rows = train
            .rows()
            .zip(&labels)
            .filter(|(_, &l)| l == k)
            .map(|(r, _)| r);
        let count = labels.iter().filter(|&&l| l == k).count();
        let moments = population_moments(rows, p);
        class_priors.push(count as f64 / n);
        means.push(moments.iter().map(|(m, _)| *m).collect());
        variances.push(moments.iter().map(|(_, v)| v.max(variance_floor)).collect());
    }
    Ok(NaiveBayesModel {
        n_classes: train.binning.n_classes(),
        classes,
        class_priors,
        means,
        variances,
        variance_floor,
        tie_rule: TieRule::LowestClass,
    })
}

fn population_moments<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, p: usize) -> Vec<(f64, f64)> {
    let mut count = 0usize;
    let mut sum = vec![0.0; p];
    for r in rows.clone() {
        count += 1;
        for (s, x) in sum.iter_mut().zip(r) {
            *s += x;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut ss = vec![0.0; p];
    for r in rows {
        for ((s, x), m) in ss.iter_mut().zip(r).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    mean.into_iter().zip(ss).map(|(m, s)| (m, s / count as f64)).collect()
}

impl NaiveBayesModel {
    pub fn dimension(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    /// `log P(C_k) + sum_i log N(x_i | mean_ki, var_ki)` for each stored class.
    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::Domain(format!(
                "model expects {} features, got {}",
                self.dimension(),
                x.len()
            )));
        }
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        Ok(self
            .class_priors
            .iter()
            .zip(self.means.iter().zip(&self.variances))
            .map(|(prior, (mu, var))| {
                let ll: f64 = x
                    .iter()
                    .zip(mu.iter().zip(var))
                    .map(|(xi, (m, v))| -0.5 * (ln_2pi + v.ln()) - (xi - m) * (xi - m) / (2.0 * v))
                    .sum();
                prior.ln() + ll
            })
            .collect())
    }

    /// MAP class (lowest index on ties) and the posterior over all
    /// `n_classes` classes.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let joint = self.log_joint(x)?;
        let max = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = joint.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut posterior = vec![0.0; self.n_classes];
        for (&k, w) in self.classes.iter().zip(&weights) {
            posterior[k] = w / total;
        }
        let mut scores = vec![f64::NEG_INFINITY; self.n_classes];
        for (&k, &l) in self.classes.iter().zip(&joint) {
            scores[k] = l;
        }
        Ok((self.tie_rule.argmax_f64(&scores), posterior))
    }
}
