//! One-vs-one multiclass SVM.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::smo::{train_svm_binary, SmoParams, SmoReport, SvmBinaryModel};
use super::{present_classes, TieRule};
use crate::error::{Error, Result};
use crate::preprocess::{shuffled_indices, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmOvoModel {
    /// One binary per unordered pair of classes present in training, ordered
    /// lexicographically by (lower, higher) class.
    pub binaries: Vec<SvmBinaryModel>,
    /// Number of classes in the binning.
    pub n_classes: usize,
    pub tie_rule: TieRule,
}

/// Default RBF width: `1 / (p * mean feature variance)`.
pub fn default_gamma(train: &Dataset) -> f64 {
    let p = train.dimension().max(1) as f64;
    let stats = train.column_stats();
    let mean_var = stats.iter().map(|(_, s)| s * s).sum::<f64>() / p;
    if mean_var > 0.0 {
        1.0 / (p * mean_var)
    } else {
        1.0 / p
    }
}

/// Train one binary SVM per pair of classes present in `train`. Pairs are
/// trained in parallel; the result does not depend on scheduling.
pub fn train_svm_ovo(train: &Dataset, kernel: KernelSpec, params: &SmoParams) -> Result<(SvmOvoModel, Vec<SmoReport>)> {
    let labels = train.classes()?;
    let classes = present_classes(&labels);
    if classes.len() < 2 {
        return Err(Error::DegenerateTraining(format!(
            "one-vs-one SVM needs at least two classes, found {}",
            classes.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = classes
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| classes[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let fitted = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (v, &label) in train.vectors.iter().zip(&labels) {
                if label == a || label == b {
                    xs.push(v.values.as_slice());
                    ys.push(if label == a { 1.0 } else { -1.0 });
                }
            }
            train_svm_binary(&xs, &ys, kernel, params, (a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let (binaries, reports) = fitted.into_iter().unzip();
    Ok((
        SvmOvoModel {
            binaries,
            n_classes: train.binning.n_classes(),
            tie_rule: TieRule::LowestClass,
        },
        reports,
    ))
}

impl SvmOvoModel {
    pub fn dimension(&self) -> Option<usize> {
        self.binaries
            .iter()
            .find_map(|b| b.support_vectors.first().map(|sv| sv.len()))
    }

    /// Majority vote over the binaries; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if let Some(p) = self.dimension() {
            if p != x.len() {
                return Err(Error::Domain(format!("model expects {p} features, got {}", x.len())));
            }
        }
        let mut votes = vec![0usize; self.n_classes];
        for b in &self.binaries {
            votes[b.vote(x)] += 1;
        }
        Ok(self.tie_rule.argmax(&votes))
    }
}

/// Hyperparameter grid for [`grid_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Rbf,
    Polynomial,
}

/// 5-fold cross-validated choice of C (0.1, 1, 10) and either gamma (0.5x, 1x,
/// 2x the default) or degree (2, 3, 4), scored by exact class accuracy within
/// the training split. Ties keep the earlier grid point.
pub fn grid_search(
    train: &Dataset,
    family: KernelFamily,
    base: &SmoParams,
    folds: usize,
    seed: u64,
) -> Result<(KernelSpec, SmoParams)> {
    if folds < 2 || train.len() < folds {
        return Err(Error::Domain(format!(
            "cannot run {folds}-fold cross-validation on {} rows",
            train.len()
        )));
    }
    let kernels: Vec<KernelSpec> = match family {
        KernelFamily::Rbf => {
            let g = default_gamma(train);
            [0.5, 1.0, 2.0].iter().map(|m| KernelSpec::Rbf { gamma: g * m }).collect()
        }
        KernelFamily::Polynomial => [2, 3, 4].iter().map(|&degree| KernelSpec::Polynomial { degree }).collect(),
    };
    let order = shuffled_indices(train.len(), seed);
    let labels = train.classes()?;
    let mut best: Option<(f64, KernelSpec, SmoParams)> = None;
    for c in [0.1, 1.0, 10.0] {
        for kernel in &kernels {
            let params = SmoParams { c, ..*base };
            let mut correct = 0usize;
            for fold in 0..folds {
                let (held, kept): (Vec<usize>, Vec<usize>) = order.iter().enumerate().fold(
                    (Vec::new(), Vec::new()),
                    |(mut h, mut k), (pos, &row)| {
                        if pos % folds == fold {
                            h.push(row);
                        } else {
                            k.push(row);
                        }
                        (h, k)
                    },
                );
                let fold_train = train.subset(&kept);
                let model = match train_svm_ovo(&fold_train, *kernel, &params) {
                    Ok((m, _)) => m,
                    // a fold that lost all but one class cannot vote; score it as zero
                    Err(Error::DegenerateTraining(_)) => continue,
                    Err(e) => return Err(e),
                };
                for &row in &held {
                    if model.predict(&train.vectors[row].values)? == labels[row] {
                        correct += 1;
                    }
                }
            }
            let score = correct as f64 / train.len() as f64;
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, *kernel, params));
            }
        }
    }
    let (_, kernel, params) = best.expect("grid is nonempty");
    Ok((kernel, params))
}
