//! The three learners: Gaussian naive Bayes, one-vs-one kernel SVM (SMO) and
//! multinomial logistic regression. All map feature vectors to IRI classes.

pub mod kernel;
pub mod logit;
pub mod naive_bayes;
pub mod smo;
pub mod svm;

use serde::{Deserialize, Serialize};

pub use kernel::{kernel_eval, KernelSpec};
pub use logit::{
    softmax, train_binary_logit, train_logit, LogitConfig, LogitModel, LogitObjective, LogitReport, LogitTermination,
};
pub use naive_bayes::{train_nb, NaiveBayesModel, DEFAULT_VARIANCE_FLOOR_SCALE};
pub use smo::{train_svm_binary, SmoParams, SmoReport, SvmBinaryModel, Termination};
pub use svm::{default_gamma, grid_search, train_svm_ovo, KernelFamily, SvmOvoModel};

/// How argmax ties are broken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Lowest class index, i.e. the smoother pavement class.
    #[default]
    LowestClass,
}

impl TieRule {
    pub fn argmax(&self, votes: &[usize]) -> usize {
        let mut best = 0;
        for (k, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = k;
            }
        }
        best
    }

    pub fn argmax_f64(&self, scores: &[f64]) -> usize {
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        best
    }
}

/// Sorted distinct labels.
pub(crate) fn present_classes(labels: &[usize]) -> Vec<usize> {
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}
