//! End-to-end helpers shared by the command-line tool, tests and benches.

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    default_gamma, grid_search, train_logit, train_nb, train_svm_ovo, KernelFamily, KernelSpec, LogitConfig,
    SmoParams, DEFAULT_VARIANCE_FLOOR_SCALE,
};
use crate::domain::{FeatureSchema, IriBinning};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_model, EvaluationReport};
use crate::ingest::Corpus;
use crate::model::{Learner, TrainedModel};
use crate::preprocess::{aggregate, encode, remove_outliers, split, Dataset, SplitSpec};

/// Aggregation and outlier settings; `None` skips the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepOptions {
    pub segment_length: Option<f64>,
    pub outlier_threshold: Option<f64>,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            segment_length: Some(crate::preprocess::DEFAULT_SEGMENT_LENGTH),
            outlier_threshold: Some(crate::preprocess::DEFAULT_OUTLIER_THRESHOLD),
        }
    }
}

impl PrepOptions {
    /// Neither aggregate nor filter.
    pub fn raw() -> Self {
        Self {
            segment_length: None,
            outlier_threshold: None,
        }
    }
}

/// Aggregate, then drop outliers.
pub fn prepare(corpus: &Corpus, options: PrepOptions) -> Result<Corpus> {
    let mut out = corpus.clone();
    if let Some(len) = options.segment_length {
        out = aggregate(&out, len)?;
    }
    if let Some(t) = options.outlier_threshold {
        out = remove_outliers(&out, t)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: KernelFamily,
    /// RBF width; `None` uses [`default_gamma`] on the training split.
    pub gamma: Option<f64>,
    pub degree: u32,
    pub c: f64,
    pub tol: f64,
    pub max_iterations: Option<usize>,
    /// Replace C and gamma/degree by a 5-fold cross-validated choice.
    pub grid_search: bool,
}

impl SvmConfig {
    pub fn rbf() -> Self {
        Self {
            kernel: KernelFamily::Rbf,
            gamma: None,
            degree: 3,
            c: 1.0,
            tol: 1e-3,
            max_iterations: None,
            grid_search: false,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        Self {
            kernel: KernelFamily::Polynomial,
            degree,
            ..Self::rbf()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    NaiveBayes { variance_floor_scale: f64 },
    Svm(SvmConfig),
    Logit(LogitConfig),
}

impl LearnerConfig {
    pub fn naive_bayes() -> Self {
        LearnerConfig::NaiveBayes {
            variance_floor_scale: DEFAULT_VARIANCE_FLOOR_SCALE,
        }
    }

    /// Row label in comparison tables.
    pub fn tag(&self) -> &'static str {
        match self {
            LearnerConfig::NaiveBayes { .. } => "naive_bayes",
            LearnerConfig::Svm(SvmConfig {
                kernel: KernelFamily::Rbf,
                ..
            }) => "svm_rbf",
            LearnerConfig::Svm(SvmConfig {
                kernel: KernelFamily::Polynomial,
                ..
            }) => "svm_poly",
            LearnerConfig::Logit(_) => "logit",
        }
    }

    /// The four models of the standard comparison.
    pub fn comparison_set() -> Vec<LearnerConfig> {
        vec![
            Self::naive_bayes(),
            LearnerConfig::Svm(SvmConfig::rbf()),
            LearnerConfig::Svm(SvmConfig::polynomial(3)),
            LearnerConfig::Logit(LogitConfig::default()),
        ]
    }
}

/// Fit one learner. `seed` only drives the cross-validation folds of a grid search.
pub fn train_model(train: &Dataset, config: &LearnerConfig, seed: u64) -> Result<TrainedModel> {
    let learner = match *config {
        LearnerConfig::NaiveBayes { variance_floor_scale } => Learner::NaiveBayes(train_nb(train, variance_floor_scale)?),
        LearnerConfig::Svm(svm) => {
            let base = SmoParams {
                c: svm.c,
                tol: svm.tol,
                max_iterations: svm.max_iterations,
            };
            let (kernel, params) = if svm.grid_search {
                grid_search(train, svm.kernel, &base, 5, seed)?
            } else {
                let kernel = match svm.kernel {
                    KernelFamily::Rbf => KernelSpec::Rbf {
                        gamma: svm.gamma.unwrap_or_else(|| default_gamma(train)),
                    },
                    KernelFamily::Polynomial => KernelSpec::Polynomial { degree: svm.degree },
                };
                (kernel, base)
            };
            Learner::SvmOvo(train_svm_ovo(train, kernel, &params)?.0)
        }
        LearnerConfig::Logit(cfg) => Learner::Logit(train_logit(train, &cfg)?.0),
    };
    Ok(TrainedModel::new(config.tag(), train, learner))
}

/// Encode with the default schema and split.
pub fn encode_and_split(corpus: &Corpus, binning: IriBinning, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let data = encode(corpus, &FeatureSchema::default_registry(), binning)?;
    split(&data, spec)
}

/// Train and score every learner on one shared split.
pub fn compare(
    train: &Dataset,
    test: &Dataset,
    learners: &[LearnerConfig],
    tolerances: &[f64],
    seed: u64,
    config_digest: &str,
) -> Result<Vec<EvaluationReport>> {
    if learners.is_empty() {
        return Err(Error::Domain("no learners to compare".into()));
    }
    learners
        .iter()
        .map(|cfg| {
            let model = train_model(train, cfg, seed)?;
            evaluate_model(&model, test, tolerances, config_digest)
        })
        .collect()
}
