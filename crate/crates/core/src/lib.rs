//! Pavement roughness (IRI) class estimation from surface distress data.
//!
//! The pipeline runs survey corpora through aggregation to 0.1-mile segments,
//! outlier removal, feature encoding and a seeded train/test split, then fits
//! one of three classifiers (Gaussian naive Bayes, one-vs-one kernel SVM
//! trained by SMO, multinomial logistic regression) and scores it by the
//! fraction of predictions whose IRI error is strictly below a tolerance.

pub mod classifiers;
pub mod domain;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
