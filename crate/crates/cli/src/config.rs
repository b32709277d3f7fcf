//! Run parameters shared by every subcommand, their JSON overrides and digest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use pave_iri_core::classifiers::{KernelFamily, LogitConfig, DEFAULT_VARIANCE_FLOOR_SCALE};
use pave_iri_core::domain::IriBinning;
use pave_iri_core::evaluate::DEFAULT_TOLERANCES;
use pave_iri_core::pipeline::{LearnerConfig, PrepOptions, SvmConfig};
use pave_iri_core::preprocess::{SplitSpec, DEFAULT_OUTLIER_THRESHOLD, DEFAULT_SEGMENT_LENGTH};
use pave_iri_core::synth::GeneratorProfile;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Svm,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Rbf,
    Poly,
}

/// Every parameter a command may read. Keys of a `--config` file are field
/// names; they override command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand name; fixed by the invocation.
    #[serde(skip_deserializing)]
    pub command: String,
    pub seed: u64,

    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub model_file: Option<PathBuf>,

    /// Base generator profile; `segments`, `noise_sigma`, `spike_rate` and
    /// `seed` take precedence over its fields.
    pub profile: Option<GeneratorProfile>,
    pub segments: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub spike_rate: Option<f64>,

    pub aggregate: bool,
    /// Miles.
    pub segment_length: f64,
    pub outlier_filter: bool,
    /// Inches/mile.
    pub outlier_threshold: f64,

    pub bin_origin: f64,
    pub bin_width: f64,
    pub bin_count: usize,
    pub train_fraction: f64,

    pub model: ModelKind,
    pub kernel: Kernel,
    pub degree: u32,
    pub c: f64,
    pub gamma: Option<f64>,
    pub grid_search: bool,
    pub lambda: f64,

    pub tolerances: Vec<f64>,
    pub threshold: f64,

    /// Digest of the run that produced the model being evaluated.
    #[serde(skip_deserializing)]
    pub model_config_digest: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let binning = IriBinning::default();
        let logit = LogitConfig::default();
        let svm = SvmConfig::rbf();
        Self {
            command: String::new(),
            seed: DEFAULT_SEED,
            input: None,
            out: None,
            model_file: None,
            profile: None,
            segments: None,
            noise_sigma: None,
            spike_rate: None,
            aggregate: true,
            segment_length: DEFAULT_SEGMENT_LENGTH,
            outlier_filter: true,
            outlier_threshold: DEFAULT_OUTLIER_THRESHOLD,
            bin_origin: binning.origin(),
            bin_width: binning.width(),
            bin_count: binning.n_classes(),
            train_fraction: SplitSpec::default().train_fraction,
            model: ModelKind::Nb,
            kernel: Kernel::Rbf,
            degree: svm.degree,
            c: svm.c,
            gamma: None,
            grid_search: false,
            lambda: logit.lambda,
            tolerances: DEFAULT_TOLERANCES.to_vec(),
            threshold: 100.0,
            model_config_digest: None,
        }
    }
}

const PATH_KEYS: [&str; 3] = ["input", "out", "model_file"];

impl RunConfig {
    /// Overlay the keys of a JSON object file.
    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let overrides: Value = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("config {} is not valid JSON: {e}", path.display())))?;
        self.apply_value(overrides)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn apply_value(&mut self, overrides: Value) -> Result<(), String> {
        let Value::Object(map) = overrides else {
            return Err("expected a JSON object".into());
        };
        let mut merged = serde_json::to_value(&*self).map_err(|e| e.to_string())?;
        let target = merged.as_object_mut().expect("config serializes to an object");
        target.remove("command");
        target.remove("model_config_digest");
        for (k, v) in map {
            target.insert(k, v);
        }
        let command = std::mem::take(&mut self.command);
        let digest = self.model_config_digest.take();
        *self = serde_json::from_value(merged).map_err(|e| e.to_string())?;
        self.command = command;
        self.model_config_digest = digest;
        Ok(())
    }

    /// Hash of every non-path parameter. Stable across runs and platforms.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let map = v.as_object_mut().expect("config serializes to an object");
        for k in PATH_KEYS {
            map.remove(k);
        }
        // serde_json maps are sorted by key
        let text = serde_json::to_string(&v).expect("config serializes");
        hex16(&Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        let bad = |m: String| Err(UsageError(m));
        if self.segments == Some(0) {
            return bad("--segments must be at least 1".into());
        }
        if !(self.segment_length.is_finite() && self.segment_length > 0.0) {
            return bad(format!("segment length must be positive, got {}", self.segment_length));
        }
        if !(self.outlier_threshold.is_finite() && self.outlier_threshold > 0.0) {
            return bad(format!("outlier threshold must be positive, got {}", self.outlier_threshold));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        self.binning()?;
        if self.tolerances.is_empty() {
            return bad("at least one tolerance is required".into());
        }
        if self.tolerances.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return bad(format!("tolerances must be positive, got {:?}", self.tolerances));
        }
        if self.tolerances.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("tolerances must be strictly increasing, got {:?}", self.tolerances));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return bad(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if self.gamma.is_some_and(|g| !(g.is_finite() && g > 0.0)) {
            return bad(format!("gamma must be positive, got {:?}", self.gamma));
        }
        if self.degree == 0 {
            return bad("polynomial degree must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        Ok(())
    }

    pub fn binning(&self) -> Result<IriBinning, UsageError> {
        IriBinning::new(self.bin_origin, self.bin_width, self.bin_count).map_err(|e| UsageError(e.to_string()))
    }

    pub fn prep_options(&self) -> PrepOptions {
        PrepOptions {
            segment_length: self.aggregate.then_some(self.segment_length),
            outlier_threshold: self.outlier_filter.then_some(self.outlier_threshold),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
        }
    }

    /// Effective generator profile.
    pub fn generator_profile(&self) -> GeneratorProfile {
        let mut p = self.profile.clone().unwrap_or_default();
        p.seed = self.seed;
        if let Some(n) = self.segments {
            p.n_segments = n;
        }
        if let Some(s) = self.noise_sigma {
            p.noise_sigma = s;
        }
        if let Some(r) = self.spike_rate {
            p.spike_rate = r;
        }
        p
    }

    fn svm(&self, kernel: Kernel) -> SvmConfig {
        let base = match kernel {
            Kernel::Rbf => SvmConfig::rbf(),
            Kernel::Poly => SvmConfig::polynomial(self.degree),
        };
        SvmConfig {
            gamma: self.gamma,
            c: self.c,
            grid_search: self.grid_search,
            ..base
        }
    }

    fn logit(&self) -> LogitConfig {
        LogitConfig {
            lambda: self.lambda,
            ..LogitConfig::default()
        }
    }

    pub fn learner(&self) -> LearnerConfig {
        match self.model {
            ModelKind::Nb => LearnerConfig::NaiveBayes {
                variance_floor_scale: DEFAULT_VARIANCE_FLOOR_SCALE,
            },
            ModelKind::Svm => LearnerConfig::Svm(self.svm(self.kernel)),
            ModelKind::Logit => LearnerConfig::Logit(self.logit()),
        }
    }

    /// NB, SVM-RBF, SVM-poly and logit with this run's hyperparameters.
    pub fn comparison_learners(&self) -> Vec<LearnerConfig> {
        vec![
            LearnerConfig::naive_bayes(),
            LearnerConfig::Svm(self.svm(Kernel::Rbf)),
            LearnerConfig::Svm(self.svm(Kernel::Poly)),
            LearnerConfig::Logit(self.logit()),
        ]
    }

    pub fn logit_config(&self) -> LogitConfig {
        self.logit()
    }
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl From<Kernel> for KernelFamily {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Rbf => KernelFamily::Rbf,
            Kernel::Poly => KernelFamily::Polynomial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_tracks_parameters_not_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = Some("elsewhere.csv".into());
        assert_eq!(a.digest(), b.digest());
        b.c = 2.0;
        assert_ne!(a.digest(), b.digest());
        let mut c = a.clone();
        c.tolerances = vec![50.0];
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 16);
    }

    #[test]
    fn overrides_replace_only_named_keys() {
        let mut cfg = RunConfig {
            command: "train".into(),
            degree: 2,
            ..RunConfig::default()
        };
        cfg.apply_value(json!({"seed": 7, "model": "svm", "kernel": "poly"})).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model, ModelKind::Svm);
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.command, "train");
        assert!(cfg.apply_value(json!({"colour": 1})).is_err());
        assert!(cfg.apply_value(json!([1, 2])).is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig { segments: Some(0), ..RunConfig::default() },
            RunConfig { tolerances: vec![30.0, 20.0], ..RunConfig::default() },
            RunConfig { train_fraction: 1.0, ..RunConfig::default() },
            RunConfig { bin_width: 0.0, ..RunConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn profile_precedence() {
        let cfg = RunConfig {
            seed: 9,
            profile: Some(GeneratorProfile { n_segments: 5, seed: 1, ..Default::default() }),
            noise_sigma: Some(2.0),
            ..RunConfig::default()
        };
        let p = cfg.generator_profile();
        assert_eq!((p.n_segments, p.seed, p.noise_sigma), (5, 9, 2.0));
    }
}
