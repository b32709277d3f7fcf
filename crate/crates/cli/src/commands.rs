use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use pave_iri_core::classifiers::train_binary_logit;
use pave_iri_core::domain::FeatureSchema;
use pave_iri_core::evaluate::{compare_models, evaluate_model, importance_report};
use pave_iri_core::ingest::{parse_corpus, write_corpus, Corpus};
use pave_iri_core::model::ModelFile;
use pave_iri_core::pipeline::{self, train_model};
use pave_iri_core::preprocess::{encode, provenance_log, split, standardize, Dataset, StatsSource};
use pave_iri_core::synth::{generate_corpus, GeneratorProfile};
use sha2::{Digest, Sha256};

use crate::config::{hex16, RunConfig};
use crate::UsageError;

pub(crate) fn load_profile(path: &Path) -> Result<GeneratorProfile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading profile {}", path.display()))?;
    GeneratorProfile::from_json(&text).map_err(|e| UsageError(format!("profile {}: {e}", path.display())).into())
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| UsageError(format!("--{flag} is required")).into())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex16(&Sha256::digest(&bytes)))
}

/// `<path>.provenance.log`
pub fn provenance_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.log");
    PathBuf::from(s)
}

fn write_provenance(out: &Path, cfg: &RunConfig, corpus: &Corpus) -> Result<()> {
    let text = format!("config_digest: {}\n{}", cfg.digest(), provenance_log(&corpus.provenance));
    write(&provenance_path(out), &text)
}

fn read_input(cfg: &RunConfig) -> Result<Corpus> {
    let input = required(&cfg.input, "input")?;
    parse_corpus(input).with_context(|| format!("parsing {}", input.display()))
}

fn encode_input(cfg: &RunConfig) -> Result<Dataset> {
    let corpus = read_input(cfg)?;
    Ok(encode(&corpus, &FeatureSchema::default_registry(), cfg.binning()?)?)
}

pub fn synth(cfg: &RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let profile = cfg.generator_profile();
    profile.validate().map_err(|e| UsageError(e.to_string()))?;
    let corpus = generate_corpus(&profile)?;
    write_corpus(&corpus, out).with_context(|| format!("writing {}", out.display()))?;
    write_provenance(out, cfg, &corpus)?;
    Ok(format!(
        "wrote {} records to {} (sha256 {})",
        corpus.len(),
        out.display(),
        file_digest(out)?
    ))
}

pub fn prep(cfg: &RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let raw = read_input(cfg)?;
    let prepared = pipeline::prepare(&raw, cfg.prep_options())?;
    write_corpus(&prepared, out).with_context(|| format!("writing {}", out.display()))?;
    write_provenance(out, cfg, &prepared)?;
    Ok(format!("{} records in, {} written to {}", raw.len(), prepared.len(), out.display()))
}

pub fn train(cfg: &RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let data = encode_input(cfg)?;
    let (train, test) = split(&data, cfg.split_spec())?;
    let learner = cfg.learner();
    let model = train_model(&train, &learner, cfg.seed).with_context(|| format!("training {}", learner.tag()))?;
    ModelFile::new(model, test.row_ids.clone(), cfg.digest()).save(out)?;
    Ok(format!(
        "trained {} on {} rows, {} held out; model {} (sha256 {})",
        learner.tag(),
        train.len(),
        test.len(),
        out.display(),
        file_digest(out)?
    ))
}

pub fn eval(mut cfg: RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?.to_path_buf();
    let table_path = sidecar(&out, "csv")?;
    let model_path = required(&cfg.model_file, "model-file")?;
    let file = ModelFile::load(model_path).with_context(|| format!("loading {}", model_path.display()))?;
    let corpus = read_input(&cfg)?;
    let data = encode(&corpus, &FeatureSchema::default_registry(), file.model.binning)?;
    let test = data.select_row_ids(&file.test_row_ids).context("selecting the held-out rows")?;
    cfg.model_config_digest = Some(file.config_digest.clone());
    let report = evaluate_model(&file.model, &test, &cfg.tolerances, &cfg.digest())?;
    write(&out, &report.to_json()?)?;
    let table = compare_models(std::slice::from_ref(&report))?;
    write(&table_path, &table)?;
    Ok(table.trim_end().to_string())
}

/// `out` with extension `ext`, refusing to clobber `out` itself.
fn sidecar(out: &Path, ext: &str) -> Result<PathBuf> {
    let p = out.with_extension(ext);
    if p == out {
        return Err(UsageError(format!("--out {} must not have a .{ext} extension", out.display())).into());
    }
    Ok(p)
}

pub fn compare(cfg: &RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let json_path = sidecar(out, "json")?;
    let data = encode_input(cfg)?;
    let (train, test) = split(&data, cfg.split_spec())?;
    let reports = pipeline::compare(
        &train,
        &test,
        &cfg.comparison_learners(),
        &cfg.tolerances,
        cfg.seed,
        &cfg.digest(),
    )?;
    let table = compare_models(&reports)?;
    let mut json = serde_json::to_string_pretty(&reports)?;
    json.push('\n');
    write(out, &table)?;
    write(&json_path, &json)?;
    Ok(table.trim_end().to_string())
}

pub fn importance(cfg: &RunConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let json_path = sidecar(out, "json")?;
    let raw = encode_input(cfg)?;
    let data = standardize(&raw, StatsSource::FitHere)?;
    let (model, fit) = train_binary_logit(&data, cfg.threshold, &cfg.logit_config())
        .with_context(|| format!("fitting the binary logit at threshold {}", cfg.threshold))?;
    let report = importance_report(&model, &data, &cfg.digest())?;
    write(out, &report.to_csv())?;
    write(&json_path, &report.to_json()?)?;
    let top = report
        .rows
        .first()
        .ok_or_else(|| anyhow!("no features to rank"))?;
    Ok(format!(
        "threshold {}: top feature {} ({:+}), {:?} after {} iterations",
        cfg.threshold, top.feature_id, top.coefficient, fit.termination, fit.iterations
    ))
}
