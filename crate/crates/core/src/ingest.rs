//! Delimited-text survey corpora.
//!
//! One row per segment. The header is fixed: eight segment columns followed by
//! `<family>_<severity>_{extent,width,depth}` for every registered crack family
//! and severity (99 crack columns). Crack columns may be omitted on input, in
//! which case the distress is taken as absent.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{
    crack_column, CrackFamily, CrackObservation, FunctionalClass, Measure, SegmentRecord, Severity, SurfaceType,
};
use crate::error::{Error, Result};
use crate::preprocess::ProvenanceStep;

pub const SCHEMA_VERSION: &str = "1";

pub const SEGMENT_COLUMNS: [&str; 8] = [
    "route_id",
    "start_milepost",
    "length",
    "surface_type",
    "functional_class",
    "iri",
    "rut_depth",
    "faulting",
];

const OVERLAP_EPS: f64 = 1e-9;

/// Full header, segment columns first.
pub fn header() -> Vec<String> {
    let mut cols: Vec<String> = SEGMENT_COLUMNS.iter().map(|s| s.to_string()).collect();
    for (family, severity, measure) in crack_columns() {
        cols.push(crack_column(family, severity, measure));
    }
    cols
}

fn crack_columns() -> impl Iterator<Item = (CrackFamily, Severity, Measure)> {
    CrackFamily::ALL.iter().flat_map(|&f| {
        Severity::ALL
            .iter()
            .flat_map(move |&s| Measure::ALL.iter().map(move |&m| (f, s, m)))
    })
}

/// An ordered, validated collection of segment records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<SegmentRecord>,
    /// File path or `"synthetic"`.
    pub source: String,
    pub schema_version: String,
    /// Preprocessing steps applied so far (not persisted in the corpus file).
    #[serde(default)]
    pub provenance: Vec<ProvenanceStep>,
}

impl Corpus {
    /// Sorts records by (route, milepost) and checks that no two records on
    /// the same route overlap.
    pub fn new(mut records: Vec<SegmentRecord>, source: impl Into<String>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        sort_records(&mut records);
        check_overlaps(records.iter().map(|r| (r, 0)))?;
        Ok(Self {
            records,
            source: source.into(),
            schema_version: SCHEMA_VERSION.into(),
            provenance: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same metadata and provenance, different records.
    pub(crate) fn with_records(&self, records: Vec<SegmentRecord>) -> Self {
        Self {
            records,
            source: self.source.clone(),
            schema_version: self.schema_version.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

fn sort_records(records: &mut [SegmentRecord]) {
    records.sort_by(|a, b| {
        a.route_id
            .cmp(&b.route_id)
            .then(a.start_milepost.total_cmp(&b.start_milepost))
    });
}

/// `line` = 0 means "no file position".
fn check_overlaps<'a>(sorted: impl Iterator<Item = (&'a SegmentRecord, u64)>) -> Result<()> {
    let mut prev: Option<&SegmentRecord> = None;
    for (r, line) in sorted {
        if let Some(p) = prev {
            if p.route_id == r.route_id && r.start_milepost < p.end_milepost() - OVERLAP_EPS {
                let message = format!(
                    "segment {}@{} overlaps the previous segment ending at {}",
                    r.route_id,
                    r.start_milepost,
                    p.end_milepost()
                );
                return Err(if line == 0 {
                    Error::InvalidRecord(message)
                } else {
                    Error::Validation { line, message }
                });
            }
        }
        prev = Some(r);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first invalid row.
    #[default]
    Strict,
    /// Skip invalid rows and report them.
    Lenient,
}

/// Parse a corpus file in strict mode.
pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    parse_corpus_with(path, ParseMode::Strict).map(|(c, _)| c)
}

/// Parse a corpus file; in lenient mode the skipped rows' errors are returned
/// alongside the corpus.
pub fn parse_corpus_with(path: impl AsRef<Path>, mode: ParseMode) -> Result<(Corpus, Vec<Error>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, path.display().to_string(), mode)
}

struct Columns {
    segment: [usize; 8],
    cracks: Vec<(CrackFamily, Severity, Measure, usize)>,
}

impl Columns {
    fn resolve(headers: &csv::StringRecord) -> Result<Self> {
        let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
        let mut segment = [0; 8];
        for (slot, name) in segment.iter_mut().zip(SEGMENT_COLUMNS) {
            *slot = *index
                .get(name)
                .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))?;
        }
        let mut known: Vec<String> = SEGMENT_COLUMNS.iter().map(|s| s.to_string()).collect();
        let mut cracks = Vec::new();
        for (f, s, m) in crack_columns() {
            let name = crack_column(f, s, m);
            if let Some(&i) = index.get(name.as_str()) {
                cracks.push((f, s, m, i));
            }
            known.push(name);
        }
        if let Some(unknown) = headers.iter().find(|h| !known.iter().any(|k| k == h.trim())) {
            return Err(Error::Schema(format!("unknown column `{unknown}`")));
        }
        Ok(Self { segment, cracks })
    }

    fn parse_row(&self, row: &csv::StringRecord, line: u64) -> Result<SegmentRecord> {
        let cell = |i: usize| row.get(i).unwrap_or("").trim();
        let number = |col: usize, name: &str| -> Result<f64> {
            let text = cell(self.segment[col]);
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Row {
                    line,
                    message: format!("column `{name}`: `{text}` is not a number"),
                })
        };
        let category = |e: Error| Error::Row {
            line,
            message: e.to_string(),
        };
        let route_id = cell(self.segment[0]).to_string();
        let start = number(1, "start_milepost")?;
        let length = number(2, "length")?;
        let surface: SurfaceType = cell(self.segment[3]).parse().map_err(category)?;
        let functional: FunctionalClass = cell(self.segment[4]).parse().map_err(category)?;
        let iri = number(5, "iri")?;
        let rut = number(6, "rut_depth")?;
        let faulting = number(7, "faulting")?;

        let mut cracks: Vec<CrackObservation> = Vec::new();
        for &(family, severity, measure, i) in &self.cracks {
            let text = cell(i);
            let value = if text.is_empty() {
                0.0
            } else {
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Row {
                        line,
                        message: format!(
                            "column `{}`: `{text}` is not a number",
                            crack_column(family, severity, measure)
                        ),
                    })?
            };
            let obs = match cracks.last_mut() {
                Some(c) if c.key() == (family, severity) => c,
                _ => {
                    cracks.push(CrackObservation::new(family, severity, 0.0, 0.0, 0.0));
                    cracks.last_mut().unwrap()
                }
            };
            match measure {
                Measure::Extent => obs.extent = value,
                Measure::Width => obs.width = value,
                Measure::Depth => obs.depth = value,
            }
        }
        SegmentRecord::new(route_id, start, length, surface, functional, iri, rut, faulting, cracks).map_err(
            |e| Error::Validation {
                line,
                message: match e {
                    Error::InvalidRecord(m) => m,
                    other => other.to_string(),
                },
            },
        )
    }
}

/// Parse a corpus from any reader. `source` is recorded on the corpus.
pub fn read_corpus(reader: impl Read, source: impl Into<String>, mode: ParseMode) -> Result<(Corpus, Vec<Error>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let columns = Columns::resolve(&headers)?;

    let mut rows: Vec<(SegmentRecord, u64)> = Vec::new();
    let mut skipped = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let err = Error::Row {
                    line,
                    message: e.to_string(),
                };
                match mode {
                    ParseMode::Strict => return Err(err),
                    ParseMode::Lenient => {
                        skipped.push(err);
                        continue;
                    }
                }
            }
        }
        let line = row.position().map_or(line, |p| p.line());
        match columns.parse_row(&row, line) {
            Ok(r) => rows.push((r, line)),
            Err(e) if mode == ParseMode::Lenient => skipped.push(e),
            Err(e) => return Err(e),
        }
    }

    rows.sort_by(|(a, _), (b, _)| {
        a.route_id
            .cmp(&b.route_id)
            .then(a.start_milepost.total_cmp(&b.start_milepost))
    });
    if mode == ParseMode::Lenient {
        // Drop the later of any overlapping pair instead of failing.
        let mut kept: Vec<(SegmentRecord, u64)> = Vec::with_capacity(rows.len());
        for (r, line) in rows {
            if let Err(e) = check_overlaps(kept.last().map(|(p, l)| (p, *l)).into_iter().chain([(&r, line)])) {
                skipped.push(e);
            } else {
                kept.push((r, line));
            }
        }
        rows = kept;
    } else {
        check_overlaps(rows.iter().map(|(r, l)| (r, *l)))?;
    }
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let corpus = Corpus {
        records: rows.into_iter().map(|(r, _)| r).collect(),
        source: source.into(),
        schema_version: SCHEMA_VERSION.into(),
        provenance: Vec::new(),
    };
    Ok((corpus, skipped))
}

/// Write a corpus with the full header. Floats use the shortest decimal text
/// that parses back to the identical value.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_corpus_to(corpus, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_corpus_to(corpus: &Corpus, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(header())?;
    let mut row: Vec<String> = Vec::with_capacity(8 + 99);
    for r in &corpus.records {
        row.clear();
        row.push(r.route_id.clone());
        row.push(r.start_milepost.to_string());
        row.push(r.length.to_string());
        row.push(r.surface_type.to_string());
        row.push(r.functional_class.to_string());
        row.push(r.iri.to_string());
        row.push(r.rut_depth.to_string());
        row.push(r.faulting.to_string());
        for (family, severity, measure) in crack_columns() {
            let v = r.crack(family, severity).map_or(0.0, |c| match measure {
                Measure::Extent => c.extent,
                Measure::Width => c.width,
                Measure::Depth => c.depth,
            });
            row.push(v.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<corpus writer>", e))?;
    Ok(())
}
