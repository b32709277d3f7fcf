use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CrackFamily, FunctionalClass, SegmentRecord, Severity, SurfaceType};
use crate::error::{Error, Result};

/// One attribute of a crack observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Extent,
    Width,
    Depth,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Extent, Measure::Width, Measure::Depth];

    pub fn token(self) -> &'static str {
        match self {
            Measure::Extent => "extent",
            Measure::Width => "width",
            Measure::Depth => "depth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    OneHot,
}

/// Where a feature's value comes from in a [`SegmentRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "field")]
pub enum FeatureSource {
    RutDepth,
    Faulting,
    Surface { surface: SurfaceType },
    Functional { class: FunctionalClass },
    Crack {
        family: CrackFamily,
        severity: Severity,
        measure: Measure,
    },
}

impl FeatureSource {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureSource::Surface { .. } | FeatureSource::Functional { .. } => FeatureKind::OneHot,
            _ => FeatureKind::Numeric,
        }
    }

    /// Stable identifier; crack features use the same `<family>_<severity>_<measure>`
    /// naming as corpus columns.
    pub fn feature_id(&self) -> String {
        match self {
            FeatureSource::RutDepth => "rut_depth".into(),
            FeatureSource::Faulting => "faulting".into(),
            FeatureSource::Surface { surface } => format!("surface_{surface}"),
            FeatureSource::Functional { class } => format!("functional_{class}"),
            FeatureSource::Crack {
                family,
                severity,
                measure,
            } => crack_column(*family, *severity, *measure),
        }
    }

    pub(crate) fn value(&self, record: &SegmentRecord) -> f64 {
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        match *self {
            FeatureSource::RutDepth => record.rut_depth,
            FeatureSource::Faulting => record.faulting,
            FeatureSource::Surface { surface } => indicator(record.surface_type == surface),
            FeatureSource::Functional { class } => indicator(record.functional_class == class),
            FeatureSource::Crack {
                family,
                severity,
                measure,
            } => record.crack(family, severity).map_or(0.0, |c| match measure {
                Measure::Extent => c.extent,
                Measure::Width => c.width,
                Measure::Depth => c.depth,
            }),
        }
    }
}

/// Column / feature name for one crack measure.
pub fn crack_column(family: CrackFamily, severity: Severity, measure: Measure) -> String {
    format!("{}_{}_{}", family.token(), severity.token(), measure.token())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub id: String,
    pub kind: FeatureKind,
    pub source: FeatureSource,
}

/// Ordered feature registry. The order is the column order of every
/// [`FeatureVector`] produced from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    entries: Vec<FeatureEntry>,
}

/// Families whose medium/high-severity width and depth enter the default
/// feature set; every family contributes its extent at all three severities.
const WIDTH_DEPTH_FAMILIES: [CrackFamily; 4] = [
    CrackFamily::WpLongitudinal,
    CrackFamily::WpAlligator,
    CrackFamily::EdgeAlligator,
    CrackFamily::LongitudinalSpall,
];

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::default_registry()
    }
}

impl FeatureSchema {
    pub fn new(sources: impl IntoIterator<Item = FeatureSource>) -> Result<Self> {
        let entries: Vec<FeatureEntry> = sources
            .into_iter()
            .map(|source| FeatureEntry {
                id: source.feature_id(),
                kind: source.kind(),
                source,
            })
            .collect();
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Schema(format!("duplicate feature id `{}`", e.id)));
            }
        }
        let surfaces = entries
            .iter()
            .filter(|e| matches!(e.source, FeatureSource::Surface { .. }))
            .count();
        if surfaces != 0 && surfaces != SurfaceType::ALL.len() {
            return Err(Error::Schema("surface one-hot group is incomplete".into()));
        }
        let classes = entries
            .iter()
            .filter(|e| matches!(e.source, FeatureSource::Functional { .. }))
            .count();
        if classes != 0 && classes != FunctionalClass::ALL.len() {
            return Err(Error::Schema("functional-class one-hot group is incomplete".into()));
        }
        Ok(Self { entries })
    }

    /// The 58-feature registry: rutting, faulting, extent of all 11 crack
    /// families at 3 severities, width and depth at medium/high severity for
    /// the wheel-path, edge-alligator and longitudinal-spall families, then
    /// surface and functional-class one-hots.
    pub fn default_registry() -> Self {
        let mut sources = vec![FeatureSource::RutDepth, FeatureSource::Faulting];
        for &family in CrackFamily::ALL {
            for &severity in Severity::ALL {
                sources.push(FeatureSource::Crack {
                    family,
                    severity,
                    measure: Measure::Extent,
                });
            }
        }
        for family in WIDTH_DEPTH_FAMILIES {
            for severity in [Severity::Medium, Severity::High] {
                for measure in [Measure::Width, Measure::Depth] {
                    sources.push(FeatureSource::Crack {
                        family,
                        severity,
                        measure,
                    });
                }
            }
        }
        sources.extend(SurfaceType::ALL.iter().map(|&surface| FeatureSource::Surface { surface }));
        sources.extend(FunctionalClass::ALL.iter().map(|&class| FeatureSource::Functional { class }));
        Self::new(sources).expect("default registry is valid")
    }

    pub fn entries(&self) -> &[FeatureEntry] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    pub fn numeric_ids(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|e| e.kind == FeatureKind::Numeric)
            .map(|e| e.id.as_str())
    }

    pub fn is_numeric(&self, index: usize) -> bool {
        self.entries[index].kind == FeatureKind::Numeric
    }

    /// Crack families referenced by at least one entry.
    pub fn families(&self) -> BTreeSet<CrackFamily> {
        self.entries
            .iter()
            .filter_map(|e| match e.source {
                FeatureSource::Crack { family, .. } => Some(family),
                _ => None,
            })
            .collect()
    }

    /// Short hex digest of the ordered feature ids and kinds.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for e in &self.entries {
            hasher.update(e.id.as_bytes());
            hasher.update(match e.kind {
                FeatureKind::Numeric => b":n\n",
                FeatureKind::OneHot => b":o\n",
            });
        }
        hex_prefix(&hasher.finalize(), 16)
    }

    pub fn encode_record(&self, record: &SegmentRecord) -> Result<FeatureVector> {
        let families = self.families();
        if let Some(c) = record.cracks.iter().find(|c| !families.contains(&c.family)) {
            return Err(Error::Schema(format!(
                "record {}@{} carries crack family `{}` which the schema does not register",
                record.route_id, record.start_milepost, c.family
            )));
        }
        let values = self.entries.iter().map(|e| e.source.value(record)).collect();
        Ok(FeatureVector {
            values,
            label_iri: record.iri,
        })
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    bytes
        .iter()
        .flat_map(|b| [b >> 4, b & 0xf])
        .take(chars)
        .map(|n| char::from_digit(n as u32, 16).unwrap())
        .collect()
}

/// Encoded features of one segment plus its observed IRI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Inches per mile.
    pub label_iri: f64,
}
