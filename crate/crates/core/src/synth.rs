//! Seeded synthetic survey corpora with a known distress-to-IRI relationship.
//!
//! Each 0.1-mile segment is emitted as 20 raw 0.005-mile records. Segment
//! attributes (rut level, faulting, which cracks occur) are drawn once; each
//! record then jitters rutting and faulting and keeps each of the segment's
//! cracks with probability `record_presence`. The segment's true IRI is
//! computed from its aggregated features:
//!
//! ```text
//! iri = baseline + surface_offset + functional_offset
//!     + sum_j planted_weight_j * feature_j / nominal_scale_j
//! ```
//!
//! clipped to `iri_range`, where `nominal_scale_j` is the feature's typical
//! aggregated value when present (so a weight is "IRI added by a typical
//! occurrence"). Record IRIs add Gaussian noise and are clipped to the same
//! range, and a `spike_rate` fraction are replaced by spikes in (300, 600].

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    CrackFamily, CrackObservation, ExtentKind, FeatureSchema, FeatureSource, FunctionalClass, Measure, SegmentRecord,
    Severity, SurfaceType,
};
use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::preprocess::ProvenanceStep;

pub const RECORDS_PER_SEGMENT: usize = 20;
/// Miles.
pub const RECORD_LENGTH: f64 = 0.005;
pub const SPIKE_RANGE: (f64, f64) = (300.0, 600.0);
pub const ROUTES: [(&str, FunctionalClass); 3] = [
    ("I-65", FunctionalClass::Interstate),
    ("US-31", FunctionalClass::UsRoute),
    ("SR-37", FunctionalClass::StateRoute),
];

/// Nominal scale of rutting and faulting, inches.
const NOMINAL_INCHES: f64 = 0.05;
/// Record-to-record spread of rutting and faulting around the segment level, inches.
const RECORD_JITTER: f64 = 0.005;
/// Width and depth spread as a fraction of the severity mean.
const SIZE_SPREAD: f64 = 0.25;
const STRETCH_SEGMENTS: (usize, usize) = (8, 40);
const SURFACE_MIX: [(SurfaceType, f64); 4] = [
    (SurfaceType::Asphalt, 0.5),
    (SurfaceType::JointedConcrete, 0.2),
    (SurfaceType::ContinuousConcrete, 0.1),
    (SurfaceType::Composite, 0.2),
];
/// Probability that a stretch keeps its route's functional class.
const PRIMARY_CLASS_SHARE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorProfile {
    /// 0.1-mile segments; each emits [`RECORDS_PER_SEGMENT`] raw records.
    pub n_segments: usize,
    pub seed: u64,
    /// Inches/mile.
    pub iri_range: (f64, f64),
    /// Inches.
    pub rut_range: (f64, f64),
    pub rut_mean: f64,
    pub rut_spread: f64,
    /// Inches; faulting is zero-centered.
    pub fault_range: (f64, f64),
    pub fault_spread: f64,
    /// Inches, by severity (low, medium, high).
    pub crack_width_means: [f64; 3],
    pub crack_depth_means: [f64; 3],
    /// Per segment, by severity: probability that a crack family occurs at all.
    pub crack_presence: [f64; 3],
    /// Probability that an occurring crack shows up in a given record.
    pub record_presence: f64,
    /// Rate of the exponential extent law, per foot or per percent.
    pub crack_extent_decay: f64,
    /// Inches/mile.
    pub baseline: f64,
    pub surface_offsets: BTreeMap<SurfaceType, f64>,
    pub functional_offsets: BTreeMap<FunctionalClass, f64>,
    /// Keyed by numeric feature id; missing ids weigh zero.
    pub planted_weights: BTreeMap<String, f64>,
    /// Inches/mile, per raw record.
    pub noise_sigma: f64,
    pub spike_rate: f64,
}

impl Default for GeneratorProfile {
    fn default() -> Self {
        Self {
            n_segments: 2520,
            seed: 42,
            iri_range: (30.0, 300.0),
            rut_range: (0.02, 0.2),
            rut_mean: 0.11,
            rut_spread: 0.06,
            fault_range: (-0.25, 0.25),
            fault_spread: 0.08,
            crack_width_means: [0.21, 0.44, 0.52],
            crack_depth_means: [0.1, 0.25, 0.4],
            crack_presence: [0.8, 0.6, 0.4],
            record_presence: 0.5,
            crack_extent_decay: 0.1,
            baseline: 50.0,
            surface_offsets: BTreeMap::from([
                (SurfaceType::Asphalt, -10.0),
                (SurfaceType::JointedConcrete, 10.0),
                (SurfaceType::ContinuousConcrete, 0.0),
                (SurfaceType::Composite, 0.0),
            ]),
            functional_offsets: BTreeMap::from([
                (FunctionalClass::Interstate, -10.0),
                (FunctionalClass::UsRoute, 0.0),
                (FunctionalClass::StateRoute, 10.0),
            ]),
            planted_weights: default_weights(),
            noise_sigma: 15.0,
            spike_rate: 0.01,
        }
    }
}

fn default_weights() -> BTreeMap<String, f64> {
    [
        ("rut_depth", 60.0),
        ("faulting", 4.0),
        ("wp_alligator_high_width", 14.0),
        ("edge_alligator_high_width", 12.0),
        ("longitudinal_spall_high_depth", 8.0),
        ("transverse_high_extent", 6.0),
        ("wp_longitudinal_medium_width", 5.0),
        ("block_medium_extent", 4.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl GeneratorProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.n_segments == 0 {
            return bad("n_segments must be at least 1".into());
        }
        for (name, (lo, hi)) in [("iri_range", self.iri_range), ("rut_range", self.rut_range)] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return bad(format!("{name} must satisfy 0 < low < high, got ({lo}, {hi})"));
            }
        }
        let (flo, fhi) = self.fault_range;
        if !(flo.is_finite() && fhi.is_finite() && flo < 0.0 && 0.0 < fhi) {
            return bad(format!("fault_range must straddle zero, got ({flo}, {fhi})"));
        }
        let nonneg = [
            ("rut_spread", self.rut_spread),
            ("fault_spread", self.fault_spread),
            ("noise_sigma", self.noise_sigma),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.rut_range.0..=self.rut_range.1).contains(&self.rut_mean) {
            return bad(format!("rut_mean {} lies outside rut_range", self.rut_mean));
        }
        for (name, means) in [("crack_width_means", self.crack_width_means), ("crack_depth_means", self.crack_depth_means)] {
            if means.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                return bad(format!("{name} must be positive, got {means:?}"));
            }
        }
        if self.crack_presence.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad(format!("crack_presence must lie in [0, 1], got {:?}", self.crack_presence));
        }
        if !(self.record_presence > 0.0 && self.record_presence <= 1.0) {
            return bad(format!("record_presence must lie in (0, 1], got {}", self.record_presence));
        }
        if !(self.crack_extent_decay.is_finite() && self.crack_extent_decay > 0.0) {
            return bad(format!("crack_extent_decay must be positive, got {}", self.crack_extent_decay));
        }
        if !(0.0..=0.05).contains(&self.spike_rate) {
            return bad(format!("spike_rate must lie in [0, 0.05], got {}", self.spike_rate));
        }
        let values = std::iter::once(self.baseline)
            .chain(self.surface_offsets.values().copied())
            .chain(self.functional_offsets.values().copied())
            .chain(self.planted_weights.values().copied());
        if values.into_iter().any(|v| !v.is_finite()) {
            return bad("baseline, offsets and weights must be finite".into());
        }
        let schema = FeatureSchema::default_registry();
        let numeric: Vec<&str> = schema.numeric_ids().collect();
        if let Some(k) = self.planted_weights.keys().find(|k| !numeric.contains(&k.as_str())) {
            return bad(format!("planted weight for unknown numeric feature `{k}`"));
        }
        Ok(())
    }

    /// Typical aggregated value of a numeric feature when present.
    pub fn nominal_scale(&self, source: &FeatureSource) -> Option<f64> {
        let q = self.record_presence;
        let mean_extent = 1.0 / self.crack_extent_decay;
        match *source {
            FeatureSource::RutDepth | FeatureSource::Faulting => Some(NOMINAL_INCHES),
            FeatureSource::Crack {
                family,
                severity,
                measure,
            } => Some(match measure {
                Measure::Extent => match family.extent_kind() {
                    ExtentKind::Feet => RECORDS_PER_SEGMENT as f64 * q * mean_extent,
                    ExtentKind::Percent => q * mean_extent,
                },
                Measure::Width => q * self.crack_width_means[severity_index(severity)],
                Measure::Depth => q * self.crack_depth_means[severity_index(severity)],
            }),
            FeatureSource::Surface { .. } | FeatureSource::Functional { .. } => None,
        }
    }

    fn offset(&self, surface: SurfaceType, class: FunctionalClass) -> f64 {
        self.baseline
            + self.surface_offsets.get(&surface).copied().unwrap_or(0.0)
            + self.functional_offsets.get(&class).copied().unwrap_or(0.0)
    }
}

fn severity_index(s: Severity) -> usize {
    match s {
        Severity::Low => 0,
        Severity::Medium => 1,
        Severity::High => 2,
    }
}

/// The exact relationship a profile plants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Every numeric feature id of the default schema.
    pub weights: BTreeMap<String, f64>,
    pub nominal_scales: BTreeMap<String, f64>,
    /// Inches/mile per unit of feature: `weight / nominal_scale`.
    pub unit_weights: BTreeMap<String, f64>,
    pub baseline: f64,
    /// Keyed by one-hot feature id.
    pub offsets: BTreeMap<String, f64>,
}

impl GroundTruth {
    /// Numeric feature with the largest `|weight|` (first in id order on ties).
    pub fn dominant_feature(&self) -> Option<&str> {
        self.weights
            .iter()
            .filter(|(_, w)| **w != 0.0)
            .fold(None, |best: Option<(&String, f64)>, (k, &w)| match best {
                Some((_, bw)) if bw >= w.abs() => best,
                _ => Some((k, w.abs())),
            })
            .map(|(k, _)| k.as_str())
    }
}

pub fn ground_truth(profile: &GeneratorProfile) -> Result<GroundTruth> {
    profile.validate()?;
    let schema = FeatureSchema::default_registry();
    let mut weights = BTreeMap::new();
    let mut nominal_scales = BTreeMap::new();
    let mut unit_weights = BTreeMap::new();
    let mut offsets = BTreeMap::new();
    for e in schema.entries() {
        match e.source {
            FeatureSource::Surface { surface } => {
                offsets.insert(e.id.clone(), profile.surface_offsets.get(&surface).copied().unwrap_or(0.0));
            }
            FeatureSource::Functional { class } => {
                offsets.insert(e.id.clone(), profile.functional_offsets.get(&class).copied().unwrap_or(0.0));
            }
            ref source => {
                let w = profile.planted_weights.get(&e.id).copied().unwrap_or(0.0);
                let s = profile.nominal_scale(source).expect("numeric feature");
                weights.insert(e.id.clone(), w);
                nominal_scales.insert(e.id.clone(), s);
                unit_weights.insert(e.id.clone(), w / s);
            }
        }
    }
    Ok(GroundTruth {
        weights,
        nominal_scales,
        unit_weights,
        baseline: profile.baseline,
        offsets,
    })
}

/// Normal draw restricted to `[lo, hi]` by rejection; falls back to the
/// clamped mean if the window is very improbable.
fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    if sd > 0.0 {
        for _ in 0..64 {
            let z: f64 = StandardNormal.sample(rng);
            let v = mean + sd * z;
            if (lo..=hi).contains(&v) {
                return v;
            }
        }
    }
    mean.clamp(lo, hi)
}

fn pick_surface(rng: &mut ChaCha8Rng) -> SurfaceType {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (s, w) in SURFACE_MIX {
        acc += w;
        if u < acc {
            return s;
        }
    }
    SURFACE_MIX[SURFACE_MIX.len() - 1].0
}

fn pick_class(rng: &mut ChaCha8Rng, primary: FunctionalClass) -> FunctionalClass {
    if rng.random::<f64>() < PRIMARY_CLASS_SHARE {
        return primary;
    }
    let others: Vec<FunctionalClass> = FunctionalClass::ALL.iter().copied().filter(|&c| c != primary).collect();
    others[rng.random_range(0..others.len())]
}

/// Generate the raw corpus for `profile`. Same profile, same corpus.
pub fn generate_corpus(profile: &GeneratorProfile) -> Result<Corpus> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let schema = FeatureSchema::default_registry();
    let planted: Vec<(FeatureSource, f64)> = schema
        .entries()
        .iter()
        .filter_map(|e| {
            let w = profile.planted_weights.get(&e.id).copied().unwrap_or(0.0);
            let s = profile.nominal_scale(&e.source)?;
            (w != 0.0).then_some((e.source, w / s))
        })
        .collect();
    let extent_law = Exp::new(profile.crack_extent_decay).map_err(|e| Error::Domain(e.to_string()))?;
    let crack_keys: Vec<(CrackFamily, Severity)> = CrackFamily::ALL
        .iter()
        .flat_map(|&f| Severity::ALL.iter().map(move |&s| (f, s)))
        .collect();

    let mut spikes = 0usize;
    let n_routes = ROUTES.len();
    let mut records = Vec::with_capacity(profile.n_segments * RECORDS_PER_SEGMENT);
    for (r, &(route_id, primary)) in ROUTES.iter().enumerate() {
        let n_route = profile.n_segments / n_routes + usize::from(r < profile.n_segments % n_routes);
        let mut stretch_left = 0usize;
        let mut surface = SurfaceType::Asphalt;
        let mut class = primary;
        for i in 0..n_route {
            if stretch_left == 0 {
                stretch_left = rng.random_range(STRETCH_SEGMENTS.0..=STRETCH_SEGMENTS.1);
                surface = pick_surface(&mut rng);
                class = pick_class(&mut rng, primary);
            }
            stretch_left -= 1;

            let rut_level = truncated_normal(
                &mut rng,
                profile.rut_mean,
                profile.rut_spread,
                profile.rut_range.0,
                profile.rut_range.1,
            );
            let fault_level = truncated_normal(
                &mut rng,
                0.0,
                profile.fault_spread,
                profile.fault_range.0,
                profile.fault_range.1,
            );
            let present: Vec<(CrackFamily, Severity)> = crack_keys
                .iter()
                .copied()
                .filter(|&(_, s)| rng.random::<f64>() < profile.crack_presence[severity_index(s)])
                .collect();

            let mut segment = Vec::with_capacity(RECORDS_PER_SEGMENT);
            for k in 0..RECORDS_PER_SEGMENT {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let rut = (rut_level + RECORD_JITTER * z1).max(0.0);
                let faulting = fault_level + RECORD_JITTER * z2;
                let mut cracks = Vec::new();
                for &(family, severity) in &present {
                    if rng.random::<f64>() >= profile.record_presence {
                        continue;
                    }
                    let raw: f64 = extent_law.sample(&mut rng);
                    let extent = match family.extent_kind() {
                        ExtentKind::Feet => raw,
                        ExtentKind::Percent => raw.min(100.0),
                    };
                    let si = severity_index(severity);
                    let wm = profile.crack_width_means[si];
                    let dm = profile.crack_depth_means[si];
                    let width = truncated_normal(&mut rng, wm, SIZE_SPREAD * wm, 0.0, wm * (1.0 + 4.0 * SIZE_SPREAD));
                    let depth = truncated_normal(&mut rng, dm, SIZE_SPREAD * dm, 0.0, dm * (1.0 + 4.0 * SIZE_SPREAD));
                    cracks.push(CrackObservation::new(family, severity, extent, width, depth));
                }
                let index = i * RECORDS_PER_SEGMENT + k;
                segment.push(SegmentRecord::new(
                    route_id,
                    index as f64 * RECORD_LENGTH,
                    RECORD_LENGTH,
                    surface,
                    class,
                    0.0,
                    rut,
                    faulting,
                    cracks,
                )?);
            }

            let mut iri = profile.offset(surface, class);
            for (source, unit_weight) in &planted {
                iri += unit_weight * window_value(source, &segment);
            }
            let iri = iri.clamp(profile.iri_range.0, profile.iri_range.1);
            for rec in &mut segment {
                let z: f64 = StandardNormal.sample(&mut rng);
                let u: f64 = rng.random();
                let spike: f64 = rng.random();
                rec.iri = if u < profile.spike_rate {
                    spikes += 1;
                    SPIKE_RANGE.1 - spike * (SPIKE_RANGE.1 - SPIKE_RANGE.0)
                } else {
                    (iri + profile.noise_sigma * z).clamp(profile.iri_range.0, profile.iri_range.1)
                };
            }
            records.extend(segment);
        }
    }
    let mut corpus = Corpus::new(records, "synthetic")?;
    let n = corpus.len();
    corpus.provenance.push(
        ProvenanceStep::new("synthesize", 0, n)
            .param("seed", profile.seed)
            .param("n_segments", profile.n_segments)
            .param("noise_sigma", profile.noise_sigma)
            .param("spike_rate", profile.spike_rate)
            .param("spikes", spikes),
    );
    Ok(corpus)
}

/// Number of spike records injected, as recorded in the corpus provenance.
pub fn spike_count(corpus: &Corpus) -> Option<usize> {
    corpus
        .provenance
        .iter()
        .find(|s| s.step == "synthesize")?
        .params
        .iter()
        .find(|(k, _)| k == "spikes")?
        .1
        .parse()
        .ok()
}

/// A numeric feature's value over one window of equal-length records, as
/// aggregation computes it: foot extents sum, everything else averages.
fn window_value(source: &FeatureSource, window: &[SegmentRecord]) -> f64 {
    let sum: f64 = window.iter().map(|r| source.value(r)).sum();
    match *source {
        FeatureSource::Crack {
            family,
            measure: Measure::Extent,
            ..
        } if family.extent_kind() == ExtentKind::Feet => sum,
        _ => sum / window.len() as f64,
    }
}
