//! Value types shared by every stage of the pipeline: survey records, crack
//! observations, the feature registry and IRI class binning.
//!
//! Nothing here performs I/O or learning.

mod binning;
mod schema;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binning::IriBinning;
pub use schema::{crack_column, FeatureEntry, FeatureKind, FeatureSchema, FeatureSource, FeatureVector, Measure};
pub(crate) use schema::hex_prefix;

/// Defines a fieldless enum with a stable snake_case token per variant, used
/// both in delimited files and in feature identifiers.
macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($token => Ok($name::$variant),)+
                    other => Err(Error::Domain(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

token_enum!(
    /// Pavement surface material.
    SurfaceType {
        Asphalt => "asphalt",
        JointedConcrete => "jointed_concrete",
        ContinuousConcrete => "continuous_concrete",
        Composite => "composite",
    }
);

token_enum!(
    /// Road hierarchy of the surveyed corridor.
    FunctionalClass {
        Interstate => "interstate",
        UsRoute => "us_route",
        StateRoute => "state_route",
    }
);

token_enum!(
    /// Crack families reported by the survey vendor. WP = wheel path.
    CrackFamily {
        NonWpLongitudinal => "non_wp_longitudinal",
        WpLongitudinal => "wp_longitudinal",
        WpAlligator => "wp_alligator",
        EdgeLongitudinal => "edge_longitudinal",
        EdgeAlligator => "edge_alligator",
        Transverse => "transverse",
        Block => "block",
        LongitudinalSpall => "longitudinal_spall",
        TransverseSpall => "transverse_spall",
        Shoulder => "shoulder",
        Corner => "corner",
    }
);

token_enum!(
    Severity {
        Low => "low",
        Medium => "medium",
        High => "high",
    }
);

/// Unit in which a crack family's extent is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtentKind {
    /// Crack length in feet; sums when segments are merged.
    Feet,
    /// Percentage of the segment area; averaged when segments are merged.
    Percent,
}

impl CrackFamily {
    /// Area-type distresses are reported as a percentage, everything else as
    /// a length.
    pub fn extent_kind(self) -> ExtentKind {
        match self {
            CrackFamily::WpAlligator | CrackFamily::EdgeAlligator | CrackFamily::Block => {
                ExtentKind::Percent
            }
            _ => ExtentKind::Feet,
        }
    }
}

/// One crack family at one severity level within a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackObservation {
    pub family: CrackFamily,
    pub severity: Severity,
    /// Feet or percent, per [`CrackFamily::extent_kind`].
    pub extent: f64,
    /// Inches.
    pub width: f64,
    /// Inches.
    pub depth: f64,
}

impl CrackObservation {
    pub fn new(family: CrackFamily, severity: Severity, extent: f64, width: f64, depth: f64) -> Self {
        Self {
            family,
            severity,
            extent,
            width,
            depth,
        }
    }

    pub fn key(&self) -> (CrackFamily, Severity) {
        (self.family, self.severity)
    }

    /// Zeros mean "distress absent".
    pub fn is_absent(&self) -> bool {
        self.extent == 0.0 && self.width == 0.0 && self.depth == 0.0
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("extent", self.extent), ("width", self.width), ("depth", self.depth)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidRecord(format!(
                    "{}_{} {name} must be a nonnegative number, got {v}",
                    self.family, self.severity
                )));
            }
        }
        Ok(())
    }
}

/// One surveyed pavement segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub route_id: String,
    /// Miles.
    pub start_milepost: f64,
    /// Miles, strictly positive.
    pub length: f64,
    pub surface_type: SurfaceType,
    pub functional_class: FunctionalClass,
    /// Inches per mile.
    pub iri: f64,
    /// Inches.
    pub rut_depth: f64,
    /// Inches, signed.
    pub faulting: f64,
    /// Sorted by (family, severity); absent (all-zero) observations are dropped.
    pub cracks: Vec<CrackObservation>,
}

impl SegmentRecord {
    /// Validates the record invariants and normalizes the crack list.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        route_id: impl Into<String>,
        start_milepost: f64,
        length: f64,
        surface_type: SurfaceType,
        functional_class: FunctionalClass,
        iri: f64,
        rut_depth: f64,
        faulting: f64,
        cracks: Vec<CrackObservation>,
    ) -> Result<Self> {
        let mut record = Self {
            route_id: route_id.into(),
            start_milepost,
            length,
            surface_type,
            functional_class,
            iri,
            rut_depth,
            faulting,
            cracks,
        };
        record.cracks.retain(|c| !c.is_absent());
        record.cracks.sort_by_key(|c| c.key());
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidRecord(msg));
        if self.route_id.is_empty() {
            return bad("route_id is empty".into());
        }
        if !self.start_milepost.is_finite() {
            return bad(format!("start_milepost must be finite, got {}", self.start_milepost));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad(format!("length must be positive, got {}", self.length));
        }
        if !(self.iri.is_finite() && self.iri >= 0.0) {
            return bad(format!("iri must be nonnegative, got {}", self.iri));
        }
        if !(self.rut_depth.is_finite() && self.rut_depth >= 0.0) {
            return bad(format!("rut_depth must be nonnegative, got {}", self.rut_depth));
        }
        if !self.faulting.is_finite() {
            return bad(format!("faulting must be finite, got {}", self.faulting));
        }
        for c in &self.cracks {
            c.validate()?;
        }
        for pair in self.cracks.windows(2) {
            if pair[0].key() == pair[1].key() {
                return bad(format!(
                    "duplicate crack observation {}_{}",
                    pair[0].family, pair[0].severity
                ));
            }
        }
        Ok(())
    }

    pub fn end_milepost(&self) -> f64 {
        self.start_milepost + self.length
    }

    pub fn crack(&self, family: CrackFamily, severity: Severity) -> Option<&CrackObservation> {
        self.cracks.iter().find(|c| c.family == family && c.severity == severity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iri: f64, cracks: Vec<CrackObservation>) -> Result<SegmentRecord> {
        SegmentRecord::new(
            "I-70",
            0.0,
            0.005,
            SurfaceType::Asphalt,
            FunctionalClass::Interstate,
            iri,
            0.1,
            -0.02,
            cracks,
        )
    }

    #[test]
    fn tokens_round_trip() {
        for f in CrackFamily::ALL {
            assert_eq!(f.token().parse::<CrackFamily>().unwrap(), *f);
        }
        for s in SurfaceType::ALL {
            assert_eq!(s.token().parse::<SurfaceType>().unwrap(), *s);
        }
        assert!("gravel".parse::<SurfaceType>().is_err());
        assert_eq!(CrackFamily::ALL.len(), 11);
    }

    #[test]
    fn rejects_negative_iri_and_duplicate_cracks() {
        assert!(record(-5.0, vec![]).is_err());
        let c = CrackObservation::new(CrackFamily::Block, Severity::Low, 3.0, 0.1, 0.1);
        assert!(record(80.0, vec![c, c]).is_err());
    }

    #[test]
    fn normalizes_crack_order_and_drops_absent() {
        let a = CrackObservation::new(CrackFamily::Transverse, Severity::High, 3.0, 0.5, 0.2);
        let b = CrackObservation::new(CrackFamily::NonWpLongitudinal, Severity::Low, 1.0, 0.2, 0.1);
        let zero = CrackObservation::new(CrackFamily::Corner, Severity::Low, 0.0, 0.0, 0.0);
        let r = record(80.0, vec![a, zero, b]).unwrap();
        assert_eq!(r.cracks, vec![b, a]);
    }

    #[test]
    fn negative_faulting_is_legal() {
        let r = record(80.0, vec![]).unwrap();
        assert!(r.faulting < 0.0);
    }
}
