use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous half-open IRI class intervals `[origin + k*width, origin + (k+1)*width)`.
///
/// Values at or above the top edge fall into the last class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IriBinning {
    origin: f64,
    width: f64,
    n_classes: usize,
}

impl Default for IriBinning {
    /// 15 classes of 20 in/mile covering [0, 300).
    fn default() -> Self {
        Self {
            origin: 0.0,
            width: 20.0,
            n_classes: 15,
        }
    }
}

impl IriBinning {
    pub fn new(origin: f64, width: f64, n_classes: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::Domain(format!("bin origin must be finite, got {origin}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Domain(format!("bin width must be positive, got {width}")));
        }
        if n_classes == 0 {
            return Err(Error::Domain("binning needs at least one class".into()));
        }
        Ok(Self {
            origin,
            width,
            n_classes,
        })
    }

    /// Binning with `width`-wide classes covering `[origin, upper)`, rounding
    /// the class count up.
    pub fn covering(origin: f64, width: f64, upper: f64) -> Result<Self> {
        if upper.partial_cmp(&origin) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Domain(format!("upper edge {upper} must exceed origin {origin}")));
        }
        let n = ((upper - origin) / width - 1e-9).ceil().max(1.0) as usize;
        Self::new(origin, width, n)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn upper_edge(&self) -> f64 {
        self.origin + self.width * self.n_classes as f64
    }

    pub fn class_of(&self, iri: f64) -> Result<usize> {
        if iri.is_nan() || iri < self.origin {
            return Err(Error::Domain(format!(
                "IRI {iri} lies below the binning origin {}",
                self.origin
            )));
        }
        let k = ((iri - self.origin) / self.width).floor();
        if k >= self.n_classes as f64 {
            return Ok(self.n_classes - 1);
        }
        let mut k = k as usize;
        // Guard the floor against rounding right at a bin edge.
        if iri < self.lower_edge(k) {
            k -= 1;
        } else if k + 1 < self.n_classes && iri >= self.lower_edge(k + 1) {
            k += 1;
        }
        Ok(k)
    }

    /// Bin midpoint.
    pub fn representative_of(&self, class: usize) -> Result<f64> {
        if class >= self.n_classes {
            return Err(Error::Domain(format!(
                "class {class} out of range for {} classes",
                self.n_classes
            )));
        }
        Ok(self.origin + (class as f64 + 0.5) * self.width)
    }

    fn lower_edge(&self, class: usize) -> f64 {
        self.origin + class as f64 * self.width
    }
}
