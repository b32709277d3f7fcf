use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel used by the SVM.
///
/// * `Rbf`: `exp(-gamma * |x - y|^2)`
/// * `Polynomial`: `(x . y + 1)^degree`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Rbf { gamma: f64 },
    Polynomial { degree: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && gamma > 0.0) => {
                Err(Error::Domain(format!("RBF gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0 } => Err(Error::Domain("polynomial degree must be at least 1".into())),
            _ => Ok(()),
        }
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { degree } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                (dot + 1.0).powi(degree as i32)
            }
        }
    }
}

pub fn kernel_eval(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "kernel arguments differ in dimension ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    spec.validate()?;
    Ok(spec.eval(x, y))
}
