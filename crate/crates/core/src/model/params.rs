use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ModelError;

pub const PARAMS_FORMAT: &str = "paft-params/1";

/// Flat parameter vector with its layout.
///
/// Row-major blocks, in order:
/// - linear: `W [dim × classes]`, `b [classes]`
/// - hidden layer of width `h`: `W1 [dim × h]`, `b1 [h]`, `W2 [h × classes]`, `b2 [classes]`
///
/// Gradients use the same type and layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub classes: usize,
    pub hidden: Option<usize>,
    pub values: Vec<f64>,
}

impl ModelParams {
    pub fn expected_len(dim: usize, classes: usize, hidden: Option<usize>) -> usize {
        match hidden {
            None => dim * classes + classes,
            Some(h) => dim * h + h + h * classes + classes,
        }
    }

    pub fn zeros(dim: usize, classes: usize, hidden: Option<usize>) -> Self {
        Self { dim, classes, hidden, values: vec![0.0; Self::expected_len(dim, classes, hidden)] }
    }

    pub fn zeros_like(other: &Self) -> Self {
        Self::zeros(other.dim, other.classes, other.hidden)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let want = Self::expected_len(self.dim, self.classes, self.hidden);
        if self.values.len() != want {
            return Err(ModelError::ShapeError(format!("expected {want} values, found {}", self.values.len())));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> Result<(), ModelError> {
        if self.dim != other.dim || self.classes != other.classes || self.hidden != other.hidden {
            return Err(ModelError::ShapeError(format!(
                "({}, {}, {:?}) vs ({}, {}, {:?})",
                self.dim, self.classes, self.hidden, other.dim, other.classes, other.hidden
            )));
        }
        self.check()?;
        other.check()
    }

    /// Offsets of (first-layer weights, first-layer bias, out weights, out bias).
    pub(crate) fn offsets(&self) -> [usize; 4] {
        match self.hidden {
            None => {
                let b = self.dim * self.classes;
                [0, b, 0, b]
            }
            Some(h) => {
                let b1 = self.dim * h;
                let w2 = b1 + h;
                let b2 = w2 + h * self.classes;
                [0, b1, w2, b2]
            }
        }
    }

    /// SHA-256 (hex) over the header `paft-params/1`, `dim`, `classes`,
    /// `hidden` (0 when absent) as little-endian u64, then every value as
    /// little-endian IEEE-754 f64.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(PARAMS_FORMAT.as_bytes());
        for x in [self.dim, self.classes, self.hidden.unwrap_or(0)] {
            h.update((x as u64).to_le_bytes());
        }
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        assert_eq!(ModelParams::expected_len(8, 2, None), 18);
        assert_eq!(ModelParams::expected_len(8, 2, Some(3)), 24 + 3 + 6 + 2);
        let p = ModelParams::zeros(8, 2, Some(3));
        assert_eq!(p.offsets(), [0, 24, 27, 33]);
    }

    #[test]
    fn digest_sensitive_to_values_and_shape() {
        let a = ModelParams::zeros(4, 2, None);
        let mut b = a.clone();
        b.values[3] = 1e-300;
        assert_ne!(a.digest(), b.digest());
        assert_ne!(a.digest(), ModelParams::zeros(2, 4, None).digest());
        assert_eq!(a.digest(), a.clone().digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn shape_checks() {
        let a = ModelParams::zeros(4, 2, None);
        assert!(a.same_shape(&ModelParams::zeros(4, 2, Some(1))).is_err());
        let mut bad = a.clone();
        bad.values.pop();
        assert!(bad.check().is_err());
    }
}
