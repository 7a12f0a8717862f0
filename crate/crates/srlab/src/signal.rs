//! Finite real vectors and the inner-product kernels the rest of the crate builds on.

use crate::error::{Error, Result};

/// A real vector with at least one coordinate, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    /// Wraps a coordinate vector, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParam("signal dimension must be at least 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(format!("non-finite value at coordinate {i}")));
        }
        Ok(Self { values })
    }

    /// The all-zero signal of the given dimension.
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("signal dimension must be at least 1".into()));
        }
        Ok(Self { values: vec![0.0; dim] })
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Coordinate slice.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Returns the signal scaled by `t`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| t * v).collect())
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }
}

/// Squared Euclidean norm of a signal.
pub fn norm_sq(y: &Signal) -> f64 {
    norm_sq_slice(y.values())
}

/// Inner product of two signals of equal dimension.
pub fn inner(a: &Signal, b: &Signal) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(dot(a.values(), b.values()))
}

/// Dot product with a fixed four-way accumulation order, so results are
/// reproducible bit for bit regardless of caller threading.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let len = a.len();
    let head = len - len % 4;
    let mut i = 0;
    while i < head {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    for j in head..len {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm_sq_slice(a: &[f64]) -> f64 {
    dot(a, a)
}

/// In-place `y += alpha * x`.
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_sq_of_3_4_is_25() {
        let y = Signal::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(norm_sq(&y), 25.0);
    }

    #[test]
    fn norm_sq_of_zero_vector_is_zero() {
        for n in [1, 2, 7] {
            assert_eq!(norm_sq(&Signal::zeros(n).unwrap()), 0.0);
        }
    }

    #[test]
    fn norm_sq_of_ones_is_dim() {
        let y = Signal::new(vec![1.0; 4]).unwrap();
        assert_eq!(norm_sq(&y), 4.0);
    }

    #[test]
    fn inner_of_orthogonal_axes_is_zero() {
        let a = Signal::new(vec![1.0, 0.0]).unwrap();
        let b = Signal::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn inner_example() {
        let a = Signal::new(vec![1.0, 2.0]).unwrap();
        let b = Signal::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), 11.0);
    }

    #[test]
    fn inner_with_self_equals_norm_sq() {
        let a = Signal::new(vec![0.3, -1.7, 2.2, 0.0, 5.5]).unwrap();
        assert_eq!(inner(&a, &a).unwrap(), norm_sq(&a));
    }

    #[test]
    fn inner_rejects_dimension_mismatch() {
        let a = Signal::new(vec![1.0, 2.0]).unwrap();
        let b = Signal::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            inner(&a, &b),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn new_rejects_empty_and_non_finite() {
        assert!(Signal::new(vec![]).is_err());
        assert!(Signal::new(vec![1.0, f64::NAN]).is_err());
        assert!(Signal::new(vec![f64::INFINITY]).is_err());
        assert!(Signal::zeros(0).is_err());
    }

    #[test]
    fn dot_matches_naive_sum() {
        let a: Vec<f64> = (0..23).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..23).map(|i| (i as f64).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
