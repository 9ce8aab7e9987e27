//! Dense parameter vectors and the handful of BLAS-1 style kernels the
//! optimizer needs.

use serde::{Deserialize, Serialize};
use std::ops::{Deref, Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Model parameters `x ∈ ℝ^d`. The length is fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params<F> {
    values: Vec<F>,
}

impl<F: Scalar> Params<F> {
    pub fn new(values: Vec<F>) -> Self {
        Self { values }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            values: vec![F::zero(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<F> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> F {
        norm(&self.values)
    }

    pub fn cast<G: Scalar>(&self) -> Params<G> {
        Params::new(self.values.iter().map(|v| G::of(v.to_f64_lossy())).collect())
    }
}

impl<F> Deref for Params<F> {
    type Target = [F];
    fn deref(&self) -> &[F] {
        &self.values
    }
}

impl<F> Index<usize> for Params<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.values[i]
    }
}

impl<F> IndexMut<usize> for Params<F> {
    fn index_mut(&mut self, i: usize) -> &mut F {
        &mut self.values[i]
    }
}

impl<F: Scalar> From<Vec<F>> for Params<F> {
    fn from(values: Vec<F>) -> Self {
        Self::new(values)
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

/// `alpha * x + y`, elementwise.
pub fn vec_axpy<F: Scalar>(alpha: F, x: &[F], y: &[F]) -> Result<Vec<F>> {
    check_dims(x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(&xi, &yi)| alpha * xi + yi).collect())
}

/// In-place `y += alpha * x`. Caller guarantees equal lengths.
#[inline]
pub(crate) fn axpy_in_place<F: Scalar>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn dot<F: Scalar>(x: &[F], y: &[F]) -> F {
    x.iter().zip(y).fold(F::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm_sq<F: Scalar>(x: &[F]) -> F {
    dot(x, x)
}

#[inline]
pub fn norm<F: Scalar>(x: &[F]) -> F {
    norm_sq(x).sqrt()
}

pub fn dist<F: Scalar>(x: &[F], y: &[F]) -> F {
    x.iter()
        .zip(y)
        .fold(F::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axpy_examples() {
        assert_eq!(vec_axpy(1.0, &[1.0, 2.0], &[0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(vec_axpy(-0.5, &[2.0, 4.0], &[1.0, 1.0]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(vec_axpy(0.0, &[9.0, 9.0], &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn axpy_length_mismatch() {
        let err = vec_axpy(1.0, &[1.0, 2.0], &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, found: 1 }));
    }

    #[test]
    fn works_in_f32() {
        let out = vec_axpy(2.0f32, &[1.0, -1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(out, vec![2.5f32, -1.5]);
        assert_eq!(Params::new(vec![3.0f32, 4.0]).norm(), 5.0);
    }

    proptest! {
        #[test]
        fn axpy_stays_finite(
            alpha in -1e6f64..1e6,
            xs in proptest::collection::vec(-1e6f64..1e6, 1..16),
        ) {
            let ys: Vec<f64> = xs.iter().map(|v| -v * 0.5).collect();
            let out = vec_axpy(alpha, &xs, &ys).unwrap();
            prop_assert!(out.iter().all(|v| v.is_finite()));
        }
    }
}
