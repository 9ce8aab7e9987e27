use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::Params;

/// Where a sample came from. Fixed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Private,
    Public,
}

/// One data point: a feature vector and an optional scalar response.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<F> {
    features: Params<F>,
    response: Option<F>,
    origin: Origin,
}

impl<F: Scalar> Sample<F> {
    pub fn new(features: impl Into<Params<F>>, response: Option<F>, origin: Origin) -> Self {
        Self {
            features: features.into(),
            response,
            origin,
        }
    }

    pub fn features(&self) -> &[F] {
        self.features.as_slice()
    }

    pub fn response(&self) -> Option<F> {
        self.response
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }
}

/// Non-empty collection of samples sharing one feature dimension and one
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    samples: Vec<Sample<F>>,
    dim: usize,
    origin: Origin,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(samples: Vec<Sample<F>>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Config("dataset must contain at least one sample".into()))?;
        let dim = first.dim();
        let origin = first.origin();
        for s in &samples {
            if s.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: s.dim(),
                });
            }
            if s.origin() != origin {
                return Err(Error::Config("dataset mixes private and public samples".into()));
            }
            if s.features().iter().any(|v| !v.is_finite()) || s.response().is_some_and(|r| !r.is_finite()) {
                return Err(Error::NonFinite("sample"));
            }
        }
        Ok(Self { samples, dim, origin })
    }

    /// Build from raw rows, one optional response per row.
    pub fn from_rows(rows: Vec<(Vec<F>, Option<F>)>, origin: Origin) -> Result<Self> {
        Self::new(rows.into_iter().map(|(x, y)| Sample::new(x, y, origin)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn samples(&self) -> &[Sample<F>] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &Sample<F> {
        &self.samples[i]
    }

    /// Samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    /// Same samples with the origin tag replaced.
    pub fn relabeled(&self, origin: Origin) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| Sample::new(s.features.clone(), s.response, origin))
                .collect(),
            dim: self.dim,
            origin,
        }
    }

    /// Component-wise mean of the feature vectors.
    pub fn feature_mean(&self) -> Params<F> {
        let mut mean = vec![F::zero(); self.dim];
        for s in &self.samples {
            for (m, &v) in mean.iter_mut().zip(s.features()) {
                *m += v;
            }
        }
        let n = F::of_usize(self.len());
        mean.iter_mut().for_each(|m| *m /= n);
        Params::new(mean)
    }

    pub fn has_responses(&self) -> bool {
        self.samples.iter().all(|s| s.response.is_some())
    }
}
