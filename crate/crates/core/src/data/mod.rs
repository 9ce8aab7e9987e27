//! Datasets: synthetic private/public pairs with controlled distribution
//! shift, CSV ingestion, and the gradient dissimilarity diagnostic.

mod csv;
mod dissimilarity;
mod synthetic;

pub use self::csv::{format_float, load_csv, parse_csv, write_csv, CsvOptions, LabelColumn};
pub use dissimilarity::estimate_dissimilarity;
pub use synthetic::{generate, SyntheticKind, SyntheticSpec};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sample};
use crate::scalar::Scalar;
use crate::vector::norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    None,
    /// Subtract the column mean and divide by the column standard deviation
    /// (population). Constant columns are only centered.
    #[serde(rename = "zscore", alias = "per-column-z-score")]
    PerColumnZScore,
    /// Divide every feature vector by the largest row norm.
    #[serde(rename = "unit-ball", alias = "unit-ball-scale")]
    UnitBallScale,
}

impl std::str::FromStr for Normalization {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "zscore" | "per-column-z-score" => Ok(Self::PerColumnZScore),
            "unit-ball" | "unit-ball-scale" => Ok(Self::UnitBallScale),
            other => Err(format!("unknown normalization {other:?} (none, zscore, unit-ball)")),
        }
    }
}

/// Apply `norm` to the rows of a feature matrix in place.
pub(crate) fn normalize_rows<F: Scalar>(rows: &mut [Vec<F>], mode: Normalization) {
    match mode {
        Normalization::None => {}
        Normalization::PerColumnZScore => {
            let Some(d) = rows.first().map(Vec::len) else { return };
            let n = F::of_usize(rows.len());
            for j in 0..d {
                let mean = rows.iter().map(|r| r[j]).sum::<F>() / n;
                let var = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<F>() / n;
                let sd = var.sqrt();
                for r in rows.iter_mut() {
                    r[j] -= mean;
                    if sd > F::zero() {
                        r[j] /= sd;
                    }
                }
            }
        }
        Normalization::UnitBallScale => {
            let max = rows.iter().map(|r| norm(r)).fold(F::zero(), F::max);
            if max > F::zero() {
                rows.iter_mut().flatten().for_each(|v| *v /= max);
            }
        }
    }
}

/// Scale private and public features by one common factor so that every
/// row of either set lies in the unit ball.
pub fn unit_ball_scale_jointly<F: Scalar>(private: &Dataset<F>, public: &Dataset<F>) -> (Dataset<F>, Dataset<F>) {
    let max = private
        .samples()
        .iter()
        .chain(public.samples())
        .map(|s| norm(s.features()))
        .fold(F::zero(), F::max);
    let scale = |d: &Dataset<F>| {
        if !(max > F::zero()) {
            return d.clone();
        }
        let samples = d
            .samples()
            .iter()
            .map(|s| {
                Sample::new(
                    s.features().iter().map(|&v| v / max).collect::<Vec<_>>(),
                    s.response(),
                    s.origin(),
                )
            })
            .collect();
        Dataset::new(samples).expect("scaling preserves validity")
    };
    (scale(private), scale(public))
}
