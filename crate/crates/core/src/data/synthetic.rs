use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Origin};
use crate::error::{Error, Result};
use crate::rng::{purpose, RngStream, StreamRng};
use crate::scalar::Scalar;

/// Synthetic private/public constructions. `n` is the size of each set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// Mean estimation. Private rows `~ N(μ, s²I)` with
    /// `μ = center_norm · 1/√d`; public rows are shifted by `shift · e₁`.
    ShiftedMean {
        d: usize,
        n: usize,
        shift: f64,
        stddev: f64,
        #[serde(default = "default_center_norm")]
        center_norm: f64,
    },
    /// Ridge regression. `2n` Gaussian rows with responses from a planted
    /// linear model; private is the first half, public is the second half
    /// multiplied by `R = I + perturbation · E`, `E` entrywise standard
    /// normal. Responses are not perturbed.
    RotationCorrupted {
        d: usize,
        n: usize,
        perturbation: f64,
        stddev: f64,
        #[serde(default = "default_response_noise")]
        response_noise: f64,
    },
    /// Ridge regression over `classes` Gaussian clusters with targets
    /// `c / (classes − 1)`. Private rows cycle over all classes, public rows
    /// only over the first `public_classes`.
    ClassSubset {
        d: usize,
        n: usize,
        classes: usize,
        public_classes: usize,
        #[serde(default = "default_cluster_stddev")]
        stddev: f64,
    },
    /// Logistic regression with labels in `{−1, +1}`: labels are drawn with
    /// the given positive rates, features `~ N(y · m, I)` with
    /// `m = separation · 1/√d`.
    LabelShift {
        d: usize,
        n: usize,
        private_rate: f64,
        public_rate: f64,
        #[serde(default = "default_separation")]
        separation: f64,
    },
}

fn default_center_norm() -> f64 {
    2.0
}
fn default_response_noise() -> f64 {
    0.1
}
fn default_cluster_stddev() -> f64 {
    1.0
}
fn default_separation() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(flatten)]
    pub kind: SyntheticKind,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let (d, n) = match self.kind {
            SyntheticKind::ShiftedMean {
                d,
                n,
                shift,
                stddev,
                center_norm,
            } => {
                if shift < 0.0 || stddev < 0.0 || center_norm < 0.0 {
                    return bad("shift, stddev and center norm must be non-negative");
                }
                (d, n)
            }
            SyntheticKind::RotationCorrupted {
                d,
                n,
                perturbation,
                stddev,
                response_noise,
            } => {
                if perturbation < 0.0 || stddev < 0.0 || response_noise < 0.0 {
                    return bad("perturbation, stddev and response noise must be non-negative");
                }
                (d, n)
            }
            SyntheticKind::ClassSubset {
                d,
                n,
                classes,
                public_classes,
                stddev,
            } => {
                if classes < 2 || public_classes < 1 || public_classes > classes {
                    return bad("need 2 ≤ classes and 1 ≤ public classes ≤ classes");
                }
                if stddev < 0.0 {
                    return bad("stddev must be non-negative");
                }
                (d, n)
            }
            SyntheticKind::LabelShift {
                d,
                n,
                private_rate,
                public_rate,
                separation,
            } => {
                if !(0.0..=1.0).contains(&private_rate) || !(0.0..=1.0).contains(&public_rate) {
                    return bad("positive rates must lie in [0, 1]");
                }
                if separation < 0.0 {
                    return bad("separation must be non-negative");
                }
                (d, n)
            }
        };
        if d < 1 || n < 2 {
            return bad("need d ≥ 1 and n ≥ 2");
        }
        Ok(())
    }
}

fn gaussian_row(rng: &mut StreamRng, mean: &[f64], stddev: f64) -> Vec<f64> {
    mean.iter().map(|&m| m + stddev * rng.standard_normal()).collect()
}

fn cast_rows<F: Scalar>(rows: Vec<(Vec<f64>, Option<f64>)>) -> Vec<(Vec<F>, Option<F>)> {
    rows.into_iter()
        .map(|(x, y)| (x.into_iter().map(F::of).collect(), y.map(F::of)))
        .collect()
}

/// Private and public datasets for `spec`. Deterministic per spec.
pub fn generate<F: Scalar>(spec: &SyntheticSpec) -> Result<(Dataset<F>, Dataset<F>)> {
    spec.validate()?;
    let root = RngStream::new(spec.seed).substream(purpose::DATA);
    let mut shared = root.substream(0).generator();
    let mut priv_rng = root.substream(1).generator();
    let mut pub_rng = root.substream(2).generator();

    let (private, public) = match spec.kind {
        SyntheticKind::ShiftedMean {
            d,
            n,
            shift,
            stddev,
            center_norm,
        } => {
            let mu = vec![center_norm / (d as f64).sqrt(); d];
            let mut mu_pub = mu.clone();
            mu_pub[0] += shift;
            let private = (0..n)
                .map(|_| (gaussian_row(&mut priv_rng, &mu, stddev), None))
                .collect();
            let public = (0..n)
                .map(|_| (gaussian_row(&mut pub_rng, &mu_pub, stddev), None))
                .collect();
            (private, public)
        }
        SyntheticKind::RotationCorrupted {
            d,
            n,
            perturbation,
            stddev,
            response_noise,
        } => {
            let w: Vec<f64> = (0..d).map(|_| shared.standard_normal() / (d as f64).sqrt()).collect();
            let zero = vec![0.0; d];
            let mut rows: Vec<(Vec<f64>, Option<f64>)> = (0..2 * n)
                .map(|_| {
                    let x = gaussian_row(&mut priv_rng, &zero, stddev);
                    let y = crate::vector::dot(&x, &w) + response_noise * priv_rng.standard_normal();
                    (x, Some(y))
                })
                .collect();
            let mut public: Vec<(Vec<f64>, Option<f64>)> = rows.split_off(n);
            if perturbation != 0.0 {
                // R = I + perturbation · E, applied as row · R.
                let r: Vec<Vec<f64>> = (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let identity = if i == j { 1.0 } else { 0.0 };
                                identity + perturbation * pub_rng.standard_normal()
                            })
                            .collect()
                    })
                    .collect();
                for (x, _) in public.iter_mut() {
                    let rotated: Vec<f64> = (0..d).map(|j| (0..d).map(|i| x[i] * r[i][j]).sum()).collect();
                    *x = rotated;
                }
            }
            (rows, public)
        }
        SyntheticKind::ClassSubset {
            d,
            n,
            classes,
            public_classes,
            stddev,
        } => {
            let centers: Vec<Vec<f64>> = (0..classes)
                .map(|_| (0..d).map(|_| shared.standard_normal()).collect())
                .collect();
            let target = |c: usize| c as f64 / (classes - 1) as f64;
            let private = (0..n)
                .map(|i| {
                    let c = i % classes;
                    (gaussian_row(&mut priv_rng, &centers[c], stddev), Some(target(c)))
                })
                .collect();
            let public = (0..n)
                .map(|i| {
                    let c = i % public_classes;
                    (gaussian_row(&mut pub_rng, &centers[c], stddev), Some(target(c)))
                })
                .collect();
            (private, public)
        }
        SyntheticKind::LabelShift {
            d,
            n,
            private_rate,
            public_rate,
            separation,
        } => {
            let m = separation / (d as f64).sqrt();
            let draw = |rng: &mut StreamRng, rate: f64| -> (Vec<f64>, Option<f64>) {
                let y = if rng.next_f64() < rate { 1.0 } else { -1.0 };
                let mean = vec![y * m; d];
                (gaussian_row(rng, &mean, 1.0), Some(y))
            };
            let private = (0..n).map(|_| draw(&mut priv_rng, private_rate)).collect();
            let public = (0..n).map(|_| draw(&mut pub_rng, public_rate)).collect();
            (private, public)
        }
    };
    Ok((
        Dataset::from_rows(cast_rows(private), Origin::Private)?,
        Dataset::from_rows(cast_rows(public), Origin::Public)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticSpec::new(
            SyntheticKind::ClassSubset {
                d: 3,
                n: 20,
                classes: 5,
                public_classes: 2,
                stddev: 1.0,
            },
            9,
        );
        let a = generate::<f64>(&spec).unwrap();
        let b = generate::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate::<f64>(&SyntheticSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn zero_shift_means_agree() {
        let (n, stddev) = (10_000, 1.5);
        let spec = SyntheticSpec::new(
            SyntheticKind::ShiftedMean {
                d: 3,
                n,
                shift: 0.0,
                stddev,
                center_norm: 2.0,
            },
            1,
        );
        let (private, public) = generate::<f64>(&spec).unwrap();
        let (mp, mq) = (private.feature_mean(), public.feature_mean());
        for j in 0..3 {
            assert!((mp[j] - mq[j]).abs() <= 4.0 * stddev / (n as f64).sqrt());
        }
    }

    #[test]
    fn shift_moves_first_coordinate() {
        let spec = SyntheticSpec::new(
            SyntheticKind::ShiftedMean {
                d: 4,
                n: 20_000,
                shift: 1.0,
                stddev: 0.5,
                center_norm: 2.0,
            },
            2,
        );
        let (private, public) = generate::<f64>(&spec).unwrap();
        let gap = public.feature_mean()[0] - private.feature_mean()[0];
        assert!((gap - 1.0).abs() < 0.03, "{gap}");
        assert!((private.feature_mean()[1] - 1.0).abs() < 0.03);
    }

    #[test]
    fn zero_perturbation_leaves_public_untouched() {
        let base = SyntheticKind::RotationCorrupted {
            d: 5,
            n: 30,
            perturbation: 0.0,
            stddev: 1.0,
            response_noise: 0.1,
        };
        let (private, public) = generate::<f64>(&SyntheticSpec::new(base, 3)).unwrap();
        // Regenerate the untouched second half directly from the same streams.
        let root = RngStream::new(3).substream(purpose::DATA);
        let mut shared = root.substream(0).generator();
        let mut rng = root.substream(1).generator();
        let w: Vec<f64> = (0..5).map(|_| shared.standard_normal() / 5f64.sqrt()).collect();
        let rows: Vec<(Vec<f64>, f64)> = (0..60)
            .map(|_| {
                let x = gaussian_row(&mut rng, &[0.0; 5], 1.0);
                let y = crate::vector::dot(&x, &w) + 0.1 * rng.standard_normal();
                (x, y)
            })
            .collect();
        for (i, s) in public.samples().iter().enumerate() {
            assert_eq!(s.features(), rows[30 + i].0.as_slice());
            assert_eq!(s.response(), Some(rows[30 + i].1));
        }
        assert_eq!(private.get(0).features(), rows[0].0.as_slice());

        let corrupted = SyntheticKind::RotationCorrupted {
            d: 5,
            n: 30,
            perturbation: 0.05,
            stddev: 1.0,
            response_noise: 0.1,
        };
        let (_, public_r) = generate::<f64>(&SyntheticSpec::new(corrupted, 3)).unwrap();
        assert_ne!(public_r.get(0).features(), public.get(0).features());
        assert_eq!(public_r.get(0).response(), public.get(0).response());
    }

    #[test]
    fn full_class_subset_is_exchangeable() {
        let spec = SyntheticSpec::new(
            SyntheticKind::ClassSubset {
                d: 2,
                n: 20_000,
                classes: 4,
                public_classes: 4,
                stddev: 1.0,
            },
            5,
        );
        let (private, public) = generate::<f64>(&spec).unwrap();
        let mean_y = |d: &Dataset<f64>| d.samples().iter().map(|s| s.response().unwrap()).sum::<f64>() / d.len() as f64;
        assert_eq!(mean_y(&private), mean_y(&public));
        let (mp, mq) = (private.feature_mean(), public.feature_mean());
        assert!((mp[0] - mq[0]).abs() < 0.05 && (mp[1] - mq[1]).abs() < 0.05);
    }

    #[test]
    fn label_shift_rates() {
        let spec = SyntheticSpec::new(
            SyntheticKind::LabelShift {
                d: 3,
                n: 20_000,
                private_rate: 0.5,
                public_rate: 0.05,
                separation: 2.0,
            },
            6,
        );
        let (private, public) = generate::<f64>(&spec).unwrap();
        let rate =
            |d: &Dataset<f64>| d.samples().iter().filter(|s| s.response() == Some(1.0)).count() as f64 / d.len() as f64;
        assert!((rate(&private) - 0.5).abs() < 0.02);
        assert!((rate(&public) - 0.05).abs() < 0.01);
    }

    #[test]
    fn invalid_specs() {
        let bad = SyntheticSpec::new(
            SyntheticKind::ShiftedMean {
                d: 0,
                n: 5,
                shift: 1.0,
                stddev: 1.0,
                center_norm: 1.0,
            },
            0,
        );
        assert!(generate::<f64>(&bad).is_err());
        let bad = SyntheticSpec::new(
            SyntheticKind::LabelShift {
                d: 2,
                n: 5,
                private_rate: 1.5,
                public_rate: 0.1,
                separation: 1.0,
            },
            0,
        );
        assert!(generate::<f64>(&bad).is_err());
    }
}
