//! Convex per-sample objectives and per-sample gradient clipping.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sample};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{check_dims, dot, norm, norm_sq, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// `½‖x − q‖²`
    MeanEstimation,
    /// `(⟨x, a⟩ − y)²`
    RidgeRegression,
    /// Binary cross-entropy of `sigmoid(⟨x, a⟩)`.
    LassoLogistic,
}

/// How logistic labels are written in the data. Internally the loss always
/// uses `{0, 1}` targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelEncoding {
    #[default]
    PlusMinusOne,
    ZeroOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskObjective<F> {
    pub kind: TaskKind,
    /// ℓ2 clipping threshold; also the Lipschitz constant charged by the
    /// privacy accountant.
    pub clip_norm: F,
    #[serde(default)]
    pub labels: LabelEncoding,
}

impl<F: Scalar> TaskObjective<F> {
    pub fn new(kind: TaskKind, clip_norm: F) -> Result<Self> {
        if !(clip_norm > F::zero()) || !clip_norm.is_finite() {
            return Err(Error::Config(format!("clip norm must be positive, got {clip_norm}")));
        }
        Ok(Self {
            kind,
            clip_norm,
            labels: LabelEncoding::default(),
        })
    }

    pub fn with_labels(mut self, labels: LabelEncoding) -> Self {
        self.labels = labels;
        self
    }

    fn response(&self, q: &Sample<F>) -> Result<F> {
        q.response().ok_or(Error::MissingResponse)
    }

    fn binary_target(&self, q: &Sample<F>) -> Result<F> {
        let y = self.response(q)?;
        let one = F::one();
        match self.labels {
            LabelEncoding::PlusMinusOne if y == one || y == -one => Ok((y + one) / F::of(2.0)),
            LabelEncoding::ZeroOne if y == F::zero() || y == one => Ok(y),
            _ => Err(Error::InvalidLabel(y.to_f64_lossy())),
        }
    }

    pub fn loss(&self, x: &[F], q: &Sample<F>) -> Result<F> {
        check_dims(x.len(), q.dim())?;
        let a = q.features();
        Ok(match self.kind {
            TaskKind::MeanEstimation => {
                let sq = x
                    .iter()
                    .zip(a)
                    .fold(F::zero(), |acc, (&xi, &qi)| acc + (xi - qi) * (xi - qi));
                sq / F::of(2.0)
            }
            TaskKind::RidgeRegression => {
                let r = dot(x, a) - self.response(q)?;
                r * r
            }
            TaskKind::LassoLogistic => {
                let t = self.binary_target(q)?;
                let z = dot(x, a);
                softplus(z) - t * z
            }
        })
    }

    /// Exact gradient, before clipping.
    pub fn grad(&self, x: &[F], q: &Sample<F>) -> Result<Params<F>> {
        let mut g = vec![F::zero(); x.len()];
        self.grad_into(x, q, &mut g)?;
        Ok(Params::new(g))
    }

    pub fn clipped_grad(&self, x: &[F], q: &Sample<F>) -> Result<Params<F>> {
        let mut g = vec![F::zero(); x.len()];
        self.clipped_grad_into(x, q, &mut g)?;
        Ok(Params::new(g))
    }

    pub(crate) fn grad_into(&self, x: &[F], q: &Sample<F>, out: &mut [F]) -> Result<()> {
        check_dims(x.len(), q.dim())?;
        let a = q.features();
        match self.kind {
            TaskKind::MeanEstimation => {
                for ((o, &xi), &qi) in out.iter_mut().zip(x).zip(a) {
                    *o = xi - qi;
                }
            }
            TaskKind::RidgeRegression => {
                let r = F::of(2.0) * (dot(x, a) - self.response(q)?);
                for (o, &ai) in out.iter_mut().zip(a) {
                    *o = r * ai;
                }
            }
            TaskKind::LassoLogistic => {
                let t = self.binary_target(q)?;
                let r = sigmoid(dot(x, a)) - t;
                for (o, &ai) in out.iter_mut().zip(a) {
                    *o = r * ai;
                }
            }
        }
        Ok(())
    }

    pub(crate) fn clipped_grad_into(&self, x: &[F], q: &Sample<F>, out: &mut [F]) -> Result<()> {
        self.grad_into(x, q, out)?;
        clip_in_place(out, self.clip_norm);
        Ok(())
    }

    /// Smoothness constant of `f(·; q)`.
    pub fn sample_smoothness(&self, q: &Sample<F>) -> F {
        match self.kind {
            TaskKind::MeanEstimation => F::one(),
            TaskKind::RidgeRegression => F::of(2.0) * norm_sq(q.features()),
            TaskKind::LassoLogistic => norm_sq(q.features()) / F::of(4.0),
        }
    }

    /// `max_i L_i` over the dataset.
    pub fn max_smoothness(&self, data: &Dataset<F>) -> F {
        data.samples()
            .iter()
            .map(|q| self.sample_smoothness(q))
            .fold(F::zero(), F::max)
    }

    /// Smoothness of the empirical average `F(x) = (1/n) Σ f(x; d_i)`,
    /// i.e. the top eigenvalue of the averaged curvature matrix, estimated by
    /// power iteration. Exact for mean estimation.
    pub fn average_smoothness(&self, data: &Dataset<F>) -> F {
        let scale = match self.kind {
            TaskKind::MeanEstimation => return F::one(),
            TaskKind::RidgeRegression => F::of(2.0),
            TaskKind::LassoLogistic => F::of(0.25),
        };
        let d = data.dim();
        let n = F::of_usize(data.len());
        let mut v = vec![F::one() / F::of_usize(d).sqrt(); d];
        let mut lambda = F::zero();
        for _ in 0..500 {
            let mut w = vec![F::zero(); d];
            for q in data.samples() {
                let a = q.features();
                let c = dot(a, &v);
                for (wi, &ai) in w.iter_mut().zip(a) {
                    *wi += c * ai;
                }
            }
            w.iter_mut().for_each(|wi| *wi = *wi * scale / n);
            let nw = norm(&w);
            if nw == F::zero() {
                return F::zero();
            }
            let next: Vec<F> = w.iter().map(|&wi| wi / nw).collect();
            let converged = (nw - lambda).abs() <= F::of(1e-13) * nw;
            lambda = nw;
            v = next;
            if converged {
                break;
            }
        }
        lambda
    }
}

/// Scale `g` onto the ball of radius `c` if it lies outside it.
pub fn clip_in_place<F: Scalar>(g: &mut [F], c: F) {
    let n = norm(g);
    if n > c {
        let s = c / n;
        g.iter_mut().for_each(|v| *v *= s);
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus<F: Scalar>(z: F) -> F {
    z.max(F::zero()) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Origin;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn sample(a: &[f64], y: Option<f64>) -> Sample<f64> {
        Sample::new(a.to_vec(), y, Origin::Private)
    }

    fn task(kind: TaskKind) -> TaskObjective<f64> {
        TaskObjective::new(kind, 10.0).unwrap()
    }

    #[test]
    fn loss_examples() {
        let me = task(TaskKind::MeanEstimation);
        assert_eq!(me.loss(&[1.0, 2.0], &sample(&[0.0, 0.0], None)).unwrap(), 2.5);
        let ridge = task(TaskKind::RidgeRegression);
        assert_eq!(ridge.loss(&[1.0, 0.0], &sample(&[2.0, 3.0], Some(1.0))).unwrap(), 1.0);
        let logit = task(TaskKind::LassoLogistic);
        for y in [1.0, -1.0] {
            let l = logit.loss(&[0.0, 0.0], &sample(&[0.7, -3.0], Some(y))).unwrap();
            assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn grad_examples() {
        let me = task(TaskKind::MeanEstimation);
        assert_eq!(
            me.grad(&[1.0, 2.0], &sample(&[0.0, 0.0], None)).unwrap().as_slice(),
            &[1.0, 2.0]
        );
        let ridge = task(TaskKind::RidgeRegression);
        assert_eq!(
            ridge
                .grad(&[1.0, 0.0], &sample(&[2.0, 3.0], Some(1.0)))
                .unwrap()
                .as_slice(),
            &[4.0, 6.0]
        );
        let logit = task(TaskKind::LassoLogistic);
        assert_eq!(
            logit
                .grad(&[0.0, 0.0], &sample(&[1.0, -1.0], Some(1.0)))
                .unwrap()
                .as_slice(),
            &[-0.5, 0.5]
        );
    }

    #[test]
    fn clipping_examples() {
        let mut g = [6.0, 8.0];
        clip_in_place(&mut g, 10.0);
        assert_eq!(g, [6.0, 8.0]);
        let mut g = [9.0_f64, 12.0];
        clip_in_place(&mut g, 10.0);
        assert!((g[0] - 6.0).abs() < 1e-15 && (g[1] - 8.0).abs() < 1e-15);
        let mut g = [0.0, 0.0];
        clip_in_place(&mut g, 10.0);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn error_paths() {
        let logit = task(TaskKind::LassoLogistic);
        assert!(matches!(
            logit.loss(&[0.0], &sample(&[1.0], Some(0.0))),
            Err(Error::InvalidLabel(_))
        ));
        let zero_one = logit.with_labels(LabelEncoding::ZeroOne);
        assert!(zero_one.loss(&[0.0], &sample(&[1.0], Some(0.0))).is_ok());
        assert!(matches!(
            task(TaskKind::RidgeRegression).grad(&[0.0, 1.0], &sample(&[1.0], Some(0.0))),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            task(TaskKind::RidgeRegression).loss(&[0.0], &sample(&[1.0], None)),
            Err(Error::MissingResponse)
        ));
        assert!(TaskObjective::new(TaskKind::MeanEstimation, 0.0f64).is_err());
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let logit = task(TaskKind::LassoLogistic);
        let q = sample(&[1.0], Some(1.0));
        let l = logit.loss(&[800.0], &q).unwrap();
        assert!(l.is_finite() && (0.0..1e-300).contains(&l));
        let l = logit.loss(&[-800.0], &q).unwrap();
        assert!((l - 800.0).abs() < 1e-9);
        let g = logit.grad(&[-800.0], &q).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn average_smoothness_matches_hand_value() {
        // (2/n) Σ a aᵀ with a = e1, 2 e2: diag(1, 4) → top eigenvalue 4.
        let data = Dataset::from_rows(
            vec![(vec![1.0, 0.0], Some(0.0)), (vec![0.0, 2.0], Some(0.0))],
            Origin::Private,
        )
        .unwrap();
        let l = task(TaskKind::RidgeRegression).average_smoothness(&data);
        assert!((l - 4.0).abs() < 1e-10, "{l}");
        assert_eq!(task(TaskKind::RidgeRegression).max_smoothness(&data), 8.0);
    }

    fn random_case(kind: TaskKind, rng: &mut crate::rng::StreamRng, d: usize) -> (Vec<f64>, Sample<f64>) {
        let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let a: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let y = match kind {
            TaskKind::MeanEstimation => None,
            TaskKind::RidgeRegression => Some(rng.standard_normal()),
            TaskKind::LassoLogistic => Some(if rng.next_f64() < 0.5 { -1.0 } else { 1.0 }),
        };
        (x, sample(&a, y))
    }

    #[test]
    fn midpoint_convexity() {
        let mut rng = RngStream::new(17).generator();
        for kind in [
            TaskKind::MeanEstimation,
            TaskKind::RidgeRegression,
            TaskKind::LassoLogistic,
        ] {
            let t = task(kind);
            for _ in 0..200 {
                let (x, q) = random_case(kind, &mut rng, 4);
                let y: Vec<f64> = (0..4).map(|_| 3.0 * rng.standard_normal()).collect();
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let lhs = t.loss(&mid, &q).unwrap();
                let rhs = 0.5 * t.loss(&x, &q).unwrap() + 0.5 * t.loss(&y, &q).unwrap();
                assert!(lhs <= rhs + 1e-12, "{kind:?}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn mean_estimation_gradient_is_exactly_one_lipschitz() {
        let mut rng = RngStream::new(23).generator();
        let t = task(TaskKind::MeanEstimation);
        for _ in 0..100 {
            let (x, q) = random_case(TaskKind::MeanEstimation, &mut rng, 5);
            let y: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
            let gx = t.grad(&x, &q).unwrap();
            let gy = t.grad(&y, &q).unwrap();
            let lhs = crate::vector::dist(&gx, &gy);
            let rhs = crate::vector::dist(&x, &y);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }

    #[test]
    fn generic_over_f32() {
        let t = TaskObjective::new(TaskKind::RidgeRegression, 10.0f32).unwrap();
        let q = Sample::new(vec![2.0f32, 3.0], Some(1.0), Origin::Private);
        assert_eq!(t.grad(&[1.0, 0.0], &q).unwrap().as_slice(), &[4.0f32, 6.0]);
    }

    proptest! {
        #[test]
        fn clipped_norm_never_exceeds_threshold(
            x in proptest::collection::vec(-1e3f64..1e3, 3),
            a in proptest::collection::vec(-1e3f64..1e3, 3),
            y in -1e3f64..1e3,
            c in 1e-3f64..100.0,
        ) {
            for kind in [TaskKind::MeanEstimation, TaskKind::RidgeRegression] {
                let t = TaskObjective::new(kind, c).unwrap();
                let g = t.clipped_grad(&x, &sample(&a, Some(y))).unwrap();
                prop_assert!(g.norm() <= c + 1e-12);
            }
        }
    }
}
