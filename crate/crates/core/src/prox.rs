//! Regularizers and their exact end-of-epoch proximal maps.
//!
//! The step solves `argmin_x n·ψ(x) + ‖x − v‖² / (2η)`. Note the factor `n`:
//! the regularizer is applied once per epoch of `n` gradient steps, so every
//! threshold below scales with `η·n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vector::{norm, Params};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Regularizer<F> {
    None,
    /// Indicator of the ball `‖x‖ ≤ radius`.
    BallIndicator {
        radius: F,
    },
    /// `(λ/2)‖x‖²`
    L2 {
        lambda: F,
    },
    /// `λ‖x‖₁`
    L1 {
        lambda: F,
    },
}

impl<F: Scalar> Regularizer<F> {
    pub fn ball(radius: F) -> Result<Self> {
        positive("ball radius", radius).map(|radius| Self::BallIndicator { radius })
    }

    pub fn l2(lambda: F) -> Result<Self> {
        positive("l2 weight", lambda).map(|lambda| Self::L2 { lambda })
    }

    pub fn l1(lambda: F) -> Result<Self> {
        positive("l1 weight", lambda).map(|lambda| Self::L1 { lambda })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::None => Ok(()),
            Self::BallIndicator { radius } => positive("ball radius", radius).map(drop),
            Self::L2 { lambda } => positive("l2 weight", lambda).map(drop),
            Self::L1 { lambda } => positive("l1 weight", lambda).map(drop),
        }
    }

    /// `ψ(x)`. The ball indicator is `+∞` outside the ball (allowing a
    /// relative slack of 1e-12 for rounding in the projection).
    pub fn value(&self, x: &[F]) -> F {
        match *self {
            Self::None => F::zero(),
            Self::BallIndicator { radius } => {
                if norm(x) <= radius * (F::one() + F::of(1e-12)) {
                    F::zero()
                } else {
                    F::infinity()
                }
            }
            Self::L2 { lambda } => lambda / F::of(2.0) * x.iter().map(|&v| v * v).sum::<F>(),
            Self::L1 { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<F>(),
        }
    }

    /// Strong-convexity modulus of `ψ`.
    pub fn strong_convexity(&self) -> F {
        match *self {
            Self::L2 { lambda } => lambda,
            _ => F::zero(),
        }
    }

    /// `argmin_x n·ψ(x) + ‖x − v‖² / (2η)`.
    pub fn prox_step(&self, v: &[F], eta: F, n: usize) -> Result<Params<F>> {
        let mut out = v.to_vec();
        self.prox_in_place(&mut out, eta, n)?;
        Ok(Params::new(out))
    }

    pub fn prox_in_place(&self, v: &mut [F], eta: F, n: usize) -> Result<()> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prox input"));
        }
        if !(eta > F::zero()) {
            return Err(Error::Config(format!("learning rate must be positive, got {eta}")));
        }
        let scale = eta * F::of_usize(n);
        match *self {
            Self::None => {}
            Self::BallIndicator { radius } => {
                let nv = norm(v);
                if nv > radius {
                    let s = radius / nv;
                    v.iter_mut().for_each(|x| *x *= s);
                }
            }
            Self::L2 { lambda } => {
                let denom = F::one() + scale * lambda;
                v.iter_mut().for_each(|x| *x /= denom);
            }
            Self::L1 { lambda } => {
                let t = scale * lambda;
                v.iter_mut().for_each(|x| *x = soft_threshold(*x, t));
            }
        }
        Ok(())
    }
}

fn positive<F: Scalar>(what: &str, v: F) -> Result<F> {
    if v > F::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

#[inline]
pub fn soft_threshold<F: Scalar>(x: F, t: F) -> F {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        F::zero()
    }
}
