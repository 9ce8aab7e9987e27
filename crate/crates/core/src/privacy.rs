//! Rényi-DP accounting for noisy shuffled gradient epochs.
//!
//! Every epoch that touches private data is charged its privacy
//! amplification by iteration bound at the worst-case position of the
//! differing sample: `2·α·G² / (σ²·m)`, where `m = 1` for an epoch made
//! entirely of private steps and `m = n + 1 − n_d` when the `n_d` private
//! steps come first and are followed by `n − n_d` noisy public steps.
//! Epochs compose linearly and the total is converted to `(ε, δ)`-DP with
//! `ε = ε_RDP + ln(1/δ)/(α − 1)`, minimized exactly over `α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget<F> {
    pub epsilon: F,
    pub delta: F,
}

impl<F: Scalar> PrivacyBudget<F> {
    pub fn new(epsilon: F, delta: F) -> Result<Self> {
        if !(epsilon > F::zero()) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(delta > F::zero() && delta < F::one()) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    fn log_inv_delta(&self) -> F {
        -self.delta.ln()
    }
}

/// What the accountant needs to know about a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismProfile<F> {
    /// `G*`, the per-sample gradient bound (the clipping norm).
    pub lipschitz: F,
    /// Number of epochs that use private samples.
    pub noisy_private_epochs: usize,
    /// PABI divisor `m ≥ 1`.
    pub amplification: usize,
    pub sigma: F,
}

impl<F: Scalar> MechanismProfile<F> {
    /// `a` in `ε(α) = a·α + L/(α − 1)`: total RDP cost per unit order.
    fn rdp_slope(&self) -> Result<F> {
        if self.noisy_private_epochs == 0 {
            return Ok(F::zero());
        }
        if !(self.sigma > F::zero()) {
            return Err(Error::InfinitePrivacyLoss(self.noisy_private_epochs));
        }
        let g2 = self.lipschitz * self.lipschitz;
        Ok(F::of(2.0) * g2 * F::of_usize(self.noisy_private_epochs)
            / (self.sigma * self.sigma * F::of_usize(self.amplification.max(1))))
    }
}

/// Per-noisy-epoch RDP cost at order `alpha`.
pub fn rdp_epoch_loss<F: Scalar>(profile: &MechanismProfile<F>, alpha: F) -> Result<F> {
    if !(alpha > F::one()) {
        return Err(Error::Config(format!("RDP order must exceed 1, got {alpha}")));
    }
    if !(profile.sigma > F::zero()) {
        if profile.noisy_private_epochs > 0 {
            return Err(Error::InfinitePrivacyLoss(profile.noisy_private_epochs));
        }
        return Ok(F::zero());
    }
    let g2 = profile.lipschitz * profile.lipschitz;
    Ok(F::of(2.0) * alpha * g2 / (profile.sigma * profile.sigma * F::of_usize(profile.amplification.max(1))))
}

/// Linear RDP composition at a fixed order.
pub fn compose_epochs<F: Scalar>(per_epoch: F, count: usize) -> F {
    per_epoch * F::of_usize(count)
}

/// RDP → DP conversion.
pub fn rdp_to_dp<F: Scalar>(rdp_eps: F, alpha: F, delta: F) -> F {
    rdp_eps + (-delta.ln()) / (alpha - F::one())
}

/// Smallest ε over all orders, with the minimizing order.
///
/// `ε(α) = a·α + L/(α − 1)` is minimized at `α* = 1 + √(L/a)` with value
/// `a + 2√(a·L)`. Returns `(0, None)` when no private epoch is noisy.
pub fn epsilon_for_noise<F: Scalar>(profile: &MechanismProfile<F>, delta: F) -> Result<(F, Option<F>)> {
    let a = profile.rdp_slope()?;
    if profile.noisy_private_epochs == 0 {
        return Ok((F::zero(), None));
    }
    let l = -delta.ln();
    let eps = a + F::of(2.0) * (a * l).sqrt();
    let alpha = F::one() + (l / a).sqrt();
    Ok((eps, Some(alpha)))
}

/// Smallest σ meeting the budget:
/// `σ = √A / (√(L + ε) − √L)` with `A = 2G²K/m`, `L = ln(1/δ)`.
pub fn noise_for_epsilon<F: Scalar>(
    budget: &PrivacyBudget<F>,
    lipschitz: F,
    noisy_private_epochs: usize,
    amplification: usize,
) -> F {
    if noisy_private_epochs == 0 {
        return F::zero();
    }
    let l = budget.log_inv_delta();
    let eps = budget.epsilon;
    let big_a =
        F::of(2.0) * lipschitz * lipschitz * F::of_usize(noisy_private_epochs) / F::of_usize(amplification.max(1));
    // √(L+ε) − √L written without cancellation.
    let gap = eps / ((l + eps).sqrt() + l.sqrt());
    big_a.sqrt() / gap
}

/// `η ≤ 1/L`: each gradient step is non-expansive, so PABI applies.
pub fn validate_contraction<F: Scalar>(eta: F, smoothness: F) -> bool {
    eta * smoothness <= F::one()
}
