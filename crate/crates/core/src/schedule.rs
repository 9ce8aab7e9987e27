//! The five private/public epoch schedules, expressed as per-epoch plans
//! `(n_d, public slice, σ)` for the generalized shuffled gradient loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::{epsilon_for_noise, noise_for_epsilon, MechanismProfile, PrivacyBudget};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Which schedule to run. `p` is the fraction of gradient steps computed on
/// private samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    DpShuffleG,
    PrivPub { p: f64 },
    PubPriv { p: f64 },
    Interleaved { p: f64 },
    PublicOnly,
}

impl ScheduleKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::DpShuffleG => "dp-shuffleg",
            Self::PrivPub { .. } => "priv-pub",
            Self::PubPriv { .. } => "pub-priv",
            Self::Interleaved { .. } => "interleaved",
            Self::PublicOnly => "public-only",
        }
    }

    /// Parse a CLI name; `p` is ignored by the kinds that do not carry it.
    pub fn from_name(name: &str, p: f64) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "dp-shuffleg" | "dp-rr" | "dp" => Self::DpShuffleG,
            "priv-pub" => Self::PrivPub { p },
            "pub-priv" => Self::PubPriv { p },
            "interleaved" => Self::Interleaved { p },
            "public-only" => Self::PublicOnly,
            other => return Err(Error::Config(format!("unknown schedule {other:?}"))),
        })
    }

    pub fn uses_public_data(&self) -> bool {
        !matches!(self, Self::DpShuffleG)
    }
}

/// One epoch of the loop: the first `n_d` steps use private samples in
/// permutation order, the remaining `n − n_d` steps use
/// `public[public_indices[..]]`. Every step carries `N(0, σ² I)` noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochPlan<F> {
    pub n_d: usize,
    pub public_indices: Vec<usize>,
    pub sigma: F,
}

/// Which public samples an epoch uses when it needs fewer than `|P|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PublicSelection {
    /// The first `n − n_d` samples of `P`, every epoch.
    #[default]
    Prefix,
    /// A fresh uniformly random subset of size `n − n_d` per epoch.
    ShuffledPerEpoch,
}

/// A fully built schedule together with what the accountant charges it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule<F> {
    pub kind: ScheduleKind,
    pub n: usize,
    pub epochs: usize,
    pub plans: Vec<EpochPlan<F>>,
    pub profile: MechanismProfile<F>,
}

/// Round half up; the fractions are expected to land on integers.
fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

fn check_fraction(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("private fraction p must lie in (0, 1], got {p}")))
    }
}

fn private_epoch<F: Scalar>(n: usize, sigma: F) -> EpochPlan<F> {
    EpochPlan {
        n_d: n,
        public_indices: Vec::new(),
        sigma,
    }
}

fn public_epoch<F: Scalar>(n: usize) -> EpochPlan<F> {
    EpochPlan {
        n_d: 0,
        public_indices: (0..n).collect(),
        sigma: F::zero(),
    }
}

/// Number of private epochs `round(pK)` for the sequential schedules.
fn private_epoch_count(p: f64, epochs: usize) -> Result<usize> {
    check_fraction(p)?;
    let s = round_half_up(p * epochs as f64);
    if s < 1 || s > epochs as i64 - 1 {
        return Err(Error::Config(format!(
            "round(p·K) = {s} with p = {p}, K = {epochs}; must lie in [1, K − 1]"
        )));
    }
    Ok(s as usize)
}

impl<F: Scalar> Schedule<F> {
    pub fn build(kind: ScheduleKind, n: usize, epochs: usize, budget: &PrivacyBudget<F>, lipschitz: F) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("need n ≥ 2 samples per epoch, got {n}")));
        }
        if epochs < 2 {
            return Err(Error::Config(format!("need K ≥ 2 epochs, got {epochs}")));
        }
        if !(lipschitz > F::zero()) {
            return Err(Error::Config(format!(
                "Lipschitz bound must be positive, got {lipschitz}"
            )));
        }
        let (plans, noisy, amplification) = match kind {
            ScheduleKind::DpShuffleG => {
                let sigma = noise_for_epsilon(budget, lipschitz, epochs, 1);
                (vec![private_epoch(n, sigma); epochs], epochs, 1)
            }
            ScheduleKind::PrivPub { p } => {
                let s = private_epoch_count(p, epochs)?;
                let sigma = noise_for_epsilon(budget, lipschitz, s, 1);
                let plans = (0..epochs)
                    .map(|e| {
                        if e < s {
                            private_epoch(n, sigma)
                        } else {
                            public_epoch(n)
                        }
                    })
                    .collect();
                (plans, s, 1)
            }
            ScheduleKind::PubPriv { p } => {
                let private = private_epoch_count(p, epochs)?;
                let public = epochs - private;
                let sigma = noise_for_epsilon(budget, lipschitz, private, 1);
                let plans = (0..epochs)
                    .map(|e| {
                        if e < public {
                            public_epoch(n)
                        } else {
                            private_epoch(n, sigma)
                        }
                    })
                    .collect();
                (plans, private, 1)
            }
            ScheduleKind::Interleaved { p } => {
                check_fraction(p)?;
                let n_d = round_half_up(p * n as f64);
                if n_d < 1 || n_d > n as i64 {
                    return Err(Error::Config(format!(
                        "round(p·n) = {n_d} with p = {p}, n = {n}; must lie in [1, n]"
                    )));
                }
                let n_d = n_d as usize;
                let m = n + 1 - n_d;
                let sigma = noise_for_epsilon(budget, lipschitz, epochs, m);
                let plan = EpochPlan {
                    n_d,
                    public_indices: (0..n - n_d).collect(),
                    sigma,
                };
                (vec![plan; epochs], epochs, m)
            }
            ScheduleKind::PublicOnly => (vec![public_epoch(n); epochs], 0, 1),
        };
        let sigma = plans.iter().map(|p: &EpochPlan<F>| p.sigma).fold(F::zero(), F::max);
        Ok(Self {
            kind,
            n,
            epochs,
            plans,
            profile: MechanismProfile {
                lipschitz,
                noisy_private_epochs: noisy,
                amplification,
                sigma,
            },
        })
    }

    /// Replace each epoch's public slice with a random subset of
    /// `0..public_len` of the same size.
    pub fn reselect_public(&mut self, selection: PublicSelection, public_len: usize, stream: RngStream) -> Result<()> {
        if selection == PublicSelection::Prefix {
            return Ok(());
        }
        for (e, plan) in self.plans.iter_mut().enumerate() {
            let need = plan.public_indices.len();
            if need == 0 {
                continue;
            }
            if need > public_len {
                return Err(Error::Config(format!(
                    "epoch {} needs {need} public samples, only {public_len} available",
                    e + 1
                )));
            }
            let mut all: Vec<usize> = (0..public_len).collect();
            stream.substream(e as u64 + 1).generator().shuffle(&mut all);
            all.truncate(need);
            plan.public_indices = all;
        }
        Ok(())
    }

    /// Realized `(ε, α*)` of the schedule.
    pub fn realized_epsilon(&self, delta: F) -> Result<(F, Option<F>)> {
        epsilon_for_noise(&self.profile, delta)
    }

    pub fn private_steps(&self) -> usize {
        self.plans.iter().map(|p| p.n_d).sum()
    }

    pub fn max_public_len(&self) -> usize {
        self.plans.iter().map(|p| p.public_indices.len()).max().unwrap_or(0)
    }
}

/// The K per-epoch plans of `kind`.
pub fn build_plans<F: Scalar>(
    kind: ScheduleKind,
    n: usize,
    epochs: usize,
    budget: &PrivacyBudget<F>,
    lipschitz: F,
) -> Result<Vec<EpochPlan<F>>> {
    Schedule::build(kind, n, epochs, budget, lipschitz).map(|s| s.plans)
}
