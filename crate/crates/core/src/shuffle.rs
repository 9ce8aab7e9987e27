//! Per-epoch sample orders: incremental gradient (IG), shuffle once (SO) and
//! random reshuffling (RR).

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PermutationStrategy {
    /// Identity order every epoch.
    #[serde(alias = "IG")]
    Ig,
    /// One random permutation, reused every epoch.
    #[serde(alias = "SO")]
    So,
    /// A fresh random permutation each epoch.
    #[default]
    #[serde(alias = "RR")]
    Rr,
}

impl PermutationStrategy {
    pub fn label(self) -> &'static str {
        match self {
            Self::Ig => "ig",
            Self::So => "so",
            Self::Rr => "rr",
        }
    }
}

impl std::str::FromStr for PermutationStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ig" => Ok(Self::Ig),
            "so" => Ok(Self::So),
            "rr" => Ok(Self::Rr),
            other => Err(format!(
                "unknown permutation strategy {other:?} (expected ig, so or rr)"
            )),
        }
    }
}

fn fisher_yates(n: usize, stream: RngStream) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    stream.generator().shuffle(&mut perm);
    perm
}

/// Permutation of `0..n` for 1-based `epoch`.
///
/// SO draws from the strategy stream's epoch-1 key regardless of `epoch`, RR
/// keys by `epoch`, so both are pure functions of `(stream, n, epoch)`.
pub fn permutation_for_epoch(strategy: PermutationStrategy, n: usize, epoch: usize, stream: RngStream) -> Vec<usize> {
    debug_assert!(n >= 1 && epoch >= 1);
    match strategy {
        PermutationStrategy::Ig => (0..n).collect(),
        PermutationStrategy::So => fisher_yates(n, stream.substream(1)),
        PermutationStrategy::Rr => fisher_yates(n, stream.substream(epoch as u64)),
    }
}

/// Stateful wrapper that draws the SO permutation once and then serves it.
#[derive(Debug, Clone)]
pub struct Permuter {
    strategy: PermutationStrategy,
    n: usize,
    stream: RngStream,
    fixed: Option<Vec<usize>>,
}

impl Permuter {
    pub fn new(strategy: PermutationStrategy, n: usize, stream: RngStream) -> Self {
        let fixed = match strategy {
            PermutationStrategy::Rr => None,
            _ => Some(permutation_for_epoch(strategy, n, 1, stream)),
        };
        Self {
            strategy,
            n,
            stream,
            fixed,
        }
    }

    pub fn for_epoch(&self, epoch: usize) -> std::borrow::Cow<'_, [usize]> {
        match &self.fixed {
            Some(p) => std::borrow::Cow::Borrowed(p),
            None => std::borrow::Cow::Owned(permutation_for_epoch(self.strategy, self.n, epoch, self.stream)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn is_bijection(p: &[usize]) -> bool {
        let mut s = p.to_vec();
        s.sort_unstable();
        s == (0..p.len()).collect::<Vec<_>>()
    }

    #[test]
    fn ig_is_identity() {
        for epoch in [1, 2, 9] {
            assert_eq!(
                permutation_for_epoch(PermutationStrategy::Ig, 3, epoch, RngStream::new(1)),
                vec![0, 1, 2]
            );
        }
    }

    #[test]
    fn so_repeats() {
        let s = RngStream::new(77);
        let p1 = permutation_for_epoch(PermutationStrategy::So, 5, 1, s);
        let p7 = permutation_for_epoch(PermutationStrategy::So, 5, 7, s);
        assert_eq!(p1, p7);
        let cached = Permuter::new(PermutationStrategy::So, 5, s);
        assert_eq!(cached.for_epoch(3).as_ref(), p1.as_slice());
    }

    #[test]
    fn rr_bijective_and_deterministic() {
        for n in 1..30 {
            for epoch in 1..4 {
                let p = permutation_for_epoch(PermutationStrategy::Rr, n, epoch, RngStream::new(n as u64));
                assert!(is_bijection(&p));
                assert_eq!(
                    p,
                    permutation_for_epoch(PermutationStrategy::Rr, n, epoch, RngStream::new(n as u64))
                );
            }
        }
    }

    #[test]
    fn rr_consecutive_epochs_match_at_chance_rate() {
        // Two independent uniform permutations of 5 elements coincide with
        // probability 1/120.
        let trials = 1000;
        let equal = (0..trials)
            .filter(|&seed| {
                let s = RngStream::new(seed as u64);
                permutation_for_epoch(PermutationStrategy::Rr, 5, 1, s)
                    == permutation_for_epoch(PermutationStrategy::Rr, 5, 2, s)
            })
            .count();
        let p = 1.0 / 120.0;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((equal as f64 - trials as f64 * p).abs() <= 4.0 * sd, "equal = {equal}");
    }

    #[test]
    fn rr_is_uniform_over_s4() {
        let draws = 100_000;
        let stream = RngStream::new(2718);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for epoch in 1..=draws {
            *counts
                .entry(permutation_for_epoch(PermutationStrategy::Rr, 4, epoch, stream))
                .or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        for (perm, c) in counts {
            assert!((c as f64 - expected).abs() <= 0.1 * expected, "{perm:?}: {c}");
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("RR".parse::<PermutationStrategy>().unwrap(), PermutationStrategy::Rr);
        assert!("xx".parse::<PermutationStrategy>().is_err());
    }
}
