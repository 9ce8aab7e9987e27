//! Experiment configuration: a JSON file whose every field has a default,
//! overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shufflepriv_core::data::{CsvOptions, Normalization, SyntheticKind, SyntheticSpec};
use shufflepriv_core::{
    Error, LabelEncoding, PermutationStrategy, PublicOrder, PublicSelection, Regularizer, ScheduleKind, TaskKind,
};

use crate::BenchError;

/// `{5, 1} × 10^−k` for `k = 1..=9`, largest first.
pub fn default_eta_grid() -> Vec<f64> {
    (1..=9)
        // Parsing the literal gives the nearest double to 5e-3 rather than
        // the rounded product 5 × 0.001.
        .flat_map(|k| [format!("5e-{k}"), format!("1e-{k}")].map(|s| s.parse::<f64>().expect("float literal")))
        .collect()
}

pub const ALL_SCHEDULES: [&str; 5] = ["dp-shuffleg", "priv-pub", "pub-priv", "interleaved", "public-only"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerChoice {
    /// Ball for mean estimation, L2 for ridge, L1 for lasso logistic.
    #[default]
    Auto,
    None,
    Ball,
    L2,
    L1,
}

impl std::str::FromStr for RegularizerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "none" => Ok(Self::None),
            "ball" => Ok(Self::Ball),
            "l2" => Ok(Self::L2),
            "l1" => Ok(Self::L1),
            _ => Err(format!("unknown regularizer {s:?} (auto, none, ball, l2, l1)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic {
        spec: SyntheticSpec,
    },
    Csv {
        private: PathBuf,
        #[serde(default)]
        public: Option<PathBuf>,
        #[serde(default)]
        options: CsvOptions,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Synthetic {
            spec: SyntheticSpec::new(
                SyntheticKind::ShiftedMean {
                    d: 20,
                    n: 200,
                    shift: 1.0,
                    stddev: 1.0,
                    center_norm: 2.0,
                },
                0,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub labels: LabelEncoding,
    pub regularizer: RegularizerChoice,
    /// `C`
    pub ball_radius: f64,
    /// `λ_r`
    pub ridge_lambda: f64,
    /// `λ_l`
    pub lasso_lambda: f64,
    pub schedules: Vec<String>,
    /// Fraction of private gradient steps.
    pub p: f64,
    pub strategy: PermutationStrategy,
    pub epochs: usize,
    /// Defaults to {5, 10}, or {1, 5} for ridge regression.
    pub epsilons: Option<Vec<f64>>,
    pub delta: f64,
    pub clip_norm: f64,
    pub eta_grid: Vec<f64>,
    pub seeds: usize,
    /// Seed of the first run; run `i` uses `base_seed + i`.
    pub base_seed: u64,
    pub data: DataSource,
    /// Joint feature scaling of both sets. Defaults to unit-ball scaling
    /// for the regression tasks and none for mean estimation.
    pub feature_scaling: Option<Normalization>,
    pub public_selection: PublicSelection,
    pub public_order: PublicOrder,
    /// Initial point; zeros when absent.
    pub x0: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: TaskKind::MeanEstimation,
            labels: LabelEncoding::default(),
            regularizer: RegularizerChoice::Auto,
            ball_radius: 10.0,
            ridge_lambda: 0.1,
            lasso_lambda: 0.1,
            schedules: ALL_SCHEDULES.iter().map(|s| s.to_string()).collect(),
            p: 0.5,
            strategy: PermutationStrategy::Rr,
            epochs: 50,
            epsilons: None,
            delta: 1e-6,
            clip_norm: 10.0,
            eta_grid: default_eta_grid(),
            seeds: 10,
            base_seed: 0,
            data: DataSource::default(),
            feature_scaling: None,
            public_selection: PublicSelection::Prefix,
            public_order: PublicOrder::FollowStrategy,
            x0: None,
            output_dir: None,
        }
    }
}

fn config_error(msg: impl Into<String>) -> BenchError {
    BenchError::Core(Error::Config(msg.into()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| config_error(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn regularizer(&self) -> Result<Regularizer<f64>, Error> {
        let choice = match self.regularizer {
            RegularizerChoice::Auto => match self.task {
                TaskKind::MeanEstimation => RegularizerChoice::Ball,
                TaskKind::RidgeRegression => RegularizerChoice::L2,
                TaskKind::LassoLogistic => RegularizerChoice::L1,
            },
            other => other,
        };
        match choice {
            RegularizerChoice::None | RegularizerChoice::Auto => Ok(Regularizer::None),
            RegularizerChoice::Ball => Regularizer::ball(self.ball_radius),
            RegularizerChoice::L2 => Regularizer::l2(self.ridge_lambda),
            RegularizerChoice::L1 => Regularizer::l1(self.lasso_lambda),
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        match (&self.epsilons, self.task) {
            (Some(list), _) => list.clone(),
            (None, TaskKind::RidgeRegression) => vec![1.0, 5.0],
            (None, _) => vec![5.0, 10.0],
        }
    }

    pub fn feature_scaling(&self) -> Normalization {
        self.feature_scaling.unwrap_or(match self.task {
            TaskKind::MeanEstimation => Normalization::None,
            _ => Normalization::UnitBallScale,
        })
    }

    pub fn schedule_kinds(&self) -> Result<Vec<ScheduleKind>, Error> {
        self.schedules
            .iter()
            .map(|s| ScheduleKind::from_name(s, self.p))
            .collect()
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.base_seed.wrapping_add(i)).collect()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.epochs < 2 {
            return bad(format!("epochs must be at least 2, got {}", self.epochs));
        }
        if !(self.clip_norm > 0.0) || !self.clip_norm.is_finite() {
            return bad(format!("clip_norm must be positive, got {}", self.clip_norm));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.seeds == 0 {
            return bad("at least one seed is required".into());
        }
        if self.schedules.is_empty() {
            return bad("no schedules selected".into());
        }
        if self.eta_grid.is_empty() {
            return bad("empty learning-rate grid".into());
        }
        if let Some(eta) = self.eta_grid.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return bad(format!("learning rates must be positive, got {eta}"));
        }
        let eps = self.epsilons();
        if eps.is_empty() {
            return bad("empty epsilon list".into());
        }
        if let Some(e) = eps.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return bad(format!("epsilon must be positive, got {e}"));
        }
        self.schedule_kinds()?;
        self.regularizer()?;
        if let DataSource::Synthetic { spec } = &self.data {
            spec.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_grid_has_eighteen_values() {
        let g = default_eta_grid();
        assert_eq!(g.len(), 18);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[1], 0.1);
        assert_eq!(g[2], 0.05);
        assert_eq!(g[17], 1e-9);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn defaults_follow_the_protocol() {
        let c = ExperimentConfig::default();
        assert_eq!(c.clip_norm, 10.0);
        assert_eq!(c.epochs, 50);
        assert_eq!(c.delta, 1e-6);
        assert_eq!(c.p, 0.5);
        assert_eq!(c.seeds, 10);
        assert_eq!(c.strategy, PermutationStrategy::Rr);
        assert_eq!(c.regularizer().unwrap(), Regularizer::BallIndicator { radius: 10.0 });
        assert_eq!(c.epsilons(), vec![5.0, 10.0]);
        let ridge = ExperimentConfig {
            task: TaskKind::RidgeRegression,
            ..Default::default()
        };
        assert_eq!(ridge.regularizer().unwrap(), Regularizer::L2 { lambda: 0.1 });
        assert_eq!(ridge.epsilons(), vec![1.0, 5.0]);
        assert_eq!(ridge.feature_scaling(), Normalization::UnitBallScale);
        c.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        let partial = ExperimentConfig::from_json(r#"{"task": "ridge-regression", "epochs": 7}"#).unwrap();
        assert_eq!(partial.epochs, 7);
        assert_eq!(partial.seeds, 10);
        assert!(ExperimentConfig::from_json(r#"{"epocs": 7}"#).is_err());
        let csv = ExperimentConfig::from_json(
            r#"{"feature_scaling": "unit-ball", "data": {"source": "csv", "private": "a.csv",
                "options": {"label": "last", "normalize": "zscore"}}}"#,
        )
        .unwrap();
        assert_eq!(csv.feature_scaling, Some(Normalization::UnitBallScale));
        match csv.data {
            DataSource::Csv { options, public, .. } => {
                assert_eq!(options.normalize, Normalization::PerColumnZScore);
                assert!(public.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let c = ExperimentConfig {
            schedules: vec!["sideways".into()],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            eta_grid: vec![0.1, -1.0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
