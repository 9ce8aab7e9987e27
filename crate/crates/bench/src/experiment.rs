//! Loading an experiment and executing single runs.

use std::io::Write;

use serde::Serialize;
use shufflepriv_core::data::{self, format_float, load_csv, unit_ball_scale_jointly, Normalization};
use shufflepriv_core::{
    purpose, run, solve_optimum, Dataset, EpochPlan, Error, Optimum, Origin, Params, PrivacyBudget, RngStream,
    RunConfig, Schedule, ScheduleKind, TaskObjective, Trajectory,
};

use crate::config::{DataSource, ExperimentConfig};
use crate::BenchError;

pub const CODE_VERSION: &str = concat!("shufflepriv ", env!("CARGO_PKG_VERSION"));

/// `(private, public)` as described by the data source, before scaling.
pub fn load_data(source: &DataSource) -> Result<(Dataset<f64>, Option<Dataset<f64>>), BenchError> {
    match source {
        DataSource::Synthetic { spec } => {
            let (private, public) = data::generate(spec)?;
            Ok((private, Some(public)))
        }
        DataSource::Csv {
            private,
            public,
            options,
        } => {
            let read = |path: &std::path::Path, origin| -> Result<Dataset<f64>, BenchError> {
                load_csv(path, options, origin).map_err(|e| match e {
                    Error::Io(source) => BenchError::io(path, source),
                    other => other.into(),
                })
            };
            let private = read(private, Origin::Private)?;
            let public = public.as_deref().map(|p| read(p, Origin::Public)).transpose()?;
            Ok((private, public))
        }
    }
}

/// Everything shared by the runs of one experiment.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub private: Dataset<f64>,
    pub public: Option<Dataset<f64>>,
    pub task: TaskObjective<f64>,
    pub reg: shufflepriv_core::Regularizer<f64>,
    pub x0: Params<f64>,
    pub optimum: Optimum<f64>,
}

impl Prepared {
    pub fn new(config: ExperimentConfig) -> Result<Self, BenchError> {
        config.validate()?;
        let (private, public) = load_data(&config.data)?;
        Self::from_data(config, private, public)
    }

    pub fn from_data(
        config: ExperimentConfig,
        private: Dataset<f64>,
        public: Option<Dataset<f64>>,
    ) -> Result<Self, BenchError> {
        config.validate()?;
        let (private, public) = match (config.feature_scaling(), public) {
            (Normalization::UnitBallScale, Some(p)) => {
                let (a, b) = unit_ball_scale_jointly(&private, &p);
                (a, Some(b))
            }
            (Normalization::UnitBallScale, None) => {
                let (a, _) = unit_ball_scale_jointly(&private, &private);
                (a, None)
            }
            (Normalization::None, p) => (private, p),
            (Normalization::PerColumnZScore, _) => {
                return Err(Error::Config("z-scoring is a per-file CSV option, not a joint scaling".into()).into())
            }
        };
        let task = TaskObjective::new(config.task, config.clip_norm)?.with_labels(config.labels);
        let reg = config.regularizer()?;
        let d = private.dim();
        let x0 = match &config.x0 {
            Some(v) if v.len() != d => {
                return Err(Error::Dimension {
                    expected: d,
                    found: v.len(),
                }
                .into())
            }
            Some(v) => Params::new(v.clone()),
            None => Params::zeros(d),
        };
        let optimum = solve_optimum(&task, &reg, &private)?;
        Ok(Self {
            config,
            private,
            public,
            task,
            reg,
            x0,
            optimum,
        })
    }

    pub fn budget(&self, epsilon: f64) -> Result<PrivacyBudget<f64>, Error> {
        PrivacyBudget::new(epsilon, self.config.delta)
    }

    /// The plans of `kind` at `epsilon`, with the configured public
    /// selection applied.
    pub fn schedule(&self, kind: ScheduleKind, epsilon: f64) -> Result<Schedule<f64>, Error> {
        let mut schedule = Schedule::build(
            kind,
            self.private.len(),
            self.config.epochs,
            &self.budget(epsilon)?,
            self.config.clip_norm,
        )?;
        if kind.uses_public_data() {
            let public = self.public.as_ref().ok_or(Error::MissingPublicData)?;
            let stream = RngStream::new(self.config.base_seed)
                .substream(purpose::PUBLIC_ORDER)
                .substream(0);
            schedule.reselect_public(self.config.public_selection, public.len(), stream)?;
        }
        Ok(schedule)
    }

    pub fn run_config(
        &self,
        plans: Vec<EpochPlan<f64>>,
        eta: f64,
        seed: u64,
        record_every_epoch: bool,
    ) -> RunConfig<f64> {
        RunConfig {
            task: self.task,
            reg: self.reg,
            strategy: self.config.strategy,
            epochs: plans.len(),
            plans,
            eta,
            seed,
            record_every_epoch,
            public_order: self.config.public_order,
            keep_iterates: false,
        }
    }

    pub fn run(&self, schedule: &Schedule<f64>, eta: f64, seed: u64) -> Result<Trajectory<f64>, Error> {
        let config = self.run_config(schedule.plans.clone(), eta, seed, true);
        let public = if schedule.kind.uses_public_data() {
            self.public.as_ref()
        } else {
            None
        };
        run(&config, &self.private, public, &self.x0, Some(&self.optimum.x))
    }
}

/// What calibration reports for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub schedule: ScheduleKind,
    pub n: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    pub target_epsilon: f64,
    pub delta: f64,
    pub private_epochs: usize,
    pub public_epochs: usize,
    /// Private steps per private epoch.
    pub n_d: usize,
    pub amplification: usize,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub realized_epsilon: f64,
}

pub fn calibrate(
    kind: ScheduleKind,
    n: usize,
    epochs: usize,
    budget: &PrivacyBudget<f64>,
    clip_norm: f64,
) -> Result<Calibration, Error> {
    let schedule = Schedule::build(kind, n, epochs, budget, clip_norm)?;
    let (realized_epsilon, alpha) = schedule.realized_epsilon(budget.delta)?;
    let private_epochs = schedule.plans.iter().filter(|p| p.n_d > 0).count();
    Ok(Calibration {
        schedule: kind,
        n,
        epochs,
        clip_norm,
        target_epsilon: budget.epsilon,
        delta: budget.delta,
        private_epochs,
        public_epochs: epochs - private_epochs,
        n_d: schedule.plans.iter().map(|p| p.n_d).max().unwrap_or(0),
        amplification: schedule.profile.amplification,
        sigma: schedule.profile.sigma,
        alpha,
        realized_epsilon,
    })
}

/// Header stored next to every single-run trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord<'a> {
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub schedule: ScheduleKind,
    pub epsilon: f64,
    pub eta: f64,
    pub seed: u64,
    pub n_private: usize,
    pub n_public: Option<usize>,
    pub dim: usize,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub realized_epsilon: f64,
    pub amplification: usize,
    pub noisy_private_epochs: usize,
    pub smoothness: f64,
    pub contraction_ok: bool,
    pub optimum_objective: f64,
    pub optimum_gradient_map_norm: f64,
    pub final_objective: f64,
    pub final_excess_risk: Option<f64>,
}

impl<'a> RunRecord<'a> {
    pub fn new(
        prepared: &'a Prepared,
        schedule: &Schedule<f64>,
        epsilon: f64,
        eta: f64,
        seed: u64,
        trajectory: &Trajectory<f64>,
    ) -> Result<Self, Error> {
        let (realized_epsilon, alpha) = schedule.realized_epsilon(prepared.config.delta)?;
        let last = trajectory.final_record();
        Ok(Self {
            version: CODE_VERSION,
            config: &prepared.config,
            schedule: schedule.kind,
            epsilon,
            eta,
            seed,
            n_private: prepared.private.len(),
            n_public: prepared.public.as_ref().map(Dataset::len),
            dim: prepared.private.dim(),
            sigma: schedule.profile.sigma,
            alpha,
            realized_epsilon,
            amplification: schedule.profile.amplification,
            noisy_private_epochs: schedule.profile.noisy_private_epochs,
            smoothness: trajectory.smoothness,
            contraction_ok: trajectory.contraction_ok,
            optimum_objective: prepared.optimum.objective,
            optimum_gradient_map_norm: prepared.optimum.gradient_map_norm,
            final_objective: last.objective,
            final_excess_risk: last.excess_risk,
        })
    }
}

/// `epoch,objective,loss,excess_risk,steps`, with the initial point as
/// epoch 0. `objective` includes the regularizer, `loss` does not.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,objective,loss,excess_risk,steps")?;
    let cell = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    writeln!(
        out,
        "0,{},{},{},0",
        format_float(trajectory.initial_objective),
        format_float(trajectory.initial_loss),
        cell(trajectory.initial_excess_risk)
    )?;
    for r in &trajectory.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch,
            format_float(r.objective),
            format_float(r.loss),
            cell(r.excess_risk),
            r.steps
        )?;
    }
    Ok(())
}
