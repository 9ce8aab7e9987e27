//! Shuffled gradient methods for convex ERM under differential privacy,
//! with optional public data.
//!
//! Most types are generic over a [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file fix the scalar to `f64` unless suffixed `F32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod privacy;
pub mod prox;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod shuffle;
pub mod tasks;
pub mod vector;

pub use dataset::{Dataset, Origin, Sample};
pub use engine::{
    evaluate_loss, evaluate_objective, run, solve_optimum, solve_optimum_from, EpochRecord, Optimum, PublicOrder,
    RunConfig, Trajectory, DIVERGENCE_NORM,
};
pub use error::{CsvErrorKind, Error, Result};
pub use privacy::{
    compose_epochs, epsilon_for_noise, noise_for_epsilon, rdp_epoch_loss, rdp_to_dp, validate_contraction,
    MechanismProfile, PrivacyBudget,
};
pub use prox::Regularizer;
pub use rng::{purpose, sample_gaussian, GaussianNoiseSpec, RngStream, StreamRng};
pub use scalar::Scalar;
pub use schedule::{EpochPlan, PublicSelection, Schedule, ScheduleKind};
pub use shuffle::{permutation_for_epoch, PermutationStrategy, Permuter};
pub use tasks::{LabelEncoding, TaskKind, TaskObjective};
pub use vector::{vec_axpy, Params};

pub type ParamVector = Params<f64>;
pub type ParamVectorF32 = Params<f32>;
pub type SampleF64 = Sample<f64>;
pub type SampleF32 = Sample<f32>;
pub type DatasetF64 = Dataset<f64>;
pub type DatasetF32 = Dataset<f32>;
pub type TaskF64 = TaskObjective<f64>;
pub type TaskF32 = TaskObjective<f32>;
pub type RegularizerF64 = Regularizer<f64>;
pub type RegularizerF32 = Regularizer<f32>;
pub type EpochPlanF64 = EpochPlan<f64>;
pub type ScheduleF64 = Schedule<f64>;
pub type RunConfigF64 = RunConfig<f64>;
pub type RunConfigF32 = RunConfig<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type BudgetF64 = PrivacyBudget<f64>;
