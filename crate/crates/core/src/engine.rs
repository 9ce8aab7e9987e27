//! The generalized shuffled gradient loop.
//!
//! Each epoch walks a permutation of the private samples for its first
//! `n_d` steps, then the planned public samples for the remaining `n − n_d`
//! steps, adding `N(0, σ² I)` to every clipped gradient. The regularizer is
//! applied once, as a proximal step, at the end of the epoch. Only the last
//! iterate is returned; intermediate iterates are kept solely as an opt-in
//! diagnostic.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::privacy::validate_contraction;
use crate::prox::Regularizer;
use crate::rng::{fill_gaussian, purpose, GaussianNoiseSpec, RngStream};
use crate::scalar::Scalar;
use crate::schedule::EpochPlan;
use crate::shuffle::{permutation_for_epoch, PermutationStrategy, Permuter};
use crate::tasks::TaskObjective;
use crate::vector::{check_dims, norm, Params};

/// Iterates beyond this norm are treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Order in which an epoch visits its public slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PublicOrder {
    /// Exactly the order of `EpochPlan::public_indices`.
    AsPlanned,
    /// Permute the slice with the run's strategy (on its own substream).
    #[default]
    FollowStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig<F> {
    pub task: TaskObjective<F>,
    pub reg: Regularizer<F>,
    pub strategy: PermutationStrategy,
    pub plans: Vec<EpochPlan<F>>,
    pub eta: F,
    pub epochs: usize,
    pub seed: u64,
    pub record_every_epoch: bool,
    #[serde(default)]
    pub public_order: PublicOrder,
    /// Keep `x_1^(s+1)` for every epoch in the trajectory (diagnostic only).
    #[serde(default)]
    pub keep_iterates: bool,
}

impl<F: Scalar> RunConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.plans.len() != self.epochs {
            return Err(Error::Config(format!(
                "{} epoch plans supplied for K = {}",
                self.plans.len(),
                self.epochs
            )));
        }
        if !(self.eta > F::zero()) || !self.eta.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.eta
            )));
        }
        self.reg.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord<F> {
    pub epoch: usize,
    /// `G(x) = F(x) + ψ(x)` on the full private dataset.
    pub objective: F,
    /// `F(x)` alone.
    pub loss: F,
    /// `G(x) − G(x*)` when `x*` was supplied.
    pub excess_risk: Option<F>,
    /// Gradient steps performed so far.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<F> {
    pub records: Vec<EpochRecord<F>>,
    /// `x_1^(K+1)`.
    pub final_params: Params<F>,
    pub initial_objective: F,
    pub initial_loss: F,
    pub initial_excess_risk: Option<F>,
    /// Largest norm of any clipped gradient used in an update.
    pub max_grad_norm: F,
    /// Largest per-sample smoothness over every sample the run touched.
    pub smoothness: F,
    /// Whether `η ≤ 1/L` held, the precondition for the privacy accounting.
    pub contraction_ok: bool,
    /// Per-epoch iterates, present only with `keep_iterates`.
    pub diagnostic_iterates: Option<Vec<Params<F>>>,
}

impl<F: Scalar> Trajectory<F> {
    pub fn final_record(&self) -> &EpochRecord<F> {
        self.records.last().expect("a run has at least one epoch")
    }
}

/// `(1/n) Σ f(x; d_i) + ψ(x)` with unclipped losses.
pub fn evaluate_objective<F: Scalar>(
    task: &TaskObjective<F>,
    reg: &Regularizer<F>,
    x: &[F],
    data: &Dataset<F>,
) -> Result<F> {
    Ok(evaluate_loss(task, x, data)? + reg.value(x))
}

/// `(1/n) Σ f(x; d_i)`.
pub fn evaluate_loss<F: Scalar>(task: &TaskObjective<F>, x: &[F], data: &Dataset<F>) -> Result<F> {
    let mut total = F::zero();
    for q in data.samples() {
        total += task.loss(x, q)?;
    }
    Ok(total / F::of_usize(data.len()))
}

/// Execute the loop and return the trajectory ending at the last iterate.
pub fn run<F: Scalar>(
    config: &RunConfig<F>,
    private: &Dataset<F>,
    public: Option<&Dataset<F>>,
    x0: &Params<F>,
    x_star: Option<&Params<F>>,
) -> Result<Trajectory<F>> {
    config.validate()?;
    let n = private.len();
    let d = x0.dim();
    check_dims(private.dim(), d)?;
    if !x0.is_finite() {
        return Err(Error::NonFinite("initial point"));
    }
    let needs_public = config.plans.iter().any(|p| p.n_d < n);
    for (e, plan) in config.plans.iter().enumerate() {
        if plan.n_d > n || plan.n_d + plan.public_indices.len() != n {
            return Err(Error::Config(format!(
                "epoch {} plan has n_d = {} and {} public steps for n = {n}",
                e + 1,
                plan.n_d,
                plan.public_indices.len()
            )));
        }
    }
    let public = match (needs_public, public) {
        (true, None) => return Err(Error::MissingPublicData),
        (_, p) => p,
    };
    if let Some(p) = public {
        check_dims(p.dim(), d)?;
        let max_index = config.plans.iter().flat_map(|p| p.public_indices.iter()).max();
        if let Some(&i) = max_index {
            if i >= p.len() {
                return Err(Error::Config(format!(
                    "plan references public sample {i} but only {} are available",
                    p.len()
                )));
            }
        }
    }
    let optimum = match x_star {
        Some(xs) => {
            check_dims(xs.dim(), d)?;
            Some(evaluate_objective(&config.task, &config.reg, xs, private)?)
        }
        None => None,
    };

    let mut smoothness = config.task.max_smoothness(private);
    if let (true, Some(p)) = (needs_public, public) {
        smoothness = smoothness.max(config.task.max_smoothness(p));
    }

    let root = RngStream::new(config.seed);
    let private_order = Permuter::new(config.strategy, n, root.substream(purpose::PERMUTATION));
    let public_stream = root.substream(purpose::PUBLIC_ORDER);
    let noise_stream = root.substream(purpose::NOISE);

    let mut x = x0.as_slice().to_vec();
    let mut grad = vec![F::zero(); d];
    let mut noise = vec![F::zero(); d];
    let mut max_grad_norm = F::zero();
    let mut steps = 0usize;
    let mut records = Vec::with_capacity(if config.record_every_epoch { config.epochs } else { 1 });
    let mut iterates = config.keep_iterates.then(Vec::new);
    let initial_loss = evaluate_loss(&config.task, &x, private)?;
    let initial_objective = initial_loss + config.reg.value(&x);

    for (s, plan) in config.plans.iter().enumerate() {
        let epoch = s + 1;
        let spec = GaussianNoiseSpec::new(plan.sigma);
        let mut noise_rng = noise_stream.substream(epoch as u64).generator();
        // The full permutation is drawn even when only a prefix is used.
        let perm = private_order.for_epoch(epoch);

        let public_visit: Vec<usize> = match config.public_order {
            PublicOrder::AsPlanned => plan.public_indices.clone(),
            PublicOrder::FollowStrategy if plan.public_indices.is_empty() => Vec::new(),
            PublicOrder::FollowStrategy => {
                let order = permutation_for_epoch(config.strategy, plan.public_indices.len(), epoch, public_stream);
                order.iter().map(|&k| plan.public_indices[k]).collect()
            }
        };

        let private_steps = perm[..plan.n_d].iter().map(|&i| private.get(i));
        let public_steps = public_visit.iter().map(|&j| public.expect("checked above").get(j));
        for q in private_steps.chain(public_steps) {
            config.task.clipped_grad_into(&x, q, &mut grad)?;
            max_grad_norm = max_grad_norm.max(norm(&grad));
            fill_gaussian(spec, &mut noise, &mut noise_rng);
            for ((xi, &gi), &ri) in x.iter_mut().zip(&grad).zip(&noise) {
                *xi -= config.eta * (gi + ri);
            }
            steps += 1;
        }

        if x.iter().any(|v| !v.is_finite()) || norm(&x) > F::of(DIVERGENCE_NORM) {
            return Err(Error::Divergence { epoch });
        }
        config.reg.prox_in_place(&mut x, config.eta, n)?;

        if let Some(it) = iterates.as_mut() {
            it.push(Params::new(x.clone()));
        }
        if config.record_every_epoch || epoch == config.epochs {
            let loss = evaluate_loss(&config.task, &x, private)?;
            let objective = loss + config.reg.value(&x);
            if !objective.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            records.push(EpochRecord {
                epoch,
                objective,
                loss,
                excess_risk: optimum.map(|g| objective - g),
                steps,
            });
        }
    }

    Ok(Trajectory {
        records,
        final_params: Params::new(x),
        initial_objective,
        initial_loss,
        initial_excess_risk: optimum.map(|g| initial_objective - g),
        max_grad_norm,
        smoothness,
        contraction_ok: validate_contraction(config.eta, smoothness),
        diagnostic_iterates: iterates,
    })
}

/// Result of the full-batch solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum<F> {
    pub x: Params<F>,
    pub objective: F,
    pub iterations: usize,
    /// `‖x − prox(x − η₀∇F(x))‖ / η₀` at the returned point.
    pub gradient_map_norm: F,
    /// False when the iteration cap was hit first.
    pub converged: bool,
}

pub const OPTIMUM_TOLERANCE: f64 = 1e-10;
pub const OPTIMUM_MAX_ITERATIONS: usize = 1_000_000;

fn full_gradient<F: Scalar>(
    task: &TaskObjective<F>,
    x: &[F],
    data: &Dataset<F>,
    out: &mut [F],
    scratch: &mut [F],
) -> Result<()> {
    out.iter_mut().for_each(|v| *v = F::zero());
    for q in data.samples() {
        task.grad_into(x, q, scratch)?;
        for (o, &g) in out.iter_mut().zip(scratch.iter()) {
            *o += g;
        }
    }
    let n = F::of_usize(data.len());
    out.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

/// Minimize `G = F + ψ` by deterministic full-batch proximal gradient with
/// step `1/L̂`, `L̂` the power-iteration estimate of the averaged
/// curvature.
pub fn solve_optimum<F: Scalar>(
    task: &TaskObjective<F>,
    reg: &Regularizer<F>,
    data: &Dataset<F>,
) -> Result<Optimum<F>> {
    solve_optimum_from(task, reg, data, &Params::zeros(data.dim()))
}

pub fn solve_optimum_from<F: Scalar>(
    task: &TaskObjective<F>,
    reg: &Regularizer<F>,
    data: &Dataset<F>,
    start: &Params<F>,
) -> Result<Optimum<F>> {
    check_dims(data.dim(), start.dim())?;
    let lhat = task.average_smoothness(data);
    let step = if lhat > F::zero() { F::one() / lhat } else { F::one() };
    let d = data.dim();
    let mut x = start.as_slice().to_vec();
    reg.prox_in_place(&mut x, step, 1)?;
    let mut g = vec![F::zero(); d];
    let mut scratch = vec![F::zero(); d];
    let mut next = vec![F::zero(); d];
    let tol = F::of(OPTIMUM_TOLERANCE);
    let mut best = (evaluate_objective(task, reg, &x, data)?, x.clone(), F::infinity());
    for it in 1..=OPTIMUM_MAX_ITERATIONS {
        full_gradient(task, &x, data, &mut g, &mut scratch)?;
        for ((nx, &xi), &gi) in next.iter_mut().zip(&x).zip(&g) {
            *nx = xi - step * gi;
        }
        reg.prox_in_place(&mut next, step, 1)?;
        let gmap = crate::vector::dist(&next, &x) / step;
        std::mem::swap(&mut x, &mut next);
        if gmap <= tol {
            // Certificate at the returned point.
            full_gradient(task, &x, data, &mut g, &mut scratch)?;
            for ((nx, &xi), &gi) in next.iter_mut().zip(&x).zip(&g) {
                *nx = xi - step * gi;
            }
            reg.prox_in_place(&mut next, step, 1)?;
            let certificate = crate::vector::dist(&next, &x) / step;
            return Ok(Optimum {
                objective: evaluate_objective(task, reg, &x, data)?,
                x: Params::new(x),
                iterations: it,
                gradient_map_norm: certificate,
                converged: certificate <= tol,
            });
        }
        let value = evaluate_objective(task, reg, &x, data)?;
        if value < best.0 {
            best = (value, x.clone(), gmap);
        }
    }
    Ok(Optimum {
        x: Params::new(best.1),
        objective: best.0,
        iterations: OPTIMUM_MAX_ITERATIONS,
        gradient_map_norm: best.2,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Origin;
    use crate::tasks::TaskKind;

    fn private_epoch(n: usize, sigma: f64) -> EpochPlan<f64> {
        EpochPlan {
            n_d: n,
            public_indices: vec![],
            sigma,
        }
    }

    fn config(task: TaskObjective<f64>, reg: Regularizer<f64>, plans: Vec<EpochPlan<f64>>, eta: f64) -> RunConfig<f64> {
        RunConfig {
            task,
            reg,
            strategy: PermutationStrategy::Rr,
            epochs: plans.len(),
            plans,
            eta,
            seed: 1,
            record_every_epoch: true,
            public_order: PublicOrder::default(),
            keep_iterates: false,
        }
    }

    #[test]
    fn single_hand_computed_step() {
        let data = Dataset::from_rows(vec![(vec![1.0], None)], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let cfg = config(task, Regularizer::None, vec![private_epoch(1, 0.0)], 0.1);
        let t = run(&cfg, &data, None, &Params::zeros(1), None).unwrap();
        assert!((t.final_params[0] - 0.1).abs() < 1e-15);
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.records[0].steps, 1);
    }

    #[test]
    fn reduces_to_gradient_descent() {
        let data = Dataset::from_rows(vec![(vec![2.0, -1.0], Some(0.5))], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::RidgeRegression, 1e9).unwrap();
        let mut cfg = config(task, Regularizer::None, vec![private_epoch(1, 0.0); 100], 0.05);
        cfg.strategy = PermutationStrategy::Ig;
        let t = run(&cfg, &data, None, &Params::new(vec![0.3, 0.7]), None).unwrap();
        let mut x = [0.3f64, 0.7];
        for _ in 0..100 {
            let r = 2.0 * (2.0 * x[0] - x[1] - 0.5);
            x = [x[0] - 0.05 * r * 2.0, x[1] + 0.05 * r];
        }
        assert!((t.final_params[0] - x[0]).abs() <= 1e-12);
        assert!((t.final_params[1] - x[1]).abs() <= 1e-12);
    }

    #[test]
    fn missing_public_data_is_rejected() {
        let data = Dataset::from_rows(vec![(vec![1.0], None), (vec![2.0], None)], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let plan = EpochPlan {
            n_d: 1,
            public_indices: vec![0],
            sigma: 0.0,
        };
        let cfg = config(task, Regularizer::None, vec![plan], 0.1);
        assert!(matches!(
            run(&cfg, &data, None, &Params::zeros(1), None),
            Err(Error::MissingPublicData)
        ));
    }

    #[test]
    fn divergence_reports_epoch() {
        let data = Dataset::from_rows(vec![(vec![1.0], None), (vec![-1.0], None)], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::MeanEstimation, 1e300).unwrap();
        let cfg = config(task, Regularizer::None, vec![private_epoch(2, 0.0); 200], 5.0);
        let err = run(&cfg, &data, None, &Params::new(vec![1.0]), None).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch } if epoch > 1));
    }

    #[test]
    fn objective_examples() {
        let task = TaskObjective::new(TaskKind::RidgeRegression, 10.0_f64).unwrap();
        let data = Dataset::from_rows(vec![(vec![2.0, 3.0], Some(1.0))], Origin::Private).unwrap();
        let g = evaluate_objective(&task, &Regularizer::l2(0.1).unwrap(), &[1.0, 0.0], &data).unwrap();
        assert!((g - 1.05).abs() < 1e-15);
        let me = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let zero = Dataset::from_rows(vec![(vec![0.0, 0.0], None)], Origin::Private).unwrap();
        assert_eq!(
            evaluate_objective(&me, &Regularizer::None, &[0.0, 0.0], &zero).unwrap(),
            0.0
        );
    }

    #[test]
    fn mean_is_optimal_for_mean_estimation() {
        let rows = vec![(vec![1.0, 0.0], None), (vec![3.0, 2.0], None), (vec![-1.0, 4.0], None)];
        let data = Dataset::from_rows(rows, Origin::Private).unwrap();
        let me = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let mean = data.feature_mean();
        let at_mean = evaluate_objective(&me, &Regularizer::None, &mean, &data).unwrap();
        let expected: f64 = data
            .samples()
            .iter()
            .map(|q| crate::vector::dist(q.features(), &mean).powi(2))
            .sum::<f64>()
            / 6.0;
        assert!((at_mean - expected).abs() < 1e-14);
        let opt = solve_optimum(&me, &Regularizer::ball(100.0).unwrap(), &data).unwrap();
        assert!(opt.converged);
        assert!(crate::vector::dist(&opt.x, &mean) < 1e-12);
    }

    #[test]
    fn optimum_projects_infeasible_mean() {
        let data = Dataset::from_rows(vec![(vec![3.0, 4.0], None), (vec![3.0, 4.0], None)], Origin::Private).unwrap();
        let me = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let opt = solve_optimum(&me, &Regularizer::ball(1.0).unwrap(), &data).unwrap();
        assert!((opt.x[0] - 0.6).abs() < 1e-12 && (opt.x[1] - 0.8).abs() < 1e-12);
        // Dense grid over the unit disc: no feasible point does better.
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let p = [-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0];
                if p[0] * p[0] + p[1] * p[1] <= 1.0 {
                    best = best.min(evaluate_objective(&me, &Regularizer::None, &p, &data).unwrap());
                }
            }
        }
        assert!(opt.objective <= best + 1e-12);
    }

    #[test]
    fn ridge_optimum_closed_form() {
        // (x₁ − 1)² + x₁² + x₂² is minimized at [0.5, 0].
        let data = Dataset::from_rows(vec![(vec![1.0, 0.0], Some(1.0))], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::RidgeRegression, 10.0_f64).unwrap();
        let opt = solve_optimum(&task, &Regularizer::l2(2.0).unwrap(), &data).unwrap();
        assert!(opt.converged);
        assert!((opt.x[0] - 0.5).abs() < 1e-10 && opt.x[1].abs() < 1e-10);
    }

    #[test]
    fn keeps_iterates_only_on_request() {
        let data = Dataset::from_rows(vec![(vec![1.0], None), (vec![2.0], None)], Origin::Private).unwrap();
        let task = TaskObjective::new(TaskKind::MeanEstimation, 10.0_f64).unwrap();
        let mut cfg = config(task, Regularizer::None, vec![private_epoch(2, 0.5); 3], 0.1);
        let t = run(&cfg, &data, None, &Params::zeros(1), None).unwrap();
        assert!(t.diagnostic_iterates.is_none());
        cfg.keep_iterates = true;
        let t2 = run(&cfg, &data, None, &Params::zeros(1), None).unwrap();
        let it = t2.diagnostic_iterates.as_ref().unwrap();
        assert_eq!(it.len(), 3);
        assert_eq!(it[2], t2.final_params);
        assert_eq!(t.final_params, t2.final_params);
    }
}
