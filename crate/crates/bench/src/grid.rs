//! Learning-rate grid search over (schedule, ε, η, seed) cells.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use shufflepriv_core::data::format_float;
use shufflepriv_core::{Error, Schedule, ScheduleKind};

use crate::config::ExperimentConfig;
use crate::experiment::{Prepared, CODE_VERSION};
use crate::BenchError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SHUFFLEPRIV_THREADS";

/// How the cells are executed. The results do not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// A bounded pool; `None` uses the machine's parallelism.
    Parallel(Option<usize>),
}

/// Pool size: the request (or available parallelism) capped by the
/// environment variable when it holds a positive integer.
pub fn worker_threads(requested: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = requested.unwrap_or(available).max(1);
    match std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => wanted.min(cap),
        _ => wanted,
    }
}

/// One seed of one cell: the excess-risk series from epoch 0, or the epoch
/// at which the iterate diverged.
#[derive(Debug, Clone, PartialEq)]
enum SeedOutcome {
    Finished {
        final_objective: f64,
        excess: Vec<f64>,
        contraction_ok: bool,
    },
    Diverged {
        epoch: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub epoch: usize,
    pub mean_excess: f64,
    pub std_excess: f64,
}

/// Aggregates of one (schedule, ε, η) over seeds. Moments are `None` when
/// any seed diverged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub schedule: String,
    pub epsilon: f64,
    pub eta: f64,
    pub seeds: usize,
    pub diverged: bool,
    pub diverged_seeds: usize,
    pub mean_objective: Option<f64>,
    pub std_objective: Option<f64>,
    pub mean_excess: Option<f64>,
    pub std_excess: Option<f64>,
    pub median_excess: Option<f64>,
    pub contraction_ok: bool,
    #[serde(skip)]
    pub series: Vec<SeriesPoint>,
}

impl CellSummary {
    /// Selection score: diverged cells score `+∞`.
    pub fn score(&self) -> f64 {
        match (self.diverged, self.mean_objective) {
            (false, Some(m)) if m.is_finite() => m,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleSummary {
    pub schedule: ScheduleKind,
    pub epsilon: f64,
    pub sigma: f64,
    pub alpha: Option<f64>,
    pub realized_epsilon: f64,
    pub amplification: usize,
    pub noisy_private_epochs: usize,
    /// Learning rate of the winning cell; `None` when every cell diverged.
    pub winner_eta: Option<f64>,
    pub winner_mean_objective: Option<f64>,
    pub winner_std_objective: Option<f64>,
    pub winner_median_excess: Option<f64>,
    pub series_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub optimum_objective: f64,
    pub optimum_gradient_map_norm: f64,
    pub schedules: Vec<ScheduleSummary>,
    pub cells: Vec<CellSummary>,
    #[serde(skip)]
    pub winner_series: Vec<Option<Vec<SeriesPoint>>>,
}

impl GridResult {
    pub fn winner(&self, schedule: &str, epsilon: f64) -> Option<(&ScheduleSummary, &[SeriesPoint])> {
        self.schedules
            .iter()
            .zip(&self.winner_series)
            .find(|(s, _)| s.schedule.label() == schedule && s.epsilon == epsilon)
            .and_then(|(s, series)| series.as_deref().map(|v| (s, v)))
    }
}

/// The cell with the smallest score, ties broken toward the smaller η;
/// `None` when every cell diverged.
pub fn select_winner<'a, I: IntoIterator<Item = &'a CellSummary>>(cells: I) -> Option<&'a CellSummary> {
    cells
        .into_iter()
        .filter(|c| c.score().is_finite())
        .min_by(|a, b| a.score().total_cmp(&b.score()).then(a.eta.total_cmp(&b.eta)))
}

pub fn series_file_name(schedule: &str, epsilon: f64) -> String {
    format!("series_{schedule}_{epsilon}.csv")
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

fn aggregate(schedule: &str, epsilon: f64, eta: f64, outcomes: &[SeedOutcome]) -> CellSummary {
    let finished: Vec<(f64, &[f64], bool)> = outcomes
        .iter()
        .filter_map(|o| match o {
            SeedOutcome::Finished {
                final_objective,
                excess,
                contraction_ok,
            } => Some((*final_objective, excess.as_slice(), *contraction_ok)),
            SeedOutcome::Diverged { .. } => None,
        })
        .collect();
    let diverged_seeds = outcomes.len() - finished.len();
    let mut cell = CellSummary {
        schedule: schedule.to_string(),
        epsilon,
        eta,
        seeds: outcomes.len(),
        diverged: diverged_seeds > 0,
        diverged_seeds,
        mean_objective: None,
        std_objective: None,
        mean_excess: None,
        std_excess: None,
        median_excess: None,
        contraction_ok: finished.iter().all(|f| f.2),
        series: Vec::new(),
    };
    if cell.diverged {
        return cell;
    }
    let objectives: Vec<f64> = finished.iter().map(|f| f.0).collect();
    let finals: Vec<f64> = finished
        .iter()
        .map(|f| *f.1.last().expect("non-empty series"))
        .collect();
    let (m, s) = mean_std(&objectives);
    cell.mean_objective = Some(m);
    cell.std_objective = Some(s);
    let (m, s) = mean_std(&finals);
    cell.mean_excess = Some(m);
    cell.std_excess = Some(s);
    cell.median_excess = Some(median(&finals));
    let epochs = finished[0].1.len();
    cell.series = (0..epochs)
        .map(|e| {
            let at: Vec<f64> = finished.iter().map(|f| f.1[e]).collect();
            let (mean_excess, std_excess) = mean_std(&at);
            SeriesPoint {
                epoch: e,
                mean_excess,
                std_excess,
            }
        })
        .collect();
    cell
}

fn run_seed(prepared: &Prepared, schedule: &Schedule<f64>, eta: f64, seed: u64) -> Result<SeedOutcome, Error> {
    match prepared.run(schedule, eta, seed) {
        Ok(t) => {
            let mut excess = Vec::with_capacity(t.records.len() + 1);
            excess.push(t.initial_excess_risk.expect("optimum supplied"));
            excess.extend(t.records.iter().map(|r| r.excess_risk.expect("optimum supplied")));
            Ok(SeedOutcome::Finished {
                final_objective: t.final_record().objective,
                excess,
                contraction_ok: t.contraction_ok,
            })
        }
        Err(Error::Divergence { epoch }) => Ok(SeedOutcome::Diverged { epoch }),
        Err(e) => Err(e),
    }
}

/// Run every cell of the grid and aggregate. Cells are merged in the fixed
/// order (schedule, ε, η, seed) of the configuration, so the result does not
/// depend on `execution`.
pub fn run_grid(prepared: &Prepared, execution: Execution) -> Result<GridResult, BenchError> {
    let config = &prepared.config;
    let kinds = config.schedule_kinds()?;
    let epsilons = config.epsilons();
    let seeds = config.run_seeds();

    let mut schedules = Vec::new();
    for &kind in &kinds {
        for &eps in &epsilons {
            schedules.push(prepared.schedule(kind, eps)?);
        }
    }
    let mut jobs: Vec<(usize, f64, u64)> = Vec::new();
    for s in 0..schedules.len() {
        for &eta in &config.eta_grid {
            jobs.extend(seeds.iter().map(|&seed| (s, eta, seed)));
        }
    }
    let work = |&(s, eta, seed): &(usize, f64, u64)| run_seed(prepared, &schedules[s], eta, seed);
    let outcomes: Vec<SeedOutcome> = match execution {
        Execution::Sequential => jobs.iter().map(work).collect::<Result<_, _>>()?,
        Execution::Parallel(requested) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(worker_threads(requested))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            pool.install(|| jobs.par_iter().map(work).collect::<Result<_, _>>())?
        }
    };

    let per_schedule = config.eta_grid.len() * seeds.len();
    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    let mut winner_series = Vec::new();
    for (s, schedule) in schedules.iter().enumerate() {
        let label = schedule.kind.label();
        let eps = epsilons[s % epsilons.len()];
        let block = &outcomes[s * per_schedule..(s + 1) * per_schedule];
        let first = cells.len();
        for (e, &eta) in config.eta_grid.iter().enumerate() {
            cells.push(aggregate(
                label,
                eps,
                eta,
                &block[e * seeds.len()..(e + 1) * seeds.len()],
            ));
        }
        let winner = select_winner(&cells[first..]);
        let (realized_epsilon, alpha) = schedule.realized_epsilon(config.delta)?;
        summaries.push(ScheduleSummary {
            schedule: schedule.kind,
            epsilon: eps,
            sigma: schedule.profile.sigma,
            alpha,
            realized_epsilon,
            amplification: schedule.profile.amplification,
            noisy_private_epochs: schedule.profile.noisy_private_epochs,
            winner_eta: winner.map(|w| w.eta),
            winner_mean_objective: winner.and_then(|w| w.mean_objective),
            winner_std_objective: winner.and_then(|w| w.std_objective),
            winner_median_excess: winner.and_then(|w| w.median_excess),
            series_file: winner.map(|_| series_file_name(label, eps)),
        });
        winner_series.push(winner.map(|w| w.series.clone()));
    }
    Ok(GridResult {
        version: CODE_VERSION,
        config: config.clone(),
        optimum_objective: prepared.optimum.objective,
        optimum_gradient_map_norm: prepared.optimum.gradient_map_norm,
        schedules: summaries,
        cells,
        winner_series,
    })
}

pub fn write_series<W: Write>(series: &[SeriesPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,mean_excess,std_excess")?;
    for p in series {
        writeln!(
            out,
            "{},{},{}",
            p.epoch,
            format_float(p.mean_excess),
            format_float(p.std_excess)
        )?;
    }
    Ok(())
}

pub fn summary_json(result: &GridResult) -> String {
    let mut text = serde_json::to_string_pretty(result).expect("summary is serializable");
    text.push('\n');
    text
}

/// Write `summary.json` and one series file per winner into `dir`.
pub fn write_grid(result: &GridResult, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join("summary.json");
    std::fs::write(&path, summary_json(result)).map_err(|e| BenchError::io(&path, e))?;
    for (summary, series) in result.schedules.iter().zip(&result.winner_series) {
        if let (Some(name), Some(series)) = (&summary.series_file, series) {
            let path = dir.join(name);
            let mut buf = Vec::new();
            write_series(series, &mut buf).map_err(|e| BenchError::io(&path, e))?;
            std::fs::write(&path, buf).map_err(|e| BenchError::io(&path, e))?;
        }
    }
    Ok(())
}
