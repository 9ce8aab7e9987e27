use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shufflepriv_bench::grid::{run_grid, write_grid, Execution};
use shufflepriv_bench::{
    calibrate, write_trajectory_csv, BenchError, DataSource, ExperimentConfig, Prepared, RegularizerChoice, RunRecord,
};
use shufflepriv_core::data::{
    generate, write_csv, CsvOptions, LabelColumn, Normalization, SyntheticKind, SyntheticSpec,
};
use shufflepriv_core::{Error, LabelEncoding, PermutationStrategy, PrivacyBudget, ScheduleKind, TaskKind};

#[derive(Parser)]
#[command(name = "shufflepriv", version, about = "Private shuffled gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print σ, α* and the realized ε of each schedule without optimizing.
    Calibrate(CalibrateArgs),
    /// Write a synthetic private/public CSV pair.
    Datagen(DatagenArgs),
    /// Solve the regularized ERM problem on the private set.
    Optimum(OptimumArgs),
    /// One run; writes a trajectory CSV and a JSON run record beside it.
    Run(RunArgs),
    /// Learning-rate grid over schedules, budgets and seeds.
    Grid(GridArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// Schedule name; repeat for several. Defaults to all five.
    #[arg(long = "schedule")]
    schedules: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Private set size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10.0)]
    clip: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DatagenArgs {
    /// shifted-mean | rotation-corrupted | class-subset | label-shift
    #[arg(long, default_value = "shifted-mean")]
    kind: String,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    #[arg(long, default_value_t = 1.0)]
    stddev: f64,
    #[arg(long, default_value_t = 2.0)]
    center_norm: f64,
    #[arg(long, default_value_t = 0.05)]
    perturbation: f64,
    #[arg(long, default_value_t = 0.1)]
    response_noise: f64,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 5)]
    public_classes: usize,
    #[arg(long, default_value_t = 0.5)]
    private_rate: f64,
    #[arg(long, default_value_t = 0.5)]
    public_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving private.csv and public.csv.
    #[arg(long)]
    out: PathBuf,
}

/// Experiment settings: a JSON file, then individual overrides.
#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// mean-estimation | ridge-regression | lasso-logistic
    #[arg(long)]
    task: Option<String>,
    /// auto | none | ball | l2 | l1
    #[arg(long)]
    regularizer: Option<RegularizerChoice>,
    /// Ball radius C.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// ig | so | rr
    #[arg(long)]
    strategy: Option<PermutationStrategy>,
    /// Labels of the logistic task: pm1 or 01.
    #[arg(long)]
    labels: Option<String>,
    /// Private CSV; replaces the configured data source.
    #[arg(long)]
    private: Option<PathBuf>,
    #[arg(long)]
    public: Option<PathBuf>,
    /// CSV label column: none, last, or a 0-based index.
    #[arg(long)]
    label: Option<String>,
    /// Per-file CSV normalization: none | zscore | unit-ball.
    #[arg(long)]
    normalize: Option<Normalization>,
    /// Joint scaling of both sets: none | unit-ball.
    #[arg(long)]
    feature_scaling: Option<Normalization>,
}

#[derive(Args)]
struct OptimumArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// JSON file receiving x* and G(x*).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value = "interleaved")]
    schedule: String,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory CSV; the run record goes to the same path with a .json
    /// extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Comma-separated schedule names.
    #[arg(long, value_delimiter = ',')]
    schedules: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Run the cells on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Worker threads (capped by SHUFFLEPRIV_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> BenchError {
    Error::Config(msg.into()).into()
}

fn parse_task(name: &str) -> Result<TaskKind, BenchError> {
    match name {
        "mean-estimation" | "mean" => Ok(TaskKind::MeanEstimation),
        "ridge-regression" | "ridge" => Ok(TaskKind::RidgeRegression),
        "lasso-logistic" | "logistic" => Ok(TaskKind::LassoLogistic),
        other => Err(config_error(format!("unknown task {other:?}"))),
    }
}

fn parse_label(spec: &str) -> Result<LabelColumn, BenchError> {
    match spec {
        "none" => Ok(LabelColumn::None),
        "last" => Ok(LabelColumn::Last),
        idx => idx
            .parse()
            .map(LabelColumn::Index)
            .map_err(|_| config_error(format!("label column must be none, last or an index, got {idx:?}"))),
    }
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, BenchError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = &self.task {
            c.task = parse_task(t)?;
        }
        if let Some(r) = self.regularizer {
            c.regularizer = r;
        }
        if let Some(r) = self.radius {
            c.ball_radius = r;
        }
        if let Some(l) = self.lambda {
            c.ridge_lambda = l;
            c.lasso_lambda = l;
        }
        c.clip_norm = self.clip.unwrap_or(c.clip_norm);
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.delta = self.delta.unwrap_or(c.delta);
        c.p = self.p.unwrap_or(c.p);
        c.strategy = self.strategy.unwrap_or(c.strategy);
        c.feature_scaling = self.feature_scaling.or(c.feature_scaling);
        if let Some(l) = &self.labels {
            c.labels = match l.as_str() {
                "pm1" | "plus-minus-one" => LabelEncoding::PlusMinusOne,
                "01" | "zero-one" => LabelEncoding::ZeroOne,
                other => return Err(config_error(format!("unknown label encoding {other:?}"))),
            };
        }
        if let Some(private) = &self.private {
            c.data = DataSource::Csv {
                private: private.clone(),
                public: self.public.clone(),
                options: CsvOptions::default(),
            };
        } else if self.public.is_some() {
            return Err(config_error("--public requires --private"));
        }
        if let DataSource::Csv { options, .. } = &mut c.data {
            if let Some(l) = &self.label {
                options.label = parse_label(l)?;
            } else if self.private.is_some() && c.task != TaskKind::MeanEstimation {
                options.label = LabelColumn::Last;
            }
            if let Some(n) = self.normalize {
                options.normalize = n;
            }
        }
        Ok(c)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| BenchError::io(path, e))
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<(), BenchError> {
    let budget = PrivacyBudget::new(args.eps, args.delta)?;
    let names: Vec<String> = if args.schedules.is_empty() {
        shufflepriv_bench::config::ALL_SCHEDULES
            .iter()
            .map(|s| s.to_string())
            .collect()
    } else {
        args.schedules.clone()
    };
    let reports = names
        .iter()
        .map(|name| {
            calibrate(
                ScheduleKind::from_name(name, args.p)?,
                args.n,
                args.epochs,
                &budget,
                args.clip,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    if args.json {
        print!("{}", json_line(&reports));
        return Ok(());
    }
    for r in &reports {
        let alpha = r.alpha.map_or_else(|| "-".to_string(), |a| a.to_string());
        println!(
            "{:<12} sigma={} alpha={} epsilon={} private_epochs={} public_epochs={} n_d={} m={}",
            r.schedule.label(),
            r.sigma,
            alpha,
            r.realized_epsilon,
            r.private_epochs,
            r.public_epochs,
            r.n_d,
            r.amplification
        );
    }
    Ok(())
}

fn cmd_datagen(args: &DatagenArgs) -> Result<(), BenchError> {
    let (d, n) = (args.d, args.n);
    let kind = match args.kind.as_str() {
        "shifted-mean" => SyntheticKind::ShiftedMean {
            d,
            n,
            shift: args.shift,
            stddev: args.stddev,
            center_norm: args.center_norm,
        },
        "rotation-corrupted" => SyntheticKind::RotationCorrupted {
            d,
            n,
            perturbation: args.perturbation,
            stddev: args.stddev,
            response_noise: args.response_noise,
        },
        "class-subset" => SyntheticKind::ClassSubset {
            d,
            n,
            classes: args.classes,
            public_classes: args.public_classes,
            stddev: args.stddev,
        },
        "label-shift" => SyntheticKind::LabelShift {
            d,
            n,
            private_rate: args.private_rate,
            public_rate: args.public_rate,
            separation: args.separation,
        },
        other => return Err(config_error(format!("unknown synthetic kind {other:?}"))),
    };
    let spec = SyntheticSpec::new(kind, args.seed);
    let (private, public) = generate::<f64>(&spec)?;
    std::fs::create_dir_all(&args.out).map_err(|e| BenchError::io(&args.out, e))?;
    for (name, data) in [("private.csv", &private), ("public.csv", &public)] {
        let path = args.out.join(name);
        let mut buf = Vec::new();
        write_csv(data, &mut buf)?;
        write_file(&path, &buf)?;
    }
    write_file(&args.out.join("spec.json"), json_line(&spec).as_bytes())?;
    Ok(())
}

fn cmd_optimum(args: &OptimumArgs) -> Result<(), BenchError> {
    let prepared = Prepared::new(args.experiment.resolve()?)?;
    let opt = &prepared.optimum;
    if !opt.converged {
        eprintln!(
            "warning: solver stopped after {} iterations with gradient-map norm {:e}",
            opt.iterations, opt.gradient_map_norm
        );
    }
    println!("{}", opt.objective);
    if let Some(out) = &args.out {
        write_file(out, json_line(opt).as_bytes())?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), BenchError> {
    let mut config = args.experiment.resolve()?;
    let epsilon = args.eps.unwrap_or_else(|| config.epsilons()[0]);
    config.epsilons = Some(vec![epsilon]);
    config.eta_grid = vec![args.eta];
    config.seeds = 1;
    config.base_seed = args.seed;
    config.schedules = vec![args.schedule.clone()];
    let kind = ScheduleKind::from_name(&args.schedule, config.p)?;
    let prepared = Prepared::new(config)?;
    let schedule = prepared.schedule(kind, epsilon)?;
    let trajectory = prepared.run(&schedule, args.eta, args.seed)?;
    if !trajectory.contraction_ok {
        eprintln!(
            "warning: eta = {} exceeds 1/L = {}; the privacy accounting assumes eta <= 1/L",
            args.eta,
            1.0 / trajectory.smoothness
        );
    }
    let mut csv = Vec::new();
    write_trajectory_csv(&trajectory, &mut csv).map_err(|e| BenchError::io(&args.out, e))?;
    write_file(&args.out, &csv)?;
    let record = RunRecord::new(&prepared, &schedule, epsilon, args.eta, args.seed, &trajectory)?;
    write_file(&args.out.with_extension("json"), json_line(&record).as_bytes())?;
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<(), BenchError> {
    let mut config = args.experiment.resolve()?;
    if let Some(s) = &args.schedules {
        config.schedules = s.clone();
    }
    if let Some(e) = &args.eps {
        config.epsilons = Some(e.clone());
    }
    if let Some(e) = &args.eta {
        config.eta_grid = e.clone();
    }
    config.seeds = args.seeds.unwrap_or(config.seeds);
    config.base_seed = args.base_seed.unwrap_or(config.base_seed);
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| config_error("no output directory (--out or output_dir)"))?;
    let prepared = Prepared::new(config)?;
    let execution = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel(args.threads)
    };
    let result = run_grid(&prepared, execution)?;
    write_grid(&result, &out)?;
    for s in &result.schedules {
        match (s.winner_eta, s.winner_median_excess) {
            (Some(eta), Some(med)) => println!(
                "{:<12} eps={} eta={} median_excess={} sigma={}",
                s.schedule.label(),
                s.epsilon,
                eta,
                med,
                s.sigma
            ),
            _ => eprintln!(
                "{} at eps={}: every learning rate diverged, no winner",
                s.schedule.label(),
                s.epsilon
            ),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Datagen(a) => cmd_datagen(a),
        Command::Optimum(a) => cmd_optimum(a),
        Command::Run(a) => cmd_run(a),
        Command::Grid(a) => cmd_grid(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
