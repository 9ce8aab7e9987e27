use shufflepriv_core::data::{generate, parse_csv, write_csv, CsvOptions, LabelColumn, SyntheticKind, SyntheticSpec};
use shufflepriv_core::{
    run, solve_optimum, Origin, Params, PermutationStrategy, PrivacyBudget, PublicOrder, Regularizer, RunConfig,
    Schedule, ScheduleKind, TaskKind, TaskObjective,
};

fn shifted(n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec::new(
        SyntheticKind::ShiftedMean {
            d: 5,
            n,
            shift: 0.5,
            stddev: 0.2,
            center_norm: 2.0,
        },
        seed,
    )
}

fn config<F: shufflepriv_core::Scalar>(
    task: TaskObjective<F>,
    reg: Regularizer<F>,
    schedule: &Schedule<F>,
    eta: F,
) -> RunConfig<F> {
    RunConfig {
        task,
        reg,
        strategy: PermutationStrategy::Rr,
        epochs: schedule.epochs,
        plans: schedule.plans.clone(),
        eta,
        seed: 11,
        record_every_epoch: true,
        public_order: PublicOrder::FollowStrategy,
        keep_iterates: false,
    }
}

#[test]
fn every_schedule_runs_and_reduces_the_objective() {
    let (private, public) = generate::<f64>(&shifted(50, 1)).unwrap();
    let task = TaskObjective::new(TaskKind::MeanEstimation, 1.0).unwrap();
    let reg = Regularizer::ball(10.0).unwrap();
    let opt = solve_optimum(&task, &reg, &private).unwrap();
    let budget = PrivacyBudget::new(5.0, 1e-6).unwrap();
    for kind in [
        ScheduleKind::DpShuffleG,
        ScheduleKind::PrivPub { p: 0.5 },
        ScheduleKind::PubPriv { p: 0.5 },
        ScheduleKind::Interleaved { p: 0.5 },
        ScheduleKind::PublicOnly,
    ] {
        let schedule = Schedule::build(kind, 50, 10, &budget, 1.0).unwrap();
        let (eps, _) = schedule.realized_epsilon(1e-6).unwrap();
        assert!(eps <= 5.0 * (1.0 + 1e-9), "{kind:?} spends {eps}");
        let t = run(
            &config(task, reg, &schedule, 0.005),
            &private,
            Some(&public),
            &Params::zeros(5),
            Some(&opt.x),
        )
        .unwrap();
        assert_eq!(t.records.len(), 10);
        assert!(t.contraction_ok);
        assert!(t.max_grad_norm <= 1.0 + 1e-12);
        let last = t.final_record();
        assert!(last.excess_risk.unwrap() < t.initial_excess_risk.unwrap(), "{kind:?}");
        assert_eq!(last.steps, 500);
    }
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let (private, public) = generate::<f64>(&shifted(30, 2)).unwrap();
    let task = TaskObjective::new(TaskKind::MeanEstimation, 1.0).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-6).unwrap();
    let schedule = Schedule::build(ScheduleKind::Interleaved { p: 0.5 }, 30, 5, &budget, 1.0).unwrap();
    let mut c = config(task, Regularizer::None, &schedule, 0.01);
    let a = run(&c, &private, Some(&public), &Params::zeros(5), None).unwrap();
    let b = run(&c, &private, Some(&public), &Params::zeros(5), None).unwrap();
    assert_eq!(a, b);
    c.seed += 1;
    let other = run(&c, &private, Some(&public), &Params::zeros(5), None).unwrap();
    assert_ne!(a.final_params, other.final_params);
}

#[test]
fn single_precision_pipeline() {
    let (private, public) = generate::<f32>(&shifted(40, 3)).unwrap();
    let task = TaskObjective::new(TaskKind::MeanEstimation, 1.0f32).unwrap();
    let budget = PrivacyBudget::new(5.0f32, 1e-6).unwrap();
    let schedule = Schedule::build(ScheduleKind::Interleaved { p: 0.5 }, 40, 20, &budget, 1.0).unwrap();
    let t = run(
        &config(task, Regularizer::None, &schedule, 0.01f32),
        &private,
        Some(&public),
        &Params::zeros(5),
        None,
    )
    .unwrap();
    assert!(t.final_params.is_finite());
    assert!(t.final_record().objective < t.initial_objective);
}

#[test]
fn csv_round_trip_through_a_file() {
    let spec = SyntheticSpec::new(
        SyntheticKind::RotationCorrupted {
            d: 4,
            n: 25,
            perturbation: 0.05,
            stddev: 1.0,
            response_noise: 0.1,
        },
        4,
    );
    let (private, _) = generate::<f64>(&spec).unwrap();
    let path = std::env::temp_dir().join(format!("shufflepriv-core-{}.csv", std::process::id()));
    let mut file = std::fs::File::create(&path).unwrap();
    write_csv(&private, &mut file).unwrap();
    drop(file);
    let opts = CsvOptions {
        label: LabelColumn::Last,
        ..Default::default()
    };
    let back = shufflepriv_core::data::load_csv::<f64>(&path, &opts, Origin::Private).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back, private);
    let text = "x0,x1\r\n1,2\r\n";
    assert_eq!(
        parse_csv::<f64>(text, &CsvOptions::default(), Origin::Public)
            .unwrap()
            .len(),
        1
    );
}
