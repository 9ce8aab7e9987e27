use shufflepriv_core::data::{generate, SyntheticKind, SyntheticSpec};
use shufflepriv_core::*;

fn main() -> Result<()> {
    let spec = SyntheticSpec::new(
        SyntheticKind::ShiftedMean {
            d: 20,
            n: 200,
            shift: 1.0,
            stddev: 0.1,
            center_norm: 2.0,
        },
        0,
    );
    let (private, public) = generate::<f64>(&spec)?;

    let task = TaskObjective::new(TaskKind::MeanEstimation, 1.0)?;
    let reg = Regularizer::ball(10.0)?;
    let budget = PrivacyBudget::new(1.0, 1e-6)?;
    let schedule = Schedule::build(ScheduleKind::Interleaved { p: 0.5 }, 200, 50, &budget, 1.0)?;
    let optimum = solve_optimum(&task, &reg, &private)?;

    let config = RunConfig {
        task,
        reg,
        strategy: PermutationStrategy::Rr,
        epochs: 50,
        plans: schedule.plans.clone(),
        eta: 5e-4,
        seed: 7,
        record_every_epoch: true,
        public_order: PublicOrder::FollowStrategy,
        keep_iterates: false,
    };
    let trajectory = run(&config, &private, Some(&public), &Params::zeros(20), Some(&optimum.x))?;
    println!("{:?}", trajectory.final_record().excess_risk);
    Ok(())
}
