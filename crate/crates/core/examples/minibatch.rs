//! Mini-batch online EM: one stepsize per block of observations.

use online_em::estimators::{online_em, OnlineEmConfig, RecordPolicy, StepsizeSchedule};
use online_em::harness::sample_poisson_mixture;
use online_em::models::{MixtureParam, PoissonMixture};
use online_em::LatentModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let model = PoissonMixture::poisson(2)?;
    let truth = MixtureParam::poisson(&[0.8, 0.2], &[1.0, 3.0]);
    let data = sample_poisson_mixture(&truth, 100_000, &mut ChaCha8Rng::seed_from_u64(4))?;
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 4.0]);

    for m in [1, 10, 100] {
        let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6)?);
        cfg.minibatch_size = m;
        cfg.record = RecordPolicy::Endpoints;
        let traj = online_em(&model, &data, &theta0, cfg)?;
        println!(
            "block {m:>3}: {} updates, {:?}",
            traj.last_step,
            model.param_coords(&traj.final_theta)
        );
    }
    Ok(())
}
