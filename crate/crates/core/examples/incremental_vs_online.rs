//! The first tour of incremental EM is online EM with stepsize 1/n.

use online_em::estimators::{incremental_em, online_em, IncrementalEmConfig, OnlineEmConfig, StepsizeSchedule};
use online_em::harness::sample_poisson_mixture;
use online_em::models::{MixtureParam, PoissonMixture};
use online_em::LatentModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let model = PoissonMixture::poisson(2)?;
    let truth = MixtureParam::poisson(&[0.8, 0.2], &[1.0, 3.0]);
    let data = sample_poisson_mixture(&truth, 200, &mut ChaCha8Rng::seed_from_u64(5))?;
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 2.5]);

    let inc = incremental_em(&model, &data, &theta0, 3, IncrementalEmConfig::default())?;
    let online = online_em(
        &model,
        &data,
        &theta0,
        OnlineEmConfig::new(StepsizeSchedule::harmonic()),
    )?;
    let identical = inc.records[..=data.len()] == online.records[..];
    println!("first tour identical: {identical}");
    println!("after 1 tour:  {:?}", model.param_coords(&online.final_theta));
    println!("after 3 tours: {:?}", model.param_coords(&inc.final_theta));
    println!("tour log-likelihoods: {:?}", inc.tour_logliks);
    Ok(())
}
