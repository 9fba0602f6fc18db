//! Titterington's Fisher-preconditioned gradient recursion next to online EM.

use online_em::estimators::{online_em, titterington, OnlineEmConfig, StepsizeSchedule, TitteringtonConfig};
use online_em::harness::sample_poisson_mixture;
use online_em::models::{MixtureParam, PoissonMixture};
use online_em::LatentModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let model = PoissonMixture::poisson(2)?;
    let truth = MixtureParam::poisson(&[0.7, 0.3], &[1.0, 6.0]);
    let data = sample_poisson_mixture(&truth, 50_000, &mut ChaCha8Rng::seed_from_u64(9))?;
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[2.0, 4.0]);
    let schedule = StepsizeSchedule::power(0.6)?;

    let tit = titterington(&model, &data, &theta0, &schedule, TitteringtonConfig::default())?;
    let oem = online_em(&model, &data, &theta0, OnlineEmConfig::new(schedule))?;
    println!("labels:       {:?}", model.param_labels());
    println!("truth:        {:?}", model.param_coords(&truth));
    println!(
        "titterington: {:?} ({} projected steps)",
        model.param_coords(&tit.final_theta),
        tit.projected_steps.len()
    );
    println!("online EM:    {:?}", model.param_coords(&oem.final_theta));
    Ok(())
}
