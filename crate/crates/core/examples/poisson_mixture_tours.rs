//! Batch, incremental and online EM on a fixed Poisson-mixture data set,
//! compared tour by tour, with systematic and random scans.

use online_em::estimators::{
    batch_em, incremental_em, tour_runner, IncrementalEmConfig, OnlineEmConfig, RecordPolicy, ScanOrder,
    StepsizeSchedule,
};
use online_em::harness::sample_poisson_mixture;
use online_em::models::{MixtureParam, PoissonMixture};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let tours = 8;
    let model = PoissonMixture::poisson(2)?;
    let truth = MixtureParam::poisson(&[0.8, 0.2], &[1.0, 3.0]);
    let data = sample_poisson_mixture(&truth, 1000, &mut ChaCha8Rng::seed_from_u64(3))?;
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[0.7, 4.0]);

    let online = |order| {
        let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6).unwrap());
        cfg.record = RecordPolicy::Endpoints;
        tour_runner(&model, &data, &theta0, cfg, tours, order)
    };
    let runs = [
        ("batch", batch_em(&model, &data, &theta0, tours)?.tour_logliks),
        (
            "incremental",
            incremental_em(&model, &data, &theta0, tours, IncrementalEmConfig::default())?.tour_logliks,
        ),
        ("online", online(ScanOrder::systematic())?.tour_logliks),
        ("online-random", online(ScanOrder::random(11))?.tour_logliks),
    ];

    print!("{:>5}", "tour");
    for (name, _) in &runs {
        print!(" {name:>14}");
    }
    println!();
    for k in 0..tours {
        print!("{:>5}", k + 1);
        for (_, ll) in &runs {
            print!(" {:>14.6}", ll[k]);
        }
        println!();
    }
    Ok(())
}
