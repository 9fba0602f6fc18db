//! Write a simulated data set to CSV, read it back and fit it, as the CLI does.

use online_em::estimators::{online_em, OnlineEmConfig, RecordPolicy, StepsizeSchedule};
use online_em::harness::sample_poisson_mixture;
use online_em::io::{read_dataset_file, write_dataset_file, write_trajectory_csv};
use online_em::models::{MixtureParam, PoissonMixture};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let path = std::env::temp_dir().join("online-em-example.csv");
    let truth = MixtureParam::poisson(&[0.8, 0.2], &[1.0, 3.0]);
    let data = sample_poisson_mixture(&truth, 5000, &mut ChaCha8Rng::seed_from_u64(2))?;
    write_dataset_file(&path, &data, 1)?;

    let (data, _width): (Vec<u64>, usize) = read_dataset_file(&path)?;
    let model = PoissonMixture::poisson(2)?;
    let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6)?);
    cfg.record = RecordPolicy::PowersOfTwo;
    let traj = online_em(&model, &data, &MixtureParam::poisson(&[0.5, 0.5], &[0.7, 2.5]), cfg)?;
    write_trajectory_csv(std::io::stdout().lock(), &model, &traj)?;
    std::fs::remove_file(&path)?;
    Ok(())
}
