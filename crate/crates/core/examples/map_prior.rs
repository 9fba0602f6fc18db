//! MAP online EM: a conjugate prior statistic keeps a tiny sample away from
//! degenerate fits.

use online_em::estimators::{online_em, OnlineEmConfig, StepsizeSchedule};
use online_em::models::{MixtureParam, MixtureStat, PoissonMixture};
use online_em::LatentModel;

fn main() -> online_em::Result<()> {
    let model = PoissonMixture::poisson(2)?;
    let data = [0u64, 0, 1, 9, 0, 8];
    let theta0 = MixtureParam::poisson(&[0.5, 0.5], &[1.0, 5.0]);

    let mut ml = OnlineEmConfig::new(StepsizeSchedule::power(0.6)?);
    ml.freeze_count = 0;
    let mut map = ml.clone();
    // one pseudo-observation per component, at means 1 and 5
    map.prior = Some(MixtureStat::new(&[1.0, 1.0], &[vec![1.0], vec![5.0]]));

    for (name, cfg) in [("ML", ml), ("MAP", map)] {
        let traj = online_em(&model, &data, &theta0, cfg)?;
        println!(
            "{name:>3}: {:?} frozen at {:?}",
            model.param_coords(&traj.final_theta),
            traj.frozen_steps
        );
    }
    Ok(())
}
