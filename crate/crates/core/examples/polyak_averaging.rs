//! Last iterate against the Polyak-Ruppert average over a few replications.

use online_em::estimators::{online_em, OnlineEmConfig, RecordPolicy, StepsizeSchedule};
use online_em::harness::{sample_ppca1, Summary};
use online_em::models::{Ppca1, Ppca1Param};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let (d, n) = (5, 20_000);
    let model = Ppca1::new(d)?;
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let truth = Ppca1Param::new(u, 2.0);
    let theta0 = Ppca1Param::new(vec![0.5 / (d as f64).sqrt(); d], 1.0);

    let (mut last, mut averaged) = (Vec::new(), Vec::new());
    for r in 0..50 {
        let data = sample_ppca1(&truth, n, &mut ChaCha8Rng::seed_from_u64(r))?;
        let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6)?);
        cfg.averaging_start_fraction = Some(0.5);
        cfg.record = RecordPolicy::Endpoints;
        cfg.predictive_loglik = false;
        let traj = online_em(&model, &data, &theta0, cfg)?;
        last.push(traj.final_theta.norm_u_sq());
        averaged.push(traj.averaged_theta.expect("averaging requested").norm_u_sq());
    }
    for (name, values) in [("last iterate", &last), ("averaged", &averaged)] {
        let s = Summary::of(values)?;
        println!("{name:>12}: median {:.4}, IQR {:.4}, sd {:.4}", s.q50, s.iqr(), s.sd);
    }
    Ok(())
}
