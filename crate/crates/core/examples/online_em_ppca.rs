//! Online EM for single-factor PPCA, one observation at a time.

use online_em::estimators::{OnlineEm, OnlineEmConfig, StepsizeSchedule};
use online_em::harness::sample_ppca1;
use online_em::models::{Ppca1, Ppca1Param};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let d = 10;
    let n = 20_000;
    let model = Ppca1::new(d)?;
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let truth = Ppca1Param::new(u, 5.0);
    let data = sample_ppca1(&truth, n, &mut ChaCha8Rng::seed_from_u64(1))?;

    let theta0 = Ppca1Param::new(vec![0.5 / (d as f64).sqrt(); d], 1.0);
    let mut em = OnlineEm::new(&model, theta0, OnlineEmConfig::new(StepsizeSchedule::power(0.6)?))?;
    em.average_after(n as u64 / 2);

    println!("{:>7} {:>8} {:>8} {:>8}", "n", "|u|^2", "u1", "lambda");
    for (t, y) in data.iter().enumerate() {
        em.update(y)?;
        let n = t + 1;
        if n.is_power_of_two() || n == data.len() {
            let theta = em.theta();
            println!(
                "{n:>7} {:>8.4} {:>8.4} {:>8.4}",
                theta.norm_u_sq(),
                theta.u[0],
                theta.lambda
            );
        }
    }
    let avg = em.averaged_theta().expect("averaging started")?;
    println!(
        "averaged over the second half: |u|^2 = {:.4}, lambda = {:.4}",
        avg.norm_u_sq(),
        avg.lambda
    );
    Ok(())
}
