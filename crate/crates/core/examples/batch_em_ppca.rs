//! Batch EM for single-factor PPCA with the log-likelihood after each iteration.

use online_em::estimators::batch_em;
use online_em::harness::sample_ppca1;
use online_em::models::{Ppca1, Ppca1Param};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> online_em::Result<()> {
    let d = 20;
    let model = Ppca1::new(d)?;
    let mut u = vec![0.0; d];
    u[0] = 1.0;
    let data = sample_ppca1(&Ppca1Param::new(u, 5.0), 2000, &mut ChaCha8Rng::seed_from_u64(7))?;

    let theta0 = Ppca1Param::new(vec![0.5 / (d as f64).sqrt(); d], 1.0);
    let traj = batch_em(&model, &data, &theta0, 30)?;
    println!("{:>4} {:>10} {:>8} {:>12}", "k", "|u|^2", "lambda", "loglik");
    for rec in &traj.records {
        let ll = rec.loglik.unwrap_or(f64::NAN);
        println!(
            "{:>4} {:>10.5} {:>8.4} {:>12.6}",
            rec.step,
            rec.theta.norm_u_sq(),
            rec.theta.lambda,
            ll
        );
    }
    Ok(())
}
