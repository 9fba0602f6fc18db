//! Online EM for a mixture of exponential distributions, written as a new
//! component family plugged into the generic finite mixture.

use nalgebra::DMatrix;
use online_em::estimators::{online_em, OnlineEmConfig, RecordPolicy, StepsizeSchedule};
use online_em::models::{ComponentFamily, FiniteMixture, MixtureParam};
use online_em::{Error, LatentModel, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// `g_r(y) = r e^{-r y}` for `y >= 0`.
#[derive(Debug, Clone, Copy)]
struct Exponential;

impl ComponentFamily for Exponential {
    type Obs = f64;

    fn param_dim(&self) -> usize {
        1
    }

    fn stat_dim(&self) -> usize {
        1
    }

    fn param_labels(&self) -> Vec<&'static str> {
        vec!["rate"]
    }

    fn validate_obs(&self, y: &f64) -> Result<()> {
        if y.is_finite() && *y >= 0.0 {
            Ok(())
        } else {
            Err(Error::Observation(format!("{y} is not a nonnegative duration")))
        }
    }

    fn is_valid(&self, beta: &[f64]) -> bool {
        beta.len() == 1 && beta[0] > 0.0 && beta[0].is_finite()
    }

    fn stat(&self, y: &f64, out: &mut [f64]) {
        out[0] = *y;
    }

    fn mle(&self, mean_stat: &[f64]) -> Result<Vec<f64>> {
        if mean_stat[0] > 0.0 {
            Ok(vec![1.0 / mean_stat[0]])
        } else {
            Err(Error::Inadmissible("mean duration is not positive".into()))
        }
    }

    fn log_density(&self, beta: &[f64], y: &f64) -> f64 {
        beta[0].ln() - beta[0] * y
    }

    fn grad_log_density(&self, beta: &[f64], y: &f64) -> Vec<f64> {
        vec![1.0 / beta[0] - y]
    }

    fn fisher(&self, beta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0 / (beta[0] * beta[0]))
    }

    fn natural_objective(&self, beta: &[f64], weight: f64, stat: &[f64]) -> f64 {
        -beta[0] * stat[0] + weight * beta[0].ln()
    }

    fn project(&self, beta: &mut [f64], eps: f64) -> bool {
        let moved = beta[0] < eps;
        beta[0] = beta[0].max(eps);
        moved
    }
}

fn main() -> Result<()> {
    let model = FiniteMixture::new(Exponential, 2)?;
    let (w, rates) = ([0.3, 0.7], [5.0, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data: Vec<f64> = (0..50_000)
        .map(|_| {
            let i = usize::from(rng.random::<f64>() >= w[0]);
            Exp::new(rates[i]).unwrap().sample(&mut rng)
        })
        .collect();

    let theta0 = MixtureParam::new(vec![0.5, 0.5], vec![vec![2.0], vec![1.0]]);
    let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6)?);
    cfg.record = RecordPolicy::Endpoints;
    let traj = online_em(&model, &data, &theta0, cfg)?;
    println!("labels: {:?}", model.param_labels());
    println!("fitted: {:?}", model.param_coords(&traj.final_theta));
    Ok(())
}
