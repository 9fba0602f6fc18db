use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::online::{OnlineEmConfig, Runner};
use crate::estimators::trajectory::Trajectory;
use crate::model::{normalized_loglik, LatentModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Visit `0, 1, ..., N-1` in every tour.
    #[default]
    Systematic,
    /// Draw each pseudo-observation uniformly from the data.
    RandomWithReplacement,
}

/// How a fixed data set is turned into a stream of pseudo-observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScanOrder {
    pub mode: ScanMode,
    pub seed: u64,
}

impl ScanOrder {
    pub fn systematic() -> Self {
        Self::default()
    }

    pub fn random(seed: u64) -> Self {
        Self {
            mode: ScanMode::RandomWithReplacement,
            seed,
        }
    }
}

/// Index sequence for each of `tours` tours of length `n`.
pub fn visit_order(n: usize, tours: usize, order: ScanOrder) -> Vec<Vec<usize>> {
    match order.mode {
        ScanMode::Systematic => (0..tours).map(|_| (0..n).collect()).collect(),
        ScanMode::RandomWithReplacement => {
            let mut rng = ChaCha8Rng::seed_from_u64(order.seed);
            (0..tours)
                .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
                .collect()
        }
    }
}

/// The concatenated pseudo-observation stream of `tours` tours.
pub fn pseudo_observations<T>(data: &[T], tours: usize, order: ScanOrder) -> Vec<&T> {
    visit_order(data.len(), tours, order)
        .into_iter()
        .flatten()
        .map(|i| &data[i])
        .collect()
}

/// Online EM over `tours` passes through a fixed data set.
///
/// The step index counts updates cumulatively and is never reset between
/// tours, so the stepsize keeps decreasing. Mini-batches never straddle two
/// tours. After every tour the normalised log-likelihood of the current
/// parameter over the whole data set is appended to `tour_logliks`.
pub fn tour_runner<M: LatentModel>(
    model: &M,
    data: &[M::Obs],
    theta0: &M::Param,
    config: OnlineEmConfig<M::Stat>,
    tours: usize,
    order: ScanOrder,
) -> Result<Trajectory<M::Param, M::Stat>> {
    if data.is_empty() {
        return Err(Error::Argument("tour runner needs at least one observation".into()));
    }
    if tours == 0 {
        return Err(Error::Argument("tour runner needs at least one tour".into()));
    }
    config.validate()?;
    let m = config.minibatch_size;
    let steps_per_tour = data.len().div_ceil(m);
    let mut runner = Runner::new(model, theta0, config, (steps_per_tour * tours) as u64)?;
    let mut block: Vec<&M::Obs> = Vec::with_capacity(m);
    for tour in visit_order(data.len(), tours, order) {
        for chunk in tour.chunks(m) {
            block.clear();
            block.extend(chunk.iter().map(|&i| &data[i]));
            runner.step(&block)?;
        }
        let ll = normalized_loglik(model, runner.estimator.theta(), data)?;
        runner.traj.tour_logliks.push(ll);
    }
    runner.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{online_em, StepsizeSchedule};
    use crate::models::{MixtureParam, PoissonMixture};

    fn setup() -> (PoissonMixture, Vec<u64>, MixtureParam) {
        (
            PoissonMixture::poisson(2).unwrap(),
            vec![0, 1, 4, 2, 2, 6, 0, 1, 3, 3],
            MixtureParam::poisson(&[0.5, 0.5], &[1.0, 2.0]),
        )
    }

    #[test]
    fn one_systematic_tour_is_plain_online_em() {
        let (m, data, theta0) = setup();
        let cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6).unwrap());
        let toured = tour_runner(&m, &data, &theta0, cfg.clone(), 1, ScanOrder::systematic()).unwrap();
        let plain = online_em(&m, &data, &theta0, cfg).unwrap();
        assert_eq!(toured.records, plain.records);
        assert_eq!(toured.tour_logliks.len(), 1);
    }

    #[test]
    fn steps_continue_across_tours() {
        let (m, data, theta0) = setup();
        let cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6).unwrap());
        let traj = tour_runner(&m, &data, &theta0, cfg, 3, ScanOrder::systematic()).unwrap();
        assert_eq!(traj.last_step, 30);
        assert_eq!(traj.records.last().unwrap().step, 30);
        assert_eq!(traj.tour_logliks.len(), 3);
    }

    #[test]
    fn random_scans_are_seeded() {
        let (m, data, theta0) = setup();
        let cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6).unwrap());
        let a = tour_runner(&m, &data, &theta0, cfg.clone(), 2, ScanOrder::random(9)).unwrap();
        let b = tour_runner(&m, &data, &theta0, cfg.clone(), 2, ScanOrder::random(9)).unwrap();
        let c = tour_runner(&m, &data, &theta0, cfg, 2, ScanOrder::random(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.final_theta, c.final_theta);
    }

    #[test]
    fn minibatches_stay_within_tours() {
        let (m, data, theta0) = setup();
        let mut cfg = OnlineEmConfig::new(StepsizeSchedule::power(0.6).unwrap());
        cfg.minibatch_size = 4;
        let traj = tour_runner(&m, &data, &theta0, cfg, 2, ScanOrder::systematic()).unwrap();
        // ceil(10 / 4) = 3 updates per tour
        assert_eq!(traj.last_step, 6);
    }
}
