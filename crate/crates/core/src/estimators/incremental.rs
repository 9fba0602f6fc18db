use log::debug;

use crate::error::{Error, Result};
use crate::estimators::schedule::StepsizeSchedule;
use crate::estimators::trajectory::{Record, RecordPolicy, Trajectory};
use crate::model::{convex_update, normalized_loglik, LatentModel, SufficientStat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementalEmConfig {
    pub freeze_count: u64,
    pub record: RecordPolicy,
    pub predictive_loglik: bool,
}

impl Default for IncrementalEmConfig {
    fn default() -> Self {
        Self {
            freeze_count: 5,
            record: RecordPolicy::EveryStep,
            predictive_loglik: true,
        }
    }
}

/// Incremental EM over systematic tours of `data`.
///
/// One E-step statistic is cached per observation. During the first tour
/// the running statistic is the online-EM recursion with `gamma_t = 1/t`
/// (so the first tour coincides with online EM under that schedule). On
/// later tours the visit to observation `t` swaps its cached statistic for
/// a fresh one: `S <- S + (e_t - cached_t) / N`. The M-step follows every
/// visit, subject to the same freeze rule as online EM.
pub fn incremental_em<M: LatentModel>(
    model: &M,
    data: &[M::Obs],
    theta0: &M::Param,
    tours: usize,
    config: IncrementalEmConfig,
) -> Result<Trajectory<M::Param, M::Stat>> {
    if data.is_empty() {
        return Err(Error::Argument("incremental EM needs at least one observation".into()));
    }
    if tours == 0 {
        return Err(Error::Argument("incremental EM needs at least one tour".into()));
    }
    model.validate_param(theta0)?;

    let n = data.len();
    let inv_n = 1.0 / n as f64;
    let total_steps = (n * tours) as u64;
    let first_tour = StepsizeSchedule::harmonic();
    let mut cache: Vec<M::Stat> = Vec::with_capacity(n);
    let mut stat = model.zero_stat();
    let mut theta = theta0.clone();
    let mut traj = Trajectory::start(theta0.clone(), None);

    for tour in 0..tours {
        for (t, y) in data.iter().enumerate() {
            let step = (tour * n + t + 1) as u64;
            let loglik = if config.predictive_loglik {
                Some(model.log_likelihood(&theta, y)?)
            } else {
                None
            };
            let e = model.estep(&theta, y).map_err(|e| e.context(format!("step {step}")))?;
            if tour == 0 {
                convex_update(&mut stat, first_tour.gamma(step), &e);
                cache.push(e);
            } else {
                let old = &mut cache[t];
                for ((s, new), prev) in stat.coords_mut().iter_mut().zip(e.coords()).zip(old.coords()) {
                    *s += (new - prev) * inv_n;
                }
                *old = e;
            }

            let frozen = if step <= config.freeze_count {
                true
            } else {
                match model.mstep(&stat) {
                    Ok(next) => {
                        theta = next;
                        false
                    }
                    Err(err) if err.is_inadmissible() => {
                        debug!("step {step}: M-step skipped ({err})");
                        true
                    }
                    Err(err) => return Err(err),
                }
            };
            if frozen {
                traj.frozen_steps.push(step);
            }
            if config.record.keeps(step, total_steps) {
                traj.records.push(Record {
                    step,
                    theta: theta.clone(),
                    stat: Some(stat.clone()),
                    loglik,
                });
            }
        }
        traj.tour_logliks.push(normalized_loglik(model, &theta, data)?);
    }
    traj.last_step = total_steps;
    traj.final_theta = theta;
    Ok(traj)
}
