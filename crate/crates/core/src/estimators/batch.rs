use crate::error::{Error, Result};
use crate::estimators::trajectory::{Record, Trajectory};
use crate::model::{mean_estep, normalized_loglik, LatentModel};

/// One EM iteration over `data`: average the E-step statistics at `theta`
/// and map them through the M-step. Under the empirical distribution this
/// is exactly the limiting EM map, so its fixed points are the stationary
/// points of the log-likelihood.
pub fn limiting_em_step<M: LatentModel>(model: &M, data: &[M::Obs], theta: &M::Param) -> Result<M::Param> {
    em_iteration(model, data, theta).map(|(theta, _)| theta)
}

fn em_iteration<M: LatentModel>(model: &M, data: &[M::Obs], theta: &M::Param) -> Result<(M::Param, M::Stat)> {
    let stat = mean_estep(model, theta, data)?;
    let next = model.mstep(&stat)?;
    Ok((next, stat))
}

/// Batch EM for `iterations` steps from `theta0`.
///
/// Every record carries the normalised log-likelihood of its parameter;
/// record `k` also carries the averaged statistic `S_{n,k}` it came from.
pub fn batch_em<M: LatentModel>(
    model: &M,
    data: &[M::Obs],
    theta0: &M::Param,
    iterations: usize,
) -> Result<Trajectory<M::Param, M::Stat>> {
    if data.is_empty() {
        return Err(Error::Argument("batch EM needs at least one observation".into()));
    }
    if iterations == 0 {
        return Err(Error::Argument("batch EM needs at least one iteration".into()));
    }
    model.validate_param(theta0)?;
    let ll0 = normalized_loglik(model, theta0, data)?;
    let mut traj = Trajectory::start(theta0.clone(), Some(ll0));
    let mut theta = theta0.clone();
    for k in 1..=iterations {
        let (next, stat) = em_iteration(model, data, &theta).map_err(|e| e.context(format!("EM iteration {k}")))?;
        let ll = normalized_loglik(model, &next, data)?;
        traj.tour_logliks.push(ll);
        traj.records.push(Record {
            step: k as u64,
            theta: next.clone(),
            stat: Some(stat),
            loglik: Some(ll),
        });
        theta = next;
    }
    traj.last_step = iterations as u64;
    traj.final_theta = theta;
    Ok(traj)
}
