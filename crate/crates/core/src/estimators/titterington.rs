use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::schedule::StepsizeSchedule;
use crate::estimators::trajectory::{Record, RecordPolicy, Trajectory};
use crate::model::LatentModel;

/// Distance kept from the boundary of the parameter set after each step.
pub const PROJECTION_EPS: f64 = 1e-8;

/// Ridge added to a complete-data information matrix that fails to factor.
pub const FISHER_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TitteringtonConfig {
    pub record: RecordPolicy,
    pub eps: f64,
    pub predictive_loglik: bool,
}

impl Default for TitteringtonConfig {
    fn default() -> Self {
        Self {
            record: RecordPolicy::EveryStep,
            eps: PROJECTION_EPS,
            predictive_loglik: true,
        }
    }
}

/// Solve `fisher * delta = score`, falling back to `fisher + ridge * I` when
/// the matrix is not numerically positive definite.
pub fn fisher_direction(fisher: DMatrix<f64>, score: &[f64]) -> Result<Vec<f64>> {
    let n = fisher.nrows();
    let rhs = DVector::from_column_slice(score);
    if let Some(chol) = fisher.clone().cholesky() {
        return Ok(chol.solve(&rhs).iter().copied().collect());
    }
    warn!("complete-data information not positive definite; adding {FISHER_RIDGE} * I");
    let ridged = fisher + DMatrix::identity(n, n) * FISHER_RIDGE;
    if let Some(chol) = ridged.clone().cholesky() {
        return Ok(chol.solve(&rhs).iter().copied().collect());
    }
    ridged
        .lu()
        .solve(&rhs)
        .map(|d| d.iter().copied().collect())
        .ok_or_else(|| Error::Domain("complete-data information matrix is singular".into()))
}

/// One Titterington update: `theta + gamma I_p(theta)^{-1} score(theta, y)`
/// in reduced coordinates, projected back into the parameter set. Returns
/// the new parameter and whether the projection moved it.
pub fn titterington_step<M: LatentModel>(
    model: &M,
    theta: &M::Param,
    y: &M::Obs,
    gamma: f64,
    eps: f64,
) -> Result<(M::Param, bool)> {
    let score = model.score(theta, y)?;
    let delta = fisher_direction(model.complete_fisher(theta)?, &score)?;
    let mut reduced = model.reduced_coords(theta);
    for (r, d) in reduced.iter_mut().zip(&delta) {
        *r += gamma * d;
    }
    let projected = model.project_reduced(&mut reduced, eps);
    Ok((model.param_from_reduced(&reduced)?, projected))
}

/// Titterington's recursion, a stochastic gradient ascent preconditioned by
/// the complete-data Fisher information.
pub fn titterington<'a, M, I>(
    model: &M,
    stream: I,
    theta0: &M::Param,
    schedule: &StepsizeSchedule,
    config: TitteringtonConfig,
) -> Result<Trajectory<M::Param, M::Stat>>
where
    M: LatentModel,
    M::Obs: 'a,
    I: IntoIterator<Item = &'a M::Obs>,
    I::IntoIter: ExactSizeIterator,
{
    let stream = stream.into_iter();
    let total = stream.len() as u64;
    if total == 0 {
        return Err(Error::Argument(
            "Titterington's recursion needs at least one observation".into(),
        ));
    }
    model.validate_param(theta0)?;
    let mut traj = Trajectory::start(theta0.clone(), None);
    let mut theta = theta0.clone();
    for (i, y) in stream.enumerate() {
        let step = i as u64 + 1;
        let loglik = if config.predictive_loglik {
            Some(model.log_likelihood(&theta, y)?)
        } else {
            None
        };
        let (next, projected) = titterington_step(model, &theta, y, schedule.gamma(step), config.eps)
            .map_err(|e| e.context(format!("step {step}")))?;
        theta = next;
        if projected {
            traj.projected_steps.push(step);
        }
        if config.record.keeps(step, total) {
            traj.records.push(Record {
                step,
                theta: theta.clone(),
                stat: None,
                loglik,
            });
        }
    }
    traj.last_step = total;
    traj.final_theta = theta;
    Ok(traj)
}
