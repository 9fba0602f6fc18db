use crate::error::{Error, Result};
use crate::estimators::trajectory::Trajectory;
use crate::model::LatentModel;

/// Polyak-Ruppert average `(1 / (n - n0)) sum_{t = n0+1..n} theta_t` of a
/// recorded trajectory, taken coordinate-wise in the full parameterisation.
/// Mixture weights are renormalised by the model afterwards.
///
/// Every step in `(n0, n]` must be recorded.
pub fn polyak_ruppert<M: LatentModel>(
    model: &M,
    trajectory: &Trajectory<M::Param, M::Stat>,
    n0: u64,
) -> Result<M::Param> {
    let n = trajectory.last_step;
    if n0 >= n {
        return Err(Error::Argument(format!(
            "averaging start {n0} must precede the last step {n}"
        )));
    }
    let tail: Vec<_> = trajectory.records.iter().filter(|r| r.step > n0).collect();
    if tail.len() as u64 != n - n0 {
        return Err(Error::Argument(format!(
            "trajectory records {} of the {} steps after {n0}; averaging needs every step",
            tail.len(),
            n - n0
        )));
    }
    let mut sum = vec![0.0; model.param_coords(&tail[0].theta).len()];
    for r in &tail {
        for (s, c) in sum.iter_mut().zip(model.param_coords(&r.theta)) {
            *s += c;
        }
    }
    let count = tail.len() as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    model.param_from_coords(&mean)
}

/// Default averaging start: half of the record.
pub fn default_averaging_start(last_step: u64) -> u64 {
    last_step / 2
}
